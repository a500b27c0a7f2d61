"""2x2 matrices over Z/l^n Z and lines (cyclic direct summands) of (Z/l^n Z)^2.

A "line" is a rank-one direct summand, represented by a primitive vector up
to unit scaling.  Canonical representatives are (1, y) when the first
coordinate is a unit and (x, 1) with l | x otherwise, giving exactly
l^(n-1) * (l+1) classes.
"""

from __future__ import annotations

from ast import literal_eval
from dataclasses import dataclass

from .modring import PrimePowerModulus, Residue, is_square_int, quad_roots_int


class SingularConjugatorError(ValueError):
    """Conjugation by a non-invertible matrix."""


class NonSeparableError(ValueError):
    """Eigenline lifting requires distinct eigenvalues mod l."""


class ReductionError(ValueError):
    """Reduction to an exponent larger than the ambient one."""


# ---------------------------------------------------------------------------
# tuple-level core: matrices as (a, b, c, d) row-major ints
# ---------------------------------------------------------------------------

IDENT = (1, 0, 0, 1)


def mmul(x: tuple, y: tuple, m: int) -> tuple:
    a, b, c, d = x
    e, f, g, h = y
    return ((a * e + b * g) % m, (a * f + b * h) % m,
            (c * e + d * g) % m, (c * f + d * h) % m)


def mdet(x: tuple, m: int) -> int:
    a, b, c, d = x
    return (a * d - b * c) % m


def mtrace(x: tuple, m: int) -> int:
    return (x[0] + x[3]) % m


def mdisc(x: tuple, m: int) -> int:
    t = x[0] + x[3]
    return (t * t - 4 * (x[0] * x[3] - x[1] * x[2])) % m


def is_invertible(x: tuple, ell: int, m: int) -> bool:
    return mdet(x, m) % ell != 0


def minv(x: tuple, ell: int, m: int) -> tuple:
    det = mdet(x, m)
    if det % ell == 0:
        raise SingularConjugatorError(f"matrix {x} is singular mod {ell}")
    di = pow(det, -1, m)
    a, b, c, d = x
    return (d * di % m, -b * di % m, -c * di % m, a * di % m)


def mpow(x: tuple, k: int, m: int) -> tuple:
    r = IDENT
    while k:
        if k & 1:
            r = mmul(r, x, m)
        x = mmul(x, x, m)
        k >>= 1
    return r


def mreduce(x: tuple, mk: int) -> tuple:
    return (x[0] % mk, x[1] % mk, x[2] % mk, x[3] % mk)


def mscale(x: tuple, s: int, m: int) -> tuple:
    return (x[0] * s % m, x[1] * s % m, x[2] * s % m, x[3] * s % m)


def morder(x: tuple, m: int, cap: int = 1 << 30) -> int:
    k, y = 1, x
    while y != IDENT:
        y = mmul(y, x, m)
        k += 1
        if k > cap:
            raise ValueError("element order exceeds cap; matrix not invertible?")
    return k


# line reps: (1, y) for y in Z/m, or (x, 1) with l | x
def canonical_line(x: int, y: int, ell: int, m: int) -> tuple:
    x %= m
    y %= m
    if x % ell != 0:
        return (1, y * pow(x, -1, m) % m)
    if y % ell != 0:
        return (x * pow(y, -1, m) % m, 1)
    raise ValueError(f"({x}, {y}) is not primitive mod {ell}")


def all_lines(ell: int, n: int) -> list[tuple]:
    m = ell ** n
    return [(1, y) for y in range(m)] + [(x, 1) for x in range(0, m, ell)]


def line_fixed_by(mat: tuple, line: tuple, m: int) -> bool:
    a, b, c, d = mat
    x, y = line
    if x == 1:
        return (c + d * y - (a + b * y) * y) % m == 0
    return (a * x + b - (c * x + d) * x) % m == 0


def fixed_lines_tuple(mat: tuple, ell: int, n: int) -> list[tuple]:
    m = ell ** n
    return [ln for ln in all_lines(ell, n) if line_fixed_by(mat, ln, m)]


def reduce_line(line: tuple, mk: int) -> tuple:
    return (line[0] % mk, line[1] % mk)


# ---------------------------------------------------------------------------
# public dataclasses
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Mat2:
    """2x2 matrix [[a, b], [c, d]] over Z/l^n Z."""

    a: int
    b: int
    c: int
    d: int
    modulus: PrimePowerModulus

    def __post_init__(self) -> None:
        m = self.modulus.modulus
        for f in "abcd":
            object.__setattr__(self, f, getattr(self, f) % m)

    @classmethod
    def from_rows(cls, rows, modulus: PrimePowerModulus) -> "Mat2":
        (a, b), (c, d) = rows
        return cls(a, b, c, d, modulus)

    @property
    def entries(self) -> tuple:
        return (self.a, self.b, self.c, self.d)

    def rows(self) -> list[list[int]]:
        return [[self.a, self.b], [self.c, self.d]]

    def __matmul__(self, other: "Mat2") -> "Mat2":
        if other.modulus != self.modulus:
            raise ValueError("modulus mismatch")
        return Mat2(*mmul(self.entries, other.entries, self.modulus.modulus),
                    self.modulus)

    def inverse(self) -> "Mat2":
        return Mat2(*minv(self.entries, self.modulus.prime, self.modulus.modulus),
                    self.modulus)

    def det(self) -> int:
        return mdet(self.entries, self.modulus.modulus)

    def trace(self) -> int:
        return mtrace(self.entries, self.modulus.modulus)

    def is_invertible(self) -> bool:
        return is_invertible(self.entries, self.modulus.prime, self.modulus.modulus)

    def __repr__(self) -> str:
        return f"[[{self.a},{self.b}],[{self.c},{self.d}]] mod {self.modulus.modulus}"


@dataclass(frozen=True, order=True)
class LineClass:
    """A line in (Z/l^n Z)^2: primitive vector up to unit scaling, canonicalized."""

    x: int
    y: int
    modulus: PrimePowerModulus

    def __post_init__(self) -> None:
        cx, cy = canonical_line(self.x, self.y, self.modulus.prime,
                                self.modulus.modulus)
        object.__setattr__(self, "x", cx)
        object.__setattr__(self, "y", cy)

    @property
    def rep(self) -> tuple:
        return (self.x, self.y)

    def reduce(self, k: int) -> "LineClass":
        if k > self.modulus.exponent:
            raise ReductionError(f"cannot reduce line to exponent {k}")
        mk = self.modulus.reduce_to(k)
        return LineClass(self.x, self.y, mk)

    def __repr__(self) -> str:
        return f"({self.x}:{self.y}) mod {self.modulus.modulus}"


def parse_mat_literal(text: str, modulus: PrimePowerModulus) -> Mat2:
    """Parse the row-major literal format [[a,b],[c,d]]."""
    rows = literal_eval(text.strip())
    if (not isinstance(rows, (list, tuple)) or len(rows) != 2
            or any(len(r) != 2 for r in rows)):
        raise ValueError(f"not a 2x2 matrix literal: {text!r}")
    return Mat2.from_rows(rows, modulus)


# ---------------------------------------------------------------------------
# spec operations
# ---------------------------------------------------------------------------

def invariants_of(mat: Mat2) -> tuple[Residue, Residue, Residue]:
    """(trace, det, disc) with disc = trace^2 - 4 det."""
    M = mat.modulus
    t = mat.trace()
    d = mat.det()
    return (Residue(t, M), Residue(d, M), Residue(t * t - 4 * d, M))


def char_poly_has_root(mat: Mat2) -> bool:
    M = mat.modulus
    return bool(quad_roots_int(-mat.trace(), mat.det(), M.prime, M.exponent))


def fixed_lines(mat: Mat2) -> list[LineClass]:
    """All lines L with mat . L = L, by scan over all l^(n-1)(l+1) lines."""
    M = mat.modulus
    return [LineClass(x, y, M)
            for x, y in fixed_lines_tuple(mat.entries, M.prime, M.exponent)]


def lift_eigenline(mat: Mat2, known_line_mod_ell: LineClass) -> LineClass:
    """Unique fixed line of mat reducing to a given eigenline mod l.

    Requires mat mod l to have distinct eigenvalues (unit discriminant);
    the projectivized eigenvector equation then lifts by Newton iteration.
    """
    M = mat.modulus
    ell, m = M.prime, M.modulus
    a, b, c, d = mat.entries
    if mdisc(mat.entries, m) % ell == 0:
        raise NonSeparableError("matrix has repeated eigenvalues mod l")
    x0, y0 = known_line_mod_ell.rep
    if not line_fixed_by(mreduce(mat.entries, ell), (x0 % ell, y0 % ell), ell):
        raise NonSeparableError("given line is not an eigenline mod l")
    if x0 % ell == 1 or x0 == 1:
        # solve b y^2 + (a-d) y - c = 0 with y = y0 mod l
        y = y0 % ell
        f = lambda t: (b * t * t + (a - d) * t - c) % m
        fp = lambda t: (2 * b * t + a - d) % m
        while f(y):
            y = (y - f(y) * pow(fp(y), -1, m)) % m
        return LineClass(1, y, M)
    x = x0 % ell
    g = lambda t: (c * t * t + (d - a) * t - b) % m
    gp = lambda t: (2 * c * t + d - a) % m
    while g(x):
        x = (x - g(x) * pow(gp(x), -1, m)) % m
    return LineClass(x, 1, M)


def conjugate(mat: Mat2, p: Mat2) -> Mat2:
    """P . M . P^-1; P must be invertible."""
    m = mat.modulus.modulus
    ell = mat.modulus.prime
    pm = p.entries
    res = mmul(mmul(pm, mat.entries, m), minv(pm, ell, m), m)
    return Mat2(*res, mat.modulus)


def reduce(mat: Mat2, k: int) -> Mat2:
    """Entrywise reduction mod l^k."""
    if k > mat.modulus.exponent:
        raise ReductionError(f"cannot reduce exponent {mat.modulus.exponent} to {k}")
    mk = mat.modulus.reduce_to(k)
    return Mat2(mat.a, mat.b, mat.c, mat.d, mk)
