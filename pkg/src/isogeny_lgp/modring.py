"""Arithmetic in Z/l^n Z: valuations, square detection, square roots, quadratic roots.

Everything here is exact integer arithmetic on residues stored as plain
nonnegative ints.  The modulus is capped at 2**62 so that products fit
comfortably in machine words on CPython's fast int path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

MAX_MODULUS = 1 << 62

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class LiftError(ValueError):
    """Raised when a Hensel lift's valuation preconditions fail."""


def is_prime(p: int) -> bool:
    """Deterministic Miller-Rabin, valid far beyond 2**62."""
    if p < 2:
        return False
    for q in _MR_BASES:
        if p % q == 0:
            return p == q
    d = p - 1
    r = (d & -d).bit_length() - 1
    d >>= r
    for a in _MR_BASES:
        x = pow(a, d, p)
        if x in (1, p - 1):
            continue
        for _ in range(r - 1):
            x = x * x % p
            if x == p - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True, order=True)
class PrimePowerModulus:
    """The ring Z/l^n Z with l prime, n >= 1."""

    prime: int
    exponent: int

    def __post_init__(self) -> None:
        if self.exponent < 1:
            raise ValueError(f"exponent must be >= 1, got {self.exponent}")
        if not is_prime(self.prime):
            raise ValueError(f"{self.prime} is not prime")
        if self.prime ** self.exponent > MAX_MODULUS:
            raise ValueError(f"{self.prime}^{self.exponent} exceeds the 2^62 cap")

    @cached_property
    def modulus(self) -> int:
        return self.prime ** self.exponent

    def reduce_to(self, k: int) -> "PrimePowerModulus":
        if not 1 <= k <= self.exponent:
            raise ValueError(f"cannot reduce exponent {self.exponent} to {k}")
        return PrimePowerModulus(self.prime, k)

    def __repr__(self) -> str:
        return f"Z/{self.prime}^{self.exponent}"


@dataclass(frozen=True)
class Residue:
    """An element of Z/l^n Z, normalized to [0, modulus)."""

    value: int
    modulus: PrimePowerModulus

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", self.value % self.modulus.modulus)

    def __int__(self) -> int:
        return self.value


def residue(value: int, modulus: PrimePowerModulus) -> Residue:
    return Residue(value, modulus)


# ----------------------------------------------------------------------
# int-level cores (used directly by the other modules in hot loops)
# ----------------------------------------------------------------------

def valuation_int(x: int, ell: int, n: int) -> int | float:
    """l-adic valuation of x in Z/l^n Z; inf when x = 0."""
    x %= ell ** n
    if x == 0:
        return math.inf
    v = 0
    while x % ell == 0:
        x //= ell
        v += 1
    return v


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) for p an odd prime."""
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def kronecker(d: int, ell: int) -> int:
    """Kronecker symbol (d/l) for prime l, with the standard convention at 2."""
    if ell == 2:
        if d % 2 == 0:
            return 0
        return 1 if d % 8 in (1, 7) else -1
    return legendre(d, ell)


def is_square_int(x: int, ell: int, n: int) -> bool:
    """True iff x is a square in Z/l^n Z (0 counts as a square)."""
    m = ell ** n
    x %= m
    if x == 0:
        return True
    v = 0
    while x % ell == 0:
        x //= ell
        v += 1
    if v % 2:
        return False
    k = n - v  # x is now a unit mod l^k, k >= 1
    if ell == 2:
        return x % min(8, 1 << k) == 1
    return legendre(x, ell) == 1


def _tonelli_shanks(a: int, p: int) -> int:
    """One square root of a QR a mod odd prime p."""
    a %= p
    if a == 0:
        return 0
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    # write p - 1 = q * 2^s with q odd
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while legendre(z, p) != -1:
        z += 1
    c = pow(z, q, p)
    x = pow(a, (q + 1) // 2, p)
    t = pow(a, q, p)
    m = s
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        x = x * b % p
        t = t * b % p * b % p
        m = i
    return x


def _sqrt_unit(u: int, ell: int, k: int) -> int | None:
    """One root of x^2 = u mod l^k for a unit u, or None."""
    m = ell ** k
    u %= m
    if ell == 2:
        if u % min(8, m) != 1:
            return None
        s = 1
        for j in range(3, k):
            if (u - s * s) % (1 << (j + 1)):
                s += 1 << (j - 1)
        return s % m
    if legendre(u, ell) != 1:
        return None
    s = _tonelli_shanks(u, ell)
    prec = ell
    while prec < m:
        prec = min(prec * prec, m)
        s = (s - (s * s - u) * pow(2 * s, -1, prec)) % prec
    return s


def _unit_root_set(u: int, ell: int, k: int) -> list[int]:
    """All roots of x^2 = u mod l^k for a unit square u."""
    s = _sqrt_unit(u, ell, k)
    if s is None:
        return []
    m = ell ** k
    if ell != 2:
        return sorted({s, m - s})
    if k == 1:
        return [1]
    if k == 2:
        return [1, 3]
    return sorted({s % m, (-s) % m, (s + m // 2) % m, (-s + m // 2) % m})


def all_sqrts_int(x: int, ell: int, n: int) -> list[int]:
    """All y in [0, l^n) with y^2 = x mod l^n, sorted."""
    m = ell ** n
    x %= m
    if x == 0:
        step = ell ** ((n + 1) // 2)
        return list(range(0, m, step))
    v = 0
    while x % ell == 0:
        x //= ell
        v += 1
    if v % 2:
        return []
    h = ell ** (v // 2)
    base = _unit_root_set(x, ell, n - v)
    if not base:
        return []
    period = ell ** (n - v)
    roots = {h * (r + t * period) % m for r in base for t in range(h)}
    return sorted(roots)


def quad_roots_int(b: int, c: int, ell: int, n: int) -> list[int]:
    """All roots of x^2 + b x + c in Z/l^n Z.

    Exhaustive scan for moduli up to 2^16 (doubles as the oracle path);
    complete-the-square above that for odd l, bitwise branch-and-lift for l = 2.
    """
    m = ell ** n
    b %= m
    c %= m
    if m <= 1 << 16:
        return [x for x in range(m) if (x * x + b * x + c) % m == 0]
    if ell != 2:
        inv2 = pow(2, -1, m)
        disc = (b * b - 4 * c) % m
        return sorted((y - b) * inv2 % m for y in all_sqrts_int(disc, ell, n))
    roots = [x for x in range(2) if (x * x + b * x + c) % 2 == 0]
    mod = 2
    while mod < m:
        mod <<= 1
        roots = [r for x in roots for r in (x, x + mod // 2)
                 if (r * r + b * r + c) % mod == 0]
    return sorted(roots)


def has_root_int(b: int, c: int, ell: int, n: int) -> bool:
    """Does x^2 + b x + c have a root mod l^n?  (Cheap path for odd l.)"""
    if ell != 2:
        return is_square_int(b * b - 4 * c, ell, n)
    m = ell ** n
    b %= m
    c %= m
    roots = [x for x in range(2) if (x * x + b * x + c) % 2 == 0]
    mod = 2
    while mod < m and roots:
        mod <<= 1
        roots = [r for x in roots for r in (x, x + mod // 2)
                 if (r * r + b * r + c) % mod == 0]
    return bool(roots)


def hensel_lift_root_int(b: int, c: int, approx: int, ell: int, n: int) -> int:
    """Unique lift of an approximate root of x^2 + bx + c to Z/l^n Z.

    Requires v(f(approx)) >= 2k+1 and v(f'(approx)) <= k for some k with
    2k+1 <= n; the returned root r satisfies v(r - approx) > k and is the
    reduction of the l-adic limit of Newton iteration.
    """
    m = ell ** n
    beta = approx % m
    fp = (2 * beta + b) % m
    k = valuation_int(fp, ell, n)
    f = (beta * beta + b * beta + c) % m
    vf = valuation_int(f, ell, n)
    if k is math.inf or vf < 2 * k + 1 or 2 * k + 1 > n:
        raise LiftError(
            f"lift preconditions fail: v(f)={vf}, v(f')={k}, target exponent {n}")
    lk = ell ** k
    while True:
        f = (beta * beta + b * beta + c) % m
        if f == 0:
            return beta
        unit = (2 * beta + b) // lk % m
        beta = (beta - (f // lk) * pow(unit, -1, m)) % m


# ----------------------------------------------------------------------
# Residue-level API
# ----------------------------------------------------------------------

def valuation(x: Residue) -> int | float:
    return valuation_int(x.value, x.modulus.prime, x.modulus.exponent)


def is_square(x: Residue) -> bool:
    return is_square_int(x.value, x.modulus.prime, x.modulus.exponent)


def sqrt_mod(x: Residue) -> Residue | None:
    roots = all_sqrts_int(x.value, x.modulus.prime, x.modulus.exponent)
    if not roots:
        return None
    return Residue(roots[0], x.modulus)


def quad_roots(b: Residue | int, c: Residue | int, modulus: PrimePowerModulus) -> list[Residue]:
    bb = b.value if isinstance(b, Residue) else b
    cc = c.value if isinstance(c, Residue) else c
    return [Residue(r, modulus)
            for r in quad_roots_int(bb, cc, modulus.prime, modulus.exponent)]


def hensel_lift_root(b: Residue | int, c: Residue | int, approx_root: Residue | int,
                     target: PrimePowerModulus) -> Residue:
    bb = b.value if isinstance(b, Residue) else b
    cc = c.value if isinstance(c, Residue) else c
    aa = approx_root.value if isinstance(approx_root, Residue) else approx_root
    r = hensel_lift_root_int(bb, cc, aa, target.prime, target.exponent)
    return Residue(r, target)
