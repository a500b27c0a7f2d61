"""Lift-exceptional groups for odd l (the kernel group K and its ambient R),
the 2-adic exceptional-subgroup search, and the l = 5, 7 split-normalizer
machinery.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .modring import PrimePowerModulus, is_square_int
from .mat2 import IDENT, LineClass, Mat2, line_fixed_by, minv, mmul, mreduce
from .grp import (
    DEFAULT_CAP, MatGroup, all_charpoly_root, cartan_borel_factorization,
    common_fixed_lines, contains_conjugate, enumerate_subgroups,
    find_generators,
)


class NotPotentiallyExceptionalError(ValueError):
    """X fails the Borel-mod-l^2m / radical-mod-l shape preconditions."""


class Verdict(Enum):
    BOREL_CONTAINED = "borel-contained"
    LIFT_EXCEPTIONAL = "lift-exceptional"
    DISC_VIOLATION = "disc-violation"


@dataclass
class XKClassification:
    verdict: Verdict
    witness: Optional[LineClass | Mat2]


# ---------------------------------------------------------------------------
# the kernel group K and its normalizing ambient R (odd l)
# ---------------------------------------------------------------------------

def _k_modulus(ell: int, m: int) -> PrimePowerModulus:
    if ell == 2 or m < 1:
        raise ValueError("K and R groups need odd l and m >= 1")
    return PrimePowerModulus(ell, 2 * m + 1)


def k_group_elements(ell: int, m: int) -> frozenset:
    """[[r, s], [l^2m s, t]] with r = t mod l^2m and r a unit."""
    M = _k_modulus(ell, m)
    mod = M.modulus
    lm2 = ell ** (2 * m)
    out = set()
    for r in range(mod):
        if r % ell == 0:
            continue
        for j in range(ell):
            t = (r + lm2 * j) % mod
            for s in range(mod):
                out.add((r, s, lm2 * s % mod, t))
    return frozenset(out)


def build_K_group(ell: int, m: int, cap: int = DEFAULT_CAP) -> MatGroup:
    M = _k_modulus(ell, m)
    expected = (ell - 1) * ell ** (2 * m) * ell * M.modulus
    if expected > cap:
        raise ValueError(f"K group of order {expected} exceeds cap {cap}")
    elems = k_group_elements(ell, m)
    assert len(elems) == expected
    return MatGroup.from_elements(elems, M)


def r_group_elements(ell: int, m: int) -> frozenset:
    """[[r, s], [l^2m (eps s), eps t]] with r = t mod l^(m+1), eps = +-1."""
    M = _k_modulus(ell, m)
    mod = M.modulus
    lm2 = ell ** (2 * m)
    lm1 = ell ** (m + 1)
    out = set()
    for eps in (1, -1):
        for r in range(mod):
            if r % ell == 0:
                continue
            for j in range(ell ** m):
                t = (r + lm1 * j) % mod
                for s in range(mod):
                    out.add((r, s, eps * lm2 * s % mod, eps * t % mod))
    return frozenset(out)


def build_R_group(ell: int, m: int, cap: int = DEFAULT_CAP) -> MatGroup:
    M = _k_modulus(ell, m)
    expected = 2 * (ell - 1) * ell ** (2 * m) * ell ** m * M.modulus
    if expected > cap:
        raise ValueError(f"R group of order {expected} exceeds cap {cap}")
    elems = r_group_elements(ell, m)
    assert len(elems) == expected
    return MatGroup.from_elements(elems, M)


def in_K(t: tuple, ell: int, m: int) -> bool:
    mod = ell ** (2 * m + 1)
    lm2 = ell ** (2 * m)
    a, b, c, d = (v % mod for v in t)
    return (a % ell != 0 and (a - d) % lm2 == 0 and (c - lm2 * b) % mod == 0)


def in_R(t: tuple, ell: int, m: int) -> bool:
    mod = ell ** (2 * m + 1)
    lm2 = ell ** (2 * m)
    lm1 = ell ** (m + 1)
    a, b, c, d = (v % mod for v in t)
    if a % ell == 0:
        return False
    for eps in (1, -1):
        if (c - eps * lm2 * b) % mod == 0 and (a - eps * d) % lm1 == 0:
            return True
    return False


def simultaneous_eigenlines_K(ell: int, m: int) -> list[LineClass]:
    """Lines fixed by every element of K(l^(2m+1))."""
    M = _k_modulus(ell, m)
    group = build_K_group(ell, m)
    return [LineClass(x, y, M) for x, y in common_fixed_lines(group)]


def k_eigenline_formula(ell: int, m: int) -> list[tuple]:
    """The predicted simultaneous eigenlines: (1, k l), k = +-l^(m-1) mod l^(2m-1)."""
    mod = ell ** (2 * m + 1)
    period = ell ** (2 * m - 1)
    lines = set()
    for sign in (1, -1):
        base = sign * ell ** (m - 1) % period
        for k in range(base, mod, period):
            lines.add((1, k * ell % mod))
    return sorted(lines)


# ---------------------------------------------------------------------------
# classification of <X> . K
# ---------------------------------------------------------------------------

def _x_normalizes_K(X: tuple, ell: int, m: int) -> bool:
    mod = ell ** (2 * m + 1)
    xinv = minv(X, ell, mod)
    kgens = _k_generators(ell, m)
    return all(in_K(mmul(mmul(X, kt, mod), xinv, mod), ell, m) for kt in kgens)


_K_GEN_CACHE: dict = {}


def _k_generators(ell: int, m: int) -> tuple:
    key = (ell, m)
    if key not in _K_GEN_CACHE:
        mod = ell ** (2 * m + 1)
        _K_GEN_CACHE[key] = find_generators(k_group_elements(ell, m), mod)
    return _K_GEN_CACHE[key]


def _xk_elements(X: tuple, ell: int, m: int):
    """Iterate the elements of <X> . K coset by coset (K normal in the span).

    The cosets X^i K are pairwise disjoint until the first power of X falls
    into K, which closes the union into the full group.
    """
    if not _x_normalizes_K(X, ell, m):
        raise NotPotentiallyExceptionalError("X does not normalize K")
    mod = ell ** (2 * m + 1)
    kel = sorted(k_group_elements(ell, m))
    power = IDENT
    while True:
        for kt in kel:
            yield mmul(power, kt, mod)
        power = mmul(power, X, mod)
        if in_K(power, ell, m):
            return


def xk_group(X: Mat2, ell: int, m: int, cap: int = DEFAULT_CAP) -> MatGroup:
    """The group generated by X and K(l^(2m+1)), as an explicit MatGroup."""
    M = _k_modulus(ell, m)
    elems = set()
    for t in _xk_elements(X.entries, ell, m):
        elems.add(t)
        if len(elems) > cap:
            raise ValueError("X.K exceeds cap")
    gens = (X.entries,) + _k_generators(ell, m)
    return MatGroup.from_elements(frozenset(elems), M, gens)


def classify_XK(X: Mat2, ell: int, m: int) -> XKClassification:
    """Trichotomy for <X> . K: Borel-contained / lift-exceptional / an element
    of nonsquare discriminant.

    Preconditions: X invertible, Borel mod l^2m in the basis of K (lower-left
    entry divisible by l^2m), and radical mod l (diagonal ratio +-1 mod l).
    """
    M = _k_modulus(ell, m)
    mod = M.modulus
    if X.modulus != M:
        raise ValueError(f"X must live mod {mod}")
    a, b, c, d = X.entries
    lm2 = ell ** (2 * m)
    if not X.is_invertible():
        raise NotPotentiallyExceptionalError("X is not invertible")
    if c % lm2 != 0:
        raise NotPotentiallyExceptionalError("X is not Borel mod l^2m")
    ratio = d * pow(a, -1, mod) % ell
    if ratio == 1 % ell:
        # equal diagonal characters mod l: Borel-contained iff X fixes one of
        # the simultaneous eigenlines of K; otherwise a disc violation exists
        for line in k_eigenline_formula(ell, m):
            if line_fixed_by(X.entries, line, mod):
                return XKClassification(Verdict.BOREL_CONTAINED,
                                        LineClass(*line, M))
        return XKClassification(Verdict.DISC_VIOLATION,
                                _disc_witness(X.entries, ell, m))
    if ratio == ell - 1:
        # opposite diagonal characters mod l
        if (a + d) % ell ** (m + 1) == 0:
            return XKClassification(Verdict.LIFT_EXCEPTIONAL, None)
        return XKClassification(Verdict.DISC_VIOLATION,
                                _disc_witness(X.entries, ell, m))
    raise NotPotentiallyExceptionalError(
        f"diagonal ratio {ratio} is not +-1 mod {ell}: X.K is not radical mod l")


def _disc_witness(X: tuple, ell: int, m: int) -> Mat2:
    M = _k_modulus(ell, m)
    n = 2 * m + 1
    for t in _xk_elements(X, ell, m):
        tr = (t[0] + t[3]) % M.modulus
        det = (t[0] * t[3] - t[1] * t[2]) % M.modulus
        if not is_square_int(tr * tr - 4 * det, ell, n):
            return Mat2(*t, M)
    raise RuntimeError("no nonsquare-discriminant element found in X.K")


def normalize_to_R(X: Mat2, ell: int, m: int,
                   cap: int = DEFAULT_CAP) -> tuple[Mat2, MatGroup]:
    """Unitriangular conjugator carrying <X> . K into R(l^(2m+1)), K preserved.

    Returns (P, image) with P X P^-1 and P K P^-1 both inside R; the choice
    of P = [[1, mu], [0, 1]]^-1 follows from the lower-left/upper-right
    matching congruence mod l.
    """
    verdict = classify_XK(X, ell, m)
    if verdict.verdict is not Verdict.LIFT_EXCEPTIONAL:
        raise ValueError(f"X is {verdict.verdict.value}, not lift-exceptional")
    M = _k_modulus(ell, m)
    mod = M.modulus
    kgens = find_generators(k_group_elements(ell, m), mod)
    for mu in range(ell):
        p = (1, mu, 0, 1)
        pinv = minv(p, ell, mod)
        ximg = mmul(mmul(p, X.entries, mod), pinv, mod)
        if not in_R(ximg, ell, m):
            continue
        if all(in_K(mmul(mmul(p, kt, mod), pinv, mod), ell, m)
               for kt in kgens):
            image = xk_group(Mat2(*ximg, M), ell, m, cap)
            return Mat2(*p, M), image
    raise RuntimeError("no unitriangular conjugator into R found")


# ---------------------------------------------------------------------------
# 2-adic exceptional subgroups
# ---------------------------------------------------------------------------

def is_exceptional_2adic(group: MatGroup) -> bool:
    """Every element has a char-poly root, yet no Cartan/Borel factorization."""
    if group.modulus.prime != 2:
        raise ValueError("2-adic test needs l = 2")
    return (all_charpoly_root(group)
            and cartan_borel_factorization(group) is None)


def maximal_filter(groups: list[MatGroup]) -> list[MatGroup]:
    """Keep groups not contained, up to conjugacy, in a strictly larger one."""
    out = []
    for g in groups:
        bigger = [h for h in groups
                  if h.order > g.order and h.order % g.order == 0]
        if not any(contains_conjugate(h, g) for h in bigger):
            out.append(g)
    return out


def search_maximal_exceptional_2adic(n: int, *, threads: int = 1,
                                     cap: int = DEFAULT_CAP,
                                     allow_long: bool = False,
                                     progress=None) -> list[MatGroup]:
    """All maximal exceptional subgroups of GL2(Z/2^n Z), up to conjugacy."""
    if n > 6:
        raise ValueError("search supported for n <= 6")
    if n >= 6 and not allow_long:
        raise ValueError(
            "the n = 6 search is a long run (hours); pass allow_long=True")
    groups = enumerate_subgroups(PrimePowerModulus(2, n), "char-root",
                                 threads=threads, cap=cap, progress=progress)
    exc = [g for g in groups if cartan_borel_factorization(g) is None]
    return maximal_filter(exc)


# ---------------------------------------------------------------------------
# the l = 5, 7 split-normalizer groups
# ---------------------------------------------------------------------------

def _primitive_root(ell: int) -> int:
    phi = ell - 1
    factors = set()
    x = phi
    d = 2
    while d * d <= x:
        if x % d == 0:
            factors.add(d)
            while x % d == 0:
                x //= d
        d += 1
    if x > 1:
        factors.add(x)
    for g in range(2, ell):
        if all(pow(g, phi // q, ell) != 1 for q in factors):
            return g
    raise RuntimeError("no primitive root")


def h_exc_base(ell: int) -> frozenset:
    """Diagonal and antidiagonal matrices diag/adiag(a^i, a^j), i = j mod 2."""
    alpha = _primitive_root(ell)
    powers = [pow(alpha, i, ell) for i in range(ell - 1)]
    out = set()
    for i in range(ell - 1):
        for j in range(ell - 1):
            if (i - j) % 2:
                continue
            out.add((powers[i], 0, 0, powers[j]))
            out.add((0, powers[i], powers[j], 0))
    return frozenset(out)


def build_H_exc(ell: int, n: int, cap: int = DEFAULT_CAP) -> MatGroup:
    """Full preimage of the base group at level l^n."""
    if ell not in (5, 7):
        raise ValueError("the split-normalizer groups are defined for l = 5, 7")
    M = PrimePowerModulus(ell, n)
    mod = M.modulus
    base = h_exc_base(ell)
    expected = len(base) * ell ** (4 * (n - 1))
    if expected > cap:
        raise ValueError(f"H_exc preimage of order {expected} exceeds cap")
    import itertools
    elems = set()
    for h in base:
        for da, db, dc, dd in itertools.product(range(mod // ell), repeat=4):
            elems.add(((h[0] + ell * da) % mod, (h[1] + ell * db) % mod,
                       (h[2] + ell * dc) % mod, (h[3] + ell * dd) % mod))
    assert len(elems) == expected
    return MatGroup.from_elements(frozenset(elems), M)


# ---------------------------------------------------------------------------
# the Klein-four representation argument on M2(F_5)
# ---------------------------------------------------------------------------

@dataclass
class D4SubrepReport:
    total_subspaces: int
    stable_subspaces: int
    admissible: list
    maximal_admissible: list
    matches_expected: bool


_SQ5 = {0, 1, 4}


def _disc4(v: tuple) -> int:
    a, b, c, d = v
    return ((a - d) * (a - d) + 4 * b * c) % 5


def verify_D4_subrep_claim() -> D4SubrepReport:
    """Enumerate conjugation-stable additive subgroups J of M2(F_5) and check
    which keep every discriminant a square; the maximal ones must be the
    diagonal, symmetric-antidiagonal, and antisymmetric-antidiagonal planes
    (each containing the scalars).
    """
    from ._enumeration import _fl_subspaces
    alpha = _primitive_root(5)
    gens = [(alpha % 5, 0, 0, pow(alpha, 3, 5)), (0, 1, 1, 0)]

    def conj_action(g):
        gi = minv(g, 5, 5)

        def act(v):
            return mmul(mmul(gi, v, 5), g, 5)
        return act

    actions = [conj_action(g) for g in gens]
    spaces = _fl_subspaces(5)
    stable = []
    for members, basis in spaces:
        mem = set(members)
        if all(act(w) in mem for act in actions for w in members):
            stable.append((members, basis))
    admissible = [members for members, _ in stable
                  if all(_disc4(v) in _SQ5 for v in members)]
    adm_sets = [frozenset(a) for a in admissible]
    maximal = [a for a, s in zip(admissible, adm_sets)
               if not any(s < t for t in adm_sets)]

    def span2(v1, v2):
        return frozenset(tuple((x * v1[i] + y * v2[i]) % 5 for i in range(4))
                         for x in range(5) for y in range(5))

    expected = {
        span2((1, 0, 0, 1), (1, 0, 0, 4)),   # A + B: diagonal matrices
        span2((1, 0, 0, 1), (0, 1, 1, 0)),   # A + C
        span2((1, 0, 0, 1), (0, 1, 4, 0)),   # A + D
    }
    matches = {frozenset(mx) for mx in maximal} == expected
    return D4SubrepReport(
        total_subspaces=len(spaces),
        stable_subspaces=len(stable),
        admissible=admissible,
        maximal_admissible=maximal,
        matches_expected=matches,
    )
