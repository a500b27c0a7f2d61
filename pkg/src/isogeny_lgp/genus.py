"""Genus of X_G for open subgroups of GL2(Z/NZ), prime-power or composite N,
via the permutation action of SL2 generators on cosets of G-bar = G cap SL2
(with -I adjoined).  Composite levels are handled as CRT products of
prime-power factors; fiber products of modular curves are genus computations
for such products.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd, prod

import numpy as np

from .modring import PrimePowerModulus, kronecker
from .mat2 import IDENT, Mat2, mmul
from .grp import CapacityError, MatGroup, closure

T_GEN = (1, 1, 0, 1)
S_GEN = (0, -1, 1, 0)
R_GEN = (0, -1, 1, -1)  # = S T^-1, order 3 in SL2(Z)


class LevelError(ValueError):
    """Fiber products need pairwise coprime levels."""


@dataclass(frozen=True)
class CosetAction:
    """Right action of T = [[1,1],[0,1]], S = [[0,-1],[1,0]], R = [[0,-1],[1,-1]]
    on the cosets of (G cap SL2) . {+-I} in SL2(Z/NZ)."""

    degree: int
    perm_T: tuple
    perm_S: tuple
    perm_R: tuple


@dataclass(frozen=True)
class GenusData:
    """Index, elliptic point counts, cusp count, and genus of X_G."""

    index_mu: int
    e2: int
    e3: int
    cusps: int
    genus: int
    minus_id_adjoined: bool = False

    def check_integrality(self) -> bool:
        return (12 * (self.genus - 1) + 3 * self.e2 + 4 * self.e3
                + 6 * self.cusps == self.index_mu)


@dataclass(frozen=True)
class CrtProduct:
    """Descriptor of the subgroup of GL2(Z/prod(N_i) Z) that is the full
    CRT preimage of prime-power factor groups at pairwise coprime levels."""

    factors: tuple  # of MatGroup

    @property
    def level(self) -> int:
        return prod(f.modulus.modulus for f in self.factors)


def sl2_part(group: MatGroup) -> MatGroup:
    """Determinant-1 subgroup, with -I adjoined when absent."""
    m = group.modulus.modulus
    elems = {t for t in group.element_tuples
             if (t[0] * t[3] - t[1] * t[2]) % m == 1}
    neg = ((m - 1) % m, 0, 0, (m - 1) % m)
    if neg not in elems:
        elems = elems | {mmul(neg, t, m) for t in elems}
    return MatGroup.from_elements(frozenset(elems), group.modulus)


def _contains_minus_id(group: MatGroup) -> bool:
    m = group.modulus.modulus
    return ((m - 1) % m, 0, 0, (m - 1) % m) in group.element_tuples or m <= 2


def _coset_action_prime_power(group: MatGroup, cap: int = 1 << 22) -> CosetAction:
    """Coset permutation action for one prime-power-level group."""
    m = group.modulus.modulus
    ell = group.modulus.prime
    hbar = sl2_part(group)
    H = np.array(sorted(hbar.element_tuples), dtype=np.int64)
    nh = len(H)
    sl2_size = _sl2_order(ell, group.modulus.exponent)
    degree = sl2_size // nh
    if degree > cap:
        raise CapacityError(f"coset space of degree {degree} exceeds cap")

    ha, hb, hc, hd = H[:, 0], H[:, 1], H[:, 2], H[:, 3]

    def coset_key(g: tuple) -> int:
        a, b, c, d = (v % m for v in g)
        pa = (ha * a + hb * c) % m
        pb = (ha * b + hb * d) % m
        pc = (hc * a + hd * c) % m
        pd = (hc * b + hd * d) % m
        packed = ((pa * m + pb) * m + pc) * m + pd
        return int(packed.min())

    gens = [tuple(v % m for v in g) for g in (T_GEN, S_GEN, R_GEN)]
    # T and S generate SL2(Z/m), so BFS over them reaches every coset
    index_of = {coset_key(IDENT): 0}
    reps = [IDENT]
    qi = 0
    while qi < len(reps):
        g = reps[qi]
        qi += 1
        for x in gens[:2]:
            gx = mmul(g, x, m)
            key = coset_key(gx)
            if key not in index_of:
                index_of[key] = len(reps)
                reps.append(gx)
    if len(reps) != degree:
        raise RuntimeError(
            f"coset enumeration found {len(reps)} cosets, expected {degree}")
    perms = []
    for x in gens:
        perms.append(tuple(index_of[coset_key(mmul(g, x, m))] for g in reps))
    return CosetAction(degree, perms[0], perms[1], perms[2])


def _sl2_order(ell: int, n: int) -> int:
    return ell ** (3 * n - 2) * (ell * ell - 1)


def _product_action(actions: list[CosetAction]) -> CosetAction:
    degree = prod(a.degree for a in actions)
    strides = []
    s = 1
    for a in reversed(actions):
        strides.append(s)
        s *= a.degree
    strides.reverse()

    def combine(perm_list):
        out = []
        for flat in range(degree):
            rem = flat
            img = 0
            for a, perm, st in zip(actions, perm_list, strides):
                i, rem = divmod(rem, st)
                img += perm[i] * st
            out.append(img)
        return tuple(out)

    return CosetAction(degree,
                       combine([a.perm_T for a in actions]),
                       combine([a.perm_S for a in actions]),
                       combine([a.perm_R for a in actions]))


def _orbit_count(perm: tuple) -> int:
    seen = [False] * len(perm)
    orbits = 0
    for i in range(len(perm)):
        if seen[i]:
            continue
        orbits += 1
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
    return orbits


def _genus_from_action(act: CosetAction, adjoined: bool) -> GenusData:
    mu = act.degree
    e2 = sum(1 for i, j in enumerate(act.perm_S) if i == j)
    e3 = sum(1 for i, j in enumerate(act.perm_R) if i == j)
    cusps = _orbit_count(act.perm_T)
    num = 12 + mu - 3 * e2 - 4 * e3 - 6 * cusps
    if num % 12:
        raise RuntimeError(
            f"non-integral genus from (mu={mu}, e2={e2}, e3={e3}, c={cusps})")
    return GenusData(mu, e2, e3, cusps, num // 12, adjoined)


def coset_action(group: MatGroup | CrtProduct) -> CosetAction:
    if isinstance(group, CrtProduct):
        return _product_action([_coset_action_prime_power(f)
                                for f in group.factors])
    return _coset_action_prime_power(group)


def genus_of(group: MatGroup | CrtProduct) -> GenusData:
    """Genus data of X_G from the coset permutation action.

    If -I is missing it is adjoined first (X_G is only defined with -I in G);
    the report flags the adjunction.
    """
    if isinstance(group, CrtProduct):
        adjoined = any(not _contains_minus_id(f) for f in group.factors)
        return _genus_from_action(coset_action(group), adjoined)
    adjoined = not _contains_minus_id(group)
    return _genus_from_action(coset_action(group), adjoined)


def unit_gens(ell: int, n: int) -> list[int]:
    """Generators of (Z/l^n)^x: a primitive root for odd l; {-1, 3} at l = 2."""
    m = ell ** n
    if ell == 2:
        if n == 1:
            return []
        if n == 2:
            return [3]
        return [m - 1, 3]
    phi = ell ** (n - 1) * (ell - 1)
    factors = {ell} if n > 1 else set()
    x = ell - 1
    d = 2
    while d * d <= x:
        if x % d == 0:
            factors.add(d)
            while x % d == 0:
                x //= d
        d += 1
    if x > 1:
        factors.add(x)
    for g in range(2, m):
        if g % ell and all(pow(g, phi // q, m) != 1 for q in factors):
            return [g]
    raise RuntimeError("no primitive root found")


def borel_group(modulus: PrimePowerModulus) -> MatGroup:
    """The full upper-triangular (Borel) subgroup mod l^n."""
    m = modulus.modulus
    ell = modulus.prime
    elems = frozenset((a, b, 0, d)
                      for a in range(m) if a % ell
                      for d in range(m) if d % ell
                      for b in range(m))
    gens = [(1, 1, 0, 1)]
    for u in unit_gens(ell, modulus.exponent):
        gens.append((u, 0, 0, 1))
        gens.append((1, 0, 0, u))
    return MatGroup.from_elements(elems, modulus, tuple(gens))


def _factorize(n: int) -> list[tuple[int, int]]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1
    if n > 1:
        out.append((n, 1))
    return out


def genus_X0(N: int) -> int:
    """Genus of the classical modular curve X_0(N), via the coset action."""
    if N < 1:
        raise ValueError("level must be positive")
    if N == 1:
        return 0
    factors = [borel_group(PrimePowerModulus(p, e)) for p, e in _factorize(N)]
    if len(factors) == 1:
        return genus_of(factors[0]).genus
    return genus_of(CrtProduct(tuple(factors))).genus


def genus_X0_classical(N: int) -> int:
    """Independent oracle: the classical closed-form genus of X_0(N)."""
    if N == 1:
        return 0
    from fractions import Fraction
    factors = _factorize(N)
    mu = N
    for p, _ in factors:
        mu = mu // p * (p + 1)
    nu2 = 0 if N % 4 == 0 else prod(1 + kronecker(-4, p) for p, _ in factors)
    nu3 = 0 if N % 9 == 0 else prod(1 + kronecker(-3, p) for p, _ in factors)
    cusps = sum(_euler_phi(gcd(d, N // d)) for d in _divisors(N))
    g = 1 + Fraction(mu, 12) - Fraction(nu2, 4) - Fraction(nu3, 3) \
        - Fraction(cusps, 2)
    if g.denominator != 1:
        raise RuntimeError("classical genus formula gave a non-integer")
    return int(g)


def _euler_phi(n: int) -> int:
    out = n
    for p, _ in _factorize(n):
        out = out // p * (p - 1)
    return out


def _divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in _factorize(n):
        divs = [d * p ** k for d in divs for k in range(e + 1)]
    return sorted(divs)


def fiber_product(factors: list[MatGroup]) -> CrtProduct:
    """CRT preimage descriptor of prime-power groups at coprime levels."""
    levels = [f.modulus.modulus for f in factors]
    for i, a in enumerate(levels):
        for b in levels[i + 1:]:
            if gcd(a, b) != 1:
                raise LevelError(f"levels {a} and {b} are not coprime")
    return CrtProduct(tuple(factors))


def genus_of_fiber(factors: list[MatGroup]) -> GenusData:
    return genus_of(fiber_product(factors))


# ---------------------------------------------------------------------------
# the Q-exception list assembly
# ---------------------------------------------------------------------------

def assemble_Q_exception_list(table1_groups: list[dict] | None = None,
                              include_sweeps: bool = False):
    """Re-run the fiber-product genus sweeps and assemble the composite-level
    exception list for the rational field.

    Sweeps: (a) 2-adic groups x 5/7-level groups, all genera must exceed 1;
    (b) 2-adic groups x Borel(N) over odd N with genus(X0(N)) <= 1;
    (c) 5/7-level groups x Borel(N) over coprime N with genus(X0(N)) <= 1.
    Survivors of (b) contribute 2^n * N; the survivor of (c) contributes
    l * N and l^2 * N (the exceptional level structure exists mod l and l^2
    but not mod l^3); prime-power entries come from the levels at which
    genus <= 1 exceptional structures exist.
    """
    from .exceptional import build_H_exc
    from .fixtures import load_exc2_catalog

    if table1_groups is None:
        table1_groups = load_exc2_catalog(max_n=5)

    h_groups = {5: build_H_exc(5, 1), 7: build_H_exc(7, 1)}

    sweep_gh = []  # (label, ell, genus)
    for row in table1_groups:
        for ell, H in sorted(h_groups.items()):
            g = genus_of(fiber_product([row["group"], H])).genus
            sweep_gh.append((row["label"], ell, g))

    genus_le1_X0 = [N for N in range(2, 100) if genus_X0_classical(N) <= 1]

    sweep_gx0 = []  # (label, N, genus)
    for row in table1_groups:
        for N in genus_le1_X0:
            if N % 2 == 0:
                continue
            factors = [borel_group(PrimePowerModulus(p, e))
                       for p, e in _factorize(N)]
            g = genus_of(fiber_product([row["group"], *factors])).genus
            sweep_gx0.append((row["label"], N, g))

    sweep_hx0 = []  # (ell, N, genus)
    for ell, H in sorted(h_groups.items()):
        for N in genus_le1_X0:
            if N % ell == 0:
                continue
            factors = [borel_group(PrimePowerModulus(p, e))
                       for p, e in _factorize(N)]
            g = genus_of(fiber_product([H, *factors])).genus
            sweep_hx0.append((ell, N, g))

    # prime-power entries
    out = set()
    for ell in (5, 7):
        out |= {ell, ell * ell}
    two_ns = {row["n"] for row in table1_groups if row["genus"] <= 1}
    out |= {2 ** n for n in two_ns}
    # composite entries from sweep survivors
    for label, N, g in sweep_gx0:
        if g <= 1:
            n = next(r["n"] for r in table1_groups if r["label"] == label)
            out.add(2 ** n * N)
    for ell, N, g in sweep_hx0:
        if g <= 1:
            out.add(ell * N)
            out.add(ell * ell * N)

    result = sorted(out)
    if include_sweeps:
        return result, {"gh": sweep_gh, "gx0": sweep_gx0, "hx0": sweep_hx0}
    return result
