"""Cartan subgroups attached to imaginary quadratic orders: the order
formula, the explicit matrix model and its normalizing involution, the
prime-power case analysis for complex-multiplication curves, and the
A-B-C factorization of composite levels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd, isqrt

from .modring import PrimePowerModulus, is_prime, kronecker
from .mat2 import Mat2
from .grp import MatGroup


@dataclass(frozen=True)
class ImagQuadDisc:
    """A negative fundamental discriminant."""

    d_F: int

    def __post_init__(self) -> None:
        d = self.d_F
        if d >= 0:
            raise ValueError("discriminant must be negative")
        if d % 4 == 1:
            core = -d
        elif d % 4 == 0 and (d // 4) % 4 in (2, 3):
            core = -d // 4
        else:
            raise ValueError(f"{d} is not a fundamental discriminant")
        if any(core % (p * p) == 0 for p in range(2, isqrt(core) + 1)):
            raise ValueError(f"{d} is not a fundamental discriminant")

    @property
    def unit_count(self) -> int:
        """Number of units of the maximal order: 6, 4, or 2."""
        if self.d_F == -3:
            return 6
        if self.d_F == -4:
            return 4
        return 2

    def split_type(self, ell: int) -> int:
        """Kronecker symbol (d_F / l): +1 split, -1 inert, 0 ramified."""
        return kronecker(self.d_F, ell)


@dataclass(frozen=True)
class FieldFlags:
    """Caller-asserted facts about the base field K relative to F.

    Number fields are never represented here; these booleans are exactly the
    hypotheses the case analysis consumes.
    """

    f_in_k: bool = False
    sqrt_ell_in_k: bool = False
    kf_eq_k_sqrt_neg_ell: bool = False
    sqrt2_in_k: bool = False
    kf_eq_k_sqrt_neg2: bool = False
    deg_k: int = 1
    index_d: int = 1

    def __post_init__(self) -> None:
        if self.deg_k < 1 or self.index_d < 1:
            raise ValueError("degree and index must be positive")


@dataclass(frozen=True)
class ABCFactorization:
    A: int
    B: int
    C: int
    A_bound: int

    def __post_init__(self) -> None:
        for x, y in ((self.A, self.B), (self.A, self.C), (self.B, self.C)):
            if gcd(x, y) != 1:
                raise ValueError("A, B, C must be pairwise coprime")


def cartan_order(ell: int, n: int, d: ImagQuadDisc) -> int:
    """l^(2n-2) (l-1) (l - (d_F/l))."""
    return ell ** (2 * n - 2) * (ell - 1) * (ell - d.split_type(ell))


def build_cartan(d: ImagQuadDisc, modulus: PrimePowerModulus) -> MatGroup:
    """Invertible matrices [[a, b d(1-d)/4], [b, a + b d]] over Z/l^n Z."""
    m = modulus.modulus
    ell = modulus.prime
    q = d.d_F * (1 - d.d_F) // 4
    elems = set()
    for a in range(m):
        for b in range(m):
            mat = (a, b * q % m, b, (a + b * d.d_F) % m)
            det = (mat[0] * mat[3] - mat[1] * mat[2]) % m
            if det % ell:
                elems.add(mat)
    return MatGroup.from_elements(frozenset(elems), modulus)


def conjugation_element(d: ImagQuadDisc, modulus: PrimePowerModulus) -> Mat2:
    """The involution [[1, d_F], [0, -1]] normalizing the Cartan model."""
    return Mat2(1, d.d_F, 0, -1, modulus)


@dataclass
class CmCaseReport:
    """Outcome of the prime-power case analysis."""

    ell: int
    n: int
    split_type: int  # +1 split, -1 inert, 0 ramified
    case: int  # 1, 2, or 3
    bullet: str | None = None
    global_isogeny: bool | None = None
    locally_almost_everywhere: bool | None = None
    exceptional: bool | None = None
    index_lower_bound: int | None = None
    universal_bound: float | None = None


def _case3_bound(ell: int, n: int) -> int:
    bounds = []
    if (n >= 4 and n % 2 == 0) or (ell != 2 and n == 2):
        bounds.append(ell ** (n // 2 - 1) * (ell - 1))
    if n >= 3 and n % 2 == 1:
        bounds.append(ell ** ((n - 1) // 2))
    if n == 1 or (ell == 2 and n == 2):
        bounds.append(ell)
    return max(bounds)


def classify_prime_power_cm(ell: int, n: int, d: ImagQuadDisc,
                            flags: FieldFlags) -> CmCaseReport:
    """Which case of the prime-power CM analysis applies, with verdicts.

    Case 1: n = 1 at a ramified prime: the isogeny always exists globally.
    Case 2: split prime with the field flags matching one of the bullets
    (global, or locally-everywhere-but-not-global = exceptional).
    Case 3: everything else forces a large index of the Galois image in the
    Cartan, reported as the piecewise lower bound and l^(n/4).
    """
    if not is_prime(ell):
        raise ValueError(f"{ell} is not prime")
    st = d.split_type(ell)
    rep = CmCaseReport(ell=ell, n=n, split_type=st, case=3)
    if st == 0 and n == 1:
        rep.case = 1
        rep.global_isogeny = True
        rep.locally_almost_everywhere = True
        rep.exceptional = False
        return rep
    if st == 1:
        if flags.f_in_k:
            rep.case = 2
            rep.bullet = "F in K"
            rep.global_isogeny = True
            rep.locally_almost_everywhere = True
            rep.exceptional = False
            return rep
        if ell % 4 == 1 and flags.sqrt_ell_in_k:
            rep.case = 2
            rep.bullet = "l = 1 mod 4, sqrt(l) in K"
            rep.global_isogeny = False
            rep.locally_almost_everywhere = True
            rep.exceptional = True
            return rep
        if ell % 4 == 3 and flags.kf_eq_k_sqrt_neg_ell:
            rep.case = 2
            rep.bullet = "l = 3 mod 4, KF = K(sqrt(-l))"
            rep.global_isogeny = False
            rep.locally_almost_everywhere = True
            rep.exceptional = True
            return rep
        if ell == 2 and n <= 2:
            rep.case = 2
            rep.bullet = "2-power of exponent <= 2"
            rep.global_isogeny = True
            rep.locally_almost_everywhere = True
            rep.exceptional = False
            return rep
        if ell == 2 and n >= 3 and flags.sqrt2_in_k and flags.kf_eq_k_sqrt_neg2:
            rep.case = 2
            rep.bullet = "2-power, sqrt(2) in K, KF = K(sqrt(-2))"
            rep.global_isogeny = False
            rep.locally_almost_everywhere = True
            rep.exceptional = True
            return rep
    rep.case = 3
    rep.index_lower_bound = _case3_bound(ell, n)
    rep.universal_bound = ell ** (n / 4)
    return rep


def _factorize(n: int) -> list[tuple[int, int]]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1
    if n > 1:
        out.append((n, 1))
    return out


def abc_factorization(N: int, d: ImagQuadDisc, flags: FieldFlags) -> ABCFactorization:
    """Sort the prime powers of N into B (global isogeny holds), C (split
    exceptional form), and A (the rest, with the quartic bound)."""
    if N < 1:
        raise ValueError("level must be positive")
    A = B = C = 1
    for ell, n in _factorize(N):
        rep = classify_prime_power_cm(ell, n, d, flags)
        q = ell ** n
        if rep.case == 3:
            A *= q
        elif rep.exceptional:
            C *= q
        else:
            B *= q
    if flags.f_in_k:
        assert C == 1
    bound = (d.unit_count * flags.index_d) ** 4
    return ABCFactorization(A=A, B=B, C=C, A_bound=bound)


def lift_exceptional_prime_bound(d_K: int) -> int:
    """Primes above 6 d_K + 1 cannot be lift-exceptional over a degree-d_K field."""
    if d_K < 1:
        raise ValueError("degree must be positive")
    return 6 * d_K + 1
