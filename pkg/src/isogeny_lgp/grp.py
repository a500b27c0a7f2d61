"""Finite subgroups of GL2(Z/l^n Z): closure, structural classification,
the diagonal-ratio character and its kernel, conjugacy decisions, and the
pruned level-lifting subgroup enumerator (re-exported from _enumeration).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .modring import PrimePowerModulus, is_square_int, quad_roots_int
from .mat2 import (
    IDENT, LineClass, Mat2, all_lines, canonical_line, fixed_lines_tuple,
    is_invertible, line_fixed_by, mdet, minv, mmul, morder, mreduce, mtrace,
)

DEFAULT_CAP = 1 << 24


class CapacityError(RuntimeError):
    """Raised when a closure or search exceeds its element cap.

    checkpoint, when present, describes completed work (e.g. finished levels).
    """

    def __init__(self, message: str, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class StructureError(ValueError):
    """A structural precondition (Borel on a given line, ...) does not hold."""


# ---------------------------------------------------------------------------
# closure and the group container
# ---------------------------------------------------------------------------

def close_tuples(gens: Iterable[tuple], m: int, cap: int = DEFAULT_CAP) -> frozenset:
    """Subgroup generated by gens, as a frozenset of entry tuples."""
    elems = {IDENT}
    frontier = [IDENT]
    gens = [g for g in gens]
    while frontier:
        new = []
        for x in frontier:
            for g in gens:
                y = mmul(x, g, m)
                if y not in elems:
                    elems.add(y)
                    new.append(y)
        if len(elems) > cap:
            raise CapacityError(f"closure exceeded cap of {cap} elements")
        frontier = new
    return frozenset(elems)


def find_generators(elements: frozenset, m: int) -> tuple:
    """A small deterministic generating sequence for a closed element set."""
    if len(elements) == 1:
        return ()
    ordered = sorted(elements)
    gens: list[tuple] = []
    have = {IDENT}
    for x in ordered:
        if x in have:
            continue
        gens.append(x)
        have = set(close_tuples(gens, m, cap=len(elements)))
        if len(have) == len(elements):
            break
    return tuple(gens)


@dataclass(frozen=True)
class MatGroup:
    """A subgroup of GL2(Z/l^n Z) with generators and explicit element set."""

    modulus: PrimePowerModulus
    generators: tuple
    element_tuples: frozenset

    @classmethod
    def from_generators(cls, gens: Iterable[Mat2 | tuple],
                        modulus: PrimePowerModulus,
                        cap: int = DEFAULT_CAP) -> "MatGroup":
        m = modulus.modulus
        ell = modulus.prime
        raw = []
        for g in gens:
            t = g.entries if isinstance(g, Mat2) else tuple(v % m for v in g)
            if not is_invertible(t, ell, m):
                raise ValueError(f"generator {t} is not invertible mod {ell}")
            raw.append(t)
        return cls(modulus, tuple(raw), close_tuples(raw, m, cap))

    @classmethod
    def from_elements(cls, elements: frozenset, modulus: PrimePowerModulus,
                      generators: tuple | None = None) -> "MatGroup":
        if generators is None:
            generators = find_generators(elements, modulus.modulus)
        return cls(modulus, tuple(generators), frozenset(elements))

    @property
    def order(self) -> int:
        return len(self.element_tuples)

    def elements(self) -> list[Mat2]:
        return [Mat2(*t, self.modulus) for t in sorted(self.element_tuples)]

    def gen_mats(self) -> list[Mat2]:
        return [Mat2(*t, self.modulus) for t in self.generators]

    def __contains__(self, item) -> bool:
        t = item.entries if isinstance(item, Mat2) else tuple(item)
        return t in self.element_tuples

    def trace_det_pairs(self) -> set:
        m = self.modulus.modulus
        return {(mtrace(t, m), mdet(t, m)) for t in self.element_tuples}

    def __repr__(self) -> str:
        return (f"MatGroup(order={self.order}, mod {self.modulus.modulus}, "
                f"{len(self.generators)} gens)")


def closure(generators: Iterable[Mat2], cap: int = DEFAULT_CAP) -> MatGroup:
    """The subgroup generated by invertible matrices over a shared modulus."""
    gens = list(generators)
    if not gens:
        raise ValueError("need at least one generator to fix the modulus")
    modulus = gens[0].modulus
    if any(g.modulus != modulus for g in gens):
        raise ValueError("generators do not share a modulus")
    return MatGroup.from_generators(gens, modulus, cap)


def reduce_group(group: MatGroup, k: int) -> MatGroup:
    """Image of the group mod l^k (equals the set of reduced elements)."""
    n = group.modulus.exponent
    if k > n:
        raise ValueError(f"cannot reduce exponent {n} to {k}")
    if k == n:
        return group
    mk = group.modulus.reduce_to(k)
    mval = mk.modulus
    elems = frozenset(mreduce(t, mval) for t in group.element_tuples)
    gens = tuple(dict.fromkeys(mreduce(t, mval) for t in group.generators))
    gens = tuple(g for g in gens if g != IDENT) or ()
    return MatGroup.from_elements(elems, mk, gens if gens else None)


# ---------------------------------------------------------------------------
# structural classification
# ---------------------------------------------------------------------------

def common_fixed_lines(group: MatGroup) -> list[tuple]:
    """Lines fixed by every element (= by every generator), canonical reps."""
    ell, n = group.modulus.prime, group.modulus.exponent
    m = group.modulus.modulus
    gens = group.generators or tuple(group.element_tuples)
    lines = all_lines(ell, n)
    for g in gens:
        lines = [ln for ln in lines if line_fixed_by(g, ln, m)]
        if not lines:
            break
    return lines


def _triangularize(g: tuple, line: tuple, ell: int, m: int) -> tuple[int, int, int]:
    """(eigenvalue on line, off-diag, quotient action) of g in a basis led by line."""
    x, y = line
    if x == 1:
        p = (1, 0, y, 1)  # columns (1,y), (0,1)
    else:
        p = (x, 1, 1, 0)  # columns (x,1), (1,0)
    t = mmul(mmul(minv(p, ell, m), g, m), p, m)
    if t[2] % m:
        raise StructureError(f"{g} does not fix line {line}")
    return t[0], t[1], t[3]


def _sign_character(group: MatGroup, line: tuple) -> Optional[dict]:
    """Map g -> +-1 with quotient action = sign * line eigenvalue, if one exists."""
    ell, m = group.modulus.prime, group.modulus.modulus
    signs = {}
    for g in sorted(group.element_tuples):
        lam, _, mu = _triangularize(g, line, ell, m)
        if mu == lam:
            signs[g] = 1
        elif mu == (-lam) % m:
            signs[g] = -1
        else:
            return None
    return signs


@dataclass
class StructureReport:
    """Classification verdicts for a subgroup of GL2(Z/l^n Z)."""

    is_borel: Optional[LineClass]
    is_split_cartan: Optional[tuple[LineClass, LineClass]]
    is_radical: Optional[tuple[LineClass, dict]]
    is_scalar: bool
    is_nonsplit_cartan: bool
    det_surjective: bool
    gl2_level: int


def _det_image(group: MatGroup) -> set:
    m = group.modulus.modulus
    return {mdet(t, m) for t in group.element_tuples}


def _euler_phi_prime_power(ell: int, n: int) -> int:
    return ell ** (n - 1) * (ell - 1)


def gl2_order(ell: int, n: int) -> int:
    return ell ** (4 * n - 3) * (ell - 1) * (ell * ell - 1)


def gl2_level_exponent(group: MatGroup) -> int:
    """Smallest k with G equal to the full preimage of its reduction mod l^k."""
    ell, n = group.modulus.prime, group.modulus.exponent
    if group.order == gl2_order(ell, n):
        return 0
    for k in range(1, n + 1):
        red_order = len({mreduce(t, ell ** k) for t in group.element_tuples})
        if group.order == red_order * ell ** (4 * (n - k)):
            return k
    return n


def classify(group: MatGroup) -> StructureReport:
    ell, n = group.modulus.prime, group.modulus.exponent
    m = group.modulus.modulus
    M = group.modulus
    lines = common_fixed_lines(group)

    is_borel = LineClass(*lines[0], M) if lines else None

    split = None
    for i, ln1 in enumerate(lines):
        for ln2 in lines[i + 1:]:
            v1 = (ln1[0] % ell, ln1[1] % ell)
            v2 = (ln2[0] % ell, ln2[1] % ell)
            if (v1[0] * v2[1] - v1[1] * v2[0]) % ell:
                split = (LineClass(*ln1, M), LineClass(*ln2, M))
                break
        if split:
            break

    radical = None
    for ln in lines:
        signs = _sign_character(group, ln)
        if signs is not None:
            radical = (LineClass(*ln, M), signs)
            break

    scalar = all(t[1] == 0 and t[2] == 0 and t[0] == t[3]
                 for t in group.element_tuples)

    nonsplit = False
    if n == 1 and not lines and not scalar:
        elems = sorted(group.element_tuples)
        commutative = all(mmul(a, b, m) == mmul(b, a, m)
                          for i, a in enumerate(elems) for b in elems[i + 1:])
        has_nonscalar = any(t[1] or t[2] or t[0] != t[3] for t in elems)
        nonsplit = commutative and has_nonscalar

    det_surj = len(_det_image(group)) == _euler_phi_prime_power(ell, n)

    return StructureReport(
        is_borel=is_borel,
        is_split_cartan=split,
        is_radical=radical,
        is_scalar=scalar,
        is_nonsplit_cartan=nonsplit,
        det_surjective=det_surj,
        gl2_level=gl2_level_exponent(group),
    )


def _split_cartan_contained(group: MatGroup) -> bool:
    ell = group.modulus.prime
    lines = common_fixed_lines(group)
    for i, ln1 in enumerate(lines):
        for ln2 in lines[i + 1:]:
            v1 = (ln1[0] % ell, ln1[1] % ell)
            v2 = (ln2[0] % ell, ln2[1] % ell)
            if (v1[0] * v2[1] - v1[1] * v2[0]) % ell:
                return True
    return False


def cartan_borel_factorization(group: MatGroup) -> Optional[tuple[int, int]]:
    """A pair (j, k), j + k = n, with G split-Cartan mod l^j and Borel mod l^k.

    Scans j from n down, so fully Cartan groups report (n, 0) and generic
    Borel groups report (0, n).  None when no factorization exists: this is
    the group-theoretic "no l^n-isogeny up to isogeny" verdict.
    """
    n = group.modulus.exponent
    for j in range(n, -1, -1):
        k = n - j
        if j > 0 and not _split_cartan_contained(reduce_group(group, j)):
            continue
        if k > 0 and not common_fixed_lines(reduce_group(group, k)):
            continue
        return (j, k)
    return None


def all_square_disc(group: MatGroup) -> bool:
    ell, n = group.modulus.prime, group.modulus.exponent
    return all(is_square_int(t * t - 4 * d, ell, n)
               for t, d in group.trace_det_pairs())


def all_charpoly_root(group: MatGroup) -> bool:
    ell, n = group.modulus.prime, group.modulus.exponent
    return all(quad_roots_int(-t, d, ell, n)
               for t, d in group.trace_det_pairs())


def ratio_character(group: MatGroup, b_line: LineClass) -> dict:
    """phi(g) = (eigenvalue on the line) / (quotient action), per element."""
    ell, m = group.modulus.prime, group.modulus.modulus
    line = b_line.rep
    out = {}
    for g in sorted(group.element_tuples):
        lam, _, mu = _triangularize(g, line, ell, m)
        out[Mat2(*g, group.modulus)] = lam * pow(mu, -1, m) % m
    return out


def kernel_K(group: MatGroup, b_line_mod_prev: LineClass) -> MatGroup:
    """Kernel of g -> phi(g mod l^(n-1)) inside the given group.

    Requires the reduction mod l^(n-1) to be Borel on the given line.
    """
    n = group.modulus.exponent
    if n < 2:
        raise StructureError("kernel_K needs exponent >= 2")
    ell = group.modulus.prime
    prev = ell ** (n - 1)
    line = b_line_mod_prev.rep
    kern = set()
    for g in sorted(group.element_tuples):
        try:
            lam, _, mu = _triangularize(mreduce(g, prev), line, ell, prev)
        except StructureError:
            raise StructureError(
                "group is not Borel mod l^(n-1) on the given line") from None
        if lam == mu:
            kern.add(g)
    return MatGroup.from_elements(frozenset(kern), group.modulus)


# ---------------------------------------------------------------------------
# fingerprints
# ---------------------------------------------------------------------------

def element_order(t: tuple, m: int) -> int:
    return morder(t, m)


def fingerprint(group: MatGroup) -> tuple:
    """(order, level, det-image order, (trace,det) multiset, element-order multiset).

    Conjugation-invariant; used for dedup bucketing and table matching.
    """
    m = group.modulus.modulus
    td: dict = {}
    orders: dict = {}
    for t in group.element_tuples:
        key = (mtrace(t, m), mdet(t, m))
        td[key] = td.get(key, 0) + 1
        o = morder(t, m)
        orders[o] = orders.get(o, 0) + 1
    return (
        group.order,
        gl2_level_exponent(group),
        len(_det_image(group)),
        tuple(sorted(td.items())),
        tuple(sorted(orders.items())),
    )


def _content_val(x: int, ell: int, m: int) -> int:
    """l-adic valuation of x mod m, with a finite sentinel for 0."""
    x %= m
    if x == 0:
        return 64
    v = 0
    while x % ell == 0:
        x //= ell
        v += 1
    return v


def _exponent_of(m: int, ell: int) -> int:
    n = 0
    while m > 1:
        m //= ell
        n += 1
    return n


def element_conj_invariant(t: tuple, ell: int, m: int, n: int | None = None) -> tuple:
    """(trace, det, content) with content = min valuation of 2g - tr(g) I.

    The content of a matrix mod l^n (valuations clamped at n, where every
    entry is 0) is conjugation-invariant: an invertible P preserves "has a
    unit entry" after factoring out l-powers.
    """
    a, b, c, d = t
    off = 1 if ell == 2 else 0
    if n is None:
        n = _exponent_of(m, ell)
    cont = min(_content_val(a - d, ell, m), off + _content_val(b, ell, m),
               off + _content_val(c, ell, m), n)
    return ((a + d) % m, (a * d - b * c) % m, cont)


_ORDER_CACHES: dict = {}


def _element_order_cached(t: tuple, ell: int, n: int) -> int:
    cache = _ORDER_CACHES.setdefault((ell, n), {})
    o = cache.get(t)
    if o is None:
        o = fast_element_order(t, ell, n)
        cache[t] = o
    return o


def _full_invariant(t: tuple, ell: int, m: int, n: int) -> tuple:
    return element_conj_invariant(t, ell, m, n) + (_element_order_cached(t, ell, n),)


def quick_fingerprint(group_elems: frozenset, m: int, ell: int) -> tuple:
    """Cheap conjugation-invariant key: order + per-element invariant multiset
    (trace, det, content, element order)."""
    n = _exponent_of(m, ell)
    td: dict = {}
    for t in group_elems:
        key = _full_invariant(t, ell, m, n)
        td[key] = td.get(key, 0) + 1
    return (len(group_elems), tuple(sorted(td.items())))


# ---------------------------------------------------------------------------
# linear algebra mod l^n and conjugacy search
# ---------------------------------------------------------------------------

def _kernel_mod_prime_power(rows: list, ell: int, n: int) -> list:
    """Basis of {x in (Z/l^n)^4 : A x = 0}.

    Diagonalizes A over Z by row and column operations, tracking column
    operations in V so that solutions are x = V y with d_j y_j = 0 mod l^n.
    """
    from math import gcd
    m = ell ** n
    A = [[v % m for v in r] for r in rows]
    R, C = len(A), 4
    V = [[1 if i == j else 0 for j in range(C)] for i in range(C)]

    t = 0
    while t < min(R, C):
        piv = None
        for i in range(t, R):
            for j in range(t, C):
                if A[i][j] and (piv is None
                                or abs(A[i][j]) < abs(A[piv[0]][piv[1]])):
                    piv = (i, j)
        if piv is None:
            break
        i0, j0 = piv
        A[t], A[i0] = A[i0], A[t]
        if j0 != t:
            for i in range(R):
                A[i][t], A[i][j0] = A[i][j0], A[i][t]
            for i in range(C):
                V[i][t], V[i][j0] = V[i][j0], V[i][t]
        clean = True
        p = A[t][t]
        for i in range(R):
            if i != t and A[i][t]:
                q = A[i][t] // p
                for j in range(C):
                    A[i][j] -= q * A[t][j]
                if A[i][t]:
                    clean = False
        for j in range(C):
            if j != t and A[t][j]:
                q = A[t][j] // p
                for i in range(R):
                    A[i][j] -= q * A[i][t]
                for i in range(C):
                    V[i][j] -= q * V[i][t]
                if A[t][j]:
                    clean = False
        if clean:
            t += 1

    basis = []
    for j in range(C):
        d = A[j][j] if j < t else 0
        scale = m // gcd(d, m)
        if scale % m == 0:
            continue  # unit pivot: y_j forced to 0
        vec = tuple(V[i][j] * scale % m for i in range(C))
        if any(vec):
            basis.append(vec)
    return basis


def _conj_equations(g: tuple, h: tuple, m: int) -> list:
    """Rows of the linear system P g - h P = 0 in the entries of P."""
    g0, g1, g2, g3 = g
    h0, h1, h2, h3 = h
    # unknowns p = (p0, p1, p2, p3) with P = [[p0, p1], [p2, p3]]
    return [
        ((g0 - h0) % m, g2 % m, (-h1) % m, 0),
        (g1 % m, (g3 - h0) % m, 0, (-h1) % m),
        ((-h2) % m, 0, (g0 - h3) % m, g2 % m),
        (0, (-h2) % m, g1 % m, (g3 - h3) % m),
    ]


def _invertible_solution(rows: list, ell: int, n: int) -> Optional[tuple]:
    """An invertible P solving the stacked linear system, or None."""
    m = ell ** n
    basis = _kernel_mod_prime_power(rows, ell, n)
    if not basis:
        return None
    k = len(basis)
    from itertools import product as iproduct
    for coeffs in iproduct(range(ell), repeat=k):
        if all(c == 0 for c in coeffs):
            continue
        p = [0, 0, 0, 0]
        for c, vec in zip(coeffs, basis):
            if c:
                for i in range(4):
                    p[i] = (p[i] + c * vec[i]) % m
        if (p[0] * p[3] - p[1] * p[2]) % ell:
            return tuple(p)
    return None


def _kernel_has_candidates(rows: list, ell: int, n: int) -> bool:
    return _invertible_solution(rows, ell, n) is not None


def _prime_factors(x: int) -> list:
    out = []
    d = 2
    while d * d <= x:
        if x % d == 0:
            out.append(d)
            while x % d == 0:
                x //= d
        d += 1
    if x > 1:
        out.append(x)
    return out


def fast_element_order(t: tuple, ell: int, n: int) -> int:
    """Multiplicative order via successive division of an exponent bound."""
    from .mat2 import mpow
    m = ell ** n
    bound = ell ** n * (ell * ell - 1)
    if mpow(t, bound, m) != IDENT:
        return morder(t, m)
    o = bound
    for q in _prime_factors(bound):
        while o % q == 0 and mpow(t, o // q, m) == IDENT:
            o //= q
    return o


def _build_invariant_index(elems, ell: int, m: int, n: int) -> dict:
    idx: dict = {}
    for t in sorted(elems):
        idx.setdefault(_full_invariant(t, ell, m, n), []).append(t)
    return idx


def _conjugator_search_indexed(gens: list, idx: dict, m: int, ell: int,
                               n: int) -> Optional[tuple]:
    """Backtrack over generator images drawn from a prebuilt invariant index.

    A partial linear system P g_i = h_i P is solved at each depth to prune;
    the final solution must be invertible.
    """
    if not gens:
        return IDENT
    cand_lists = []
    for g in gens:
        cands = idx.get(_full_invariant(g, ell, m, n))
        if not cands:
            return None
        cand_lists.append(cands)

    # most-constrained generator first
    dorder = sorted(range(len(gens)), key=lambda i: (len(cand_lists[i]), i))
    gens = [gens[i] for i in dorder]
    cand_lists = [cand_lists[i] for i in dorder]

    rows_stack: list = []

    def rec(depth: int) -> Optional[tuple]:
        if depth == len(gens):
            return _invertible_solution(
                [r for rs in rows_stack for r in rs], ell, n)
        for h in cand_lists[depth]:
            rows_stack.append(_conj_equations(gens[depth], h, m))
            flat = [r for rs in rows_stack for r in rs]
            if _kernel_has_candidates(flat, ell, n):
                sol = rec(depth + 1)
                if sol is not None:
                    return sol
            rows_stack.pop()
        return None

    return rec(0)


def _conjugator_search(gens: list, target_elems: frozenset, m: int, ell: int,
                       n: int, require_onto: bool = True) -> Optional[tuple]:
    if not gens:
        return IDENT
    idx = _build_invariant_index(target_elems, ell, m, n)
    return _conjugator_search_indexed(gens, idx, m, ell, n)


def conjugacy_equivalent(g1: MatGroup, g2: MatGroup) -> Optional[Mat2]:
    """A matrix P with P G P^-1 = H, or None.  Exact decision."""
    if g1.modulus != g2.modulus:
        raise ValueError("groups live over different moduli")
    if g1.order != g2.order:
        return None
    m = g1.modulus.modulus
    ell, n = g1.modulus.prime, g1.modulus.exponent
    if (quick_fingerprint(g1.element_tuples, m, ell)
            != quick_fingerprint(g2.element_tuples, m, ell)):
        return None
    if g1.element_tuples == g2.element_tuples:
        return Mat2(1, 0, 0, 1, g1.modulus)
    gens = list(g1.generators) or find_generators(g1.element_tuples, m)
    sol = _conjugator_search(list(gens), g2.element_tuples, m, ell, n)
    if sol is None:
        return None
    # P g P^-1 = h in H for every generator; orders match, so P G P^-1 = H.
    return Mat2(*sol, g1.modulus)


def contains_conjugate(big: MatGroup, small: MatGroup) -> Optional[Mat2]:
    """A matrix P with P small P^-1 a subgroup of big, or None."""
    if big.modulus != small.modulus:
        raise ValueError("groups live over different moduli")
    if big.order % small.order:
        return None
    m = big.modulus.modulus
    ell, n = big.modulus.prime, big.modulus.exponent
    if small.element_tuples <= big.element_tuples:
        return Mat2(1, 0, 0, 1, big.modulus)
    gens = list(small.generators) or find_generators(small.element_tuples, m)
    sol = _conjugator_search(gens, big.element_tuples, m, ell, n,
                             require_onto=False)
    if sol is None:
        return None
    return Mat2(*sol, big.modulus)


# re-exported enumeration API (definitions live in _enumeration.py)
from ._enumeration import (  # noqa: E402
    CharRootPredicate, SquareDiscPredicate, enumerate_subgroups,
)

__all__ = [
    "CapacityError", "StructureError", "MatGroup", "StructureReport",
    "closure", "reduce_group", "classify", "cartan_borel_factorization",
    "all_square_disc", "all_charpoly_root", "ratio_character", "kernel_K",
    "conjugacy_equivalent", "contains_conjugate", "fingerprint",
    "enumerate_subgroups", "CharRootPredicate", "SquareDiscPredicate",
    "common_fixed_lines", "close_tuples", "find_generators", "gl2_order",
]
