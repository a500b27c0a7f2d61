"""Level-lifting enumeration of subgroups of GL2(Z/l^n Z) under an
element-hereditary predicate.

Strategy: enumerate predicate-passing subgroup classes of GL2(F_l) by
single-element extension, then lift level by level.  The kernel of each
reduction GL2(Z/l^(k+1)) -> GL2(Z/l^k) is elementary abelian,
E = I + l^k M2(F_l), and conjugation on it factors through the mod-l image.
Lifts of a class H' decompose by W = H cap E (an H'-stable subspace of E)
together with a section correction c on the generators of H'; closure of the
lifted set is an affine-linear condition on c, collected once per class by a
breadth-first sweep of the Cayley graph of H' and solved per W.  Candidates
containing an element that fails the predicate are discarded (sound because
the predicate is per-element and reduction-stable).

The l = 2 path packs F_2 vectors and matrices into machine ints; the generic
path handles odd l at the small sizes desk-scale work needs.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from multiprocessing import get_context

from .modring import PrimePowerModulus, has_root_int, is_square_int
from .mat2 import IDENT, minv, mmul, mreduce

# grp defines these before importing this module, so the circular import is safe
from .grp import (
    CapacityError, DEFAULT_CAP, MatGroup, close_tuples, find_generators,
    quick_fingerprint,
)


# ---------------------------------------------------------------------------
# element-hereditary predicates (per-element, depending only on trace and det)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _char_root_table(ell: int, k: int) -> frozenset:
    m = ell ** k
    return frozenset((t, d) for t in range(m) for d in range(m)
                     if has_root_int(-t, d, ell, k))


@lru_cache(maxsize=None)
def _square_disc_table(ell: int, k: int) -> frozenset:
    m = ell ** k
    return frozenset((t, d) for t in range(m) for d in range(m)
                     if is_square_int(t * t - 4 * d, ell, k))


class _TraceDetPredicate:
    name = "base"

    def allowed_pairs(self, ell: int, k: int) -> frozenset:
        raise NotImplementedError

    def passes(self, t: tuple, ell: int, k: int) -> bool:
        m = ell ** k
        return ((t[0] + t[3]) % m,
                (t[0] * t[3] - t[1] * t[2]) % m) in self.allowed_pairs(ell, k)

    def group_passes(self, elems, ell: int, k: int) -> bool:
        m = ell ** k
        table = self.allowed_pairs(ell, k)
        return all(((t[0] + t[3]) % m,
                    (t[0] * t[3] - t[1] * t[2]) % m) in table for t in elems)


class CharRootPredicate(_TraceDetPredicate):
    """Every element's characteristic polynomial has a root mod l^k."""

    name = "char-root"

    def allowed_pairs(self, ell: int, k: int) -> frozenset:
        return _char_root_table(ell, k)


class SquareDiscPredicate(_TraceDetPredicate):
    """Every element's discriminant tr^2 - 4 det is a square mod l^k."""

    name = "square-disc"

    def allowed_pairs(self, ell: int, k: int) -> frozenset:
        return _square_disc_table(ell, k)


_PREDICATES = {"char-root": CharRootPredicate(), "square-disc": SquareDiscPredicate()}


# ---------------------------------------------------------------------------
# level 1: subgroup classes of GL2(F_l) by single-element extension
# ---------------------------------------------------------------------------

def _gl2_elements(ell: int) -> list:
    return [t for t in itertools.product(range(ell), repeat=4)
            if (t[0] * t[3] - t[1] * t[2]) % ell]


def _canon_under_conjugation(elems, conjugators, m: int) -> tuple:
    best = None
    for p, pinv in conjugators:
        img = tuple(sorted(mmul(mmul(p, t, m), pinv, m) for t in elems))
        if best is None or img < best:
            best = img
    return best


def _level1_classes(ell: int, predicate: _TraceDetPredicate) -> list:
    m = ell
    units = _gl2_elements(ell)
    conjugators = [(p, minv(p, ell, m)) for p in units]
    table = predicate.allowed_pairs(ell, 1)
    passing = [t for t in units
               if ((t[0] + t[3]) % m, (t[0] * t[3] - t[1] * t[2]) % m) in table]
    trivial = frozenset({IDENT})
    seen = {_canon_under_conjugation(trivial, conjugators, m): (trivial, ())}
    frontier = [(trivial, ())]
    while frontier:
        new = []
        for elems, gens in frontier:
            for g in passing:
                if g in elems:
                    continue
                cand_gens = gens + (g,)
                cand = close_tuples(cand_gens, m)
                if not predicate.group_passes(cand, ell, 1):
                    continue
                key = _canon_under_conjugation(cand, conjugators, m)
                if key not in seen:
                    rec = (frozenset(cand), cand_gens)
                    seen[key] = rec
                    new.append(rec)
        frontier = new
    return sorted(seen.values(), key=lambda eg: (len(eg[0]), tuple(sorted(eg[0]))))


# ---------------------------------------------------------------------------
# F_2 fast path: M2(F_2) vectors as 4-bit nibbles, 4x4 F_2 matrices as 16-bit ints
# ---------------------------------------------------------------------------

_IDENT16 = 1 | (2 << 4) | (4 << 8) | (8 << 12)


def _nib(t) -> int:
    return (t[0] & 1) | (t[1] & 1) << 1 | (t[2] & 1) << 2 | (t[3] & 1) << 3


def _rho_tab_f2(gbar: tuple) -> tuple:
    """Table of A -> gbar^-1 A gbar on M2(F_2) nibble coordinates."""
    gi = minv(gbar, 2, 2)
    out = []
    for v in range(16):
        A = (v & 1, (v >> 1) & 1, (v >> 2) & 1, (v >> 3) & 1)
        out.append(_nib(mmul(mmul(gi, A, 2), gbar, 2)))
    return tuple(out)


def _compose_tab_mat16(tab: tuple, mat16: int) -> int:
    return (tab[mat16 & 15] | tab[(mat16 >> 4) & 15] << 4
            | tab[(mat16 >> 8) & 15] << 8 | tab[(mat16 >> 12) & 15] << 12)


def _mat16_apply(mat16: int, v: int) -> int:
    r = 0
    while v:
        b = v & -v
        r ^= (mat16 >> (4 * (b.bit_length() - 1))) & 15
        v ^= b
    return r


@lru_cache(maxsize=None)
def _left_mult_tabs_f2() -> dict:
    """For s in GL2(F_2): table of x-nibble -> nibble of s * E(x)."""
    out = {}
    for s in _gl2_elements(2):
        tab = []
        for v in range(16):
            x = (v & 1, (v >> 1) & 1, (v >> 2) & 1, (v >> 3) & 1)
            tab.append(_nib(mmul(s, x, 2)))
        out[s] = tuple(tab)
    return out


@lru_cache(maxsize=None)
def _f2_subspaces() -> tuple:
    """All 67 subspaces of F_2^4 as (members, reduce-table, echelon basis)."""
    spaces = set()
    for gens in itertools.chain.from_iterable(
            itertools.combinations(range(1, 16), r) for r in range(5)):
        span = {0}
        for b in gens:
            span |= {x ^ b for x in span}
        spaces.add(tuple(sorted(span)))
    out = []
    for members in sorted(spaces, key=lambda s: (len(s), s)):
        basis = []
        for v in sorted(members, reverse=True):
            red = v
            for b in basis:
                if red ^ b < red:
                    red ^= b
            if red:
                basis.append(red)
                basis.sort(reverse=True)
        tab = []
        for v in range(16):
            red = v
            for b in basis:
                if red ^ b < red:
                    red ^= b
            tab.append(red)
        out.append((members, tuple(tab), tuple(basis)))
    return tuple(out)


def _solve_f2(rows: list, nunk: int):
    """Solve an F_2 linear system given as (mask, rhs) rows.

    Returns (particular solution, nullspace basis) over nunk bits, or None.
    """
    pivots: list = []  # (pivot_bit, mask, rhs)
    for mask, rhs in rows:
        for pb, pm, pr in pivots:
            if mask >> pb & 1:
                mask ^= pm
                rhs ^= pr
        if mask == 0:
            if rhs:
                return None
            continue
        pb = mask.bit_length() - 1
        pivots = [(qb, qm ^ (mask if qm >> pb & 1 else 0),
                   qr ^ (rhs if qm >> pb & 1 else 0)) for qb, qm, qr in pivots]
        pivots.append((pb, mask, rhs))
    part = 0
    pivot_bits = set()
    for pb, pm, pr in pivots:
        pivot_bits.add(pb)
        if pr:
            part |= 1 << pb
    null = []
    for b in range(nunk):
        if b in pivot_bits:
            continue
        vec = 1 << b
        for pb, pm, pr in pivots:
            if pm >> b & 1:
                vec |= 1 << pb
        null.append(vec)
    return part, null


def _lift_class_f2(elems: frozenset, gens: tuple, k: int, table_next: frozenset,
                   cap: int) -> list:
    """Predicate-passing lifts of one level-k class to level k+1 (l = 2).

    Returns (sorted element tuple, generators) pairs, deduplicated up to
    conjugation by the reduction kernel.
    """
    m_lo = 1 << k
    m = 1 << (k + 1)
    r = len(gens)
    glifts = list(gens)
    rho_tabs = [_rho_tab_f2(mreduce(g, 2)) for g in gens]
    smul_tabs = _left_mult_tabs_f2()

    # BFS over the Cayley graph of H': canonical sections + affine eps-states
    order = {IDENT: 0}
    sec = [IDENT]
    states = [((0,) * r, 0)]  # (A_1..A_r as 16-bit ints, v nibble)
    queue = [IDENT]
    pivots: list = []  # spanning basis of the constraint set, (16r+4)-bit ints

    def add_constraint(vec: int) -> None:
        for p in pivots:
            if vec ^ p < vec:
                vec ^= p
        if vec:
            pivots.append(vec)
            pivots.sort(reverse=True)

    qi = 0
    while qi < len(queue):
        h = queue[qi]
        qi += 1
        hidx = order[h]
        s_h = sec[hidx]
        A_h, v_h = states[hidx]
        for i, g in enumerate(gens):
            hg = mmul(h, g, m_lo)
            t = mmul(s_h, glifts[i], m)
            rho = rho_tabs[i]
            newA = tuple(
                _compose_tab_mat16(rho, A_h[j]) ^ (_IDENT16 if j == i else 0)
                for j in range(r))
            newv = rho[v_h]
            j2 = order.get(hg)
            if j2 is None:
                order[hg] = len(sec)
                sec.append(t)
                states.append((newA, newv))
                queue.append(hg)
            else:
                s_hg = sec[j2]
                diff = _nib(((t[0] - s_hg[0]) >> k, (t[1] - s_hg[1]) >> k,
                             (t[2] - s_hg[2]) >> k, (t[3] - s_hg[3]) >> k))
                phi = smul_tabs[minv(mreduce(s_hg, 2), 2, 2)][diff]
                A_hg, v_hg = states[j2]
                vec = 0
                for j in range(r):
                    vec |= (newA[j] ^ A_hg[j]) << (16 * j)
                vec |= (newv ^ phi ^ v_hg) << (16 * r)
                add_constraint(vec)

    nH = len(sec)
    # coboundary directions: conjugating by I + 2^k E(e) shifts c by rho_i(e)-e
    cobounds = [sum(((rho_tabs[i][e] ^ e) << (4 * i)) for i in range(r))
                for e in (1, 2, 4, 8)]
    results = []
    seen_sets = set()

    for members, red_tab, wbasis in _f2_subspaces():
        mem_set = set(members)
        if any(rho_tabs[i][w] not in mem_set for i in range(r) for w in members):
            continue
        ok = True
        for w in members:
            e0 = 1 + ((w & 1) << k)
            e1 = ((w >> 1) & 1) << k
            e2 = ((w >> 2) & 1) << k
            e3 = (1 + (((w >> 3) & 1) << k)) % m
            if ((e0 + e3) % m, (e0 * e3 - e1 * e2) % m) not in table_next:
                ok = False
                break
        if not ok:
            continue
        if len(elems) * len(members) > cap:
            raise CapacityError(f"lift exceeds cap of {cap} elements")

        # constraints in E/W coordinates: Q(L c) = Q(u), unknowns = 4r raw bits
        rows = []
        for vec in pivots:
            u = red_tab[(vec >> (16 * r)) & 15]
            cols = []
            for b in range(4 * r):
                j, tt = divmod(b, 4)
                Lj = (vec >> (16 * j)) & 0xFFFF
                cols.append(red_tab[(Lj >> (4 * tt)) & 15])
            for s_bit in range(4):
                mask = 0
                for b in range(4 * r):
                    if cols[b] >> s_bit & 1:
                        mask |= 1 << b
                rhs = u >> s_bit & 1
                if mask or rhs:
                    rows.append((mask, rhs))
        sol = _solve_f2(rows, 4 * r)
        if sol is None:
            continue
        part, null = sol

        # quotient the solution space by redundant directions:
        # W-blocks leave the subgroup unchanged, coboundaries conjugate it
        cpivots: list = []

        def creduce(v: int) -> int:
            for p in cpivots:
                if v ^ p < v:
                    v ^= p
            return v

        for red0 in ([w << (4 * j) for j in range(r) for w in wbasis]
                     + cobounds):
            v = creduce(red0)
            if v:
                cpivots.append(v)
                cpivots.sort(reverse=True)
        free = []
        for nv in null:
            v = creduce(nv)
            if v:
                free.append(v)
                cpivots.append(v)
                cpivots.sort(reverse=True)
        if len(free) > 22:
            raise CapacityError(
                f"complement space 2^{len(free)} too large at level {k + 1}")

        for combo_bits in range(1 << len(free)):
            x = part
            cb = combo_bits
            fi = 0
            while cb:
                if cb & 1:
                    x ^= free[fi]
                cb >>= 1
                fi += 1
            cvals = [(x >> (4 * j)) & 15 for j in range(r)]
            elt_list = []
            good = True
            for idx in range(nH):
                s_h = sec[idx]
                A_h, v_h = states[idx]
                eps = v_h
                for j in range(r):
                    if cvals[j]:
                        eps ^= _mat16_apply(A_h[j], cvals[j])
                tab = smul_tabs[mreduce(s_h, 2)]
                s0, s1, s2, s3 = s_h
                for w in members:
                    prod = tab[eps ^ w]
                    e0 = s0 ^ ((prod & 1) << k)
                    e1 = s1 ^ (((prod >> 1) & 1) << k)
                    e2 = s2 ^ (((prod >> 2) & 1) << k)
                    e3 = s3 ^ (((prod >> 3) & 1) << k)
                    if ((e0 + e3) % m,
                            (e0 * e3 - e1 * e2) % m) not in table_next:
                        good = False
                        break
                    elt_list.append((e0, e1, e2, e3))
                if not good:
                    break
            if not good:
                continue
            encoded = tuple(sorted(elt_list))
            if encoded in seen_sets:
                continue
            seen_sets.add(encoded)
            new_gens = []
            for i in range(r):
                s_g = glifts[i]
                prod = smul_tabs[mreduce(s_g, 2)][cvals[i]]
                new_gens.append((s_g[0] ^ ((prod & 1) << k),
                                 s_g[1] ^ (((prod >> 1) & 1) << k),
                                 s_g[2] ^ (((prod >> 2) & 1) << k),
                                 s_g[3] ^ (((prod >> 3) & 1) << k)))
            for w in wbasis:
                new_gens.append((1 + ((w & 1) << k), ((w >> 1) & 1) << k,
                                 ((w >> 2) & 1) << k,
                                 (1 + (((w >> 3) & 1) << k)) % m))
            results.append((encoded, tuple(new_gens)))
    return results


# ---------------------------------------------------------------------------
# generic path (odd l; valid for l = 2 as well, used in cross-checks)
# ---------------------------------------------------------------------------

def _vadd(a, b, ell):
    return tuple((x + y) % ell for x, y in zip(a, b))


def _vsub(a, b, ell):
    return tuple((x - y) % ell for x, y in zip(a, b))


def _vscale(a, c, ell):
    return tuple(x * c % ell for x in a)


def _mat4_apply(cols, v, ell):
    out = (0, 0, 0, 0)
    for j, c in enumerate(v):
        if c:
            out = _vadd(out, _vscale(cols[j], c, ell), ell)
    return out


def _rho_fun(gbar: tuple, ell: int):
    gi = minv(gbar, ell, ell)

    def act(v):
        return mmul(mmul(gi, tuple(v), ell), gbar, ell)
    return act


@lru_cache(maxsize=None)
def _fl_subspaces(ell: int) -> tuple:
    """All subspaces of F_l^4 as (sorted members, basis), one RREF basis each."""
    out = []
    for k in range(5):
        for pivots in itertools.combinations(range(4), k):
            frees = [[j for j in range(p + 1, 4) if j not in pivots]
                     for p in pivots]
            nfree = sum(len(f) for f in frees)
            for vals in itertools.product(range(ell), repeat=nfree):
                basis = []
                vi = 0
                for i, p in enumerate(pivots):
                    row = [0, 0, 0, 0]
                    row[p] = 1
                    for j in frees[i]:
                        row[j] = vals[vi]
                        vi += 1
                    basis.append(tuple(row))
                span = {(0, 0, 0, 0)}
                for b in basis:
                    span = {tuple((x[t] + c * b[t]) % ell for t in range(4))
                            for x in span for c in range(ell)}
                out.append((tuple(sorted(span)), tuple(basis)))
    out.sort(key=lambda x: (len(x[0]), x[0]))
    return tuple(out)


def _echelon_insert(ech, v, ell):
    """Insert v into an echelon list of (lead, normalized row); returns residue."""
    v = list(v)
    for lead, row in ech:
        c = v[lead]
        if c:
            for i in range(len(v)):
                v[i] = (v[i] - c * row[i]) % ell
    lead = next((i for i, x in enumerate(v) if x), None)
    if lead is None:
        return None
    inv = pow(v[lead], -1, ell)
    ech.append((lead, tuple(x * inv % ell for x in v)))
    ech.sort()
    return tuple(v)


def _echelon_reduce(ech, v, ell):
    v = list(v)
    for lead, row in ech:
        c = v[lead]
        if c:
            for i in range(len(v)):
                v[i] = (v[i] - c * row[i]) % ell
    return tuple(v)


def _solve_fl(rows, rhs, nunk, ell):
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    pivots = []
    rix = 0
    for col in range(nunk):
        piv = next((i for i in range(rix, len(aug)) if aug[i][col] % ell), None)
        if piv is None:
            continue
        aug[rix], aug[piv] = aug[piv], aug[rix]
        inv = pow(aug[rix][col], -1, ell)
        aug[rix] = [x * inv % ell for x in aug[rix]]
        for i in range(len(aug)):
            if i != rix and aug[i][col] % ell:
                c = aug[i][col]
                aug[i] = [(x - c * y) % ell for x, y in zip(aug[i], aug[rix])]
        pivots.append(col)
        rix += 1
    for i in range(rix, len(aug)):
        if aug[i][nunk] % ell:
            return None
    part = [0] * nunk
    for prow, pcol in enumerate(pivots):
        part[pcol] = aug[prow][nunk]
    null = []
    pivset = set(pivots)
    for c in range(nunk):
        if c in pivset:
            continue
        vec = [0] * nunk
        vec[c] = 1
        for prow, pcol in enumerate(pivots):
            vec[pcol] = (-aug[prow][c]) % ell
        null.append(tuple(vec))
    return tuple(part), null


def _lift_class_generic(elems: frozenset, gens: tuple, ell: int, k: int,
                        table_next: frozenset, cap: int) -> list:
    m_lo = ell ** k
    m = ell ** (k + 1)
    r = len(gens)
    glifts = list(gens)
    rho_funs = [_rho_fun(mreduce(g, ell), ell) for g in gens]
    zero_mat = tuple((0, 0, 0, 0) for _ in range(4))
    ident_mat = tuple(tuple(1 if i == j else 0 for i in range(4))
                      for j in range(4))

    def mat_compose(rho, cols):
        return tuple(rho(c) for c in cols)

    def mat_add(c1, c2):
        return tuple(_vadd(a, b, ell) for a, b in zip(c1, c2))

    def mat_sub(c1, c2):
        return tuple(_vsub(a, b, ell) for a, b in zip(c1, c2))

    order = {IDENT: 0}
    sec = [IDENT]
    states = [(tuple(zero_mat for _ in range(r)), (0, 0, 0, 0))]
    queue = [IDENT]
    cons_ech: list = []  # echelon of constraint vectors, length 16r+4

    qi = 0
    while qi < len(queue):
        h = queue[qi]
        qi += 1
        hidx = order[h]
        s_h = sec[hidx]
        A_h, v_h = states[hidx]
        for i, g in enumerate(gens):
            hg = mmul(h, g, m_lo)
            t = mmul(s_h, glifts[i], m)
            rho = rho_funs[i]
            newA = []
            for j in range(r):
                comp = mat_compose(rho, A_h[j])
                if j == i:
                    comp = mat_add(comp, ident_mat)
                newA.append(comp)
            newA = tuple(newA)
            newv = rho(v_h)
            j2 = order.get(hg)
            if j2 is None:
                order[hg] = len(sec)
                sec.append(t)
                states.append((newA, newv))
                queue.append(hg)
            else:
                s_hg = sec[j2]
                diff = tuple(((t[i2] - s_hg[i2]) // m_lo) % ell
                             for i2 in range(4))
                sinv = minv(mreduce(s_hg, ell), ell, ell)
                phi = mmul(sinv, diff, ell)
                A_hg, v_hg = states[j2]
                vec = []
                for j in range(r):
                    for col in mat_sub(newA[j], A_hg[j]):
                        vec.extend(col)
                vec.extend(_vsub(_vadd(newv, phi, ell), v_hg, ell))
                _echelon_insert(cons_ech, vec, ell)

    nH = len(sec)
    basis_e = ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))
    cobounds = []
    for e in basis_e:
        vec = []
        for i in range(r):
            vec.extend(_vsub(rho_funs[i](e), e, ell))
        cobounds.append(tuple(vec))
    results = []
    seen_sets = set()

    for members, wbasis in _fl_subspaces(ell):
        mem_set = set(members)
        if any(rho(w) not in mem_set for rho in rho_funs for w in members):
            continue
        ok = True
        for w in members:
            e0 = (1 + m_lo * w[0]) % m
            e1 = m_lo * w[1] % m
            e2 = m_lo * w[2] % m
            e3 = (1 + m_lo * w[3]) % m
            if ((e0 + e3) % m, (e0 * e3 - e1 * e2) % m) not in table_next:
                ok = False
                break
        if not ok:
            continue
        if len(elems) * len(members) > cap:
            raise CapacityError(f"lift exceeds cap of {cap} elements")

        w_ech: list = []
        for w in wbasis:
            _echelon_insert(w_ech, w, ell)

        rows = []
        rhs = []
        for _, bvec in cons_ech:
            cols = []
            for b in range(4 * r):
                j, tt = divmod(b, 4)
                col = tuple(bvec[16 * j + 4 * tt: 16 * j + 4 * tt + 4])
                cols.append(_echelon_reduce(w_ech, col, ell))
            u = _echelon_reduce(w_ech, tuple(bvec[16 * r: 16 * r + 4]), ell)
            for s_bit in range(4):
                row = [cols[b][s_bit] for b in range(4 * r)]
                if any(row) or u[s_bit]:
                    rows.append(row)
                    rhs.append((-u[s_bit]) % ell)
        sol = _solve_fl(rows, rhs, 4 * r, ell)
        if sol is None:
            continue
        part, null = sol

        red_ech: list = []
        for j in range(r):
            for w in wbasis:
                vec = [0] * (4 * r)
                vec[4 * j: 4 * j + 4] = list(w)
                _echelon_insert(red_ech, vec, ell)
        for cb in cobounds:
            _echelon_insert(red_ech, cb, ell)
        free = []
        for nv in null:
            res = _echelon_insert(red_ech, nv, ell)
            if res is not None:
                free.append(res)
        if ell ** len(free) > 1 << 22:
            raise CapacityError("complement space too large")

        for combo in itertools.product(range(ell), repeat=len(free)):
            x = list(part)
            for cval, fvec in zip(combo, free):
                if cval:
                    for i2 in range(4 * r):
                        x[i2] = (x[i2] + cval * fvec[i2]) % ell
            cvals = [tuple(x[4 * j: 4 * j + 4]) for j in range(r)]
            elt_list = []
            good = True
            for idx in range(nH):
                s_h = sec[idx]
                A_h, v_h = states[idx]
                eps = v_h
                for j in range(r):
                    if any(cvals[j]):
                        eps = _vadd(eps, _mat4_apply(A_h[j], cvals[j], ell), ell)
                sbar = mreduce(s_h, ell)
                for w in members:
                    prod = mmul(sbar, _vadd(eps, w, ell), ell)
                    e0 = (s_h[0] + m_lo * prod[0]) % m
                    e1 = (s_h[1] + m_lo * prod[1]) % m
                    e2 = (s_h[2] + m_lo * prod[2]) % m
                    e3 = (s_h[3] + m_lo * prod[3]) % m
                    if ((e0 + e3) % m,
                            (e0 * e3 - e1 * e2) % m) not in table_next:
                        good = False
                        break
                    elt_list.append((e0, e1, e2, e3))
                if not good:
                    break
            if not good:
                continue
            encoded = tuple(sorted(elt_list))
            if encoded in seen_sets:
                continue
            seen_sets.add(encoded)
            new_gens = []
            for i in range(r):
                s_g = glifts[i]
                prod = mmul(mreduce(s_g, ell), cvals[i], ell)
                new_gens.append(tuple((s_g[i2] + m_lo * prod[i2]) % m
                                      for i2 in range(4)))
            for w in wbasis:
                new_gens.append(((1 + m_lo * w[0]) % m, m_lo * w[1] % m,
                                 m_lo * w[2] % m, (1 + m_lo * w[3]) % m))
            results.append((encoded, tuple(new_gens)))
    return results


# ---------------------------------------------------------------------------
# dedup and the public entry point
# ---------------------------------------------------------------------------

def _conj_dedup(candidates: list, modulus: PrimePowerModulus) -> list:
    """Deduplicate (sorted-elements, gens, parent) triples up to GL2-conjugacy.

    Conjugate groups have conjugate reductions, so lifts of distinct parent
    classes are never conjugate: the parent index joins the bucket key.
    Candidates must arrive sorted; the first representative seen in each
    class (the lexicographically least encoding) is kept.
    """
    from .grp import _build_invariant_index, _conjugator_search_indexed
    ell, n = modulus.prime, modulus.exponent
    m = modulus.modulus
    buckets: dict = {}
    reps = []
    for encoded, gens, parent in candidates:
        fs = frozenset(encoded)
        key = (parent, quick_fingerprint(fs, m, ell))
        bucket = buckets.setdefault(key, [])
        dup = False
        idx = None
        for rep_gens, rep_set in bucket:
            if rep_set == fs:
                dup = True
                break
            if idx is None:
                idx = _build_invariant_index(encoded, ell, m, n)
            if _conjugator_search_indexed(list(rep_gens), idx, m, ell, n) \
                    is not None:
                dup = True
                break
        if not dup:
            mingens = find_generators(fs, m)
            bucket.append((mingens, fs))
            reps.append((encoded, mingens))
    return reps


def _lift_one(args):
    elems, gens, ell, k, pred_name, cap, parent = args
    pred = _PREDICATES[pred_name]
    table_next = pred.allowed_pairs(ell, k + 1)
    if ell == 2:
        lifts = _lift_class_f2(frozenset(elems), gens, k, table_next, cap)
    else:
        lifts = _lift_class_generic(frozenset(elems), gens, ell, k,
                                    table_next, cap)
    return [(enc, g, parent) for enc, g in lifts]


def enumerate_subgroups(modulus: PrimePowerModulus, predicate, *,
                        threads: int = 1, cap: int = DEFAULT_CAP,
                        progress=None) -> list:
    """All subgroups of GL2(Z/l^n Z) all of whose elements pass the
    (element-hereditary, reduction-stable) predicate, up to conjugacy.

    Deterministic: the result is independent of thread count.
    """
    if isinstance(predicate, str):
        predicate = _PREDICATES[predicate]
    ell, n = modulus.prime, modulus.exponent
    classes = _level1_classes(ell, predicate)
    level = 1
    while level < n:
        tasks = [(tuple(sorted(elems)), gens, ell, level, predicate.name, cap,
                  parent)
                 for parent, (elems, gens) in enumerate(classes)]
        if threads > 1 and len(tasks) > 4:
            ctx = get_context("fork")
            with ctx.Pool(threads) as pool:
                chunks = pool.map(_lift_one, tasks,
                                  chunksize=max(1, len(tasks) // (threads * 4)))
        else:
            chunks = [_lift_one(t) for t in tasks]
        candidates = [c for chunk in chunks for c in chunk]
        candidates.sort(key=lambda eg: (len(eg[0]), eg[0]))
        seen = set()
        uniq = []
        for encoded, gens, parent in candidates:
            if encoded in seen:
                continue
            seen.add(encoded)
            uniq.append((encoded, gens, parent))
        level += 1
        reps = _conj_dedup(uniq, PrimePowerModulus(ell, level))
        classes = [(frozenset(encoded), gens) for encoded, gens in reps]
        if progress:
            progress(level, len(classes))
    classes = sorted(classes, key=lambda eg: (len(eg[0]), tuple(sorted(eg[0]))))
    return [MatGroup.from_elements(frozenset(elems), modulus, gens)
            for elems, gens in classes]
