"""Independent cross-check path for the multiplier computations.

The default h2 runs bar-complex homology; this oracle instead solves the
full two-variable cocycle space mod p^e (one unknown per pair of nontrivial
elements, no generator parametrization), quotients by coboundaries and
carry classes, and reads off the structure.  The reduced multiplier
H2(G, c) is obtained on this side from the commutator pairing: its dual is
the annihilator of the antisymmetrizations over commuting pairs meeting c.

Above a direct cap, p-parts come from Sylow subgroups: for a normal abelian
Sylow the commutator pairing identifies cocycle classes with alternating
forms, and the invariant forms under conjugation give the p-part.

Shared with the main path are only the generic integer-matrix primitives.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .abelian import AbelianGroupData, AbelianStructure, structure_of_members
from .errors import CapacityError, InternalCheckError
from .groups import FiniteGroup, _small_generating_set
from .intmat import kernel_basis, quotient_with_reps_mod

ORACLE_DIRECT_CAP = 25


def _prime_powers(n: int):
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, d ** e))
        d += 1
    if n > 1:
        out.append((n, n))
    return out


def _val(p: int, n: int) -> int:
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


def _echelon_mod(rows: np.ndarray, m: int):
    """Row space of `rows` in (Z/m)^dim as an echelon list with pivots
    dividing m and annihilator rows propagated (numpy column sweeps)."""
    A = rows % m
    A = A[(A != 0).any(axis=1)]
    dim = rows.shape[1]
    done = []
    extra = []
    since_compact = 0
    for c in range(dim):
        if extra:
            add = np.array(extra, dtype=np.int64)
            A = np.vstack([A, add]) if len(A) else add
            extra = []
        if len(A) == 0:
            continue
        col = A[:, c]
        while True:
            nz = np.nonzero(col)[0]
            if len(nz) <= 1:
                break
            piv = nz[int(np.argmin(col[nz]))]
            q = col // col[piv]
            q[piv] = 0
            mask = q != 0
            if not mask.any():
                break
            A[mask] = (A[mask] - np.outer(q[mask], A[piv])) % m
            col = A[:, c]
        nz = np.nonzero(col)[0]
        if len(nz):
            piv = int(nz[0])
            prow = A[piv].copy()
            g = math.gcd(int(prow[c]), m)
            if int(prow[c]) != g:
                u = _unit_for(int(prow[c]), g, m)
                prow = (prow * u) % m
            done.append(prow)
            ann = m // g
            if ann > 1:
                arow = (prow * ann) % m
                if arow.any():
                    extra.append(arow)
            A[piv] = 0
        since_compact += 1
        if since_compact >= 32:
            A = A[(A != 0).any(axis=1)]
            since_compact = 0
    return done


def _unit_for(a: int, g: int, m: int) -> int:
    a0, m0 = a // g, m // g
    u = pow(a0, -1, m0) if m0 > 1 else 1
    while math.gcd(u, m) != 1:
        u += m0
    return u % m


def _solution_gens(echelon_rows, dim: int, m: int):
    eq = [list(map(int, r)) for r in echelon_rows if any(int(x) % m for x in r)]
    if not eq:
        return [[int(i == j) for j in range(dim)] for i in range(dim)]
    nr = len(eq)
    mat = [r + [m if i == j else 0 for j in range(nr)] for i, r in enumerate(eq)]
    basis, _, _ = kernel_basis(mat, dim + nr)
    out = []
    for v in basis:
        x = [a % m for a in v[:dim]]
        if any(x):
            out.append(x)
    return out


class OracleCocycles:
    """Full-pair cocycle data of G mod m = p^e."""

    def __init__(self, group: FiniteGroup, m: int):
        self.group = group
        self.m = m
        n = group.order
        self.pairs = [(g, h) for g in range(1, n) for h in range(1, n)]
        self.index = {pr: i for i, pr in enumerate(self.pairs)}
        self.dim = len(self.pairs)
        S = _small_generating_set(group) if n > 1 else []
        t = group.table
        rows = []
        for g in range(1, n):
            for h in range(1, n):
                gh = t[g][h]
                for s in S:
                    hs = t[h][s]
                    row = np.zeros(self.dim, dtype=np.int64)
                    row[self.index[(g, h)]] += 1
                    if gh != 0:
                        row[self.index[(gh, s)]] += 1
                    row[self.index[(h, s)]] -= 1
                    if hs != 0:
                        row[self.index[(g, hs)]] -= 1
                    if row.any():
                        rows.append(row % m)
        arr = np.array(rows, dtype=np.int64) if rows else \
            np.zeros((0, self.dim), dtype=np.int64)
        if len(arr):
            arr = np.unique(arr, axis=0)
        ech = _echelon_mod(arr, m)
        self.sol = _solution_gens(ech, self.dim, m)
        self.sub = self._coboundaries() + self._carries()

    def _coboundaries(self):
        n = self.group.order
        t = self.group.table
        out = []
        for g0 in range(1, n):
            v = [0] * self.dim
            for (g, h), j in self.index.items():
                val = (g == g0) + (h == g0) - (t[g][h] == g0)
                v[j] = val % self.m
            if any(v):
                out.append(v)
        return out

    def _carries(self):
        group = self.group
        m = self.m
        ab, proj = group.abelianization()
        data = structure_of_members(ab, range(ab.order))
        out = []
        for i, d in enumerate(data.basis_orders):
            scale = m // math.gcd(d, m)
            chi = [(data.coords[proj[g]][i] * scale) % m
                   for g in range(group.order)]
            v = [0] * self.dim
            for (g, h), j in self.index.items():
                tot = chi[g] + chi[h] - chi[group.table[g][h]]
                if tot % m:
                    raise InternalCheckError("oracle carry: chi not a hom")
                v[j] = (tot // m) % m
            out.append(v)
        return out

    def quotient_divisors(self):
        reps = quotient_with_reps_mod(self.sol, self.sub, self.dim, self.m)
        return [d for d, _ in reps], [v for _, v in reps]


def oracle_h2(group: FiniteGroup, cap: int = ORACLE_DIRECT_CAP) -> AbelianStructure:
    """H2(G, Z) through the cocycle quotient, one prime power at a time."""
    if group.order <= cap:
        factors = []
        for p, m in _prime_powers(group.order):
            oc = OracleCocycles(group, m)
            divisors, _ = oc.quotient_divisors()
            factors.extend(divisors)
        return AbelianStructure.from_cyclic_orders(factors)
    from .homology import sylow_subgroup
    factors = []
    for p, m in _prime_powers(group.order):
        syl = sylow_subgroup(group, p)
        psub, to_parent = group.subgroup_as_group(syl)
        if psub.order > cap:
            raise CapacityError("oracle: Sylow subgroup exceeds the cap")
        part = oracle_h2(psub, cap)
        if part.is_trivial():
            continue
        sset = set(syl)
        normal = all(group.conj(x, g) in sset
                     for g in range(group.order) for x in syl)
        if not (normal and psub.is_abelian()):
            raise CapacityError(
                "oracle: reduction needs a normal abelian Sylow subgroup")
        factors.extend(_invariant_pairing_factors(group, syl, psub,
                                                  to_parent, p))
    return AbelianStructure.from_cyclic_orders(factors)


def _pairing_tables(psub: FiniteGroup, m: int):
    """Quotient reps of the cocycle space of an abelian p-group together
    with their antisymmetrization tables (a faithful class invariant for
    abelian groups)."""
    oc = OracleCocycles(psub, m)
    divisors, reps = oc.quotient_divisors()
    n = psub.order
    tabs = []
    for v in reps:
        t = {}
        for x in range(1, n):
            for y in range(1, n):
                t[(x, y)] = (v[oc.index[(x, y)]] - v[oc.index[(y, x)]]) % m
        tabs.append(t)
    return divisors, tabs


def _invariant_pairing_factors(group, syl, psub, to_parent, p):
    m = p ** _val(p, psub.order)
    divisors, tabs = _pairing_tables(psub, m)
    if not divisors:
        return []
    pos = {g: i for i, g in enumerate(to_parent)}
    perms = []
    for g in _small_generating_set(group):
        perms.append([pos[group.conj(to_parent[x], g)]
                      for x in range(psub.order)])
    combos = list(itertools.product(*(range(d) for d in divisors)))
    table_of = {}
    for combo in combos:
        t = {}
        for key in tabs[0]:
            t[key] = sum(a * tab[key] for a, tab in zip(combo, tabs)) % m
        frozen = tuple(sorted(t.items()))
        if frozen in table_of:
            raise InternalCheckError(
                "pairing does not separate classes of the abelian Sylow")
        table_of[frozen] = combo
    fixed = []
    for frozen, combo in sorted(table_of.items()):
        t = dict(frozen)
        ok = True
        for perm in perms:
            moved = {}
            for (x, y), val in t.items():
                moved[(perm[x], perm[y])] = val
            if any(moved[key] != t[key] for key in t):
                ok = False
                break
        if ok:
            fixed.append(combo)
    if len(fixed) <= 1:
        return []
    data = AbelianGroupData(
        fixed,
        lambda a, b: tuple((x + y) % d for x, y, d in zip(a, b, divisors)),
        tuple(0 for _ in divisors))
    return list(data.structure.factors)


def oracle_h2_reduced(group: FiniteGroup, c,
                      cap: int = ORACLE_DIRECT_CAP) -> AbelianStructure:
    """H2(G, c) via the commutator pairing annihilator.

    The annihilator's structure equals H2(G, c) by finite abelian duality.
    Above the direct cap the cocycle classes come from the
    generator-parametrized space instead of the full pair space."""
    cset = sorted(set(int(x) for x in c))
    t = group.table
    pairs = []
    for x in cset:
        for y in range(1, group.order):
            if t[x][y] == t[y][x]:
                pairs.append((x, y))
    if group.order > cap:
        return _reduced_via_parametrized(group, pairs)
    factors = []
    for p, m in _prime_powers(group.order):
        oc = OracleCocycles(group, m)
        divisors, reps = oc.quotient_divisors()
        if not divisors:
            continue
        rows = []
        for (x, y) in pairs:
            row = []
            for v in reps:
                zxy = v[oc.index[(x, y)]]
                zyx = v[oc.index[(y, x)]]
                row.append((zxy - zyx) % m)
            rows.append(row)
        factors.extend(_pairing_annihilator(rows, divisors, m))
    return AbelianStructure.from_cyclic_orders(factors)


def _pairing_annihilator(rows, divisors, m):
    """Structure of {a in prod Z/d_i : sum_i a_i row_i == 0 mod m, all rows}.

    d_i * row_i vanishes mod m automatically (the pairing kills d_i times
    the i-th generator class), so the solution set is d_i-periodic and the
    plain solution space mod m suffices."""
    k = len(divisors)
    if k == 0:
        return []
    rows2 = np.array([[int(x) % m for x in row] for row in rows],
                     dtype=np.int64) if rows else \
        np.zeros((0, k), dtype=np.int64)
    sols = _solution_gens(_echelon_mod(rows2, m), k, m)
    gens = [list(s) for s in sols]
    for i in range(k):
        v = [0] * k
        v[i] = divisors[i]
        gens.append(v)
    lat = [[divisors[i] if i == j else 0 for j in range(k)] for i in range(k)]
    L = 1
    for d in divisors:
        L = math.lcm(L, d)
    reps = quotient_with_reps_mod(gens, lat, k, L)
    return [d for d, _ in reps]


def _reduced_via_parametrized(group: FiniteGroup, pairs):
    """Pairing annihilator computed on the generator-parametrized cocycle
    space (used above the full-pair cap)."""
    from .homology import _CocycleSpace, _solution_space_mod
    space = _CocycleSpace(group)
    rows = space.constraint_rows()
    factors = []
    for p, m in _prime_powers(group.order):
        sol = _solution_space_mod(rows, space.nun, m)
        sub = space.coboundary_vectors(m) + space.carry_vectors(m)
        adapted = quotient_with_reps_mod(sol, sub, space.nun, m)
        divisors = [d for d, _ in adapted]
        if not divisors:
            continue
        tables = [space.full_table(v, m) for _, v in adapted]
        prows = []
        for (x, y) in pairs:
            prows.append([(tab[x][y] - tab[y][x]) % m for tab in tables])
        factors.extend(_pairing_annihilator(prows, divisors, m))
    return AbelianStructure.from_cyclic_orders(factors)
