"""The random Gamma-group model at finite variety level: free admissible
objects, the (n+1)-relation sampler with invariant last relation, exact
probability and moment formulas, multiplicities, and Monte Carlo estimation.

The finite variety is described by a list of generating Gamma-groups.  When
every generator is abelian the free admissible object is realized as a
module over Z/m[Gamma] (the n-th power of the augmentation submodule,
reduced by the variety constraints), which keeps sampling and quotients
linear algebra.  Nonabelian varieties go through a capped universal product
construction.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .abelian import AbelianStructure
from .errors import CapacityError, InternalCheckError, ValidationError
from .groups import (FiniteGroup, GammaGroup, Subgroup, cyclic,
                     inversion_action)
from .intmat import (divisor_chain, howell_form_mod, howell_residue,
                     quotient_divisors_mod, quotient_with_reps_mod,
                     solve_linear_mod)
from .rng import CounterRng, substream

DEFAULT_ORDER_CAP = 3 ** 8


@dataclass(frozen=True)
class VarietySpec:
    """A finite set of Gamma-groups generating the variety (closure under
    products, Gamma-subgroups, and Gamma-quotients is implied)."""
    generators: tuple

    def __post_init__(self):
        if not self.generators:
            raise ValidationError("variety needs at least one generator")
        gam = self.generators[0].gamma
        for g in self.generators:
            if g.gamma.table != gam.table:
                raise ValidationError("variety generators share one Gamma")
            if math.gcd(g.base.order, 2 * gam.order) != 1:
                raise ValidationError(
                    "variety member orders must be coprime to 2|Gamma|")

    @property
    def gamma(self) -> FiniteGroup:
        return self.generators[0].gamma

    @property
    def is_abelian(self) -> bool:
        return all(g.base.is_abelian() for g in self.generators)

    @property
    def exponent(self) -> int:
        e = 1
        for g in self.generators:
            e = math.lcm(e, g.base.exponent())
        return e


def abelian_exponent_variety(gamma: FiniteGroup, m: int) -> VarietySpec:
    """The variety of all abelian Gamma-groups of exponent dividing m,
    generated by the regular module (Z/m)[Gamma]."""
    k = gamma.order
    n = m ** k
    # regular module: coordinates indexed by gamma elements, permuted action
    from .groups import abelian
    base = abelian([m] * k)

    def idx(vec):
        x = 0
        for a in vec:
            x = x * m + a
        return x

    def vec(x):
        out = []
        for _ in range(k):
            x, a = divmod(x, m)
            out.append(a)
        out.reverse()
        return out

    acts = []
    for ge in range(k):
        perm = []
        for x in range(n):
            v = vec(x)
            w = [0] * k
            # gamma moves the coordinate at h to gamma*h
            for h in range(k):
                w[gamma.table[ge][h]] = v[h]
            perm.append(idx(w))
        acts.append(perm)
    reg = GammaGroup(base, gamma, acts, name=f"reg(Z/{m}[{gamma.name}])")
    return VarietySpec((reg,))


# ---------------------------------------------------------------------------
# the free admissible object (abelian module model)
# ---------------------------------------------------------------------------

class FreeAdmissible:
    """The free admissible Gamma-group on n generators at finite variety
    level.

    Abelian model: elements are coordinate vectors mod m of length
    n*(|Gamma|-1) (a basis of the n-th power of the augmentation submodule),
    with Gamma acting by integer matrices; the variety constraint quotient
    N (intersection of kernels of maps to the generators) is stored as a
    Howell form and elements are canonical residues."""

    def __init__(self, n: int, spec: VarietySpec,
                 order_cap: int = DEFAULT_ORDER_CAP, dim_cap: int = 64):
        if n < 0:
            raise ValidationError("n must be nonnegative")
        if not spec.is_abelian:
            raise CapacityError(
                "nonabelian variety generators are not supported by the "
                "module model")
        self.n = n
        self.spec = spec
        gamma = spec.gamma
        m = spec.exponent
        k = gamma.order
        self.m = m
        self.gamma = gamma
        dim = n * (k - 1)
        self.dim = dim
        self.order_cap = order_cap
        # the module model scales with the dimension, not the order; the
        # order cap only guards element enumeration
        if dim > dim_cap:
            raise CapacityError(f"free module dimension {dim} exceeds {dim_cap}")
        # action of gamma on I = aug submodule of Z/m[Gamma]:
        # basis b_h = e_h - e_1 for h != 1
        nontriv = [h for h in range(k) if h != 0]
        self.block = len(nontriv)
        mats = []
        for ge in range(k):
            mat = [[0] * self.block for _ in range(self.block)]
            for j, h in enumerate(nontriv):
                # gamma * (e_h - e_1) = e_{gh} - e_g = (e_{gh} - e_1) - (e_g - e_1)
                gh = gamma.table[ge][h]
                g1 = gamma.table[ge][0]
                if gh != 0:
                    mat[nontriv.index(gh)][j] += 1
                if g1 != 0:
                    mat[nontriv.index(g1)][j] -= 1
            mats.append(mat)
        self._block_mats = mats  # column-action: (M v)_i = sum_j M[i][j] v[j]
        # variety constraint: N = intersection of kernels of module maps to
        # each generator target
        self._nhowell = self._variety_kernel()
        self._check_cap(order_cap)
        self._inv_cache: dict = {}

    # -- module plumbing ------------------------------------------------------

    def act_vector(self, ge: int, v: Sequence[int]) -> list:
        m = self.m
        out = [0] * self.dim
        M = self._block_mats[ge]
        b = self.block
        for blk in range(self.n):
            off = blk * b
            for i in range(b):
                acc = 0
                row = M[i]
                for j in range(b):
                    c = row[j]
                    if c:
                        acc += c * v[off + j]
                out[off + i] = acc % m
        return out

    def _variety_kernel(self):
        """Howell form of N = the joint kernel of all module maps to the
        variety generators; elements of the free object are residues mod N."""
        m = self.m
        gamma = self.gamma
        rows = []
        for target in self.spec.generators:
            homs = _module_hom_basis(self, target)
            for phi in homs:
                # phi: list over basis slots of target-element images
                # kernel rows: one per target coordinate basis
                tdata = _target_data(target)
                for ci in range(len(tdata.orders)):
                    d = tdata.orders[ci]
                    row = []
                    for j in range(self.dim):
                        row.append((phi[j][ci] * (m // d)) % m)
                    rows.append(row)
        if not rows:
            return howell_form_mod([], self.dim, m)
        # N = solution set {x : all rows . x == 0 mod m}; store as Howell of
        # its generator set
        gens = _solution_space(rows, self.dim, m)
        return howell_form_mod(gens, self.dim, m)

    def _check_cap(self, cap):
        # order of the reduced object: each Howell column contributes
        # pivot-many residues
        order = 1
        for c in range(self.dim):
            order *= self._nhowell[c][c]
        self.order = order

    def canonical(self, v: Sequence[int]) -> tuple:
        return howell_residue(self._nhowell, list(v), self.m)

    def add(self, a, b) -> tuple:
        return self.canonical([(x + y) % self.m for x, y in zip(a, b)])

    def neg(self, a) -> tuple:
        return self.canonical([(-x) % self.m for x in a])

    def act(self, ge: int, a) -> tuple:
        return self.canonical(self.act_vector(ge, a))

    def zero(self) -> tuple:
        return tuple([0] * self.dim)

    def elements(self):
        """All canonical residues (use only for small objects)."""
        if self.order > min(self.order_cap, 100_000):
            raise CapacityError(
                f"free object order {self.order} exceeds the enumeration cap")
        seen = set()
        for combo in itertools.product(range(self.m), repeat=self.dim):
            seen.add(self.canonical(combo))
        if len(seen) != self.order:
            raise InternalCheckError("element enumeration mismatch")
        return sorted(seen)

    def invariant_submodule(self, gamma_inf_members: Sequence[int]):
        """Adapted generators (order, vector) of the Gamma_inf-invariants."""
        key = tuple(sorted(gamma_inf_members))
        if key in self._inv_cache:
            return self._inv_cache[key]
        m = self.m
        # a residue x is invariant iff (M_ge - I) x lies in N for each
        # generator ge of Gamma_inf; solved with N-coefficients as unknowns
        mats = []
        for ge in key:
            if ge == 0:
                continue
            cols = []
            for j in range(self.dim):
                basis = [0] * self.dim
                basis[j] = 1
                img = self.act_vector(ge, basis)
                img[j] = (img[j] - 1) % m
                cols.append(self.canonical(img))
            mats.append(cols)
        # solution set: x with sum_j x_j * cols[j] == 0 mod (N + mZ)
        nrows = [r for r in self._nhowell if any(x % self.m for x in r)]
        eq_rows = []
        for cols in mats:
            for coord in range(self.dim):
                eq_rows.append([cols[j][coord] for j in range(self.dim)])
        # augment with N-generator coefficients as free unknowns
        sol = _solution_space_with_lattice(eq_rows, nrows, self.dim, m)
        reps = quotient_with_reps_mod(sol, [list(r) for r in nrows], self.dim, m)
        # canonicalize representatives into the quotient
        reps = [(d, self.canonical(v)) for d, v in reps]
        self._inv_cache[key] = reps
        return reps

    def sample(self, rng: CounterRng) -> tuple:
        return self.canonical([rng.randint(self.m) for _ in range(self.dim)])

    def sample_invariant(self, gamma_inf_members, rng: CounterRng) -> tuple:
        reps = self.invariant_submodule(gamma_inf_members)
        acc = [0] * self.dim
        for d, v in reps:
            c = rng.randint(d)
            if c:
                for j in range(self.dim):
                    acc[j] = (acc[j] + c * v[j]) % self.m
        return self.canonical(acc)


def _target_data(target: GammaGroup):
    from .abelian import structure_of_members
    return _TargetData(target)


class _TargetData:
    def __init__(self, target: GammaGroup):
        from .abelian import structure_of_members
        data = structure_of_members(target.base, range(target.base.order))
        self.data = data
        self.orders = list(data.basis_orders)
        self.coords = data.coords
        # action matrices on coordinates
        self.mats = []
        for ge in range(target.gamma.order):
            cols = []
            for b in data.basis:
                cols.append(list(data.coords[target.act[ge][b]]))
            self.mats.append(cols)


def _module_hom_basis(free: FreeAdmissible, target: GammaGroup):
    """Generators of Hom_Gamma(I^n, target) as lists: phi[j] = image coords
    of the j-th free basis vector."""
    m = free.m
    td = _target_data(target)
    tdim = len(td.orders)
    if tdim == 0:
        return []
    nun = free.dim * tdim
    rows = []
    # equivariance: phi(M_ge b_j) = act_ge(phi(b_j)) for each ge, j
    for ge in range(1, free.gamma.order):
        for j in range(free.dim):
            basis = [0] * free.dim
            basis[j] = 1
            img = free.act_vector(ge, basis)  # coordinates of M_ge b_j
            # LHS: sum_l img[l] * phi[l]; RHS: act matrix applied to phi[j]
            for ci in range(tdim):
                d = td.orders[ci]
                row = [0] * nun
                for l in range(free.dim):
                    if img[l]:
                        row[l * tdim + ci] += img[l]
                for cj in range(tdim):
                    coef = td.mats[ge][cj][ci]
                    if coef:
                        row[j * tdim + cj] -= coef
                rows.append([(x * (m // d)) % m for x in row])
    # order constraints: orders[ci] * phi[..][ci] == 0 automatically via scaling
    sols = _solution_space(rows, nun, m) if rows else \
        [[int(i == j) for j in range(nun)] for i in range(nun)]
    homs = []
    for s in sols:
        phi = []
        ok = True
        for j in range(free.dim):
            co = []
            for ci in range(tdim):
                d = td.orders[ci]
                val = s[j * tdim + ci]
                # value must make sense mod d: scale from mod m
                co.append(val % d)
            phi.append(co)
        homs.append(phi)
    return homs


def _solution_space(rows, nun, m):
    from .homology import _solution_space_mod
    return _solution_space_mod(rows, nun, m)


def _solution_space_with_lattice(eq_rows, lattice_rows, dim, m):
    """{x : A x == 0 mod (L + mZ)} where L is spanned by lattice_rows.

    One lattice coefficient per equation block absorbs the L-ambiguity and
    the whole thing is a single linear system in (x, t) mod m.  Equation
    rows must come in blocks of dim (one per ambient coordinate), with the
    lattice coefficients shared within a block."""
    if not eq_rows:
        return [[int(i == j) for j in range(dim)] for i in range(dim)]
    nl = len(lattice_rows)
    neq = len(eq_rows)
    if neq % dim:
        raise InternalCheckError("equation rows not grouped by coordinate")
    ngroups = neq // dim
    nun = dim + ngroups * nl
    rows = []
    for g in range(ngroups):
        for coord in range(dim):
            row = [0] * nun
            arow = eq_rows[g * dim + coord]
            for j in range(dim):
                row[j] = arow[j] % m
            for li, lrow in enumerate(lattice_rows):
                row[dim + g * nl + li] = (-lrow[coord]) % m
            rows.append(row)
    sols = _solution_space(rows, nun, m)
    out = []
    for s in sols:
        x = [a % m for a in s[:dim]]
        if any(x):
            out.append(x)
    return out


# ---------------------------------------------------------------------------
# sampling and outcomes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleOutcome:
    label: tuple               # canonical isomorphism label of the quotient
    divisors: tuple            # abelian divisor chain of the quotient
    witnesses: tuple           # the sampled x_1..x_{n+1} (canonical residues)


def sample_x(free: FreeAdmissible, gamma_inf_members: Sequence[int],
             rng: CounterRng) -> SampleOutcome:
    """One draw of the random group: quotient of the free object by the
    Gamma-closed normal subgroup generated by Y(x_i), with x_{n+1} drawn
    from the Gamma_inf-invariants."""
    xs = [free.sample(rng) for _ in range(free.n)]
    xs.append(free.sample_invariant(gamma_inf_members, rng))
    return quotient_outcome(free, xs)


def quotient_outcome(free: FreeAdmissible, xs) -> SampleOutcome:
    m = free.m
    rel = []
    for x in xs:
        for ge in range(1, free.gamma.order):
            img = free.act_vector(ge, x)
            rel.append([(a - b) % m for a, b in zip(img, x)])
    nrows = [list(r) for r in free._nhowell if any(v % m for v in r)]
    divisors = quotient_divisors_mod(rel + nrows, free.dim, m)
    chain = tuple(divisor_chain(divisors))
    label = ("ab-inv", chain) if _is_inversion_variety(free) else \
        ("ab", chain, free.gamma.order)
    return SampleOutcome(label=label, divisors=chain, witnesses=tuple(xs))


def _is_inversion_variety(free: FreeAdmissible) -> bool:
    """Gamma = Z/2 acting by inversion on the module model."""
    if free.gamma.order != 2:
        return False
    one = [0] * free.dim
    for j in range(free.dim):
        basis = [0] * free.dim
        basis[j] = 1
        img = free.act_vector(1, basis)
        expect = [0] * free.dim
        expect[j] = (-1) % free.m
        if img != expect:
            return False
    return True


# ---------------------------------------------------------------------------
# exact formulas
# ---------------------------------------------------------------------------

def prob_module_formula(a_order: int, a_inv_gamma: int, a_inv_ginf: int,
                        end_size: int, mult: int, n: int) -> Fraction:
    """prod_{i=0}^{mult-1} (1 - end^i * |A^G|^{n+1} / (|A|^n |A^{Ginf}|)),
    clamped to 0 if any factor is nonpositive."""
    out = Fraction(1)
    for i in range(mult):
        term = 1 - Fraction(end_size ** i * a_inv_gamma ** (n + 1),
                            a_order ** n * a_inv_ginf)
        if term <= 0:
            return Fraction(0)
        out *= term
    return out


@dataclass(frozen=True)
class IrreducibleModule:
    """Irreducible module data for the multiplicity formulas."""
    p: int
    poly: tuple          # minimal polynomial coefficients of the Gamma action
    order: int           # |A|
    inv_gamma: int       # |A^Gamma|
    inv_ginf: int        # |A^{Gamma_inf}|
    end_size: int        # |End(A)| = p^(endomorphism dimension)


def _factor_cyclotomic(k: int, p: int):
    """Irreducible monic factors of x^k - 1 over F_p (brute trial division)."""
    target = [(-1) % p] + [0] * (k - 1) + [1]   # x^k - 1 coefficients

    def polmod(a, b):
        a = a[:]
        while len(a) >= len(b) and any(a):
            if a[-1] == 0:
                a.pop()
                continue
            q = (a[-1] * pow(b[-1], -1, p)) % p
            off = len(a) - len(b)
            for i in range(len(b)):
                a[off + i] = (a[off + i] - q * b[i]) % p
            a.pop()
        while a and a[-1] == 0:
            a.pop()
        return a

    rem = target[:]
    factors = []
    deg = 1
    while len(rem) > 1:
        found = False
        for coeffs in itertools.product(range(p), repeat=deg):
            cand = list(coeffs) + [1]
            if len(cand) > len(rem):
                break
            if not polmod(rem[:], cand):
                # divides; do the division
                quo = _poldiv(rem, cand, p)
                factors.append(tuple(cand))
                rem = quo
                found = True
                break
        if not found:
            deg += 1
            if deg > k:
                raise InternalCheckError("cyclotomic factorization failed")
    return factors


def _poldiv(a, b, p):
    a = a[:]
    out = [0] * (len(a) - len(b) + 1)
    while len(a) >= len(b) and any(a):
        if a[-1] == 0:
            a.pop()
            continue
        q = (a[-1] * pow(b[-1], -1, p)) % p
        off = len(a) - len(b)
        out[off] = q
        for i in range(len(b)):
            a[off + i] = (a[off + i] - q * b[i]) % p
        a.pop()
    while a and a[-1] == 0:
        a.pop()
    if a:
        raise InternalCheckError("inexact polynomial division")
    return out


def _polpow_mod(base_deg_shift, f, p, e):
    """x^e mod f over F_p."""
    # base = x
    r = [0, 1]
    if len(f) == 2:
        r = [(-f[0]) % p]

    def mul(a, b):
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] = (out[i + j] + x * y) % p
        # reduce mod f
        while len(out) >= len(f):
            if out[-1] == 0:
                out.pop()
                continue
            q = (out[-1] * pow(f[-1], -1, p)) % p
            off = len(out) - len(f)
            for i in range(len(f)):
                out[off + i] = (out[off + i] - q * f[i]) % p
            out.pop()
        return out or [0]

    result = [1]
    base = [0, 1]
    while len(base) >= len(f):
        base = mul(base, [1])
    k = e
    while k:
        if k & 1:
            result = mul(result, base)
        base = mul(base, base)
        k >>= 1
    return result


def irreducible_modules_cyclic(gamma: FiniteGroup,
                               gamma_inf_members: Sequence[int], p: int):
    """All irreducible F_p[Gamma]-modules for cyclic Gamma with the
    invariant data needed in the measure formulas."""
    k = gamma.order
    if math.gcd(p, k) != 1:
        raise ValidationError("p must be coprime to |Gamma|")
    # require cyclic
    gen = next((g for g in range(k) if gamma.element_order(g) == k), None)
    if gen is None:
        raise CapacityError("module census implemented for cyclic Gamma only")
    sub = Subgroup(gamma, tuple(gamma_inf_members))
    s = k // max(1, len(sub))   # Gamma_inf = <gen^s>
    out = []
    for f in _factor_cyclotomic(k, p):
        deg = len(f) - 1
        order = p ** deg
        # A^Gamma is nonzero exactly for the trivial module, f = x - 1
        inv_gamma = p if (deg == 1 and f[0] == (p - 1) % p) else 1
        if len(sub) == 1:
            inv_ginf = order
        else:
            xs = _polpow_mod(None, list(f), p, s)
            inv_ginf = order if xs == [1] else 1
        out.append(IrreducibleModule(p=p, poly=tuple(f), order=order,
                                     inv_gamma=inv_gamma, inv_ginf=inv_ginf,
                                     end_size=p ** deg))
    return out


def m_ad(n: int, h: GammaGroup, module: IrreducibleModule,
         spec: VarietySpec, _second_check: bool = True) -> int:
    """Multiplicity of the irreducible module in the semisimplified kernel
    of a surjection from the free admissible object onto H."""
    decomp = kernel_decomposition(n, h, spec, _second_check=_second_check)
    for mod, mult in decomp:
        if mod.p == module.p and mod.poly == module.poly:
            return mult
    return 0


def kernel_decomposition(n: int, h: GammaGroup, spec: VarietySpec,
                         _second_check: bool = True):
    """Isotypic decomposition of R/M for R the kernel of a surjection
    F_n -> H and M the intersection of maximal co-abelian normal subgroups.

    For the abelian module model M = rad(R) = (prod of primes) R, and the
    decomposition is by minimal-polynomial factors of the cyclic Gamma
    action on R/rad per prime."""
    free = FreeAdmissible(n, spec)
    tuples = _surjection_tuples(h, n, want=2 if _second_check else 1)
    if not tuples:
        return []
    results = []
    for tup in tuples:
        results.append(_decompose_kernel_for_tuple(free, h, tup))
    first = _decomp_key(results[0])
    for r in results[1:]:
        if _decomp_key(r) != first:
            raise InternalCheckError(
                "kernel decomposition depends on the surjection choice")
    return results[0]


def _decomp_key(decomp):
    return sorted((mod.p, mod.poly, mult) for mod, mult in decomp)


def _surjection_tuples(h: GammaGroup, n: int, want: int):
    out = []
    order = h.base.order
    maxima = [set(s) for s in h.maximal_proper_stable_subgroups()]
    ys = [h.y_map(g) for g in range(order)]
    for tup in itertools.product(range(order), repeat=n):
        cover = set(range(len(maxima)))
        allys = set()
        for g in tup:
            allys.update(ys[g])
        dead = all(any(y not in s for y in allys) for s in maxima) if maxima else True
        if dead:
            out.append(tup)
            if len(out) >= want:
                return out
    return out


def _decompose_kernel_for_tuple(free: FreeAdmissible, h: GammaGroup, tup):
    m = free.m
    td = _target_data(h)
    tdim = len(td.orders)
    gamma = free.gamma
    nontriv = [ge for ge in range(gamma.order) if ge != 0]
    # hom F -> H from the tuple: basis b_{i,ge} maps to act_ge(h_i) - h_i
    images = []
    for i in range(free.n):
        for ge in nontriv:
            y = h.base.table[h.base.inv[tup[i]]][h.act[ge][tup[i]]]
            images.append(list(td.coords[y]))
    # kernel rows: sum_j x_j images[j] == 0 in H
    rows = []
    for ci in range(tdim):
        d = td.orders[ci]
        rows.append([(images[j][ci] * (m // d)) % m for j in range(free.dim)])
    rgens = _solution_space(rows, free.dim, m) if tdim else \
        [[int(i == j) for j in range(free.dim)] for i in range(free.dim)]
    # restrict to the free object: intersect with ambient (module model is
    # already the free object when the variety kernel is trivial)
    nrows = [list(r) for r in free._nhowell if any(v % m for v in r)]
    if nrows:
        # R = {x in solution : x in free object}; the module model already
        # works modulo N, so add N to the span
        rgens = rgens + nrows
    out = []
    for p in _primes_of(m):
        radical = [[(x * p) % m for x in g] for g in rgens]
        reps = quotient_with_reps_mod(rgens, radical + nrows, free.dim, m)
        basis = [v for d, v in reps]
        if not basis:
            continue
        for d, _ in reps:
            if d != p:
                raise InternalCheckError("radical quotient not elementary")
        dim = len(basis)
        # matrix of the cyclic generator action on R/rad in this basis
        gen = next(g for g in range(gamma.order)
                   if gamma.element_order(g) == gamma.order)
        cols = []
        lattice = radical + nrows
        for j in range(dim):
            img = free.act_vector(gen, basis[j])
            co = _express_in_basis(img, basis, lattice, m, p)
            cols.append(co)
        # decompose by minimal polynomial factors
        for f in _factor_cyclotomic(gamma.order, p):
            deg = len(f) - 1
            mat = _poly_of_matrix(cols, f, p, dim)
            null = _nullity(mat, p, dim)
            if null % deg:
                raise InternalCheckError("isotypic dimension not divisible")
            mult = null // deg
            if mult:
                out.append((_module_data(gamma, f, p), mult))
    return out


def _module_data(gamma, f, p):
    deg = len(f) - 1
    order = p ** deg
    inv_gamma = p if (deg == 1 and f[0] == (p - 1) % p) else 1
    return IrreducibleModule(p=p, poly=tuple(f), order=order,
                             inv_gamma=inv_gamma, inv_ginf=-1,
                             end_size=p ** deg)


def _express_in_basis(vec, basis, lattice_rows, m, p):
    """Coefficients mod p with vec == sum c_j basis_j modulo the lattice."""
    dim = len(vec)
    nb = len(basis)
    nl = len(lattice_rows)
    rows = []
    for coord in range(dim):
        row = [b[coord] % m for b in basis]
        row += [l[coord] % m for l in lattice_rows]
        rows.append(row)
    x = solve_linear_mod(rows, [v % m for v in vec], nb + nl, m)
    if x is None:
        raise InternalCheckError("vector not expressible in quotient basis")
    return [c % p for c in x[:nb]]


def _poly_of_matrix(cols, f, p, dim):
    """f(M) mod p for M given by columns."""
    def matmul(A, B):
        return [[sum(A[i][k] * B[k][j] for k in range(dim)) % p
                 for j in range(dim)] for i in range(dim)]
    ident = [[int(i == j) for j in range(dim)] for i in range(dim)]
    M = [[cols[j][i] % p for j in range(dim)] for i in range(dim)]
    out = [[0] * dim for _ in range(dim)]
    power = ident
    for coef in f:
        if coef:
            for i in range(dim):
                for j in range(dim):
                    out[i][j] = (out[i][j] + coef * power[i][j]) % p
        power = matmul(power, M)
    return out


def _nullity(mat, p, dim):
    A = [row[:] for row in mat]
    rank = 0
    col = 0
    for r in range(dim):
        piv = None
        for c in range(col, dim):
            for rr in range(rank, dim):
                if A[rr][c] % p:
                    piv = (rr, c)
                    break
            if piv:
                break
        if not piv:
            break
        rr, c = piv
        A[rank], A[rr] = A[rr], A[rank]
        inv = pow(A[rank][c], -1, p)
        A[rank] = [(x * inv) % p for x in A[rank]]
        for i in range(dim):
            if i != rank and A[i][c] % p:
                f2 = A[i][c]
                A[i] = [(a - f2 * b) % p for a, b in zip(A[i], A[rank])]
        rank += 1
        col = c + 1
    return dim - rank


def _primes_of(m):
    out = []
    d = 2
    while d * d <= m:
        if m % d == 0:
            out.append(d)
            while m % d == 0:
                m //= d
        d += 1
    if m > 1:
        out.append(m)
    return out


def mu_n(h: GammaGroup, spec: VarietySpec, gamma_inf_members: Sequence[int],
         n: int) -> Fraction:
    """Exact probability that the level-n random group is isomorphic to H."""
    if not h.is_admissible():
        return Fraction(0)
    sur = h.count_sur_gamma_free(n)
    if sur == 0:
        return Fraction(0)
    inv_g = len(h.invariants(range(h.gamma.order)))
    inv_gi = len(h.invariants(gamma_inf_members))
    aut = h.count_aut_gamma()
    lead = Fraction(sur * inv_g ** (n + 1), aut * h.base.order ** n * inv_gi)
    prod = Fraction(1)
    sub = Subgroup(h.gamma, tuple(gamma_inf_members))
    s = h.gamma.order // max(1, len(sub))
    for mod, mult in kernel_decomposition(n, h, spec):
        data = _with_ginf(mod, h.gamma, s, len(sub))
        prod *= prob_module_formula(data.order, data.inv_gamma, data.inv_ginf,
                                    data.end_size, mult, n)
    return lead * prod


def _with_ginf(mod: IrreducibleModule, gamma, s: int, ginf_order: int):
    if ginf_order == 1:
        inv_ginf = mod.order
    else:
        xs = _polpow_mod(None, list(mod.poly), mod.p, s)
        inv_ginf = mod.order if xs == [1] else 1
    return IrreducibleModule(p=mod.p, poly=mod.poly, order=mod.order,
                             inv_gamma=mod.inv_gamma, inv_ginf=inv_ginf,
                             end_size=mod.end_size)


@dataclass(frozen=True)
class LimitResult:
    value: Optional[Fraction]
    sequence: tuple
    converged: bool
    n_values: tuple


def mu_limit(h: GammaGroup, spec: VarietySpec,
             gamma_inf_members: Sequence[int], tolerance: Fraction,
             n_start: int = 1, n_budget: int = 12) -> LimitResult:
    """Numerical limit of mu_n: iterate until successive values differ by
    less than the tolerance; inconclusive rather than fabricated on
    non-convergence."""
    seq = []
    ns = []
    prev = None
    for n in range(n_start, n_start + n_budget):
        val = mu_n(h, spec, gamma_inf_members, n)
        seq.append(val)
        ns.append(n)
        if prev is not None and abs(val - prev) < tolerance:
            return LimitResult(value=val, sequence=tuple(seq), converged=True,
                               n_values=tuple(ns))
        prev = val
    return LimitResult(value=None, sequence=tuple(seq), converged=False,
                       n_values=tuple(ns))


def moment_mu(h: GammaGroup, gamma_inf_members: Sequence[int]) -> Fraction:
    """The limiting H-moment 1/[H^{Gamma_inf}:H^Gamma]."""
    inv_g = len(h.invariants(range(h.gamma.order)))
    inv_gi = len(h.invariants(gamma_inf_members))
    return Fraction(inv_g, inv_gi)


def moment_n(h: GammaGroup, gamma_inf_members: Sequence[int], n: int) -> Fraction:
    """Exact level-n H-moment: |Sur| (|H^G|/|H|)^n (|H^G|/|H^{Ginf}|)."""
    sur = h.count_sur_gamma_free(n)
    inv_g = len(h.invariants(range(h.gamma.order)))
    inv_gi = len(h.invariants(gamma_inf_members))
    return (Fraction(sur) * Fraction(inv_g, h.base.order) ** n
            * Fraction(inv_g, inv_gi))


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

@dataclass
class MonteCarloReport:
    trials: int
    seed: int
    counts: dict              # label -> occurrences
    sur_totals: dict          # tracked structure chain -> total surjections
    n: int

    def probability(self, chain: tuple):
        label = ("ab-inv", tuple(chain))
        c = self.counts.get(label, 0)
        p = Fraction(c, self.trials)
        import math as _m
        se = _m.sqrt(max(float(p) * (1 - float(p)), 1e-300) / self.trials)
        return p, se

    def mean_surjections(self, chain: tuple):
        data = self.sur_totals.get(tuple(chain))
        if data is None:
            raise ValidationError(f"structure {chain} was not tracked")
        total, sq = data
        mean = Fraction(total, self.trials)
        import math as _m
        var = sq / self.trials - float(mean) ** 2
        se = _m.sqrt(max(var, 0.0) / self.trials)
        return mean, se


def monte_carlo(free: FreeAdmissible, gamma_inf_members: Sequence[int],
                trials: int, seed: int, track: Sequence[AbelianStructure] = (),
                workers: int = 1) -> MonteCarloReport:
    """Seeded i.i.d. sampling of the random group with per-trial substreams;
    deterministic for any worker count."""
    if trials < 1:
        raise ValidationError("trials must be positive")
    if not _is_inversion_variety(free):
        track = list(track)
        if track:
            raise CapacityError(
                "surjection tracking implemented for the inversion action")
    tracked = [t if isinstance(t, AbelianStructure) else
               AbelianStructure.from_cyclic_orders(t) for t in track]

    def run_range(lo_hi):
        lo, hi = lo_hi
        counts: dict = {}
        sur: dict = {}
        for t in tracked:
            sur[t.chain] = [0, 0.0]
        for trial in range(lo, hi):
            rng = substream(seed, trial)
            outcome = sample_x(free, gamma_inf_members, rng)
            counts[outcome.label] = counts.get(outcome.label, 0) + 1
            xs = AbelianStructure.from_cyclic_orders(outcome.divisors)
            for t in tracked:
                cnt = xs.sur_count(t)
                rec = sur[t.chain]
                rec[0] += cnt
                rec[1] += float(cnt) ** 2
        return counts, sur

    chunks = []
    step = max(1, (trials + max(1, workers) - 1) // max(1, workers))
    for lo in range(0, trials, step):
        chunks.append((lo, min(trials, lo + step)))
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_range, chunks))
    else:
        parts = [run_range(ch) for ch in chunks]
    counts: dict = {}
    sur_tot: dict = {t.chain: [0, 0.0] for t in tracked}
    for c, s in parts:
        for k, v in c.items():
            counts[k] = counts.get(k, 0) + v
        for k, v in s.items():
            sur_tot[k][0] += v[0]
            sur_tot[k][1] += v[1]
    return MonteCarloReport(trials=trials, seed=seed, counts=counts,
                            sur_totals={k: (v[0], v[1]) for k, v in sur_tot.items()},
                            n=free.n)
