"""Finite abelian group structure: invariant factors, explicit bases,
coordinates, and hom/surjection counts.

The canonical internal form is the list of prime-power cyclic factors
(primes ascending, exponents descending within a prime); the divisor chain
d1 | d2 | ... is derived from it for reporting.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import InternalCheckError, ValidationError
from .intmat import divisor_chain


@dataclass(frozen=True)
class AbelianStructure:
    """Isomorphism type of a finite abelian group."""
    factors: tuple  # prime-power cyclic orders, canonical order

    def __post_init__(self):
        fs = []
        for f in self.factors:
            f = int(f)
            if f < 2:
                continue
            if len(_prime_factors(f)) != 1:
                raise ValidationError(f"factor {f} is not a prime power")
            fs.append(f)
        fs.sort(key=lambda q: (_prime_factors(q)[0], -q))
        object.__setattr__(self, "factors", tuple(fs))

    @staticmethod
    def from_cyclic_orders(orders: Sequence[int]) -> "AbelianStructure":
        """Structure of a direct sum of cyclic groups of arbitrary orders."""
        fs = []
        for d in orders:
            d = int(d)
            for p, e in _factorize(d).items():
                fs.append(p ** e)
        return AbelianStructure(tuple(fs))

    @property
    def order(self) -> int:
        return math.prod(self.factors) if self.factors else 1

    @property
    def exponent(self) -> int:
        e = 1
        for f in self.factors:
            e = e * f // math.gcd(e, f)
        return e

    @property
    def chain(self) -> tuple:
        """Invariant-factor form d1 | d2 | ..."""
        return tuple(divisor_chain(self.factors))

    def is_trivial(self) -> bool:
        return not self.factors

    def torsion_count(self, k: int) -> int:
        """Number of elements x with k*x = 0."""
        return math.prod(math.gcd(f, k) for f in self.factors)

    def prime_to_part(self, m: int) -> "AbelianStructure":
        """The subgroup of elements of order coprime to m."""
        keep = [f for f in self.factors if math.gcd(f, m) == 1]
        return AbelianStructure(tuple(keep))

    def primary_part(self, p: int) -> "AbelianStructure":
        return AbelianStructure(tuple(f for f in self.factors if f % p == 0))

    def hom_count(self, other: "AbelianStructure") -> int:
        return math.prod(math.gcd(a, b)
                         for a in self.factors for b in other.factors)

    def sur_count(self, other: "AbelianStructure") -> int:
        """Number of surjective homomorphisms onto `other`.

        Moebius inversion over the subgroup lattice of `other`; intended for
        small targets (|other| <= a few hundred)."""
        return _sur_count(self, other)

    def __str__(self):
        if not self.factors:
            return "1"
        return " x ".join(f"Z/{d}" for d in self.chain)


def _factorize(n: int) -> dict:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _prime_factors(n: int) -> list:
    return sorted(_factorize(n))


# ---------------------------------------------------------------------------
# structure of a concrete abelian group given by a multiplication rule
# ---------------------------------------------------------------------------

class AbelianGroupData:
    """Explicit basis and coordinates for a finite abelian group.

    `mul`, `inv`, `identity` describe the group on hashable element labels.
    After construction: `structure`, `basis` (elements), `coords[x]` a tuple
    of exponents with x = sum coords[i] * basis[i].
    """

    def __init__(self, elements, mul, identity):
        elems = list(elements)
        if identity not in elems:
            raise ValidationError("identity not among elements")
        self.mul = mul
        self.identity = identity
        n = len(elems)
        orders = {}
        for x in elems:
            k, y = 1, x
            while y != identity:
                y = mul(y, x)
                k += 1
            orders[x] = k
        self._orders = orders
        basis: list = []
        basis_orders: list[int] = []
        # primary decomposition, one prime at a time
        for p in _prime_factors(n) if n > 1 else []:
            ppart = [x for x in elems if _is_ppower(orders[x], p)]
            b, bo = self._p_basis(ppart, p)
            basis.extend(b)
            basis_orders.extend(bo)
        self.basis = basis
        self.basis_orders = basis_orders
        self.structure = AbelianStructure(tuple(basis_orders))
        if self.structure.order != n:
            raise InternalCheckError("abelian basis does not span the group")
        # coordinates by full enumeration
        coords = {identity: tuple(0 for _ in basis)}
        frontier = [identity]
        for i, (b, d) in enumerate(zip(basis, basis_orders)):
            new = {}
            for x, co in coords.items():
                y = x
                for k in range(1, d):
                    y = mul(y, b)
                    c2 = list(co)
                    c2[i] = k
                    new[y] = tuple(c2)
            coords.update(new)
        if len(coords) != n:
            raise InternalCheckError("coordinate enumeration incomplete")
        self.coords = coords

    def _p_basis(self, ppart, p):
        """Greedy basis of the p-primary part (direct summand peeling)."""
        mul = self.mul
        basis = []
        orders = []
        span = {self.identity}
        while len(span) < len(ppart):
            best = None
            for x in ppart:
                if x in span:
                    continue
                # order of x modulo current span: minimal k with x^(p^k) in span
                k, y = 0, x
                while y not in span:
                    y = _pow(mul, y, p, self.identity)
                    k += 1
                if best is None or k > best[0]:
                    best = (k, x)
            k, x = best
            # correct x so its p^k-th power is the identity, not just in span
            xe = _pow(mul, x, p ** k, self.identity)
            if xe != self.identity:
                # xe lies in span; write xe = sum c_i b_i and require p^k | c_i
                co = self._span_coords(span, basis, orders, xe)
                corr = self.identity
                for ci, bi, di in zip(co, basis, orders):
                    if ci % (p ** k):
                        raise InternalCheckError("basis correction failed")
                    corr = mul(corr, _pow(mul, bi, (di - ci // (p ** k)) % di, self.identity))
                x = mul(x, corr)
                if _pow(mul, x, p ** k, self.identity) != self.identity:
                    raise InternalCheckError("corrected element has wrong order")
            basis.append(x)
            orders.append(p ** k)
            span = self._enumerate_span(basis, orders)
        return basis, orders

    def _enumerate_span(self, basis, orders):
        span = {self.identity}
        for b, d in zip(basis, orders):
            cur = list(span)
            y = self.identity
            for _ in range(1, d):
                y = self.mul(y, b)
                for x in cur:
                    span.add(self.mul(x, y))
        return span

    def _span_coords(self, span, basis, orders, target):
        for combo in itertools.product(*(range(d) for d in orders)):
            y = self.identity
            for c, b in zip(combo, basis):
                y = self.mul(y, _pow(self.mul, b, c, self.identity))
            if y == target:
                return combo
        raise InternalCheckError("element not in span")


def _pow(mul, x, k, identity):
    r = identity
    y = x
    while k:
        if k & 1:
            r = mul(r, y)
        y = mul(y, y)
        k >>= 1
    return r


def _is_ppower(n: int, p: int) -> bool:
    while n % p == 0:
        n //= p
    return n == 1


def structure_of_members(group, members) -> AbelianGroupData:
    """AbelianGroupData for a subgroup (given by member indices) of a
    FiniteGroup; the subgroup must be abelian."""
    mem = sorted(set(members))
    t = group.table
    for a in mem:
        for b in mem:
            if t[a][b] != t[b][a]:
                raise ValidationError("subgroup is not abelian")
    return AbelianGroupData(mem, lambda a, b: t[a][b], 0)


# ---------------------------------------------------------------------------
# surjection counting
# ---------------------------------------------------------------------------

def _subgroup_structures(target: AbelianStructure):
    """All subgroups of `target` as (structure, multiplicity-free list),
    realized concretely on coordinate tuples."""
    if target.order > 4096:
        raise ValidationError("surjection counting capped for large targets")
    fs = target.factors
    elems = list(itertools.product(*(range(d) for d in fs)))

    def add(a, b):
        return tuple((x + y) % d for x, y, d in zip(a, b, fs))

    zero = tuple(0 for _ in fs)
    found = {(zero,)}
    frontier = [(zero,)]
    while frontier:
        nxt = []
        for sub in frontier:
            have = set(sub)
            for g in elems:
                if g in have:
                    continue
                new = _close(add, have | {g}, zero, fs)
                if new not in found:
                    found.add(new)
                    nxt.append(new)
        frontier = nxt
    return sorted(found, key=lambda s: (len(s), s))


def _close(add, gens, zero, fs):
    seen = set(gens) | {zero}
    frontier = list(seen)
    while frontier:
        x = frontier.pop()
        for y in list(seen):
            z = add(x, y)
            if z not in seen:
                seen.add(z)
                frontier.append(z)
    return tuple(sorted(seen))


def _sur_count(src: AbelianStructure, target: AbelianStructure) -> int:
    if target.is_trivial():
        return 1
    subs = _subgroup_structures(target)
    sets = [set(s) for s in subs]
    top = len(subs) - 1
    assert len(sets[top]) == target.order
    mu: dict[int, int] = {}

    def moebius(i):
        if i in mu:
            return mu[i]
        if i == top:
            mu[i] = 1
            return 1
        tot = 0
        for j in range(len(subs)):
            if j != i and sets[i] <= sets[j]:
                tot += moebius(j)
        mu[i] = -tot
        return mu[i]

    fs = target.factors
    total = 0
    for i, s in enumerate(subs):
        m = moebius(i)
        if m == 0:
            continue
        data = AbelianGroupData(
            list(s), lambda a, b: tuple((x + y) % d for x, y, d in zip(a, b, fs)),
            tuple(0 for _ in fs))
        total += m * src.hom_count(data.structure)
    return total
