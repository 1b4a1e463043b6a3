"""Ground-truth class groups: imaginary quadratic function fields through
hyperelliptic Jacobians (Cantor arithmetic, L-polynomial point counts) and
imaginary quadratic number fields through reduced binary quadratic forms.

Polynomials over F_p are coefficient tuples, low degree first, normalized
(no trailing zeros).  v1 restricts to odd prime q and genus <= 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .abelian import AbelianGroupData, AbelianStructure
from .errors import CapacityError, InternalCheckError, ValidationError
from .rng import CounterRng, substream


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


# ---------------------------------------------------------------------------
# F_p[x]
# ---------------------------------------------------------------------------

def pnorm(c) -> tuple:
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def pdeg(a) -> int:
    return len(a) - 1


def padd(a, b, p):
    n = max(len(a), len(b))
    return pnorm([( (a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)) % p
                  for i in range(n)])


def psub(a, b, p):
    n = max(len(a), len(b))
    return pnorm([( (a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % p
                  for i in range(n)])


def pmul(a, b, p):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return pnorm(out)


def pscale(a, s, p):
    return pnorm([(x * s) % p for x in a])


def pdivmod(a, b, p):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    binv = pow(b[-1], -1, p)
    q = [0] * max(0, len(a) - len(b) + 1)
    while len(a) >= len(b) and any(a):
        if a[-1] == 0:
            a.pop()
            continue
        s = (a[-1] * binv) % p
        off = len(a) - len(b)
        q[off] = s
        for i in range(len(b)):
            a[off + i] = (a[off + i] - s * b[i]) % p
        a.pop()
    return pnorm(q), pnorm(a)


def pmod(a, b, p):
    return pdivmod(a, b, p)[1]


def pgcd(a, b, p):
    a, b = pnorm(a), pnorm(b)
    while b:
        a, b = b, pmod(a, b, p)
    if a:
        a = pscale(a, pow(a[-1], -1, p), p)
    return a


def pxgcd(a, b, p):
    """(g, s, t) with s a + t b = g, g monic (or zero)."""
    r0, r1 = pnorm(a), pnorm(b)
    s0, s1 = (1,), ()
    t0, t1 = (), (1,)
    while r1:
        q, r = pdivmod(r0, r1, p)
        r0, r1 = r1, r
        s0, s1 = s1, psub(s0, pmul(q, s1, p), p)
        t0, t1 = t1, psub(t0, pmul(q, t1, p), p)
    if r0:
        lead = pow(r0[-1], -1, p)
        r0, s0, t0 = pscale(r0, lead, p), pscale(s0, lead, p), pscale(t0, lead, p)
    return r0, s0, t0


def pderiv(a, p):
    return pnorm([(i * a[i]) % p for i in range(1, len(a))])


def peval(a, x, p):
    acc = 0
    for c in reversed(a):
        acc = (acc * x + c) % p
    return acc


def is_squarefree(f, p) -> bool:
    return pdeg(pgcd(f, pderiv(f, p), p)) <= 0


def monic(f, p):
    if not f:
        return f
    return pscale(f, pow(f[-1], -1, p), p)


# ---------------------------------------------------------------------------
# extension fields F_{p^k} (for point counts over F_{q^i})
# ---------------------------------------------------------------------------

class ExtField:
    """F_{p^k} as F_p[t]/(modulus); elements are coefficient tuples of
    length k."""

    def __init__(self, p: int, k: int):
        self.p = p
        self.k = k
        self.modulus = self._find_irreducible(p, k)
        self.size = p ** k

    @staticmethod
    def _find_irreducible(p, k):
        if k == 1:
            return (0, 1)
        import itertools
        for tail in itertools.product(range(p), repeat=k):
            f = pnorm(tuple(tail) + (1,))
            if pdeg(f) != k:
                continue
            if ExtField._is_irreducible(f, p):
                return f
        raise InternalCheckError("no irreducible polynomial found")

    @staticmethod
    def _is_irreducible(f, p):
        k = pdeg(f)
        # x^(p^d) == x mod f for d | k, d < k must fail; equality must hold at k
        x = (0, 1)
        acc = x
        for d in range(1, k + 1):
            acc = _fppow(acc, p, f, p)
            if d < k and k % d == 0:
                if psub(acc, x, p) == ():
                    return False
        return psub(acc, x, p) == ()

    def elements(self):
        import itertools
        for tup in itertools.product(range(self.p), repeat=self.k):
            yield pnorm(tup)

    def embed(self, a: int):
        return pnorm((a % self.p,))

    def add(self, a, b):
        return padd(a, b, self.p)

    def mul(self, a, b):
        return pmod(pmul(a, b, self.p), self.modulus, self.p)

    def power(self, a, e: int):
        out = self.embed(1)
        base = a
        while e:
            if e & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            e >>= 1
        return out

    def chi(self, a) -> int:
        """Quadratic character: 0 on zero, +-1 otherwise."""
        if a == ():
            return 0
        v = self.power(a, (self.size - 1) // 2)
        if v == self.embed(1):
            return 1
        return -1

    def eval_poly(self, f, x):
        acc = ()
        for c in reversed(f):
            acc = self.add(self.mul(acc, x), self.embed(c))
        return acc


def _fppow(a, e, modpoly, p):
    out = (1,)
    base = pmod(a, modpoly, p)
    while e:
        if e & 1:
            out = pmod(pmul(out, base, p), modpoly, p)
        base = pmod(pmul(base, base, p), modpoly, p)
        e >>= 1
    return out


# ---------------------------------------------------------------------------
# hyperelliptic models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HyperellipticModel:
    """y^2 = f(x) over F_q, f squarefree of odd degree 2g+1 (imaginary)."""
    q: int
    f: tuple

    def __post_init__(self):
        if self.q % 2 == 0 or not _is_prime(self.q):
            raise ValidationError("q must be an odd prime in v1")
        f = pnorm(self.f)
        object.__setattr__(self, "f", f)
        if pdeg(f) % 2 == 0 or pdeg(f) < 1:
            raise ValidationError(
                "f must have odd degree (the imaginary condition: the place "
                "at infinity is ramified)")
        if not is_squarefree(f, self.q):
            raise ValidationError("f must be squarefree")

    @property
    def genus(self) -> int:
        return (pdeg(self.f) - 1) // 2

    def key(self) -> str:
        return f"{self.q};{','.join(str(c) for c in self.f)}"


def nonsquare(q: int) -> int:
    for a in range(2, q):
        if pow(a, (q - 1) // 2, q) == q - 1:
            return a
    raise InternalCheckError("no nonsquare found")


def enumerate_imaginary(q: int, d: int) -> Iterator[HyperellipticModel]:
    """All imaginary models of rDisc q^d: squarefree degree-d polynomials up
    to scaling by nonzero squares (monic representatives and one nonsquare
    twist each), in a fixed deterministic order."""
    if d % 2 == 0:
        raise ValidationError("even degree is the real/inert case; not supported")
    if q % 2 == 0 or not _is_prime(q):
        raise ValidationError("q must be an odd prime in v1")
    import itertools
    ns = nonsquare(q)
    for tail in itertools.product(range(q), repeat=d):
        f = pnorm(tuple(tail) + (1,))
        if pdeg(f) != d or not is_squarefree(f, q):
            continue
        yield HyperellipticModel(q, f)
        yield HyperellipticModel(q, pscale(f, ns, q))


def count_imaginary(q: int, d: int) -> int:
    """Field count |E(q^d)| for d >= 2: 2 (q^d - q^{d-1})."""
    if d < 2:
        raise ValidationError("closed-form count applies for d >= 2")
    return 2 * (q ** d - q ** (d - 1))


# ---------------------------------------------------------------------------
# point counts and the L-polynomial
# ---------------------------------------------------------------------------

_EXT_CACHE: dict = {}


def _ext(p, k) -> ExtField:
    if (p, k) not in _EXT_CACHE:
        _EXT_CACHE[(p, k)] = ExtField(p, k)
    return _EXT_CACHE[(p, k)]


def curve_point_count(model: HyperellipticModel, i: int) -> int:
    """Number of projective points over F_{q^i} (one point at infinity)."""
    fld = _ext(model.q, i)
    total = 1  # ramified place at infinity for odd degree
    for x in fld.elements():
        total += 1 + fld.chi(fld.eval_poly(model.f, x))
    return total


def l_polynomial(model: HyperellipticModel, genus_cap: int = 3) -> list:
    """Coefficients c_0..c_{2g} of L(T); functional equation enforced."""
    g = model.genus
    if g > genus_cap:
        raise CapacityError(f"genus {g} exceeds cap {genus_cap}")
    q = model.q
    if g == 0:
        return [1]
    a = [0] * (g + 1)  # power sums a_i = q^i + 1 - N_i
    for i in range(1, g + 1):
        a[i] = q ** i + 1 - curve_point_count(model, i)
    # Newton's identities: c_k = -(1/k) sum_{i=1}^{k} a_i c_{k-i}
    c = [Fraction(1)] + [Fraction(0)] * (2 * g)
    for k in range(1, g + 1):
        acc = Fraction(0)
        for i in range(1, k + 1):
            acc += a[i] * c[k - i]
        c[k] = -acc / k
    for k in range(g + 1, 2 * g + 1):
        c[k] = q ** (k - g) * c[2 * g - k]
    out = []
    for x in c:
        if x.denominator != 1:
            raise InternalCheckError("non-integer L-polynomial coefficient")
        out.append(int(x))
    # independent check: the completed polynomial must predict the point
    # count one level beyond the coefficients used to build it
    if q ** (g + 1) <= 20000:
        ps = _power_sums_from_coeffs(out, g, q)
        predicted = q ** (g + 1) + 1 - ps[g + 1]
        if predicted != curve_point_count(model, g + 1):
            raise InternalCheckError(
                "functional equation check failed: L-polynomial does not "
                "reproduce the next point count")
    return out


def _power_sums_from_coeffs(L, g, q):
    """Power sums of the reciprocal roots from the coefficients (Newton)."""
    k = 2 * g
    ps = [0] * (g + 2)
    for i in range(1, g + 2):
        acc = -i * (L[i] if i <= k else 0)
        for j in range(1, i):
            acc -= (L[j] if j <= k else 0) * ps[i - j]
        ps[i] = acc
    return ps


def write_curve_cache(path, entries) -> None:
    """Curve cache: one line per curve, `q;f-coefficients;L-coefficients`."""
    lines = []
    for model, L in entries:
        lines.append(f"{model.q};{','.join(str(c) for c in model.f)};"
                     f"{','.join(str(c) for c in L)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def load_curve_cache(path) -> dict:
    """Map (q, f) -> L-polynomial coefficients from a cache file."""
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            qs, fs, ls = line.split(";")
            f = tuple(int(x) for x in fs.split(","))
            out[(int(qs), f)] = [int(x) for x in ls.split(",")]
    return out


def jacobian_order(model: HyperellipticModel, L=None) -> int:
    """|Jac(C)(F_q)| = L(1), with Hasse-Weil bounds enforced."""
    if L is None:
        L = l_polynomial(model)
    h = sum(L)
    g = model.genus
    q = model.q
    lo_exact = (q ** 0.5 - 1) ** (2 * g)
    hi_exact = (q ** 0.5 + 1) ** (2 * g)
    if not (lo_exact - 1e-9 <= h <= hi_exact + 1e-9):
        raise InternalCheckError(
            f"Hasse-Weil bound violated: h={h} not in "
            f"[{lo_exact:.2f}, {hi_exact:.2f}]")
    if h <= 0:
        raise InternalCheckError("nonpositive class number")
    return h


# ---------------------------------------------------------------------------
# Mumford representation and Cantor arithmetic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DivisorClass:
    """Reduced divisor in Mumford form: u monic, deg v < deg u <= g,
    u | v^2 - f."""
    u: tuple
    v: tuple


def divisor_identity() -> DivisorClass:
    return DivisorClass(u=(1,), v=())


def check_divisor(model: HyperellipticModel, d: DivisorClass) -> None:
    p = model.q
    if not d.u or d.u[-1] != 1:
        raise ValidationError("u must be monic")
    if pdeg(d.u) > model.genus:
        raise ValidationError("deg u exceeds the genus")
    if d.v and pdeg(d.v) >= pdeg(d.u):
        raise ValidationError("deg v must be below deg u")
    if pmod(psub(pmul(d.v, d.v, p), model.f, p), d.u, p) != ():
        raise ValidationError("u does not divide v^2 - f")


def divclass_add(model: HyperellipticModel, a: DivisorClass,
                 b: DivisorClass) -> DivisorClass:
    """Cantor composition followed by reduction to deg u <= g."""
    p = model.q
    f = model.f
    u1, v1 = a.u, a.v
    u2, v2 = b.u, b.v
    d1, e1, e2 = pxgcd(u1, u2, p)
    d, c1, c2 = pxgcd(d1, padd(v1, v2, p), p)
    if not d:
        # both inputs the identity
        return divisor_identity()
    s1 = pmul(c1, e1, p)
    s2 = pmul(c1, e2, p)
    s3 = c2
    u3, r = pdivmod(pmul(u1, u2, p), pmul(d, d, p), p)
    if r:
        raise InternalCheckError("Cantor: u1 u2 not divisible by d^2")
    # v3 = (s1 u1 v2 + s2 u2 v1 + s3 (v1 v2 + f)) / d  mod u3
    num = padd(padd(pmul(pmul(s1, u1, p), v2, p),
                    pmul(pmul(s2, u2, p), v1, p), p),
               pmul(s3, padd(pmul(v1, v2, p), f, p), p), p)
    v3q, v3r = pdivmod(num, d, p)
    if v3r:
        raise InternalCheckError("Cantor: composition numerator not divisible")
    v3 = pmod(v3q, u3, p)
    # reduction
    g = model.genus
    while pdeg(u3) > g:
        unew, r = pdivmod(psub(f, pmul(v3, v3, p), p), u3, p)
        if r:
            raise InternalCheckError("Cantor: reduction step not exact")
        vnew = pmod(pscale(v3, p - 1, p), unew, p)
        u3, v3 = monic(unew, p), vnew
    u3 = monic(u3, p)
    out = DivisorClass(u=u3, v=pmod(v3, u3, p))
    return out


def divclass_neg(model: HyperellipticModel, a: DivisorClass) -> DivisorClass:
    p = model.q
    return DivisorClass(u=a.u, v=pmod(pscale(a.v, p - 1, p), a.u, p))


def divclass_mul(model: HyperellipticModel, a: DivisorClass, k: int) -> DivisorClass:
    if k < 0:
        return divclass_mul(model, divclass_neg(model, a), -k)
    out = divisor_identity()
    base = a
    while k:
        if k & 1:
            out = divclass_add(model, out, base)
        base = divclass_add(model, base, base)
        k >>= 1
    return out


def enumerate_divisor_classes(model: HyperellipticModel) -> list:
    """All reduced divisors (exhaustive; for small genus/q cross-checks)."""
    p = model.q
    g = model.genus
    out = [divisor_identity()]
    import itertools
    for du in range(1, g + 1):
        for tail in itertools.product(range(p), repeat=du):
            u = pnorm(tuple(tail) + (1,))
            if pdeg(u) != du:
                continue
            for vtail in itertools.product(range(p), repeat=du):
                v = pnorm(vtail)
                if pmod(psub(pmul(v, v, p), model.f, p), u, p) == ():
                    out.append(DivisorClass(u=u, v=v))
    return out


def random_divisor(model: HyperellipticModel, rng: CounterRng) -> DivisorClass:
    """Random class from sums of up to g random rational points (suitable
    for generation; certified downstream by order checks)."""
    p = model.q
    fld = _ext(p, 1)
    acc = divisor_identity()
    for _ in range(model.genus):
        for _attempt in range(4 * p):
            x = rng.randint(p)
            fx = peval(model.f, x, p)
            if fx == 0:
                pt = DivisorClass(u=pnorm(((-x) % p, 1)), v=())
                acc = divclass_add(model, acc, pt)
                break
            if pow(fx, (p - 1) // 2, p) == 1:
                y = _sqrt_mod(fx, p)
                if rng.randint(2):
                    y = (-y) % p
                pt = DivisorClass(u=pnorm(((-x) % p, 1)), v=(y,))
                acc = divclass_add(model, acc, pt)
                break
    return acc


def _sqrt_mod(a: int, p: int) -> int:
    """Square root mod odd prime (Tonelli-Shanks)."""
    a %= p
    if a == 0:
        return 0
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    # Tonelli-Shanks
    s, q = 0, p - 1
    while q % 2 == 0:
        q //= 2
        s += 1
    z = nonsquare(p)
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, tt = 0, t
        while tt != 1:
            tt = tt * tt % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


# ---------------------------------------------------------------------------
# Sylow structure of the class group
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SylowResult:
    prime: int
    structure: Optional[AbelianStructure]
    certified: bool
    attempts: int


def sylow_structure(model: HyperellipticModel, ell: int, seed: int = 0,
                    max_batches: int = 40) -> SylowResult:
    """Structure of the ell-part of the divisor class group.

    Random classes are pushed into the ell-Sylow subgroup and accumulated
    until the generated subgroup has the full ell-valuation of the class
    number; failure to certify within the retry budget is flagged, never
    guessed."""
    if ell == model.q:
        raise ValidationError("ell must differ from the field characteristic")
    h = jacobian_order(model)
    e = 0
    hh = h
    while hh % ell == 0:
        hh //= ell
        e += 1
    if e == 0:
        return SylowResult(prime=ell, structure=AbelianStructure(()),
                           certified=True, attempts=0)
    target = ell ** e
    cof = h // target
    rng = substream(seed, 0)
    elements = {divisor_identity()}
    gens: list = []
    attempts = 0
    for batch in range(max_batches):
        attempts += 1
        pt = random_divisor(model, rng)
        s = divclass_mul(model, pt, cof)
        if s in elements:
            continue
        gens.append(s)
        # regenerate the subgroup
        elements = {divisor_identity()}
        frontier = [divisor_identity()]
        while frontier:
            x = frontier.pop()
            for gpt in gens:
                y = divclass_add(model, x, gpt)
                if y not in elements:
                    elements.add(y)
                    frontier.append(y)
                    if len(elements) > target:
                        raise InternalCheckError(
                            "Sylow subgroup exceeds the ell-valuation bound")
        if len(elements) == target:
            data = AbelianGroupData(
                list(elements), lambda x, y: divclass_add(model, x, y),
                divisor_identity())
            return SylowResult(prime=ell, structure=data.structure,
                               certified=True, attempts=attempts)
    # sampling failed (e.g. curves with almost no rational points); fall
    # back to exhaustive class enumeration when it fits the budget
    if model.q ** (2 * model.genus) <= 1_000_000:
        classes = enumerate_divisor_classes(model)
        if len(classes) != h:
            raise InternalCheckError("class enumeration disagrees with L(1)")
        syl = {divclass_mul(model, x, cof) for x in classes}
        if len(syl) != target:
            raise InternalCheckError("exhaustive Sylow has wrong order")
        data = AbelianGroupData(
            list(syl), lambda x, y: divclass_add(model, x, y),
            divisor_identity())
        return SylowResult(prime=ell, structure=data.structure,
                           certified=True, attempts=attempts)
    return SylowResult(prime=ell, structure=None, certified=False,
                       attempts=attempts)


# ---------------------------------------------------------------------------
# empirical moments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentRow:
    degree: int
    fields: int
    excluded: int
    sur_sum: int
    cumulative_average: Fraction
    prediction: Fraction
    se_proxy: float


@dataclass(frozen=True)
class MomentReport:
    q: int
    target: tuple          # cyclic orders of H
    mode: str              # "plain" or "gerth"
    rows: tuple
    weighted_total: Optional[Fraction] = None

    @property
    def final_average(self) -> Fraction:
        return self.rows[-1].cumulative_average if self.rows else Fraction(0)


def empirical_moment(q: int, d_max: int, target_orders: Sequence[int],
                     mode: str = "plain", seed: int = 0,
                     sample_floor: int = 10) -> MomentReport:
    """Average of #Sur(Cl(K), H) over imaginary models of degree <= d_max.

    Gamma-equivariance is automatic for the inversion action on abelian
    groups, so plain surjection counts are exact.  Gerth mode weights by
    #Hom(Cl, H/2H) and counts surjections from 2 Cl."""
    H = AbelianStructure.from_cyclic_orders(target_orders)
    if mode not in ("plain", "gerth"):
        raise ValidationError(f"unknown mode {mode!r}")
    if mode == "plain":
        if math.gcd(H.order, q) != 1:
            raise ValidationError("need gcd(|H|, q) = 1")
        if H.order % 2 == 0:
            raise ValidationError("plain mode needs odd H (2 is bad for "
                                  "quadratic extensions)")
        prediction = _plain_prediction(H, q)
    else:
        if H.order == 1 or any(f % 2 for f in H.factors):
            raise ValidationError("gerth mode expects a nontrivial 2-group")
        v = 0
        x = q - 1
        while x % 2 == 0:
            x //= 2
            v += 1
        wedge = _wedge_square(H)
        prediction = Fraction(wedge.torsion_count(2 ** (v - 1)))
    ells = sorted({f for f in _prime_divisors(H.order)})
    cache = {}
    if cache_path is not None:
        import os
        if os.path.exists(cache_path):
            cache = load_curve_cache(cache_path)
    new_entries = []
    rows = []
    total_sur = Fraction(0)
    total_weight = Fraction(0)
    total_fields = 0
    sq_acc = 0.0
    for d in range(3, d_max + 1, 2):
        fields = 0
        excluded = 0
        sur_sum = 0
        idx = 0
        for model in enumerate_imaginary(q, d):
            idx += 1
            key = (model.q, model.f)
            if key in cache:
                _ = jacobian_order(model, L=cache[key])
            elif cache_path is not None:
                new_entries.append((model, l_polynomial(model)))
            syl = {}
            ok = True
            for ell in ells:
                res = sylow_structure(model, ell, seed=seed + idx)
                if not res.certified:
                    ok = False
                    break
                syl[ell] = res.structure
            if not ok:
                excluded += 1
                continue
            fields += 1
            if mode == "plain":
                cl = AbelianStructure(tuple(f for s in syl.values()
                                            for f in s.factors))
                cnt = cl.sur_count(H)
                sur_sum += cnt
                total_sur += cnt
                total_weight += 1
                sq_acc += float(cnt) ** 2
            else:
                a2 = syl[2]
                # H/2H is elementary of the same rank
                h_mod = AbelianStructure.from_cyclic_orders(
                    [2 for _ in H.chain])
                w = a2.hom_count(h_mod) if a2.sur_count(h_mod) > 0 else 0
                two_cl = AbelianStructure(tuple(f // 2 for f in a2.factors
                                                if f // 2 > 1))
                cnt = two_cl.sur_count(H)
                sur_sum += w * cnt
                total_sur += w * cnt
                total_weight += w
                sq_acc += float(cnt) ** 2
        total_fields += fields
        if total_weight > 0:
            avg = total_sur / total_weight
        else:
            avg = Fraction(0)
        se = math.sqrt(max(sq_acc / max(1, total_fields)
                           - float(avg) ** 2, 0.0) / max(1, total_fields))
        rows.append(MomentRow(degree=d, fields=fields, excluded=excluded,
                              sur_sum=int(sur_sum) if mode == "plain" else sur_sum,
                              cumulative_average=avg, prediction=prediction,
                              se_proxy=se))
    if cache_path is not None and new_entries:
        existing = [(HyperellipticModel(qq, ff), L)
                    for (qq, ff), L in cache.items()]
        write_curve_cache(cache_path, existing + new_entries)
    if mode == "gerth" and total_fields < sample_floor:
        pass  # report carries the sample size; verdicts are the caller's job
    return MomentReport(q=q, target=tuple(target_orders), mode=mode,
                        rows=tuple(rows),
                        weighted_total=total_weight if mode == "gerth" else None)


def _plain_prediction(H: AbelianStructure, q: int) -> Fraction:
    from .groups import abelian, inversion_action
    from .frob import moment_prediction
    hg = inversion_action(abelian(list(H.chain) or [1]))
    return moment_prediction(hg, [0, 1], q)


def _wedge_square(H: AbelianStructure) -> AbelianStructure:
    ch = H.chain
    fs = []
    for i in range(len(ch)):
        for j in range(i + 1, len(ch)):
            fs.append(math.gcd(ch[i], ch[j]))
    return AbelianStructure.from_cyclic_orders(fs)


def _prime_divisors(n: int):
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# ---------------------------------------------------------------------------
# binary quadratic forms (number-field comparison)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassGroupStructure:
    order: int
    structure: AbelianStructure
    per_ell: dict


def fundamental_discriminant(d: int) -> int:
    """Fundamental discriminant of Q(sqrt(-d)) for squarefree positive d."""
    if d <= 0:
        raise ValidationError("d must be positive")
    for p in _prime_divisors(d):
        if d % (p * p) == 0:
            raise ValidationError("d must be squarefree")
    if (-d) % 4 == 1:
        return -d
    return -4 * d


def reduced_forms(D: int) -> list:
    """All reduced positive definite forms of discriminant D < 0."""
    if D >= 0 or D % 4 not in (0, 1):
        raise ValidationError("need a negative discriminant = 0,1 mod 4")
    out = []
    amax = math.isqrt(-D // 3) if D < -3 else 1
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            if c < a:
                continue
            if a == c and b < 0:
                continue
            if math.gcd(math.gcd(a, b), c) != 1:
                continue  # primitive forms only
            out.append((a, b, c))
    return sorted(out)


def _form_reduce(a, b, c, D):
    while True:
        if not (-a < b <= a):
            b = ((b + a) % (2 * a)) - a
            if b <= -a:
                b += 2 * a
            c = (b * b - D) // (4 * a)
        if a > c:
            a, b, c = c, -b, a
            continue
        if a == c and b < 0:
            b = -b
        return (a, b, c)


def _form_value_transform(form, col1, D):
    """Equivalent form whose first coefficient is form(x, y) for the given
    coprime column (x, y)."""
    a, b, c = form
    x, y = col1
    g, s, t = _xgcd(x, y)
    if g != 1:
        raise InternalCheckError("column not primitive")
    # complete to SL2: second column (z, w) = (-t, s)
    z, w = -t, s
    a2 = a * x * x + b * x * y + c * y * y
    b2 = 2 * (a * x * z + c * y * w) + b * (x * w + y * z)
    c2 = a * z * z + b * z * w + c * w * w
    if b2 * b2 - 4 * a2 * c2 != D:
        raise InternalCheckError("transform broke the discriminant")
    return (a2, b2, c2)


def _xgcd(a, b):
    s0, s1, t0, t1, r0, r1 = 1, 0, 0, 1, a, b
    while r1:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if r0 < 0:
        r0, s0, t0 = -r0, -s0, -t0
    return r0, s0, t0


def compose_forms(f1, f2, D):
    """Gauss composition of primitive positive definite forms (reduced out)."""
    a1 = f1[0]
    # find a representation of f2 coprime to a1 with primitive column
    found = None
    bound = 1
    while found is None:
        bound += 1
        for x in range(-bound, bound + 1):
            for y in range(-bound, bound + 1):
                if math.gcd(x, y) != 1:
                    continue
                v = f2[0] * x * x + f2[1] * x * y + f2[2] * y * y
                if v > 0 and math.gcd(v, 2 * a1) == 1:
                    found = (x, y)
                    break
            if found:
                break
        if bound > 50:
            raise InternalCheckError("no coprime representation found")
    g2 = _form_value_transform(f2, found, D)
    a2, b2 = g2[0], g2[1]
    b1 = f1[1]
    # B == b1 mod 2a1, B == b2 mod 2a2, gcd(2a1, ...) handling via CRT
    m1, m2 = 2 * a1, 2 * a2
    g, s, _ = _xgcd(m1, m2)
    if (b2 - b1) % g:
        raise InternalCheckError("composition congruence unsolvable")
    lcm = m1 // g * m2
    B = (b1 + m1 * ((b2 - b1) // g) * s) % lcm
    A = a1 * a2
    if (B * B - D) % (4 * A):
        raise InternalCheckError("composition invariant failed")
    C = (B * B - D) // (4 * A)
    return _form_reduce(A, B, C, D)


def nf_class_group(d: int, ell_list: Sequence[int] = ()) -> ClassGroupStructure:
    """Class group of Q(sqrt(-d)) via reduced forms with composition."""
    D = fundamental_discriminant(d)
    forms = reduced_forms(D)
    ident = _form_reduce(1, D % 2, ((D % 2) ** 2 - D) // 4, D)
    data = AbelianGroupData(forms, lambda x, y: compose_forms(x, y, D), ident)
    per = {ell: data.structure.primary_part(ell) for ell in ell_list}
    return ClassGroupStructure(order=len(forms), structure=data.structure,
                               per_ell=per)
