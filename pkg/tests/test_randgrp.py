import itertools
from fractions import Fraction

import pytest

from hurwitzlab.abelian import AbelianStructure
from hurwitzlab.errors import CapacityError, ValidationError
from hurwitzlab.groups import (abelian, cyclic, inversion_action,
                               trivial_group)
from hurwitzlab.randgrp import (FreeAdmissible, abelian_exponent_variety,
                                irreducible_modules_cyclic,
                                kernel_decomposition, m_ad, moment_mu,
                                moment_n, monte_carlo, mu_limit, mu_n,
                                prob_module_formula, quotient_outcome,
                                sample_x)
from hurwitzlab.rng import substream

GAMMA = cyclic(2)
SPEC3 = abelian_exponent_variety(GAMMA, 3)
SPEC9 = abelian_exponent_variety(GAMMA, 9)


def HG(orders):
    return inversion_action(abelian(orders) if orders else trivial_group())


def test_variety_validation():
    with pytest.raises(ValidationError):
        abelian_exponent_variety(GAMMA, 2)  # not coprime to 2|Gamma|
    with pytest.raises(ValidationError):
        abelian_exponent_variety(GAMMA, 6)


def test_free_admissible_orders():
    for n in range(4):
        assert FreeAdmissible(n, SPEC3).order == 3 ** n
    assert FreeAdmissible(1, SPEC9).order == 9
    assert FreeAdmissible(0, SPEC3).order == 1


def test_free_admissible_cap():
    with pytest.raises(CapacityError):
        FreeAdmissible(100, SPEC3)
    big = FreeAdmissible(9, SPEC3)
    with pytest.raises(CapacityError):
        big.elements()


def test_free_universal_property():
    """Every admissible exp-3 Gamma-group of rank <= n is a quotient."""
    free = FreeAdmissible(2, SPEC3)
    # (Z/3)^2 with inversion is reached by quotienting by nothing
    out = quotient_outcome(free, [free.zero()] * 3)
    assert out.divisors == (3, 3)
    # Z/3 is reached: kill one coordinate
    one = free.canonical([1, 0])
    out2 = quotient_outcome(free, [one, free.zero(), free.zero()])
    assert out2.divisors == (3,)


def test_invariant_submodule_trivial_for_inversion():
    free = FreeAdmissible(3, SPEC3)
    assert free.invariant_submodule([0, 1]) == []
    # trivial Gamma_inf: everything is invariant
    reps = free.invariant_submodule([0])
    size = 1
    for d, _ in reps:
        size *= d
    assert size == free.order


def test_mu_n_examples():
    assert mu_n(HG([3]), SPEC3, [0, 1], 1) == Fraction(1, 3)
    for n in (1, 2, 3):
        expect = Fraction(1)
        for k in range(1, n + 1):
            expect *= 1 - Fraction(1, 3 ** k)
        assert mu_n(HG([]), SPEC3, [0, 1], n) == expect
    # non-admissible H: zero
    from hurwitzlab.groups import trivial_action
    bad = trivial_action(cyclic(3), GAMMA)
    assert mu_n(bad, SPEC3, [0, 1], 2) == 0


def test_mu_census_sums_to_one():
    for n in (1, 2, 3):
        total = sum(mu_n(HG([3] * k), SPEC3, [0, 1], n) for k in range(n + 1))
        assert total == 1


def test_mu_exp9_census():
    # exponent-9 variety at n = 1: F = Z/9; quotients: 1, Z/3, Z/9
    total = Fraction(0)
    for orders in ([], [3], [9]):
        total += mu_n(HG(orders), SPEC9, [0, 1], 1)
    assert total == 1


def test_moment_examples():
    z3 = HG([3])
    assert moment_n(z3, [0, 1], 1) == Fraction(2, 3)
    assert moment_mu(z3, [0, 1]) == 1
    assert moment_mu(z3, [0]) == Fraction(1, 3)
    vals = [moment_n(z3, [0, 1], n) for n in range(1, 8)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert all(v <= 1 for v in vals)


def test_prob_module_formula():
    assert prob_module_formula(5, 1, 1, 5, 0, 3) == 1
    assert prob_module_formula(3, 1, 1, 3, 1, 2) == Fraction(8, 9)
    assert prob_module_formula(3, 1, 1, 3, 1, 1) == Fraction(2, 3)
    # nonpositive factor clamps to zero
    assert prob_module_formula(3, 3, 3, 3, 2, 1) == 0


def test_irreducible_modules():
    mods = irreducible_modules_cyclic(GAMMA, [0, 1], 3)
    assert len(mods) == 2
    sign = next(m for m in mods if m.inv_gamma == 1)
    triv = next(m for m in mods if m.inv_gamma == 3)
    assert sign.order == triv.order == 3
    assert sign.inv_ginf == 1 and triv.inv_ginf == 3


def test_m_ad_examples():
    z3 = HG([3])
    mods = irreducible_modules_cyclic(GAMMA, [0, 1], 3)
    sign = next(m for m in mods if m.inv_gamma == 1)
    triv = next(m for m in mods if m.inv_gamma == 3)
    for mod in (sign, triv):
        assert m_ad(1, z3, mod, SPEC3) == 0
    assert m_ad(2, z3, sign, SPEC3) == 1
    assert m_ad(2, z3, triv, SPEC3) == 0
    # H trivial: kernel is all of F = sign^n
    dec = kernel_decomposition(3, HG([]), SPEC3)
    assert [(m.inv_gamma, mult) for m, mult in dec] == [(1, 3)]


def test_mu_limit():
    res = mu_limit(HG([3]), SPEC3, [0, 1], Fraction(1, 10 ** 6), n_budget=14)
    assert res.converged
    assert abs(res.value - mu_n(HG([3]), SPEC3, [0, 1], res.n_values[-1])) == 0
    res2 = mu_limit(HG([3]), SPEC3, [0, 1], Fraction(0), n_budget=3)
    assert not res2.converged and res2.value is None


def test_sample_x_and_outcome():
    free = FreeAdmissible(2, SPEC3)
    rng = substream(7, 0)
    out = sample_x(free, [0, 1], rng)
    assert out.label[0] == "ab-inv"
    assert len(out.witnesses) == 3
    # all-zero witnesses give the full group
    full = quotient_outcome(free, [free.zero()] * 3)
    assert full.divisors == (3, 3)


def test_friedman_washington_degeneration():
    """For the inversion action, the sampler's quotient equals the cokernel
    of the square matrix of the sampled vectors; exact bijection at n = 2."""
    free = FreeAdmissible(2, SPEC3)
    counts_model: dict = {}
    counts_coker: dict = {}
    for combo in itertools.product(range(3), repeat=4):
        x1, x2 = (combo[0], combo[1]), (combo[2], combo[3])
        out = quotient_outcome(free, [free.canonical(list(x1)),
                                      free.canonical(list(x2)), free.zero()])
        counts_model[out.divisors] = counts_model.get(out.divisors, 0) + 1
        from hurwitzlab.intmat import quotient_divisors_mod, divisor_chain
        divs = tuple(divisor_chain(
            quotient_divisors_mod([list(x1), list(x2)], 2, 3)))
        counts_coker[divs] = counts_coker.get(divs, 0) + 1
    assert counts_model == counts_coker


def test_monte_carlo_deterministic():
    free = FreeAdmissible(3, SPEC3)
    z3s = AbelianStructure.from_cyclic_orders([3])
    a = monte_carlo(free, [0, 1], 500, seed=11, track=[z3s])
    b = monte_carlo(free, [0, 1], 500, seed=11, track=[z3s], workers=3)
    assert a.counts == b.counts and a.sur_totals == b.sur_totals
    c = monte_carlo(free, [0, 1], 500, seed=12, track=[z3s])
    assert a.counts != c.counts
    with pytest.raises(ValidationError):
        monte_carlo(free, [0, 1], 0, seed=1)


def test_monte_carlo_marginal():
    """P(all Y coordinates of x_i inside N) = |H^G|/|H| per draw: for the
    inversion action on F with N of index 3, that is 1/3."""
    free = FreeAdmissible(1, SPEC3)
    rng = substream(5, 0)
    hits = 0
    trials = 3000
    for t in range(trials):
        r = substream(5, t)
        x = free.sample(r)
        if x == free.zero():
            hits += 1
    assert abs(hits / trials - 1 / 3) < 4 * (2 / 9 / trials) ** 0.5 + 0.03
