import math
from fractions import Fraction

import pytest

from hurwitzlab.abelian import AbelianStructure
from hurwitzlab.arith import (DivisorClass, HyperellipticModel,
                              count_imaginary, divclass_add, divclass_mul,
                              divclass_neg, divisor_identity,
                              empirical_moment, enumerate_divisor_classes,
                              enumerate_imaginary, fundamental_discriminant,
                              is_squarefree, jacobian_order, l_polynomial,
                              nf_class_group, nonsquare, pgcd, pmul, pxgcd,
                              random_divisor, reduced_forms, sylow_structure)
from hurwitzlab.errors import ValidationError
from hurwitzlab.rng import substream


def AS(orders):
    return AbelianStructure.from_cyclic_orders(orders)


def test_poly_basics():
    p = 5
    a = (1, 2, 3)
    b = (4, 1)
    g, s, t = pxgcd(a, b, p)
    lhs = tuple()
    from hurwitzlab.arith import padd
    assert padd(pmul(s, a, p), pmul(t, b, p), p) == g
    assert is_squarefree((1, 2, 0, 1), 3)
    assert not is_squarefree(pmul((1, 1), (1, 1), 3), 3)


def test_model_validation():
    with pytest.raises(ValidationError):
        HyperellipticModel(4, (1, 0, 0, 1))      # q not prime
    with pytest.raises(ValidationError):
        HyperellipticModel(3, (1, 0, 1))         # even degree
    with pytest.raises(ValidationError):
        HyperellipticModel(3, pmul((1, 1), (1, 1), 3))  # not squarefree


def test_jacobian_order_example():
    m = HyperellipticModel(3, (1, 2, 0, 1))   # y^2 = x^3 - x + 1
    assert m.genus == 1
    assert jacobian_order(m) == 7
    assert len(enumerate_divisor_classes(m)) == 7


def test_genus_zero_control():
    m = HyperellipticModel(3, (1, 1))
    assert m.genus == 0
    assert jacobian_order(m) == 1


def test_genus1_exhaustive():
    for q in (3, 5):
        for model in enumerate_imaginary(q, 3):
            assert jacobian_order(model) == len(enumerate_divisor_classes(model))


def test_enumeration_count():
    models = list(enumerate_imaginary(3, 3))
    assert len(models) == count_imaginary(3, 3) == 36
    assert len(set(m.f for m in models)) == 36
    assert len(list(enumerate_imaginary(5, 3))) == count_imaginary(5, 3)
    with pytest.raises(ValidationError):
        list(enumerate_imaginary(3, 4))


def test_l_polynomial_functional_equation():
    m = HyperellipticModel(3, (1, 2, 0, 0, 0, 1))
    L = l_polynomial(m)
    g, q = m.genus, m.q
    for k in range(len(L)):
        assert L[2 * g - k] * q ** (k - g) == L[k] or \
            L[2 * g - k] == q ** (g - k) * L[k]


def test_cantor_group_axioms():
    model = HyperellipticModel(3, (1, 2, 0, 0, 0, 1))
    h = jacobian_order(model)
    rng = substream(42, 0)
    ident = divisor_identity()
    for _ in range(400):
        a = random_divisor(model, rng)
        b = random_divisor(model, rng)
        c = random_divisor(model, rng)
        assert divclass_add(model, a, ident) == a
        assert divclass_add(model, a, divclass_neg(model, a)) == ident
        assert divclass_add(model, divclass_add(model, a, b), c) == \
            divclass_add(model, a, divclass_add(model, b, c))
        assert divclass_mul(model, a, h) == ident


def test_cantor_matches_enumeration_order():
    model = HyperellipticModel(5, (3, 1, 0, 1))
    classes = enumerate_divisor_classes(model)
    h = jacobian_order(model)
    assert len(classes) == h
    for d in classes:
        assert divclass_mul(model, d, h) == divisor_identity()


def test_sylow_structure():
    m = HyperellipticModel(3, (1, 2, 0, 1))   # order 7
    res = sylow_structure(m, 7, seed=3)
    assert res.certified and res.structure == AS([7])
    res5 = sylow_structure(m, 5, seed=3)
    assert res5.certified and res5.structure.is_trivial()
    with pytest.raises(ValidationError):
        sylow_structure(m, 3, seed=0)  # ell equals the characteristic


def test_sylow_matches_full_enumeration():
    rng_models = [m for m in enumerate_imaginary(3, 3)]
    checked = 0
    for model in rng_models:
        h = jacobian_order(model)
        if h % 5 == 0:
            res = sylow_structure(model, 5, seed=9)
            assert res.certified
            e = 0
            hh = h
            while hh % 5 == 0:
                hh //= 5
                e += 1
            assert res.structure.order == 5 ** e
            checked += 1
    assert checked > 0


def test_empirical_moment_plain():
    rep = empirical_moment(3, 3, [5], seed=1)
    assert rep.rows[0].fields == 36
    assert rep.rows[0].excluded == 0
    assert rep.rows[0].prediction == 1
    assert rep.rows[0].cumulative_average == Fraction(2, 3)
    with pytest.raises(ValidationError):
        empirical_moment(3, 3, [3], seed=1)    # ell = q
    with pytest.raises(ValidationError):
        empirical_moment(3, 3, [2], seed=1)    # even H in plain mode


def test_empirical_moment_gerth():
    rep = empirical_moment(3, 3, [2], mode="gerth", seed=1)
    # q = 3 = 3 mod 4: v = 1, wedge^2(Z/2) trivial: prediction 1
    assert rep.rows[0].prediction == 1
    assert rep.weighted_total is not None


def test_nonsquare():
    for q in (3, 5, 7, 11):
        ns = nonsquare(q)
        assert pow(ns, (q - 1) // 2, q) == q - 1


def test_nf_class_groups():
    assert nf_class_group(23).structure == AS([3])
    assert nf_class_group(1).order == 1
    assert nf_class_group(3).order == 1
    assert nf_class_group(47).structure == AS([5])
    assert nf_class_group(14).structure == AS([4])
    assert nf_class_group(21).structure == AS([2, 2])
    known = {5: 2, 6: 2, 10: 2, 13: 2, 15: 2, 30: 4, 33: 4, 34: 4, 89: 12}
    for d, h in known.items():
        assert nf_class_group(d).order == h, d
    with pytest.raises(ValidationError):
        nf_class_group(4)


def test_fundamental_discriminant():
    assert fundamental_discriminant(23) == -23
    assert fundamental_discriminant(1) == -4
    assert fundamental_discriminant(3) == -3
    assert fundamental_discriminant(5) == -20


def test_reduced_forms_count():
    assert len(reduced_forms(-23)) == 3
    assert len(reduced_forms(-4)) == 1
