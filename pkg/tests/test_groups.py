import itertools

import pytest

from hurwitzlab.errors import CapacityError, ValidationError
from hurwitzlab.groups import (ConjClassTable, FiniteGroup, GammaGroup,
                               Subgroup, abelian, alternating4, cyclic,
                               dicyclic, dihedral, direct_product,
                               format_group_file, from_mult_table,
                               from_permutations, gamma_isomorphic,
                               groups_up_to_16, inversion_action, isomorphic,
                               parse_group_file, semidirect, symmetric,
                               trivial_action, trivial_group)


def test_from_mult_table_examples():
    assert from_mult_table([[0]]).order == 1
    z3 = from_mult_table([[0, 1, 2], [1, 2, 0], [2, 0, 1]])
    assert z3.order == 3 and z3.inv[1] == 2


def test_from_mult_table_rejects_bad_tables():
    with pytest.raises(ValidationError):
        from_mult_table([[0, 1], [1, 1]])          # non-invertible / assoc
    with pytest.raises(ValidationError):
        from_mult_table([[1, 0], [0, 1]])          # no identity at 0
    with pytest.raises(ValidationError):
        from_mult_table([[0, 1], [1, 2]])          # out of range


def test_from_permutations():
    s3 = from_permutations([(1, 0, 2), (1, 2, 0)], 3)
    assert s3.order == 6
    assert from_permutations([], 4).order == 1
    c5 = from_permutations([(1, 2, 3, 4, 0)], 5)
    assert c5.order == 5
    with pytest.raises(CapacityError):
        from_permutations([(1, 2, 3, 4, 0)], 5, cap=3)
    with pytest.raises(ValidationError):
        from_permutations([(0, 0, 1)], 3)


def test_catalog_pairwise_noniso():
    cat = groups_up_to_16()
    assert len(cat) == 42
    by_order = {}
    for g in cat:
        by_order.setdefault(g.order, []).append(g)
    assert len(by_order[16]) == 14
    for n, gs in by_order.items():
        for a, b in itertools.combinations(gs, 2):
            assert not isomorphic(a, b), (a.name, b.name)


def test_conjugacy_classes():
    s3 = symmetric(3)
    cc = s3.conjugacy_classes()
    assert sorted(len(m) for m in cc.members) == [1, 2, 3]
    z6 = cyclic(6)
    assert all(len(m) == 1 for m in z6.conjugacy_classes().members)
    d5 = dihedral(5)
    cc5 = d5.conjugacy_classes()
    pm = cc5.power_map(7)
    # rotation classes swap under 7th powers, reflections and identity fixed
    rot = [i for i, m in enumerate(cc5.members) if len(m) == 2]
    refl = [i for i, m in enumerate(cc5.members) if len(m) == 5]
    assert pm[rot[0]] == rot[1] and pm[rot[1]] == rot[0]
    assert pm[refl[0]] == refl[0]


def test_semidirect_examples():
    z3 = inversion_action(cyclic(3))
    sd = semidirect(z3)
    assert isomorphic(sd.group, symmetric(3))
    triv = trivial_action(cyclic(3), cyclic(2))
    assert isomorphic(semidirect(triv).group, cyclic(6))
    g55 = semidirect(inversion_action(abelian([5, 5]))).group
    assert sum(1 for g in range(50) if g55.element_order(g) == 2) == 25


def test_semidirect_projection_recovers_action():
    h = inversion_action(abelian([3, 3]))
    sd = semidirect(h)
    g = sd.group
    for ge in range(2):
        t = sd.embed_gamma[ge]
        for x in range(9):
            lhs = g.conj(sd.embed_base[x], t)
            assert lhs == sd.embed_base[h.act[ge][x]]


def test_invariants():
    z9 = inversion_action(cyclic(9))
    assert z9.invariants([0, 1]).members == (0,)
    assert len(z9.invariants([0])) == 9
    c33 = abelian([3, 3])
    swap = [(i % 3) * 3 + i // 3 for i in range(9)]
    gg = GammaGroup(c33, cyclic(2), [list(range(9)), swap])
    assert gg.invariants([0, 1]).members == (0, 4, 8)


def test_invariants_monotone():
    z9 = inversion_action(cyclic(9))
    full = set(z9.invariants([0, 1]).members)
    partial = set(z9.invariants([0]).members)
    assert full <= partial


def test_y_map():
    z3 = inversion_action(cyclic(3))
    assert z3.y_map(0) == (0, 0)
    assert z3.y_map(1) == (0, 1)   # -2*1 = 1 mod 3
    triv = trivial_action(cyclic(5), cyclic(2))
    assert all(y == 0 for g in range(5) for y in triv.y_map(g))


def test_admissible_closure():
    z9 = inversion_action(cyclic(9))
    assert len(z9.admissible_closure([1])) == 9
    assert z9.is_admissible()
    z9t = trivial_action(cyclic(9), cyclic(2))
    assert z9t.admissible_closure([1]).members == (0,)
    assert not z9t.is_admissible()
    g33 = inversion_action(abelian([3, 3]))
    assert len(g33.admissible_closure([3])) == 3
    # closure is idempotent and Gamma-stable
    clo = g33.admissible_closure([3]).members
    assert g33.gamma_stable_closure(clo) == clo


def test_count_sur_dp_vs_moebius_vs_brute():
    g2 = inversion_action(abelian([3, 3]))
    for n in (1, 2, 3):
        fast = g2.count_sur_free_admissible(n)
        moe = g2.count_sur_free_admissible_moebius(n)
        full = tuple(range(9))
        brute = 0
        for tup in itertools.product(range(9), repeat=n):
            ys = set()
            for x in tup:
                ys.update(g2.y_map(x))
            if g2.gamma_stable_closure(ys) == full:
                brute += 1
        assert fast == moe == brute


def test_count_sur_examples():
    z3 = inversion_action(cyclic(3))
    assert z3.count_sur_free_admissible(1) == 2
    assert z3.count_sur_free_admissible(0) == 0
    assert inversion_action(trivial_group()).count_sur_free_admissible(0) == 1
    assert z3.count_aut_gamma() == 2


def test_partition_identity_over_stable_subgroups():
    h = inversion_action(abelian([3, 3]))
    n = 2
    subs = h.gamma_stable_subgroups()
    total = 0
    for s in subs:
        sset = set(s)
        cnt = 0
        for tup in itertools.product(range(9), repeat=n):
            ys = set()
            for x in tup:
                ys.update(h.y_map(x))
            if h.gamma_stable_closure(ys) == s:
                cnt += 1
        total += cnt
    assert total == 9 ** n


def test_gamma_validation():
    with pytest.raises(ValidationError):
        GammaGroup(cyclic(3), cyclic(2), [[0, 1, 2], [0, 2, 1], [0, 1, 2]])
    with pytest.raises(ValidationError):
        GammaGroup(cyclic(4), cyclic(2), [[0, 1, 2, 3], [0, 2, 1, 3]])


def test_group_file_roundtrip(tmp_path):
    s3 = symmetric(3)
    text = format_group_file(s3)
    g = parse_group_file(text)
    assert g.table == s3.table
    z3 = inversion_action(cyclic(3))
    gg = parse_group_file(format_group_file(cyclic(3), z3))
    assert isinstance(gg, GammaGroup)
    assert gg.act == z3.act
    perm = parse_group_file("perm degree=3\n(0 1)\n(0 1 2)\n")
    assert perm.order == 6
    with pytest.raises(ValidationError):
        parse_group_file("order 2\n0 1\n1 0\ngamma\n1 0\n0 1\n")


def test_subgroup_validation():
    s3 = symmetric(3)
    with pytest.raises(ValidationError):
        Subgroup(s3, (0, 1, 2))  # not closed
    full = Subgroup(s3, tuple(range(6)))
    assert not full.is_cyclic()
    rot = Subgroup(s3, s3.subgroup_closure([next(
        g for g in range(6) if s3.element_order(g) == 3)]))
    assert rot.is_cyclic() and len(rot.generators_of_cyclic()) == 2


def test_quotient():
    d4 = dihedral(4)
    center = d4.center()
    q, proj = d4.quotient(d4.subgroup_closure([c for c in center if c != 0]))
    assert q.order == 4 and q.is_abelian()
    with pytest.raises(ValidationError):
        s3 = symmetric(3)
        invol = next(g for g in range(6) if s3.element_order(g) == 2)
        s3.quotient(s3.subgroup_closure([invol]))


def test_gamma_isomorphic():
    a = inversion_action(cyclic(9))
    b = inversion_action(cyclic(9))
    assert gamma_isomorphic(a, b)
    c = trivial_action(cyclic(9), cyclic(2))
    assert not gamma_isomorphic(a, c)
