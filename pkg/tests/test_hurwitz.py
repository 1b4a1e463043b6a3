import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hurwitzlab.errors import CapacityError, ValidationError
from hurwitzlab.groups import cyclic, dihedral, symmetric
from hurwitzlab.homology import build_u
from hurwitzlab.hurwitz import (NielsenTuple, braid_act, braid_inverse,
                                conjugate_tuple, enumerate_tuples, k_set,
                                lifting_invariant, orbits, shape_invariant,
                                stable_bijection_report)

S3 = symmetric(3)
TRANSP = tuple(g for g in range(1, 6) if S3.element_order(g) == 2)


def test_enumerate_s3_example():
    tups = list(enumerate_tuples(S3, TRANSP, TRANSP[0], 4))
    assert len(tups) == 8
    assert tups == sorted(tups, key=lambda t: t.entries)
    for t in tups:
        prod = 0
        for x in t.entries:
            prod = S3.table[prod][x]
        assert prod == S3.inv[TRANSP[0]]


def test_enumerate_edge_cases():
    # n = 2 with inverse not in c: empty
    rot = [g for g in range(1, 6) if S3.element_order(g) == 3]
    c2 = cyclic(2)
    assert list(enumerate_tuples(c2, [1], 1, 4)) == \
        [NielsenTuple((1, 1, 1), 1)]
    with pytest.raises(ValidationError):
        list(enumerate_tuples(S3, TRANSP, 0, 4))
    with pytest.raises(ValidationError):
        list(enumerate_tuples(S3, TRANSP, TRANSP[0], 1))
    with pytest.raises(CapacityError):
        list(enumerate_tuples(S3, list(range(1, 6)), TRANSP[0], 12, budget=10))


def test_braid_act_example():
    a, b, c = TRANSP
    t = NielsenTuple((a, b, c), TRANSP[0])
    moved = braid_act(1, t, S3)
    assert moved.entries == (S3.conj(b, a), a, c)
    assert braid_inverse(1, moved, S3) == t
    with pytest.raises(ValidationError):
        braid_act(3, t, S3)


@settings(max_examples=150, deadline=None)
@given(st.integers(4, 7), st.data())
def test_braid_relations(n, data):
    entries = tuple(data.draw(st.sampled_from(TRANSP)) for _ in range(n - 1))
    t = NielsenTuple(entries, TRANSP[0])
    i = data.draw(st.integers(1, n - 3))
    lhs = braid_act(i, braid_act(i + 1, braid_act(i, t, S3), S3), S3)
    rhs = braid_act(i + 1, braid_act(i, braid_act(i + 1, t, S3), S3), S3)
    assert lhs == rhs
    if i + 2 <= n - 2:
        j = i + 2
        ab = braid_act(i, braid_act(j, t, S3), S3)
        ba = braid_act(j, braid_act(i, t, S3), S3)
        assert ab == ba


def test_braid_preserves_structure():
    ctx = build_u(S3, TRANSP)
    t = next(iter(enumerate_tuples(S3, TRANSP, TRANSP[0], 4)))
    inv0 = lifting_invariant(ctx, t)
    for i in (1, 2):
        m = braid_act(i, t, S3)
        prod0 = 0
        for x in m.entries:
            prod0 = S3.table[prod0][x]
        assert prod0 == S3.inv[t.g_inf]
        assert sorted(ctx.class_of[x] for x in m.entries) == \
            sorted(ctx.class_of[x] for x in t.entries)
        assert lifting_invariant(ctx, m) == inv0
    # conjugation invariance
    cj = conjugate_tuple(t, S3, t.g_inf)
    assert lifting_invariant(ctx, cj) == inv0


def test_orbits_s3_example():
    ctx = build_u(S3, TRANSP)
    orbs = orbits(S3, TRANSP, TRANSP[0], 4, ctx=ctx, verify_invariants=True)
    assert len(orbs) == 1
    assert orbs[0].size == 8
    assert orbs[0].invariant.v == (4,)
    assert orbs[0].shape == (4,)


def test_orbits_partition_and_workers():
    call = list(range(1, 6))
    ctx = build_u(S3, call)
    for n in range(2, 7):
        total = len(list(enumerate_tuples(S3, call, TRANSP[0], n)))
        base = orbits(S3, call, TRANSP[0], n, ctx=ctx, verify_invariants=True)
        assert sum(o.size for o in base) == total
        for w in (2, 3):
            again = orbits(S3, call, TRANSP[0], n, ctx=ctx, workers=w)
            assert [(o.representative, o.size, o.invariant, o.shape)
                    for o in again] == \
                   [(o.representative, o.size, o.invariant, o.shape)
                    for o in base]


def test_orbit_memory_budget():
    call = list(range(1, 6))
    with pytest.raises(CapacityError):
        orbits(S3, call, TRANSP[0], 7, memory_budget=1000)


def test_lifting_invariant_requires_c():
    ctx = build_u(S3, TRANSP)
    rot = next(g for g in range(1, 6) if S3.element_order(g) == 3)
    with pytest.raises(ValidationError):
        lifting_invariant(ctx, NielsenTuple((TRANSP[0], TRANSP[0]), rot))


def test_shape_invariant():
    d5 = dihedral(5)
    c = list(range(1, 10))
    ctx = build_u(d5, c)
    refl = next(g for g in c if d5.element_order(g) == 2)
    orbs = orbits(d5, c, refl, 5, ctx=ctx)
    # shapes constant on orbits by construction; powering can swap the two
    # rotation classes, so shape is the lex-min under that swap
    for o in orbs:
        assert o.shape == min(
            tuple(o.invariant.v),
            tuple(o.invariant.v[i] for i in (1, 0, 2)))


def test_stable_bijection_z2():
    c2 = cyclic(2)
    for n in (2, 4, 6):
        rep = stable_bijection_report(c2, [0, 1], [1], n, 1)
        e = rep.entries[0]
        assert e.bijective and len(e.k_set) == 1
    # odd degree: both sides empty (vector must be 0 in G^ab)
    rep = stable_bijection_report(c2, [0, 1], [1], 5, 1)
    assert len(rep.entries[0].k_set) == 0


def test_stable_bijection_s3():
    ctx = build_u(S3, TRANSP)
    rep = stable_bijection_report(S3, S3.subgroup_closure([TRANSP[0]]),
                                  TRANSP, 8, 2, ctx=ctx)
    assert rep.all_bijective


def test_k_set_counts():
    ctx = build_u(S3, TRANSP)
    # degree-n vectors on one class with trivial abelianized image: n even
    assert len(k_set(ctx, 4, 1)) == 1
    assert len(k_set(ctx, 5, 1)) == 0
