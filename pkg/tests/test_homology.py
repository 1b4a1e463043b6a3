import math

import pytest

from hurwitzlab.abelian import AbelianStructure
from hurwitzlab.errors import ValidationError
from hurwitzlab.groups import (abelian, cyclic, dihedral, dicyclic,
                               groups_up_to_16, inversion_action, semidirect,
                               symmetric)
from hurwitzlab.homology import (UContext, build_u, h2, load_ucontext,
                                 reduce_cover, save_ucontext, schur_cover,
                                 validate_c)
from hurwitzlab.homology_oracle import oracle_h2, oracle_h2_reduced


def AS(orders):
    return AbelianStructure.from_cyclic_orders(orders)


KNOWN_H2 = {
    "C6": [], "S3": [], "C2xC2": [2], "C3xC3": [3], "D4": [2], "Dic2": [],
    "D5": [], "A4": [2], "D6": [2], "C4xC4": [4], "C2xC2xC2": [2, 2, 2],
}


@pytest.mark.parametrize("name", sorted(KNOWN_H2))
def test_h2_known_values(name):
    cat = {g.name: g for g in groups_up_to_16()}
    assert h2(cat[name]) == AS(KNOWN_H2[name])


def test_h2_cyclic_trivial():
    for n in (1, 2, 5, 12):
        assert h2(cyclic(n)).is_trivial()


def test_h2_abelian_wedge():
    for orders in ([2, 8], [4, 4], [2, 2, 4], [3, 9]):
        fs = []
        for i in range(len(orders)):
            for j in range(i + 1, len(orders)):
                fs.append(math.gcd(orders[i], orders[j]))
        assert h2(abelian(orders)) == AS(fs)


def test_h2_sylow_path():
    g50 = semidirect(inversion_action(abelian([5, 5]))).group
    assert h2(g50) == AS([5])
    g18 = semidirect(inversion_action(abelian([3, 3]))).group
    assert h2(g18) == AS([3])


def test_oracle_agreement_sample():
    for g in [abelian([3, 3]), symmetric(3), dihedral(4), dihedral(5),
              dicyclic(2), abelian([2, 2, 4])]:
        assert h2(g) == oracle_h2(g), g.name


def test_schur_cover_extraspecial():
    cov = schur_cover(abelian([3, 3]))
    assert cov.total.order == 27
    assert cov.total.exponent() == 3
    cov.verify(abelian([3, 3]), stem=True)


def test_schur_cover_trivial_multiplier():
    g = symmetric(3)
    cov = schur_cover(g)
    assert cov.total.order == 6
    c2 = cyclic(2)
    assert schur_cover(c2).total.order == 2


def test_reduce_cover_examples():
    g = abelian([3, 3])
    cov = schur_cover(g)
    red = reduce_cover(cov, g, list(range(1, 9)))
    assert red.kernel_structure.is_trivial()
    # no commuting pairs beyond forced: c of size 1 classes in S3 keeps S
    s3 = symmetric(3)
    cov3 = schur_cover(s3)
    red3 = reduce_cover(cov3, s3, list(range(1, 6)))
    assert red3.total.order == 6


def test_reduced_oracle_agreement():
    s3 = symmetric(3)
    transp = [g for g in range(1, 6) if s3.element_order(g) == 2]
    cov = schur_cover(s3)
    red = reduce_cover(cov, s3, transp)
    assert red.kernel_structure == oracle_h2_reduced(s3, transp)
    d4 = dihedral(4)
    red4 = reduce_cover(schur_cover(d4), d4, list(range(1, 8)))
    assert red4.kernel_structure == oracle_h2_reduced(d4, list(range(1, 8)))


def test_validate_c():
    s3 = symmetric(3)
    transp = [g for g in range(1, 6) if s3.element_order(g) == 2]
    assert validate_c(s3, transp) == tuple(sorted(transp))
    with pytest.raises(ValidationError):
        validate_c(s3, [transp[0]])          # not conjugation closed
    with pytest.raises(ValidationError):
        validate_c(s3, [0] + transp)         # identity forbidden
    rot = [g for g in range(1, 6) if s3.element_order(g) == 3]
    with pytest.raises(ValidationError):
        validate_c(s3, rot)                  # does not generate


def test_ucontext_z2():
    ctx = build_u(cyclic(2), [1])
    b = ctx.bracket(1)
    h, v = ctx.k_decompose(b * b)
    assert h == () and v == (2,)
    with pytest.raises(ValidationError):
        ctx.k_decompose(b)                   # odd vector: not in K


def test_ucontext_braid_compatibility():
    s3 = symmetric(3)
    ctx = build_u(s3, list(range(1, 6)))
    for x in ctx.c:
        for y in ctx.c:
            lhs = ctx.bracket(x) * ctx.bracket(y)
            rhs = ctx.bracket(s3.conj(y, x)) * ctx.bracket(x)
            assert lhs == rhs


def test_k_centrality():
    s3 = symmetric(3)
    ctx = build_u(s3, list(range(1, 6)))
    S = ctx.sc.total
    for k in ctx.sc.kernel_members:
        for u in range(S.order):
            assert S.table[k][u] == S.table[u][k]


def test_k_decompose_roundtrip():
    d5 = dihedral(5)
    ctx = build_u(d5, list(range(1, 10)))
    import itertools
    for h in itertools.product(*(range(d) for d in ctx.h2c.factors)):
        v = [0] * ctx.nclasses
        # degree-0 vector with zero abelianization: all zero is simplest
        u = ctx.k_compose(h, v)
        hh, vv = ctx.k_decompose(u)
        assert hh == tuple(h) and vv == tuple(v)


def test_h2c_divides_h2():
    for g, c in [(symmetric(3), list(range(1, 6))),
                 (dihedral(4), list(range(1, 8))),
                 (abelian([3, 3]), list(range(1, 9)))]:
        full = h2(g)
        red = reduce_cover(schur_cover(g), g, c)
        assert full.order % red.kernel_structure.order == 0


def test_ucontext_cache_roundtrip(tmp_path):
    s3 = symmetric(3)
    transp = [g for g in range(1, 6) if s3.element_order(g) == 2]
    ctx = build_u(s3, transp, cache_dir=str(tmp_path))
    files = list(tmp_path.iterdir())
    assert len(files) == 1
    ctx2 = build_u(s3, transp, cache_dir=str(tmp_path))
    assert ctx2.c == ctx.c
    assert ctx2.sc.total.table == ctx.sc.total.table
    assert ctx2.lifts == ctx.lifts
