import itertools
import random

import pytest

from hurwitzlab.abelian import (AbelianGroupData, AbelianStructure,
                                structure_of_members)
from hurwitzlab.errors import ValidationError
from hurwitzlab.groups import abelian, dihedral


def brute_hom_count(src_orders, dst_orders, surjective=False):
    src = abelian(src_orders)
    dst = abelian(dst_orders)
    data = structure_of_members(src, range(src.order))
    gens, gorders = data.basis, data.basis_orders
    cnt = 0
    for imgs in itertools.product(range(dst.order), repeat=len(gens)):
        if not all(dst.power(im, d) == 0 for im, d in zip(imgs, gorders)):
            continue
        if surjective:
            img = set()
            for combo in itertools.product(*(range(d) for d in gorders)):
                y = 0
                for c, im in zip(combo, imgs):
                    y = dst.table[y][dst.power(im, c)]
                img.add(y)
            if len(img) != dst.order:
                continue
        cnt += 1
    return cnt


def test_structure_random():
    rng = random.Random(3)
    for _ in range(40):
        orders = [rng.choice([2, 3, 4, 5, 8, 9]) for _ in range(rng.randint(1, 3))]
        g = abelian(orders)
        data = structure_of_members(g, range(g.order))
        assert data.structure == AbelianStructure.from_cyclic_orders(orders)
        for x in range(g.order):
            y = 0
            for c, b in zip(data.coords[x], data.basis):
                y = g.table[y][g.power(b, c)]
            assert y == x


def test_chain_and_counts():
    s = AbelianStructure.from_cyclic_orders([6, 4])
    assert s.chain == (2, 12)
    assert s.order == 24 and s.exponent == 12
    assert s.torsion_count(2) == 4
    assert AbelianStructure.from_cyclic_orders([12, 10]).prime_to_part(2).chain == (15,)
    assert AbelianStructure(()).is_trivial()


@pytest.mark.parametrize("src,dst", [
    ([4, 2], [2, 2]), ([9, 3], [3, 3]), ([8], [4]), ([6, 4], [2, 4]),
    ([5, 5], [5]), ([3], [9]),
])
def test_hom_sur_counts(src, dst):
    s1 = AbelianStructure.from_cyclic_orders(src)
    s2 = AbelianStructure.from_cyclic_orders(dst)
    assert s1.hom_count(s2) == brute_hom_count(src, dst)
    assert s1.sur_count(s2) == brute_hom_count(src, dst, surjective=True)


def test_structure_requires_abelian():
    with pytest.raises(ValidationError):
        structure_of_members(dihedral(4), range(8))


def test_non_prime_power_factor_rejected():
    with pytest.raises(ValidationError):
        AbelianStructure((6,))
