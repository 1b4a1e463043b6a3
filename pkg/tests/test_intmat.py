import random

import pytest

from hurwitzlab.intmat import (coords_in_basis, divisor_chain, hnf_basis,
                               howell_form_mod, howell_residue, kernel_basis,
                               quotient_divisors_mod, quotient_with_reps_mod,
                               smith_normal_form, solve_linear_mod)


def brute_span_mod(gens, dim, m, cap=30000):
    span = {tuple([0] * dim)}
    frontier = [tuple([0] * dim)]
    while frontier:
        x = frontier.pop()
        for g in gens:
            y = tuple((a + b) % m for a, b in zip(x, g))
            if y not in span:
                if len(span) >= cap:
                    return None
                span.add(y)
                frontier.append(y)
    return span


def test_divisor_chain():
    assert divisor_chain([2, 4, 3, 9, 2]) == [2, 6, 36]
    assert divisor_chain([1, 1]) == []
    assert divisor_chain([6]) == [6]


def test_smith_normal_form_diag():
    diag, _ = smith_normal_form([[2, 0], [0, 3]], 2)
    assert diag == [1, 6] or diag == [2, 3] or sorted(diag) == [1, 6]
    # canonical SNF of diag(2,3) is diag(1,6)
    assert diag[0] == 1 and diag[1] == 6


def test_quotient_reps_random():
    rng = random.Random(5)
    for _ in range(150):
        dim = rng.randint(2, 5)
        m = rng.choice([4, 8, 9, 27, 6, 12, 25])
        k = rng.randint(1, 5)
        sub = [[rng.randrange(-3, 4) for _ in range(dim)] for _ in range(k)]
        sol = [[int(i == j) for j in range(dim)] for i in range(dim)]
        reps = quotient_with_reps_mod(sol, sub, dim, m)
        lat = [r[:] for r in sub] + [[m if i == j else 0 for j in range(dim)]
                                     for i in range(dim)]
        basis = hnf_basis(lat, dim)
        total = 1
        for d, rep in reps:
            ks = [x for x in range(1, d + 1)
                  if coords_in_basis(basis, [x * v for v in rep]) is not None]
            assert ks and ks[0] == d
            total *= d
        divs = quotient_divisors_mod(sub, dim, m)
        sz = 1
        for d in divs:
            sz *= d
        assert sz == total


def test_kernel_basis_saturated():
    rng = random.Random(9)
    for _ in range(100):
        nr = rng.randint(1, 4)
        nc = rng.randint(2, 7)
        A = [[rng.randrange(-4, 5) for _ in range(nc)] for _ in range(nr)]
        basis, coord, rank = kernel_basis(A, nc)
        for b in basis:
            for row in A:
                assert sum(x * y for x, y in zip(row, b)) == 0
        if basis:
            v = [0] * nc
            expect = []
            for b in basis:
                c = rng.randrange(-3, 4)
                expect.append(c)
                v = [x + c * y for x, y in zip(v, b)]
            got = coord({i: x for i, x in enumerate(v) if x})
            assert got == expect


def test_howell_membership_and_canonical():
    rng = random.Random(11)
    done = 0
    while done < 250:
        dim = rng.randint(1, 4)
        m = rng.choice([2, 3, 4, 8, 9, 12, 25])
        k = rng.randint(0, 3)
        gens = [[rng.randrange(m) for _ in range(dim)] for _ in range(k)]
        span = brute_span_mod(gens, dim, m, cap=20000)
        if span is None:
            continue
        done += 1
        H = howell_form_mod(gens, dim, m)
        for _ in range(20):
            v = [rng.randrange(m) for _ in range(dim)]
            r = howell_residue(H, v, m)
            assert (tuple(x % m for x in v) in span) == (not any(r))
            s = rng.choice(list(span))
            w = [(a + b) % m for a, b in zip(v, s)]
            assert howell_residue(H, w, m) == r


def test_solve_linear_mod():
    rng = random.Random(4)
    for _ in range(120):
        nv = rng.randint(1, 5)
        ne = rng.randint(1, 5)
        m = rng.choice([4, 9, 8, 27, 5])
        A = [[rng.randrange(m) for _ in range(nv)] for _ in range(ne)]
        xt = [rng.randrange(m) for _ in range(nv)]
        rhs = [sum(a * b for a, b in zip(row, xt)) % m for row in A]
        x = solve_linear_mod(A, rhs, nv, m)
        assert x is not None
        for row, r in zip(A, rhs):
            assert sum(a * b for a, b in zip(row, x)) % m == r


def test_solve_linear_mod_unsolvable():
    assert solve_linear_mod([[2]], [1], 1, 4) is None
