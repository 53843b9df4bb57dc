import random
from fractions import Fraction
from itertools import combinations
from math import gcd

import pytest
from hypothesis import given, strategies as st

from surgcalc.intlinalg import (
    SingularMatrix,
    determinant,
    identity,
    invariant_factors,
    matmul,
    rational_inverse,
    smith_normal_form,
)


def minors_gcd_oracle(m):
    """d_1 ... d_k = gcd of all k x k minors (independent of the SNF code)."""
    rows, cols = len(m), len(m[0])
    out, prev = [], 1
    for k in range(1, min(rows, cols) + 1):
        g = 0
        for ri in combinations(range(rows), k):
            for ci in combinations(range(cols), k):
                g = gcd(g, int(determinant([[m[i][j] for j in ci] for i in ri])))
        if g == 0:
            break
        out.append(g // prev)
        prev = g
    return out


def matrices(max_dim=5, bound=20):
    return st.integers(1, max_dim).flatmap(
        lambda r: st.integers(1, max_dim).flatmap(
            lambda c: st.lists(
                st.lists(st.integers(-bound, bound), min_size=c, max_size=c), min_size=r, max_size=r
            )
        )
    )


def test_snf_identity():
    assert smith_normal_form(identity(3)).D == identity(3)


def test_snf_appendix_matrix():
    m = [[3, 0, 1], [0, 3, 2], [1, 1, 2]]
    r = smith_normal_form(m)
    assert r.diagonal == [1, 1, 9]
    assert minors_gcd_oracle(m) == [1, 1, 9]


def test_snf_already_diagonal():
    assert smith_normal_form([[2, 0], [0, 2]]).diagonal == [2, 2]


def test_snf_non_square_and_zero():
    assert smith_normal_form([[2, 4, 6]]).diagonal == [2]
    assert smith_normal_form([[0, 0], [0, 0]]).diagonal == [0, 0]


@given(matrices())
def test_snf_invariants(m):
    r = smith_normal_form(m)
    assert matmul(matmul(r.U, m), r.V) == r.D
    assert abs(determinant(r.U)) == 1 and abs(determinant(r.V)) == 1
    rows, cols = len(m), len(m[0])
    for i in range(rows):
        for j in range(cols):
            if i != j:
                assert r.D[i][j] == 0
    diag = r.diagonal
    assert all(d >= 0 for d in diag)
    for a, b in zip(diag, diag[1:]):
        assert (b == 0) or (a != 0 and b % a == 0)
    assert [d for d in diag if d] == minors_gcd_oracle(m)


@given(st.integers(1, 5).flatmap(lambda n: st.lists(st.lists(st.integers(-9, 9), min_size=n, max_size=n), min_size=n, max_size=n)))
def test_product_of_divisors_is_det(m):
    det = determinant(m)
    if det:
        prod = 1
        for d in invariant_factors(m):
            prod *= d
        assert prod == abs(det)


def test_rational_inverse_examples():
    assert rational_inverse([[Fraction(5, 2)]]) == [[Fraction(2, 5)]]
    inv = rational_inverse([[3, 1], [1, 2]])
    assert inv == [[Fraction(2, 5), Fraction(-1, 5)], [Fraction(-1, 5), Fraction(3, 5)]]
    with pytest.raises(SingularMatrix):
        rational_inverse([[1, 1], [1, 1]])


def test_rational_inverse_random():
    rng = random.Random(1)
    done = 0
    while done < 500:
        n = rng.randint(1, 5)
        a = [[Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(n)] for _ in range(n)]
        if determinant(a) == 0:
            continue
        assert matmul(rational_inverse(a), a) == identity(n)
        done += 1


def test_determinant_examples():
    assert determinant(identity(4)) == 1
    assert determinant([[3, 1], [1, 2]]) == 5
    assert determinant([[3, 0, 1], [0, 3, 2], [1, 1, 2]]) == 9
    assert determinant([[Fraction(1, 2), 1], [1, 4]]) == 1
