import random
from fractions import Fraction
from math import gcd

import pytest
from hypothesis import given, strategies as st

from surgcalc.abgroup import FiniteAbelianGroup
from surgcalc.intlinalg import determinant
from surgcalc.linkform import FormBlock, block_form, is_isomorphic
from surgcalc.surgery import (
    AsymmetricLinking,
    BadCoefficient,
    BadParams,
    Move,
    NotApplicable,
    NotQHS,
    ParseError,
    PreconditionViolated,
    SurgeryDiagram,
    apply_move,
    continued_fraction_eval,
    continued_fraction_expand,
    homology,
    knot_surgery_arithmetic,
    lens_chain,
    linking_matrix,
    parse_diagram,
    presentation,
    replay,
    saveliev_reduce,
)

F = Fraction
D = SurgeryDiagram.build


def same_homology(d1, d2):
    h1, h2 = homology(d1), homology(d2)
    return h1.group == h2.group and is_isomorphic(h1.form, h2.form) is not None


def test_linking_matrix_examples():
    d = D([F(5, 2)])
    assert linking_matrix(d) == [[F(5, 2)]] and presentation(d) == [[5]]
    assert linking_matrix(D([3, 2], {(0, 1): 1})) == [[3, 1], [1, 2]]
    # Appendix D_n, p=3, s=r=1, q1=1, q2=2, l=(1,1), n=2: coefficients p^s/q', p^r/q', n
    d = D([3, F(3, 2), 2], {(0, 2): 1, (1, 2): 1})
    assert presentation(d) == [[3, 0, 1], [0, 3, 2], [1, 1, 2]]
    assert abs(determinant(presentation(d))) == 9


def test_homology_examples():
    h = homology(D([F(5, 2)]))
    assert h.group == FiniteAbelianGroup((5,))
    (k,) = h.knot_classes
    assert h.form.self_link(k) == F(3, 5)
    assert h.meridian_classes[0] == k * -2
    h = homology(D([3, 2], {(0, 1): 1}))
    assert h.group.order == 5 and h.form.self_link(h.knot_classes[1]) == F(2, 5)
    h = homology(D([3, F(3, 2)]))
    assert h.group == FiniteAbelianGroup((3, 3))
    k1, k2 = h.knot_classes
    assert (h.form.self_link(k1), h.form.self_link(k2), h.form.eval(k1, k2)) == (F(2, 3), F(1, 3), 0)
    with pytest.raises(NotQHS):
        homology(D([0]))
    assert homology(D([None, F(5, 2)])).group.order == 5


def test_parse_examples():
    d = parse_diagram("link n=1\ncoef 1 5/2\n")
    assert d.n == 1 and d.coefficient(0) == F(5, 2)
    with pytest.raises(AsymmetricLinking) as exc:
        parse_diagram("link n=2\ncoef 1 1\ncoef 2 1\nlk 1 2 3\nlk 2 1 4\n")
    assert exc.value.line == 5
    with pytest.raises(BadCoefficient):
        parse_diagram("link n=1\ncoef 1 3/0\n")
    with pytest.raises(ParseError):
        parse_diagram("link n=1\ncoef 1 x\n")
    with pytest.raises(ParseError):
        parse_diagram("coef 1 2\n")
    text = "# appendix\nlink n=3\ncoef 1 -3/1\ncoef 2 -3/2\ncoef 3 2\nlk 1 3 1\nlk 2 3 1  # trailing\n"
    d = parse_diagram(text)
    assert d.n == 3 and d.lk[0][2] == 1 and d.lk[0][1] == 0
    assert parse_diagram(d.to_text()) == d
    assert parse_diagram("link n=1\ncoef 1 inf\n").coefficient(0) is None


def test_continued_fraction_examples():
    assert continued_fraction_eval([2]) == 2
    assert continued_fraction_eval([3, 2]) == F(5, 2)
    assert continued_fraction_eval(continued_fraction_expand(F(4, 3))) == F(4, 3)
    assert continued_fraction_expand(F(4, 3)) == [2, 2, 2]
    with pytest.raises(ZeroDivisionError):
        continued_fraction_eval([1, 1, 0])


def test_continued_fraction_round_trip():
    rng = random.Random(0)
    done = 0
    while done < 500:
        p, q = rng.randint(1, 10**4), rng.randint(-(10**4), 10**4)
        if q == 0 or gcd(p, q) != 1:
            continue
        a = continued_fraction_expand(F(p, q))
        assert all(x >= 2 for x in a[1:])
        assert continued_fraction_eval(a) == F(p, q)
        done += 1


def test_lens_chain_examples_and_oracle():
    assert lens_chain(5, 2).coeffs == ((3, 1), (2, 1))
    assert lens_chain(2, 1).coeffs == ((2, 1),)
    assert lens_chain(7, 1).coeffs == ((7, 1),)
    with pytest.raises(BadParams):
        lens_chain(4, 2)
    rng = random.Random(1)
    for _ in range(60):
        p = rng.randint(2, 300)
        q = rng.randint(1, p - 1)
        if gcd(p, q) != 1:
            continue
        chain = lens_chain(p, q)
        h = homology(chain)
        assert h.group == FiniteAbelianGroup((p,))
        assert same_homology(chain, D([F(p, q)]))


def test_move_examples():
    d = D([F(5, 2), 1])
    pruned = apply_move(d, Move("Prune", i=1))
    assert pruned == D([F(5, 2)]) and same_homology(d, pruned)
    dunk = apply_move(D([3, 2], {(0, 1): 1}), Move("SlamDunk", i=0, j=1))
    assert dunk.coefficient(0) == F(5, 2)
    slid = apply_move(D([2, 1], {(0, 1): 1}), Move("HandleSlide", i=0, j=1, t=-1))
    assert slid.coefficient(0) == 1 and slid.lk[0][1] == 0
    assert same_homology(slid, D([2, 1], {(0, 1): 1}))
    with pytest.raises(NotApplicable):
        apply_move(D([F(5, 2), 1], {(0, 1): 1}), Move("HandleSlide", i=1, j=0, t=1))
    with pytest.raises(NotApplicable):
        apply_move(D([F(5, 2), 1], {(0, 1): 1}), Move("Prune", i=1))


def random_diagram(rng):
    while True:
        n = rng.randint(1, 3)
        coeffs = [F(rng.choice([-5, -3, -2, 2, 3, 4, 5, 7]), rng.choice([1, 1, 1, 2, 3])) for _ in range(n)]
        links = {(i, j): rng.randint(-2, 2) for i in range(n) for j in range(i + 1, n)}
        d = D(coeffs, links)
        try:
            h = homology(d)
        except NotQHS:
            continue
        if 1 < h.group.order <= 600:
            return d


def random_move(rng, d):
    n = d.n
    kind = rng.choice(["BlowUp", "RolfsenTwist", "HandleSlide", "InverseSlamDunk", "BlowDown", "SlamDunk"])
    if kind == "BlowUp":
        return Move("BlowUp", eps=rng.choice([1, -1]), row=tuple(rng.randint(-1, 1) for _ in range(n)))
    if kind == "RolfsenTwist":
        i = rng.randrange(n)
        if any(d.lk[i]):
            return None
        return Move("RolfsenTwist", i=i, t=rng.choice([-1, 1, 2]))
    if kind == "HandleSlide":
        if n < 2:
            return None
        i, j = rng.sample(range(n), 2)
        return Move("HandleSlide", i=i, j=j, t=rng.choice([-1, 1]))
    if kind == "InverseSlamDunk":
        return Move("InverseSlamDunk", i=rng.randrange(n), t=rng.randint(-3, 3))
    if kind == "BlowDown":
        return Move("BlowDown", i=rng.randrange(n))
    if n < 2:
        return None
    i, j = rng.sample(range(n), 2)
    return Move("SlamDunk", i=i, j=j)


def test_moves_preserve_homology_random():
    rng = random.Random(2)
    applied = {}
    attempts = 0
    while sum(applied.values()) < 150 and attempts < 5000:
        attempts += 1
        d = random_diagram(rng)
        m = random_move(rng, d)
        if m is None:
            continue
        try:
            d2 = apply_move(d, m)
        except NotApplicable:
            continue
        assert same_homology(d, d2), (d, m, d2)
        applied[m.kind] = applied.get(m.kind, 0) + 1
    assert set(applied) >= {"BlowUp", "HandleSlide", "InverseSlamDunk", "RolfsenTwist"}


def test_saveliev_examples():
    r = saveliev_reduce(D([F(5, 2), 1]))
    assert r.lens == (5, 2)
    d = D([F(5, 2), 1], {(0, 1): 1})
    r = saveliev_reduce(d)
    assert r.lens[0] == abs(determinant(presentation(d)))
    assert same_homology(d, r.final)
    assert replay(d, r.moves) == r.final
    with pytest.raises(PreconditionViolated):
        saveliev_reduce(D([F(5, 2), 2]))
    with pytest.raises(PreconditionViolated):
        saveliev_reduce(D([F(5, 2), 1, 1], {(1, 2): 1}))


def test_saveliev_random():
    rng = random.Random(3)
    done = 0
    while done < 200:
        p, q = rng.randint(1, 40), rng.choice([-1, 1]) * rng.randint(1, 12)
        if gcd(p, q) != 1:
            continue
        m = rng.randint(0, 3)
        coeffs = [F(p, q)] + [rng.choice([1, -1]) for _ in range(m)]
        links = {(0, j): rng.randint(-2, 2) for j in range(1, m + 1)}
        d = D(coeffs, links)
        det = abs(determinant(presentation(d)))
        if det == 0:
            continue
        r = saveliev_reduce(d)
        assert r.final.n == 1 and r.lens[0] == det
        assert replay(d, r.moves) == r.final
        if det <= 400:
            assert same_homology(d, r.final)
        done += 1


def test_knot_surgery_arithmetic_examples():
    f = block_form(FormBlock("A", 3, 2, 1))
    (g,) = f.group.generators()
    a = knot_surgery_arithmetic(f, g, 1)
    assert (a.m0, a.complement_order, a.predicted_order) == (1, 1, 1)
    a = knot_surgery_arithmetic(f, g * 3, 1)
    assert (a.m0, a.complement_order, a.predicted_order) == (3, 3, 9)
    h = block_form(FormBlock("A", 3, 1, 1), FormBlock("A", 5, 1, 1))
    c = h.group.generators()[0] * 5
    assert knot_surgery_arithmetic(h, c, 1).predicted_order == h.order // c.order


@given(st.integers(-50, 50), st.integers(1, 50))
def test_unknot_homology_matches_formula(p, q):
    if p == 0 or gcd(p, q) != 1:
        return
    h = homology(D([F(p, q)]))
    assert h.group.order == abs(p)
    if abs(p) > 1:
        # lk(K,K) = -1/A = -q/p
        assert h.form.self_link(h.knot_classes[0]) == F(-q, p) % 1
