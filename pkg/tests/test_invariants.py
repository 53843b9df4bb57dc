import json
import random
from fractions import Fraction
from math import gcd

import pytest
from hypothesis import given, strategies as st

from surgcalc.abgroup import FiniteAbelianGroup, all_characters
from surgcalc.invariants import (
    BadContext,
    BadParams,
    CorrectionContext,
    IncompatibleTables,
    InvariantTable,
    NotCoprime,
    connected_sum_with_structure,
    correction_term,
    cw_chain,
    cw_lens,
    cw_surgery,
    dedekind_sum,
    s3_table,
    sawtooth,
    split_family,
    surgery_residual,
    torsion_connected_sum,
    torsion_lens,
    trivial_character_ledger,
    unknot_family,
)
from surgcalc.surgery import continued_fraction_expand, lens_chain

F = Fraction


def coprime_pairs(max_p=200):
    return st.tuples(st.integers(1, max_p), st.integers(-max_p, max_p)).filter(lambda t: gcd(*t) == 1)


def brute_dedekind(q, p):
    return sum((sawtooth(F(k, p)) * sawtooth(F(k * q, p)) for k in range(1, p)), F(0))


def test_dedekind_examples():
    assert dedekind_sum(5, 1) == 0
    assert dedekind_sum(1, 3) == F(1, 18) == F((3 - 1) * (3 - 2), 36)
    assert dedekind_sum(2, 5) == 0
    with pytest.raises(NotCoprime):
        dedekind_sum(2, 4)


@given(coprime_pairs())
def test_dedekind_matches_definition_and_symmetries(pq):
    p, q = pq
    s = dedekind_sum(q, p)
    assert s == brute_dedekind(q, p)
    assert dedekind_sum(q + p, p) == s
    assert dedekind_sum(-q, p) == -s


def test_reciprocity():
    rng = random.Random(0)
    done = 0
    while done < 300:
        p, q = rng.randint(1, 2000), rng.randint(1, 2000)
        if gcd(p, q) != 1:
            continue
        lhs = dedekind_sum(q, p) + dedekind_sum(p, q)
        assert lhs == F(-1, 4) + (F(p, q) + F(q, p) + F(1, p * q)) / 12
        done += 1


def test_cw_examples():
    assert cw_surgery(1, 0, 1, 1, F(7, 3), 5) == F(7, 3)
    assert cw_surgery(3, 1, 1, 1, 0, 0) == F(-1, 12)
    assert cw_lens(2, 1) == 0 and cw_lens(3, 1) == F(-1, 12) and cw_lens(5, 2) == 0
    with pytest.raises(NotCoprime):
        cw_lens(4, 2)
    with pytest.raises(BadParams):
        cw_surgery(0, 1, 1, 1, 0, 0)


@given(coprime_pairs(), st.integers(1, 6), st.integers(1, 6))
def test_cw_surgery_m0_one_kills_q_term(pq, g, dd1):
    p, q = pq
    # with m0 = 1 the q(m0^2-1)/(12 m0) term vanishes identically
    expect = p * F(1, 3) + F(q, 2) * dd1 - g * F(p, 2) * dedekind_sum(q, p)
    assert cw_surgery(p, q, 1, g, F(1, 3), dd1) == expect


@given(coprime_pairs())
def test_cw_lens_periodic(pq):
    p, q = pq
    assert cw_lens(p, q) == cw_lens(p, q + p) == -F(p, 2) * dedekind_sum(q, p)


def test_cw_chain_matches_lens():
    rng = random.Random(1)
    done = 0
    while done < 100:
        p = rng.randint(2, 5000)
        q = rng.randint(1, p - 1)
        if gcd(p, q) != 1:
            continue
        terms = [p for p, _ in lens_chain(p, q).coeffs]
        assert terms == continued_fraction_expand(F(p, q))
        assert cw_chain(terms) == cw_lens(p, q)
        done += 1


def test_torsion_lens_examples():
    t = torsion_lens(2, 1)
    assert t[t.group.character([1])] == pytest.approx(-0.25)
    t = torsion_lens(3, 1)
    assert t[t.group.trivial_character] == F(-1, 8)
    with pytest.raises(BadParams):
        torsion_lens(1, 1)


def check_table(t: InvariantTable):
    assert t[t.group.trivial_character] == t.order * t.cw / 2
    for chi in all_characters(t.group):
        v = complex(t[chi])
        assert abs(v.imag) < 1e-10
        assert abs(v - complex(t[chi.conjugate()])) < 1e-9


def test_torsion_lens_contracts():
    rng = random.Random(2)
    for _ in range(80):
        p = rng.randint(2, 60)
        q = rng.randint(-p, p)
        if gcd(p, q) != 1:
            continue
        check_table(torsion_lens(p, q))


def test_table_rejects_bad_trivial_value():
    g = FiniteAbelianGroup((2,))
    with pytest.raises(BadParams):
        InvariantTable(g, {g.trivial_character: F(1), g.character([1]): -0.25}, F(0))


def test_table_json_round_trip():
    t = torsion_connected_sum([torsion_lens(5, 2), torsion_lens(4, 3)])
    back = InvariantTable.from_json(json.loads(t.dumps()))
    assert back.group == t.group and back.cw == t.cw
    for chi in all_characters(t.group):
        assert abs(complex(back[chi]) - complex(t[chi])) < 1e-12


def test_connected_sum_examples():
    base = torsion_lens(5, 2)
    unit = torsion_connected_sum([base, s3_table()])
    assert unit.group == base.group and unit.cw == base.cw
    for chi in all_characters(base.group):
        assert abs(complex(unit[chi]) - complex(base[chi])) < 1e-12
    t = torsion_connected_sum([torsion_lens(2, 1), torsion_lens(3, 1)])
    assert t[t.group.trivial_character] == F(-1, 4)
    check_table(t)


def test_connected_sum_vanishing_on_mixed_characters():
    cs = connected_sum_with_structure([torsion_lens(3, 1), torsion_lens(5, 2), torsion_lens(4, 1)])
    ds = cs.structure
    for chi in all_characters(cs.table.group):
        live = [i for i in range(3) if not ds.restrict(chi, i).is_trivial()]
        if len(live) >= 2:
            assert cs.table[chi] == 0
    check_table(cs.table)


def test_correction_term_examples():
    assert correction_term(CorrectionContext(7, 3, 1, 5)) == 0
    assert correction_term(CorrectionContext(3, 1, 2, 2, j=1)) == pytest.approx(-0.25, abs=1e-12)
    assert abs(correction_term(CorrectionContext(3, 1, 3, 3, j=1))) == pytest.approx(1 / 3, abs=1e-12)
    with pytest.raises(BadContext):
        CorrectionContext(4, 2, 1, 1)
    with pytest.raises(BadContext):
        CorrectionContext(3, 1, 2, 2, j=2)


def test_trivial_ledger_matches_cw_formula_for_unknots():
    # |H| Y / 2 with m0 = |G| = 1 is p * cw_lens / 2 ... i.e. tau^0_{p/q}(1) for L(p, q)
    for p, q in [(3, 1), (5, 2), (7, -3), (11, 4)]:
        ctx = CorrectionContext(p, q, 1, 1)
        assert trivial_character_ledger(ctx) == p * cw_lens(p, q) / 2


def test_residual_examples():
    assert surgery_residual(*unknot_family(5, 2)) < 1e-12
    assert surgery_residual(*split_family(5, 2)) < 1e-9
    t_pq, t_10, dd1, ctx, fam = unknot_family(5, 2)
    with pytest.raises(IncompatibleTables):
        surgery_residual(torsion_lens(7, 2), t_10, dd1, ctx, fam)


@given(st.integers(-300, 300), st.integers(-300, 300))
def test_residual_families(p, q):
    if abs(p) < 2 or gcd(p, q) != 1:
        return
    assert surgery_residual(*unknot_family(p, q)) < 1e-9
    assert surgery_residual(*split_family(p, q)) < 1e-9
    assert surgery_residual(*split_family(p, q, 4, 3)) < 1e-9
