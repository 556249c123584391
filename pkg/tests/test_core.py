from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinfer.core import (
    Literal, Rule, UndefinedConditional, cond_prob, eta, is_law, is_probabilistic_law,
    is_true, load_system, rule_stats, same_conclusion_subrules, subrules,
)

from conftest import NP1, NP2, P1, P2

A, B, G = Literal(0), Literal(1), Literal(2)


def r(prem, concl):
    return Rule.of(prem, concl)


def test_uniform_default(t4):
    assert t4.mu == (Fraction(1, 4),) * 4
    assert t4.objects == ("a1", "a2", "a3", "a4")
    assert t4.predicates == ("P1", "P2")


def test_explicit_weights():
    s = load_system([[1], [0]], [0.5, 0.5])
    assert s.mu == (Fraction(1, 2), Fraction(1, 2))


@pytest.mark.parametrize("w", [[0.5, 0.4], [1.0, 0.0], [1.5, -0.5]])
def test_bad_weights(w):
    with pytest.raises(ValueError):
        load_system([[1], [0]], w)


def test_empty_matrix_rejected():
    with pytest.raises(ValueError):
        load_system(np.zeros((0, 2)))


def test_truth_is_read_only(t4):
    with pytest.raises(ValueError):
        t4.truth[0, 0] = False


def test_eta(t4):
    assert eta(t4, []) == 1
    assert eta(t4, [P1]) == Fraction(3, 4)
    assert eta(t4, [P2, NP2]) == 0


def test_weighted_eta():
    s = load_system([[1], [0], [1]], [0.5, 0.25, 0.25])
    assert eta(s, [Literal(0)]) == Fraction(3, 4)


def test_cond_prob(t4):
    assert cond_prob(t4, r([], P2)) == Fraction(1, 2)
    assert cond_prob(t4, r([P1], P2)) == Fraction(2, 3)


def test_zero_support_conditional(t4):
    s = load_system([[1, 1], [1, 0]])
    with pytest.raises(UndefinedConditional):
        cond_prob(s, r([NP1], P2))
    with pytest.raises(UndefinedConditional):
        rule_stats(s, r([NP1], P2))


def test_rule_rejects_conclusion_atom_in_premise():
    with pytest.raises(ValueError):
        r([P1, P2], P1)
    with pytest.raises(ValueError):
        r([P2, NP2], P1)


def test_subrules_of_empty_premise():
    assert subrules(r([], G)) == set()


def test_subrules_single_literal():
    assert subrules(r([P1], P2)) == {r([], P2), r([], NP1)}


def test_subrules_two_literals():
    got = subrules(r([A, B], G))
    want = {r([], G), r([A], G), r([B], G), r([], -A), r([], -B), r([A], -B), r([B], -A)}
    assert got == want and len(got) == 7


def test_same_conclusion_subrules():
    assert set(same_conclusion_subrules(r([A, B], G))) == {r([], G), r([A], G), r([B], G)}


def test_is_true(t4):
    assert is_true(t4, r([NP1], NP2))
    assert not is_true(t4, r([P1], P2))


def test_is_law(t4):
    assert is_law(t4, r([NP1], NP2))
    assert not is_law(t4, r([P1], P2))
    # (=> P1) and (=> ~P2) both fail on some object
    assert is_law(t4, r([P2], P1))


def test_is_law_false_when_subrule_true():
    s = load_system([[1, 1, 1], [1, 0, 1], [0, 1, 1]])
    # (=> P3) holds everywhere, so (P1 => P3) is true but not a law
    assert is_true(s, r([Literal(0)], Literal(2)))
    assert not is_law(s, r([Literal(0)], Literal(2)))
    assert is_law(s, r([], Literal(2)))


def test_probabilistic_law(t4):
    assert is_probabilistic_law(t4, r([P1], P2))
    assert is_probabilistic_law(t4, r([], P1))
    # 1/2 beats (=> ~P1) at 1/4; strictness is checked against same-conclusion sub-rules
    assert is_probabilistic_law(t4, r([NP2], NP1))
    assert not is_probabilistic_law(t4, r([P2], NP1))  # zero joint support


def test_probabilistic_law_needs_strict_gain():
    s = load_system([[1, 1], [0, 1], [1, 0], [0, 0]])
    assert not is_probabilistic_law(s, r([Literal(0)], Literal(1)))  # 1/2 == 1/2


def test_literal_order_and_render():
    assert sorted([NP2, P2, NP1, P1]) == [P1, NP1, P2, NP2]
    assert r([P2], P1).render(["x", "y"]) == "y => x"
    assert r([NP1], NP2).render(["a", "b"]) == "~a => ~b"
    assert r([], P1).render() == "=> P1"


def test_literal_index(t4):
    assert t4.literal_index("~P2") == NP2
    with pytest.raises(KeyError):
        t4.literal_index("Q")


def test_pickle_roundtrip(t4):
    import pickle

    s = pickle.loads(pickle.dumps(t4))
    assert s.mu == t4.mu and (s.truth == t4.truth).all()


@st.composite
def systems(draw):
    n = draw(st.integers(1, 6))
    k = draw(st.integers(1, 4))
    rows = draw(st.lists(st.lists(st.booleans(), min_size=k, max_size=k), min_size=n, max_size=n))
    return load_system(rows)


def _brute_eta(sys, conj):
    return sum(
        (w for w, row in zip(sys.mu, sys.truth) if all(bool(row[l.predicate]) == l.positive for l in conj)),
        Fraction(0),
    )


@given(systems(), st.data())
@settings(max_examples=150, deadline=None)
def test_eta_matches_row_count(sys, data):
    lits = data.draw(st.lists(st.sampled_from(sys.literals()), max_size=4))
    assert eta(sys, lits) == _brute_eta(sys, lits)


@given(systems(), st.data())
@settings(max_examples=100, deadline=None)
def test_truth_of_subrule_implies_truth(sys, data):
    k = sys.n_predicates
    if k < 2:
        return
    g = data.draw(st.integers(0, k - 1))
    atoms = data.draw(st.lists(st.sampled_from([a for a in range(k) if a != g]), unique=True))
    signs = data.draw(st.lists(st.booleans(), min_size=len(atoms), max_size=len(atoms)))
    rule = r([Literal(a, s) for a, s in zip(atoms, signs)], Literal(g, data.draw(st.booleans())))
    if any(is_true(sys, s) for s in subrules(rule)):
        assert is_true(sys, rule)
