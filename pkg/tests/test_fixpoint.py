import math

import pytest
from hypothesis import given, settings, strategies as st

from spinfer.core import Literal, Rule, load_system
from spinfer.fixpoint import (
    RuleBase, enumerate_classes, fal, generating_set, is_compatible, is_consistent, kr, literal_state,
    pr_closure, pr_step, prphi_fixpoint, prphi_step, sat, v_weight,
)
from spinfer.miner import MinerConfig, mine_all

from conftest import NP1, NP2, P1, P2

LN8, LN3, LN2 = math.log(8), math.log(3), math.log(2)


def t4_msr(t4):
    return RuleBase.from_mined(mine_all(t4).msr, t4.n_objects)


def test_v_weight():
    assert v_weight(0, 0.125) == 0
    assert v_weight(0.5, 0.125) == pytest.approx(0.6931, abs=1e-4)
    assert v_weight(1, 0.125) == pytest.approx(2.0794, abs=1e-4)
    with pytest.raises(ValueError):
        v_weight(1.5, 0.1)


def test_t4_weights(t4):
    base = t4_msr(t4)
    assert base.weight_of(Rule.of([P2], P1)) == pytest.approx(LN8)
    assert base.weight_of(Rule.of([P1], P2)) == pytest.approx(LN3)
    assert base.weight_of(Rule.of([NP2], NP1)) == pytest.approx(LN2)


def test_pr_step_and_closure(t4):
    rules = t4_msr(t4)
    assert pr_step({P1}, rules) == {P1, P2}
    assert pr_step({NP1}, rules) == {NP1, NP2}
    assert pr_closure({P1}, rules) == {P1, P2}
    assert pr_closure(pr_closure({P1}, rules), rules) == {P1, P2}
    assert pr_closure({NP1}, rules) == {NP1, NP2}
    assert pr_closure(set(), rules) == set()


def test_empty_premise_rules_fire_on_empty_set():
    rules = [Rule.of([], P1), Rule.of([P2], NP1)]
    assert pr_step(set(), rules) == {P1}


def test_compatibility(t4):
    assert is_compatible(t4, {P1, P2})
    assert not is_compatible(t4, {P2, NP2})
    assert not is_compatible(t4, {NP1, P2})
    assert not is_consistent({P2, NP2})


def test_sat_fal_with_explicit_rules():
    rules = [Rule.of([P2], P1), Rule.of([P1], P2), Rule.of([], NP1)]
    L = {P1, P2}
    assert set(sat(L, rules)) == {Rule.of([P2], P1), Rule.of([P1], P2)}
    assert fal(L, rules) == [Rule.of([], NP1)]
    assert sat(set(), rules) == [] and fal(set(), rules) == []
    assert sat({NP2}, rules) == [] and fal({NP2}, rules) == []


def test_kr_with_explicit_rules():
    pairs = [(Rule.of([P2], P1), LN8), (Rule.of([P1], P2), LN3), (Rule.of([], NP1), math.log(4 / 3))]
    assert kr({P1, P2}, pairs) == pytest.approx(2.8903, abs=1e-4)
    assert kr({NP2}, pairs[:2]) == 0


def test_kr_additive():
    base = [(Rule.of([P1], P2), LN3)]
    extra = base + [(Rule.of([], P1), v_weight(0.5, 0.1))]
    assert kr({P1, P2}, extra) - kr({P1, P2}, base) == pytest.approx(LN2, abs=1e-12)


def test_kr_mined_t4(t4):
    assert kr({P1, P2}, t4_msr(t4)) == pytest.approx(LN8 + LN3)
    st_ = literal_state(t4, {P1, P2}, t4_msr(t4))
    assert st_.compatible and st_.kr == pytest.approx(LN8 + LN3)


def test_prphi_step(t4):
    rules = t4_msr(t4)
    res = prphi_step({P1}, rules)
    # adding P2 verifies (P1 => P2) and also fires (P2 => P1)
    assert res.op == "add" and res.literals == {P1, P2} and res.delta == pytest.approx(LN3 + LN8)
    assert prphi_step({P1, P2}, rules).op == "fixed"


def test_prphi_tie_prefers_addition():
    A, B = Literal(0), Literal(1)
    rules = [(Rule.of([], B), 1.0), (Rule.of([], -A), 1.0)]
    res = prphi_step({A}, rules)
    assert res.op == "add" and res.literal == B


def test_prphi_tie_prefers_smallest_literal():
    A, B, C = Literal(0), Literal(1), Literal(2)
    rules = [(Rule.of([A], C), 1.0), (Rule.of([A], B), 1.0)]
    assert prphi_step({A}, rules).literal == B


def test_conflicting_conclusion_is_not_added():
    A = Literal(0)
    res = prphi_step({A}, [(Rule.of([], -A), 1.0)])
    assert res.op == "delete" and res.literals == frozenset()


def test_prphi_deletes():
    A, B = Literal(0), Literal(1)
    rules = [(Rule.of([B], -A), 2.0), (Rule.of([], B), 0.5)]
    res = prphi_step({A, B}, rules)
    assert res.op == "delete" and res.literals == {B}


def test_fixpoint_t4(t4):
    rules = t4_msr(t4)
    c = prphi_fixpoint(t4, {P1}, rules)
    assert c.fixpoint == {P1, P2} and c.members == ("a1", "a2")
    c = prphi_fixpoint(t4, {NP1}, rules)
    assert c.fixpoint == {NP1, NP2} and c.members == ("a3",)
    again = prphi_fixpoint(t4, {P1, P2}, rules)
    assert again.fixpoint == {P1, P2} and len(again.kr_trace) == 1


def test_incompatible_seed_rejected(t4):
    with pytest.raises(ValueError):
        prphi_fixpoint(t4, {NP1, P2}, t4_msr(t4))


def test_enumerate_t4(t4):
    enum = enumerate_classes(t4, t4_msr(t4))
    assert [c.fixpoint for c in enum.classes] == [frozenset({P1, P2}), frozenset({NP1, NP2})]
    c1, c2 = enum.classes
    assert c1.class_id == "C1" and c1.members == ("a1", "a2")
    assert c1.kr == pytest.approx(LN8 + LN3)
    assert c2.members == ("a3",) and c2.kr == pytest.approx(LN8 + LN2)
    # a4 = {P1, ~P2}: deleting either literal gains ln3 + ln2; the tie goes to the smaller literal P1
    assert c1.seeds == ("a1", "a2") and c2.seeds == ("a3", "a4")
    assert enum.pruned_rules == []


def test_single_object_system():
    s = load_system([[1, 0, 1]])
    base = RuleBase.from_mined(mine_all(s).msr, 1)
    enum = enumerate_classes(s, base)
    assert [c.fixpoint for c in enum.classes] == [s.object_literals(0)]


def test_generating_set(t4):
    rules = t4_msr(t4)
    L = frozenset({P1, P2})
    g = generating_set(L, sat(L, rules))
    assert pr_closure(g, sat(L, rules)) == L and len(g) == 1


def test_digits_classes_are_prototypes(digits_run):
    from spinfer.datasets import digit_prototypes

    _, _, _, enum = digits_run
    assert sorted(map(sorted, enum.fixpoints())) == sorted(map(sorted, digit_prototypes().values()))
    for c in enum.classes:
        assert pr_closure(c.generating, c.sat_rules) == c.fixpoint


@st.composite
def mined_systems(draw):
    n = draw(st.integers(1, 6))
    k = draw(st.integers(1, 4))
    s = load_system(draw(st.lists(st.lists(st.booleans(), min_size=k, max_size=k), min_size=n, max_size=n)))
    return s, RuleBase.from_mined(mine_all(s, MinerConfig(max_premise_len=3)).msr, n)


@given(mined_systems(), st.data())
@settings(max_examples=80, deadline=None)
def test_kr_strictly_increases_until_fixed(sb, data):
    s, base = sb
    seed = s.object_literals(data.draw(st.integers(0, s.n_objects - 1)))
    c = prphi_fixpoint(s, seed, base)
    assert all(b > a for a, b in zip(c.kr_trace, c.kr_trace[1:]))
    assert prphi_step(c.fixpoint, base).op == "fixed"


@given(mined_systems(), st.data())
@settings(max_examples=80, deadline=None)
def test_closure_extensive_and_idempotent(sb, data):
    s, base = sb
    lits = frozenset(data.draw(st.lists(st.sampled_from(s.literals()), max_size=4)))
    once = pr_closure(lits, base)
    assert lits <= once and pr_closure(once, base) == once


@given(mined_systems())
@settings(max_examples=60, deadline=None)
def test_classes_cover_every_object_seed(sb):
    s, base = sb
    enum = enumerate_classes(s, base)
    seeds = [o for c in enum.classes for o in c.seeds]
    assert sorted(seeds) == sorted(s.objects)
    kept = set(enum.kept_rules) | set(enum.pruned_rules)
    assert kept == set(base.rules)
