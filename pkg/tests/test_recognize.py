import math

import pytest
from hypothesis import given, settings, strategies as st

from spinfer.core import Literal, Rule, load_system
from spinfer.fixpoint import ClassModel, RuleBase, enumerate_classes, fal
from spinfer.miner import MinerConfig, mine_all
from spinfer.recognize import (
    RegularMatrix, Threshold, calibrate_threshold, classify, confusion, classify_system,
    matrix_residual, regular_matrix, score,
)

from conftest import NP1, NP2, P1, P2


@pytest.fixture
def t4_classes(t4):
    base = RuleBase.from_mined(mine_all(t4).msr, t4.n_objects)
    return base, enumerate_classes(t4, base).classes


def test_regular_matrix_t4(t4_classes):
    base, (c1, _) = t4_classes
    m = regular_matrix(c1, base)
    assert m.weights[P1] == pytest.approx(math.log(8))
    assert m.weights[P2] == pytest.approx(math.log(3))


def test_literal_without_predicting_rule_has_zero_weight():
    A, B = Literal(0), Literal(1)
    base = RuleBase([Rule.of([A], B)], [1.5])
    c = ClassModel(frozenset({A, B}), (Rule.of([A], B),), 1.5, ())
    assert regular_matrix(c, base).weights == {A: 0.0, B: 1.5}


def test_weights_add_over_rules():
    A, B, G = Literal(0), Literal(1), Literal(2)
    rules = [Rule.of([A], G), Rule.of([B], G)]
    base = RuleBase(rules, [math.log(2)] * 2)
    c = ClassModel(frozenset({A, B, G}), tuple(rules), 0.0, ())
    assert regular_matrix(c, base).weights[G] == pytest.approx(2 * math.log(2))


def test_score_t4(t4, t4_classes):
    base, (c1, _) = t4_classes
    m = regular_matrix(c1, base)
    assert score(t4.object_literals(3), m) == pytest.approx(math.log(8) - math.log(3), abs=1e-12)
    assert score({P1, P2}, m) == pytest.approx(m.total)
    assert score({NP1, NP2}, m) == pytest.approx(-m.total)


def test_kr_equals_matrix_total_when_nothing_refuted(t4_classes):
    base, classes = t4_classes
    for c in classes:
        assert not fal(c.fixpoint, base)
        assert matrix_residual(c, base) == pytest.approx(0, abs=1e-9)


def test_matrix_residual_is_refuted_mass():
    A, B = Literal(0), Literal(1)
    base = RuleBase([Rule.of([A], B), Rule.of([], -A)], [2.0, 0.5])
    c = ClassModel(frozenset({A, B}), (Rule.of([A], B),), base.kr({A, B}), ())
    assert matrix_residual(c, base) == pytest.approx(-0.5)


def test_threshold_separable():
    th = calibrate_threshold([5, 6], [-5, -6], 0)
    assert th.value == -5 and th.fpr == 0 and th.fnr == 0 and not th.degenerate


def test_threshold_overlap():
    th = calibrate_threshold([1, 2, 3], [0, 2], 0)
    assert th.value == 2 and th.fpr == 0 and th.fnr == pytest.approx(2 / 3)


def test_threshold_degenerate():
    th = calibrate_threshold([3, 3], [3, 3], 0)
    assert th.degenerate and (th.fpr == 1 or th.fnr == 1)


def test_threshold_permissive_target():
    th = calibrate_threshold([1], [0, 2], 1.0)
    assert th.value == -math.inf and th.fpr == 1 and th.degenerate


def test_threshold_errors():
    with pytest.raises(ValueError):
        calibrate_threshold([], [1], 0.1)
    with pytest.raises(ValueError):
        calibrate_threshold([1], [], 0.1)
    with pytest.raises(ValueError):
        calibrate_threshold([1], [0], 1.5)


@given(
    st.lists(st.floats(-50, 50), min_size=1, max_size=30),
    st.lists(st.floats(-50, 50), min_size=1, max_size=30),
    st.sampled_from([0, 0.05, 0.1, 0.5, 1.0]),
)
@settings(max_examples=200, deadline=None)
def test_threshold_contract(pos, neg, target):
    th = calibrate_threshold(pos, neg, target)
    assert th.fpr <= target + 1e-12
    assert 0 <= th.fnr <= 1
    # no smaller candidate also meets the target
    smaller = [t for t in [-math.inf, *neg] if t < th.value]
    for t in smaller:
        assert sum(s > t + 1e-9 for s in neg) / len(neg) > target


def _thr(value):
    return Threshold(value, 0.0, 0.0, False, 1, 1, 0.0)


def test_classify_ranking_and_ties():
    A, B = Literal(0), Literal(1)
    m1 = RegularMatrix("C1", {A: 1.0})
    m2 = RegularMatrix("C2", {A: 1.0})
    m3 = RegularMatrix("C10", {A: 2.0, B: 1.0})
    ths = {"C1": _thr(0), "C2": _thr(0), "C10": _thr(0)}
    got = classify({A, -B}, [m3, m2, m1], ths)
    assert [a.class_id for a in got] == ["C1", "C2", "C10"]
    assert [a.score for a in got] == [1.0, 1.0, 1.0]
    assert classify({A, B}, [m1, m2, m3], ths)[0].class_id == "C10"
    assert classify({-A, -B}, [m1, m2, m3], ths) == []


def test_digits_copies_classified_as_own_class(digits_run):
    from spinfer.datasets import gen_digits
    from spinfer.recognize import calibrate_classes

    data, _, base, enum = digits_run
    mats = [regular_matrix(c, base) for c in enum.classes]
    ths = calibrate_classes(data.system, mats, {c.class_id: c.members for c in enum.classes}, 0.05)
    test = gen_digits(2, shuffle_seed=7)
    results = classify_system(test.system, mats, ths)
    summary = confusion(results, dict(zip(test.system.objects, test.labels)))
    assert summary["accuracy"] == 1.0 and summary["rejected"] == 0
    assert len(set(summary["majority"].values())) == 12


def test_confusion_needs_labels():
    from spinfer.recognize import ObjectResult

    with pytest.raises(KeyError):
        confusion([ObjectResult("x", {}, [])], {})


@given(st.data())
@settings(max_examples=100, deadline=None)
def test_flip_lowers_score_by_twice_weight(data):
    k = data.draw(st.integers(1, 5))
    weights = {Literal(i, data.draw(st.booleans())): data.draw(st.floats(0, 10)) for i in range(k)}
    m = RegularMatrix("C", weights)
    obj = {Literal(i, data.draw(st.booleans())) for i in range(k)}
    agree = [l for l in m.weights if l in obj]
    if not agree:
        return
    lit = data.draw(st.sampled_from(agree))
    flipped = (obj - {lit}) | {-lit}
    assert score(obj, m) - score(flipped, m) == pytest.approx(2 * m.weights[lit], abs=1e-9)
    assert score(obj, m) <= m.total + 1e-9
