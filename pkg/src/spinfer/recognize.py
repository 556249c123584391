"""Regular matrices, pertinence scores and threshold calibration for new objects."""
from __future__ import annotations

import csv
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import EmpiricalSystem, Literal
from .fixpoint import ClassModel, RuleBase

__all__ = [
    "RegularMatrix",
    "Threshold",
    "Assignment",
    "regular_matrix",
    "score",
    "calibrate_threshold",
    "calibrate_classes",
    "classify",
    "classify_system",
    "matrix_residual",
    "confusion",
    "write_report",
]

# Scores are float sums of logarithms; a score must clear its threshold by this much.
SCORE_TOL = 1e-9


@dataclass(frozen=True)
class RegularMatrix:
    """Per-literal prediction weight of one class: the total v of its verified
    rules concluding that literal."""

    class_id: str
    weights: Mapping[Literal, float]

    @property
    def literals(self) -> tuple[Literal, ...]:
        return tuple(sorted(self.weights))

    @property
    def total(self) -> float:
        return math.fsum(self.weights.values())


def regular_matrix(cls: ClassModel, rules: RuleBase) -> RegularMatrix:
    w = {lit: 0.0 for lit in cls.fixpoint}
    for r in cls.sat_rules:
        w[r.conclusion] += rules.weight_of(r)
    return RegularMatrix(cls.class_id, w)


def score(obj: Iterable[Literal], matrix: RegularMatrix) -> float:
    """Weight of class literals the object satisfies minus weight of those it refutes."""
    obj = frozenset(obj)
    plus = math.fsum(w for l, w in matrix.weights.items() if l in obj)
    minus = math.fsum(w for l, w in matrix.weights.items() if -l in obj)
    return plus - minus


def matrix_residual(cls: ClassModel, rules: RuleBase) -> float:
    """``Kr(L)`` minus the regular-matrix total; equals minus the v-mass of refuted rules."""
    return rules.kr(cls.fixpoint) - regular_matrix(cls, rules).total


def _fires(s: float, t: float) -> bool:
    return s > t + SCORE_TOL


@dataclass(frozen=True)
class Threshold:
    value: float
    fpr: float
    fnr: float
    degenerate: bool
    n_pos: int
    n_neg: int
    target_fpr: float

    def to_dict(self) -> dict:
        return {
            "value": None if math.isinf(self.value) else self.value,
            "fpr": self.fpr,
            "fnr": self.fnr,
            "degenerate": self.degenerate,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "target_fpr": self.target_fpr,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Threshold":
        value = -math.inf if d["value"] is None else float(d["value"])
        return cls(value, d["fpr"], d["fnr"], d["degenerate"], d["n_pos"], d["n_neg"], d["target_fpr"])


def calibrate_threshold(pos: Sequence[float], neg: Sequence[float], target_fpr: float) -> Threshold:
    """Smallest threshold whose false-positive rate is at most ``target_fpr``.

    An object is accepted when its score exceeds the threshold.  Candidate
    thresholds are minus infinity and the negative scores; the flag
    ``degenerate`` marks thresholds that accept every negative or reject
    every positive.
    """
    if not pos or not neg:
        raise ValueError("calibration needs nonempty positive and negative samples")
    if not 0 <= target_fpr <= 1:
        raise ValueError("target_fpr must lie in [0, 1]")
    n_neg = len(neg)
    chosen = None
    for t in [-math.inf, *sorted(set(neg))]:
        if sum(_fires(s, t) for s in neg) / n_neg <= target_fpr:
            chosen = t
            break
    assert chosen is not None  # the largest negative score always yields FPR 0
    fpr = sum(_fires(s, chosen) for s in neg) / n_neg
    fnr = sum(not _fires(s, chosen) for s in pos) / len(pos)
    return Threshold(chosen, fpr, fnr, fpr == 1 or fnr == 1, len(pos), n_neg, target_fpr)


def calibrate_classes(
    sys: EmpiricalSystem, matrices: Sequence[RegularMatrix], members: Mapping[str, Iterable[str]], target_fpr: float
) -> dict[str, Threshold]:
    """Per-class thresholds using each class's member objects as positives and
    every other object of ``sys`` as negatives.  Classes whose members cover
    the whole sample (or none of it) get an accept-all threshold."""
    descs = [sys.object_literals(i) for i in range(sys.n_objects)]
    out = {}
    for m in matrices:
        mem = set(members[m.class_id])
        scores = [score(d, m) for d in descs]
        pos = [s for o, s in zip(sys.objects, scores) if o in mem]
        neg = [s for o, s in zip(sys.objects, scores) if o not in mem]
        if pos and neg:
            out[m.class_id] = calibrate_threshold(pos, neg, target_fpr)
        else:
            out[m.class_id] = Threshold(-math.inf, float(bool(neg)), 0.0, True, len(pos), len(neg), target_fpr)
    return out


@dataclass(frozen=True)
class Assignment:
    class_id: str
    score: float


def classify(
    obj: Iterable[Literal], matrices: Sequence[RegularMatrix], thresholds: Mapping[str, Threshold]
) -> list[Assignment]:
    """Classes whose score clears their threshold, best first; equal scores
    are ordered by class id (numeric parts compared as numbers)."""
    obj = frozenset(obj)
    hits = []
    for m in matrices:
        s = score(obj, m)
        if _fires(s, thresholds[m.class_id].value):
            hits.append(Assignment(m.class_id, s))
    return sorted(hits, key=lambda a: (-a.score, _id_key(a.class_id)))


def _id_key(class_id: str):
    return [(0, int(t), "") if t.isdigit() else (1, 0, t) for t in re.split(r"(\d+)", class_id)]


@dataclass
class ObjectResult:
    object_id: str
    scores: dict[str, float]
    assigned: list[Assignment]

    @property
    def top(self) -> str | None:
        return self.assigned[0].class_id if self.assigned else None


def classify_system(
    sys: EmpiricalSystem, matrices: Sequence[RegularMatrix], thresholds: Mapping[str, Threshold]
) -> list[ObjectResult]:
    out = []
    for i, obj in enumerate(sys.objects):
        desc = sys.object_literals(i)
        out.append(
            ObjectResult(obj, {m.class_id: score(desc, m) for m in matrices}, classify(desc, matrices, thresholds))
        )
    return out


def confusion(results: Sequence[ObjectResult], labels: Mapping[str, str]) -> dict:
    """Label counts per top-ranked class; accuracy counts an object correct
    when its label is the majority label of its assigned class (rejects are
    wrong)."""
    missing = [r.object_id for r in results if r.object_id not in labels]
    if missing:
        raise KeyError(f"no label for objects {missing[:5]}")
    table: dict[str, Counter] = {}
    for r in results:
        table.setdefault(r.top or "reject", Counter())[labels[r.object_id]] += 1
    correct = sum(c.most_common(1)[0][1] for k, c in table.items() if k != "reject")
    return {
        "n": len(results),
        "rejected": sum(table.get("reject", Counter()).values()),
        "accuracy": correct / len(results) if results else 0.0,
        "table": {k: dict(sorted(c.items())) for k, c in table.items()},
        "majority": {k: c.most_common(1)[0][0] for k, c in table.items() if k != "reject"},
    }


def write_report(results: Sequence[ObjectResult], class_ids: Sequence[str], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *(f"score_{c}" for c in class_ids), "assigned", "top"])
        for r in results:
            w.writerow(
                [r.object_id, *(f"{r.scores[c]:.6f}" for c in class_ids),
                 ";".join(a.class_id for a in r.assigned), r.top or ""]
            )
