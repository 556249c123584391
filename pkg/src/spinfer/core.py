"""Empirical systems, literals, rules and their probabilities.

Probabilities are kept exact: every object weight is scaled to an integer
over a common denominator, so a conjunction's probability is an integer
mass and conditional probabilities compare by cross-multiplication.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "EmpiricalSystem",
    "Literal",
    "Rule",
    "RuleStats",
    "UndefinedConditional",
    "load_system",
    "eta",
    "cond_prob",
    "rule_stats",
    "subrules",
    "is_true",
    "is_law",
    "is_probabilistic_law",
]

WEIGHT_TOL = 1e-9


class UndefinedConditional(ValueError):
    """Raised when a rule's premise has zero probability."""


@dataclass(frozen=True)
class Literal:
    """A predicate or its negation, ordered by (predicate, sign)."""

    predicate: int
    positive: bool = True

    def __neg__(self) -> "Literal":
        return Literal(self.predicate, not self.positive)

    def neg(self) -> "Literal":
        return -self

    @property
    def key(self) -> tuple[int, int]:
        return (self.predicate, 0 if self.positive else 1)

    def __lt__(self, other: "Literal") -> bool:
        return self.key < other.key

    def __le__(self, other: "Literal") -> bool:
        return self.key <= other.key

    def __gt__(self, other: "Literal") -> bool:
        return self.key > other.key

    def __ge__(self, other: "Literal") -> bool:
        return self.key >= other.key

    def render(self, names: Sequence[str] | None = None) -> str:
        name = names[self.predicate] if names is not None else f"P{self.predicate + 1}"
        return name if self.positive else f"~{name}"

    def __repr__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class Rule:
    """``premise => conclusion``; the conclusion's atom never occurs in the premise."""

    premise: frozenset[Literal]
    conclusion: Literal

    def __post_init__(self):
        premise = frozenset(self.premise)
        object.__setattr__(self, "premise", premise)
        atoms = [lit.predicate for lit in premise]
        if len(set(atoms)) != len(atoms):
            raise ValueError(f"premise literals must have distinct atoms: {sorted(premise)}")
        if self.conclusion.predicate in atoms:
            raise ValueError("conclusion atom occurs in premise")

    @classmethod
    def of(cls, premise: Iterable[Literal], conclusion: Literal) -> "Rule":
        return cls(frozenset(premise), conclusion)

    @property
    def sorted_premise(self) -> tuple[Literal, ...]:
        return tuple(sorted(self.premise))

    @property
    def key(self):
        return (self.conclusion.key, len(self.premise), tuple(l.key for l in self.sorted_premise))

    def __lt__(self, other: "Rule") -> bool:
        return self.key < other.key

    def render(self, names: Sequence[str] | None = None) -> str:
        lhs = " & ".join(l.render(names) for l in self.sorted_premise)
        return f"{lhs} => {self.conclusion.render(names)}".strip()

    def __repr__(self) -> str:
        return f"({self.render()})"


@dataclass(frozen=True)
class RuleStats:
    support_premise: Fraction
    support_joint: Fraction
    cond_prob: Fraction
    weight_v: float = 0.0


@dataclass(frozen=True, eq=False)
class EmpiricalSystem:
    """Objects x unary predicates with a positive probability weight per object."""

    objects: tuple[str, ...]
    predicates: tuple[str, ...]
    truth: np.ndarray
    mu: tuple[Fraction, ...]

    def __post_init__(self):
        truth = np.array(self.truth, dtype=bool)
        if truth.ndim != 2 or truth.shape != (len(self.objects), len(self.predicates)):
            raise ValueError(
                f"truth matrix shape {truth.shape} does not match "
                f"{len(self.objects)} objects x {len(self.predicates)} predicates"
            )
        truth.setflags(write=False)
        object.__setattr__(self, "truth", truth)
        if len(self.mu) != len(self.objects):
            raise ValueError("one weight per object required")
        if any(m <= 0 for m in self.mu):
            raise ValueError("object weights must be positive")
        if sum(self.mu) != 1:
            raise ValueError("object weights must sum to 1")

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def n_predicates(self) -> int:
        return len(self.predicates)

    def literals(self) -> list[Literal]:
        return [Literal(p, s) for p in range(self.n_predicates) for s in (True, False)]

    def literal_index(self, text: str) -> Literal:
        """Parse ``name`` or ``~name`` against this system's predicate names."""
        positive = not text.startswith("~")
        name = text if positive else text[1:]
        try:
            return Literal(self.predicates.index(name), positive)
        except ValueError:
            raise KeyError(f"unknown predicate {name!r}") from None

    # bitset machinery ---------------------------------------------------

    @cached_property
    def _int_weights(self) -> tuple[int, tuple[tuple[int, int], ...]]:
        denom = math.lcm(*(m.denominator for m in self.mu))
        ints = [int(m * denom) for m in self.mu]
        groups: dict[int, int] = {}
        for i, w in enumerate(ints):
            groups[w] = groups.get(w, 0) | (1 << i)
        return denom, tuple(sorted(groups.items()))

    @cached_property
    def literal_masks(self) -> dict[Literal, int]:
        masks = {}
        for p in range(self.n_predicates):
            col = self.truth[:, p]
            pos = 0
            for i in np.flatnonzero(col):
                pos |= 1 << int(i)
            masks[Literal(p, True)] = pos
            masks[Literal(p, False)] = self.full_mask & ~pos
        return masks

    @property
    def full_mask(self) -> int:
        return (1 << self.n_objects) - 1

    @property
    def total_mass(self) -> int:
        return self._int_weights[0]

    def mask(self, conj: Iterable[Literal]) -> int:
        m = self.full_mask
        masks = self.literal_masks
        for lit in conj:
            m &= masks[lit]
        return m

    def mass(self, mask: int) -> int:
        """Integer probability mass of an object set (denominator ``total_mass``)."""
        return sum(w * (mask & g).bit_count() for w, g in self._int_weights[1])

    def object_literals(self, index: int) -> frozenset[Literal]:
        """The complete signed description of one object."""
        row = self.truth[index]
        return frozenset(Literal(p, bool(row[p])) for p in range(self.n_predicates))

    def satisfies(self, index: int, conj: Iterable[Literal]) -> bool:
        row = self.truth[index]
        return all(bool(row[l.predicate]) == l.positive for l in conj)

    def __reduce__(self):
        return (EmpiricalSystem, (self.objects, self.predicates, np.array(self.truth), self.mu))


def load_system(
    matrix,
    weights: Sequence[float] | None = None,
    *,
    objects: Sequence[str] | None = None,
    predicates: Sequence[str] | None = None,
) -> EmpiricalSystem:
    """Build an immutable empirical system from a boolean table.

    Weights default to uniform; given weights must be positive and sum to
    one within ``1e-9`` (they are then renormalised exactly).
    """
    truth = np.asarray(matrix, dtype=bool)
    if truth.ndim != 2 or truth.shape[0] == 0 or truth.shape[1] == 0:
        raise ValueError("matrix must be a nonempty 2-D table")
    n, k = truth.shape
    if weights is None:
        mu = (Fraction(1, n),) * n
    else:
        if len(weights) != n:
            raise ValueError(f"expected {n} weights, got {len(weights)}")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be positive")
        if abs(sum(weights) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights not normalized: sum = {sum(weights)}")
        fr = [Fraction(w).limit_denominator(10**12) if isinstance(w, float) else Fraction(w) for w in weights]
        total = sum(fr)
        mu = tuple(f / total for f in fr)
    objects = tuple(objects) if objects is not None else tuple(f"a{i + 1}" for i in range(n))
    predicates = tuple(predicates) if predicates is not None else tuple(f"P{j + 1}" for j in range(k))
    if len(set(predicates)) != len(predicates):
        raise ValueError("predicate names must be unique")
    return EmpiricalSystem(objects, predicates, truth, mu)


def eta(sys: EmpiricalSystem, conj: Iterable[Literal]) -> Fraction:
    """Probability that an object satisfies every literal of ``conj``."""
    return Fraction(sys.mass(sys.mask(conj)), sys.total_mass)


def cond_prob(sys: EmpiricalSystem, rule: Rule) -> Fraction:
    prem = sys.mask(rule.premise)
    denom = sys.mass(prem)
    if denom == 0:
        raise UndefinedConditional(f"premise of {rule.render(sys.predicates)} has zero probability")
    return Fraction(sys.mass(prem & sys.literal_masks[rule.conclusion]), denom)


def rule_stats(sys: EmpiricalSystem, rule: Rule) -> RuleStats:
    prem = sys.mask(rule.premise)
    joint = prem & sys.literal_masks[rule.conclusion]
    sp = Fraction(sys.mass(prem), sys.total_mass)
    sj = Fraction(sys.mass(joint), sys.total_mass)
    if sp == 0:
        raise UndefinedConditional(f"premise of {rule.render(sys.predicates)} has zero probability")
    return RuleStats(sp, sj, sj / sp)


def subrules(rule: Rule) -> set[Rule]:
    """Every rule from which ``rule`` follows logically by premise shrinking.

    Same-conclusion rules over a proper sub-premise, and rules concluding the
    negation of one premise literal from a subset of the others.
    """
    premise = rule.sorted_premise
    out: set[Rule] = set()
    for size in range(len(premise)):
        for sub in combinations(premise, size):
            out.add(Rule(frozenset(sub), rule.conclusion))
    for lit in premise:
        rest = [l for l in premise if l != lit]
        for size in range(len(rest) + 1):
            for sub in combinations(rest, size):
                out.add(Rule(frozenset(sub), -lit))
    return out


def same_conclusion_subrules(rule: Rule) -> list[Rule]:
    premise = rule.sorted_premise
    return [
        Rule(frozenset(sub), rule.conclusion)
        for size in range(len(premise))
        for sub in combinations(premise, size)
    ]


def is_true(sys: EmpiricalSystem, rule: Rule) -> bool:
    """No object satisfies the premise together with the negated conclusion."""
    return sys.mask(rule.premise) & sys.literal_masks[-rule.conclusion] == 0


def is_law(sys: EmpiricalSystem, rule: Rule) -> bool:
    return is_true(sys, rule) and not any(is_true(sys, s) for s in subrules(rule))


def _mass_pair(sys: EmpiricalSystem, rule: Rule) -> tuple[int, int]:
    prem = sys.mask(rule.premise)
    return sys.mass(prem & sys.literal_masks[rule.conclusion]), sys.mass(prem)


def is_probabilistic_law(sys: EmpiricalSystem, rule: Rule) -> bool:
    """Positive premise support, positive conditional probability, and a
    conditional probability strictly above that of every same-conclusion
    sub-rule."""
    joint, prem = _mass_pair(sys, rule)
    if prem == 0 or joint == 0:
        return False
    for sub in same_conclusion_subrules(rule):
        sj, sp = _mass_pair(sys, sub)
        # sub-premise is a superset of objects, so sp > 0 here
        if joint * sp <= sj * prem:
            return False
    return True
