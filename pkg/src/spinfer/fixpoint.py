"""Forward closure of literal sets and Kr-maximising fixed points ("natural" classes)."""
from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import EmpiricalSystem, Literal, Rule, eta
from .miner import MinedRule

__all__ = [
    "RuleBase",
    "LiteralState",
    "literal_state",
    "ClassModel",
    "ClassEnumeration",
    "pr_step",
    "pr_closure",
    "is_compatible",
    "is_consistent",
    "v_weight",
    "sat",
    "fal",
    "kr",
    "prphi_step",
    "prphi_fixpoint",
    "enumerate_classes",
    "generating_set",
]

# Kr deltas are float sums of logarithms; anything below this is treated as zero.
DELTA_TOL = 1e-10


def _rule(r) -> Rule:
    return r.rule if isinstance(r, MinedRule) else r


def _fires(rule: Rule, L: frozenset) -> bool:
    return rule.premise <= L


def pr_step(L: Iterable[Literal], rules: Iterable) -> frozenset[Literal]:
    """One round of forward chaining: add the conclusion of every rule whose premise lies in ``L``."""
    L = frozenset(L)
    return L | {r.conclusion for r in map(_rule, rules) if _fires(r, L)}


def pr_closure(L: Iterable[Literal], rules: Iterable) -> frozenset[Literal]:
    rules = [_rule(r) for r in rules]
    current = frozenset(L)
    while True:
        nxt = pr_step(current, rules)
        if nxt == current:
            return current
        current = nxt


def is_consistent(L: Iterable[Literal]) -> bool:
    L = set(L)
    return not any(-l in L for l in L)


def is_compatible(sys: EmpiricalSystem, L: Iterable[Literal]) -> bool:
    return eta(sys, L) > 0


def v_weight(eta_value, eps: float) -> float:
    """``-ln(1 - eta)`` with ``1 - eta`` floored at ``eps`` so laws stay finite."""
    eta_value = float(eta_value)
    if not 0.0 <= eta_value <= 1.0:
        raise ValueError(f"probability out of range: {eta_value}")
    return -math.log(max(1.0 - eta_value, eps))


def default_eps(n_objects: int) -> float:
    return 1.0 / (2 * n_objects)


class RuleBase:
    """Rules with their v-weights, indexed by the literals each rule touches."""

    def __init__(self, rules: Sequence[Rule], weights: Sequence[float]):
        if len(rules) != len(weights):
            raise ValueError("one weight per rule")
        order = sorted(range(len(rules)), key=lambda i: _rule(rules[i]))
        self.rules: tuple[Rule, ...] = tuple(_rule(rules[i]) for i in order)
        self.weights: tuple[float, ...] = tuple(float(weights[i]) for i in order)
        touch: dict[Literal, list[int]] = defaultdict(list)
        for i, r in enumerate(self.rules):
            for lit in {*r.premise, r.conclusion, -r.conclusion}:
                touch[lit].append(i)
        self._touch = {k: tuple(v) for k, v in touch.items()}

    @classmethod
    def from_mined(cls, mined: Iterable[MinedRule], n_objects: int, eps: float | None = None) -> "RuleBase":
        mined = list(mined)
        eps = default_eps(n_objects) if eps is None else eps
        return cls([m.rule for m in mined], [v_weight(m.eta, eps) for m in mined])

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def weight_of(self, rule: Rule) -> float:
        return self.weights[self.rules.index(rule)]

    def subset(self, keep: Iterable[Rule]) -> "RuleBase":
        keep = set(keep)
        pairs = [(r, w) for r, w in zip(self.rules, self.weights) if r in keep]
        return RuleBase([r for r, _ in pairs], [w for _, w in pairs])

    def _contrib(self, i: int, L: frozenset) -> float:
        r = self.rules[i]
        if not r.premise <= L:
            return 0.0
        return self.weights[i] * ((r.conclusion in L) - (-r.conclusion in L))

    def kr(self, L: Iterable[Literal]) -> float:
        L = frozenset(L)
        return math.fsum(self._contrib(i, L) for i in range(len(self.rules)))

    def delta(self, L: frozenset, changed: Literal, new: frozenset) -> float:
        """Kr(new) - Kr(L) where ``new`` differs from ``L`` only in ``changed``."""
        return math.fsum(self._contrib(i, new) - self._contrib(i, L) for i in self._touch.get(changed, ()))

    def fired(self, L: frozenset) -> list[int]:
        return [i for i, r in enumerate(self.rules) if r.premise <= L]


def _base(rules) -> RuleBase:
    if isinstance(rules, RuleBase):
        return rules
    pairs = list(rules)
    return RuleBase([p[0] for p in pairs], [p[1] for p in pairs])


def sat(L: Iterable[Literal], rules) -> list[Rule]:
    """Rules whose premise lies in ``L`` and whose conclusion is in ``L``."""
    L = frozenset(L)
    return [r for r in map(_rule, rules) if r.premise <= L and r.conclusion in L]


def fal(L: Iterable[Literal], rules) -> list[Rule]:
    """Rules whose premise lies in ``L`` and whose conclusion is refuted by ``L``."""
    L = frozenset(L)
    return [r for r in map(_rule, rules) if r.premise <= L and -r.conclusion in L]


def kr(L: Iterable[Literal], rules) -> float:
    """Total v over verified rules minus total v over refuted rules.

    ``rules`` is a :class:`RuleBase` or an iterable of ``(rule, v)`` pairs.
    """
    return _base(rules).kr(L)


@dataclass(frozen=True)
class LiteralState:
    literals: frozenset[Literal]
    kr: float
    compatible: bool


def literal_state(sys: EmpiricalSystem, L: Iterable[Literal], rules) -> LiteralState:
    L = frozenset(L)
    return LiteralState(L, kr(L, rules), is_compatible(sys, L))


@dataclass(frozen=True)
class StepResult:
    literals: frozenset[Literal]
    op: str  # "add" | "delete" | "fixed"
    literal: Literal | None
    delta: float


def prphi_step(L: Iterable[Literal], rules) -> StepResult:
    """Add or delete the single literal that raises Kr the most.

    Addition candidates are conclusions of rules firing on ``L`` that are
    not yet in ``L`` and whose negation is not in ``L`` either (a conflict is
    resolved by deleting first); deletion candidates are members of ``L``
    whose negation such a rule concludes.  A change is applied only if it raises Kr by more
    than ``DELTA_TOL``; on an exact tie addition wins, and within a kind the
    smallest literal wins.
    """
    base = _base(rules)
    L = frozenset(L)
    concluded = {base.rules[i].conclusion for i in base.fired(L)}

    def best(cands, make):
        top_lit, top = None, -math.inf
        for lit in sorted(cands):
            d = base.delta(L, lit, make(lit))
            if d > top + DELTA_TOL:
                top_lit, top = lit, d
        return top_lit, top

    add_lit, d_add = best({c for c in concluded - L if -c not in L}, lambda x: L | {x})
    del_lit, d_del = best({l for l in L if -l in concluded}, lambda x: L - {x})
    if add_lit is not None and d_add > DELTA_TOL and d_add >= d_del - DELTA_TOL:
        return StepResult(L | {add_lit}, "add", add_lit, d_add)
    if del_lit is not None and d_del > DELTA_TOL:
        return StepResult(L - {del_lit}, "delete", del_lit, d_del)
    return StepResult(L, "fixed", None, 0.0)


@dataclass
class ClassModel:
    fixpoint: frozenset[Literal]
    sat_rules: tuple[Rule, ...]
    kr: float
    members: tuple[str, ...]
    seeds: tuple[str, ...] = ()
    kr_trace: tuple[float, ...] = ()
    generating: tuple[Literal, ...] = ()
    class_id: str = ""

    @property
    def literals(self) -> tuple[Literal, ...]:
        return tuple(sorted(self.fixpoint))


def generating_set(L: frozenset[Literal], rules: Sequence[Rule]) -> tuple[Literal, ...]:
    """A subset of ``L`` whose closure under ``rules`` regenerates ``L`` (greedy, inclusion-minimal)."""
    keep = sorted(L)
    for lit in sorted(L, reverse=True):
        trial = [l for l in keep if l != lit]
        if pr_closure(trial, rules) == L:
            keep = trial
    return tuple(keep)


def _fixpoint_trace(L0: frozenset, base: RuleBase, max_steps: int) -> tuple[frozenset, list[float]]:
    L = L0
    trace = [base.kr(L)]
    for _ in range(max_steps):
        res = prphi_step(L, base)
        if res.op == "fixed":
            return L, trace
        L = res.literals
        trace.append(base.kr(L))
    raise RuntimeError(f"no fixed point within {max_steps} steps")


def prphi_fixpoint(
    sys: EmpiricalSystem,
    L0: Iterable[Literal],
    rules,
    max_steps: int = 100_000,
    *,
    with_generating: bool = True,
) -> ClassModel:
    """Iterate :func:`prphi_step` from a compatible seed to its fixed point."""
    base = _base(rules)
    L0 = frozenset(L0)
    if not is_compatible(sys, L0):
        raise ValueError("seed literal set is not compatible with the data")
    L, trace = _fixpoint_trace(L0, base, max_steps)
    return _model(sys, L, base, trace, with_generating)


def _model(sys, L, base, trace, with_generating=True, seeds=()) -> ClassModel:
    sats = tuple(sat(L, base))
    mask = sys.mask(L) if is_consistent(L) else 0
    members = tuple(sys.objects[i] for i in range(sys.n_objects) if mask >> i & 1)
    gen = generating_set(L, sats) if with_generating else ()
    return ClassModel(L, sats, base.kr(L), members, tuple(seeds), tuple(trace), gen)


@dataclass
class ClassEnumeration:
    classes: list[ClassModel]
    kept_rules: list[Rule]
    pruned_rules: list[Rule]

    def fixpoints(self) -> list[frozenset[Literal]]:
        return [c.fixpoint for c in self.classes]


def _run_seed(args):
    L0, base, max_steps = args
    return _fixpoint_trace(L0, base, max_steps)


def enumerate_classes(sys: EmpiricalSystem, rules, workers: int = 1, max_steps: int = 100_000) -> ClassEnumeration:
    """Fixed points reached from every object's full literal set.

    Identical fixed points are merged; rules verified in no class are
    reported as pruned.
    """
    base = _base(rules)
    seeds: dict[frozenset, list[int]] = {}
    for i in range(sys.n_objects):
        seeds.setdefault(sys.object_literals(i), []).append(i)
    distinct = list(seeds)  # insertion order = first object index
    jobs = [(s, base, max_steps) for s in distinct]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_seed, jobs))
    else:
        results = [_run_seed(j) for j in jobs]

    by_fix: dict[frozenset, dict] = {}
    for seed, (L, trace) in zip(distinct, results):
        entry = by_fix.setdefault(L, {"seeds": [], "trace": trace})
        entry["seeds"].extend(seeds[seed])
    classes = []
    for n, (L, entry) in enumerate(sorted(by_fix.items(), key=lambda kv: min(kv[1]["seeds"])), 1):
        names = [sys.objects[i] for i in sorted(entry["seeds"])]
        model = _model(sys, L, base, entry["trace"], seeds=names)
        model.class_id = f"C{n}"
        classes.append(model)
    used = {r for c in classes for r in c.sat_rules}
    kept = [r for r in base.rules if r in used]
    pruned = [r for r in base.rules if r not in used]
    return ClassEnumeration(classes, kept, pruned)
