"""Semantic probabilistic inference: probabilistic laws, strongest laws and
maximally specific rules per target literal."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

from scipy.stats import fisher_exact

from .core import EmpiricalSystem, Literal, Rule, RuleStats

log = logging.getLogger(__name__)

STRATEGIES = ("auto", "exhaustive", "stepwise")


@dataclass(frozen=True)
class MinerConfig:
    """Search parameters.

    ``strategy="exhaustive"`` visits every premise with positive joint support
    up to the depth cap and so finds exactly the probabilistic laws the
    definitions admit.  ``"stepwise"`` grows premises one literal at a time
    and only through probabilistic laws whose conditional probability strictly
    rises (Fisher-gated when ``alpha`` is set), keeping one premise per
    covered object set (the first met in breadth-first canonical order); it
    scales to wide data.
    ``"auto"`` picks exhaustive without ``alpha`` and stepwise with it.
    """

    max_premise_len: int = 6
    alpha: float | None = None
    targets: tuple[Literal, ...] | None = None
    strategy: str = "auto"

    def __post_init__(self):
        if self.max_premise_len < 0:
            raise ValueError("max_premise_len must be >= 0")
        if self.alpha is not None and not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.strategy == "exhaustive" and self.alpha is not None:
            raise ValueError("Fisher gating is defined on single-literal steps; use strategy='stepwise'")
        if self.targets is not None:
            object.__setattr__(self, "targets", tuple(sorted(set(self.targets))))

    @property
    def resolved_strategy(self) -> str:
        if self.strategy != "auto":
            return self.strategy
        return "exhaustive" if self.alpha is None else "stepwise"

    def to_dict(self, names: Sequence[str] | None = None) -> dict:
        return {
            "max_premise_len": self.max_premise_len,
            "alpha": self.alpha,
            "targets": None if self.targets is None else [t.render(names) for t in self.targets],
            "strategy": self.resolved_strategy,
        }


@dataclass(eq=False)
class InferenceNode:
    rule: Rule
    stats: RuleStats
    parent: "InferenceNode | None" = None
    children: list["InferenceNode"] = field(default_factory=list)
    p_value: float | None = None

    @property
    def path(self) -> tuple[Rule, ...]:
        chain = []
        node: InferenceNode | None = self
        while node is not None:
            chain.append(node.rule)
            node = node.parent
        return tuple(reversed(chain))

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class MinedRule:
    rule: Rule
    eta: Fraction
    support: Fraction
    p_value: float | None
    path: tuple[Rule, ...]

    @classmethod
    def from_node(cls, node: InferenceNode) -> "MinedRule":
        return cls(node.rule, node.stats.cond_prob, node.stats.support_premise, node.p_value, node.path)


@dataclass
class TargetRules:
    target: Literal
    lp: list[MinedRule]
    spl: list[MinedRule]
    msr: list[MinedRule]


@dataclass
class RuleSet:
    predicates: tuple[str, ...]
    n_objects: int
    config: MinerConfig
    per_target: dict[Literal, TargetRules]

    def _collect(self, kind: str) -> list[MinedRule]:
        return [m for t in sorted(self.per_target) for m in getattr(self.per_target[t], kind)]

    @property
    def lp(self) -> list[MinedRule]:
        return self._collect("lp")

    @property
    def spl(self) -> list[MinedRule]:
        return self._collect("spl")

    @property
    def msr(self) -> list[MinedRule]:
        return self._collect("msr")

    def rules(self, kind: str = "msr") -> list[MinedRule]:
        if kind not in ("lp", "spl", "msr"):
            raise ValueError(f"unknown rule kind {kind!r}")
        return self._collect(kind)

    def rule_sets(self, kind: str) -> dict[Literal, set[Rule]]:
        return {t: {m.rule for m in getattr(tr, kind)} for t, tr in self.per_target.items()}


# -- Fisher gate -------------------------------------------------------------


@lru_cache(maxsize=1 << 16)
def _fisher_greater(a: int, b: int, c: int, d: int) -> float:
    return float(fisher_exact([[a, b], [c, d]], alternative="greater")[1])


def fisher_gate(counts, alpha: float) -> tuple[bool, float]:
    """One-sided Fisher exact test for positive association in a 2x2 table.

    Rows: added literal true / false; columns: conclusion true / false.
    Passes iff ``p <= alpha``.  An all-zero table never passes.
    """
    (a, b), (c, d) = counts
    if min(a, b, c, d) < 0:
        raise ValueError("counts must be nonnegative")
    if a + b + c + d == 0:
        return False, 1.0
    p = _fisher_greater(int(a), int(b), int(c), int(d))
    return p <= alpha, p


# -- search ------------------------------------------------------------------


class _TargetSearch:
    """Mass bookkeeping for one target literal; premises keyed by frozenset."""

    def __init__(self, sys: EmpiricalSystem, target: Literal):
        self.sys = sys
        self.target = target
        self.tmask = sys.literal_masks[target]
        self.candidates = [l for l in sorted(sys.literals()) if l.predicate != target.predicate]
        self._cache: dict[frozenset, tuple[int, int, int]] = {}

    def masses(self, premise: frozenset) -> tuple[int, int, int]:
        """(premise object mask, joint mass, premise mass)."""
        hit = self._cache.get(premise)
        if hit is None:
            pm = self.sys.mask(premise)
            hit = (pm, self.sys.mass(pm & self.tmask), self.sys.mass(pm))
            self._cache[premise] = hit
        return hit

    def is_lp(self, premise: frozenset) -> bool:
        _, joint, prem = self.masses(premise)
        if prem == 0 or joint == 0:
            return False
        lits = sorted(premise)
        for size in range(len(lits)):
            for sub in combinations(lits, size):
                _, sj, sp = self.masses(frozenset(sub))
                if joint * sp <= sj * prem:
                    return False
        return True

    def stats(self, premise: frozenset) -> RuleStats:
        _, joint, prem = self.masses(premise)
        total = self.sys.total_mass
        return RuleStats(Fraction(prem, total), Fraction(joint, total), Fraction(joint, prem))

    def edge_table(self, parent: frozenset, added: Iterable[Literal]) -> tuple[tuple[int, int], tuple[int, int]]:
        pm = self.masses(parent)[0]
        am = self.sys.mask(added)
        t, nt = self.tmask, self.sys.full_mask & ~self.tmask
        row_in, row_out = pm & am, pm & ~am
        return (
            ((row_in & t).bit_count(), (row_in & nt).bit_count()),
            ((row_out & t).bit_count(), (row_out & nt).bit_count()),
        )

    def node(self, premise: frozenset, parent: InferenceNode | None, p_value=None) -> InferenceNode:
        n = InferenceNode(Rule(premise, self.target), self.stats(premise), parent, p_value=p_value)
        if parent is not None:
            parent.children.append(n)
        return n


def _exhaustive_lp(search: _TargetSearch, depth: int) -> list[frozenset]:
    """Every probabilistic-law premise up to ``depth`` literals.

    Prunes are sound: zero joint support propagates to supersets; a
    conditional probability of 1 cannot be strictly exceeded; and a literal
    implied by the current premise leaves every superset's conditional
    probability equal to that of a sub-rule.
    """
    sys = search.sys
    cands = search.candidates
    masks = sys.literal_masks
    found: list[frozenset] = []

    def dfs(premise: frozenset, start: int, atoms: frozenset):
        pm, joint, prem = search.masses(premise)
        if joint == 0:
            return
        if search.is_lp(premise):
            found.append(premise)
        if joint == prem or len(premise) >= depth:
            return
        for i in range(start, len(cands)):
            lit = cands[i]
            if lit.predicate in atoms:
                continue
            if pm & ~masks[lit] == 0:
                continue
            dfs(premise | {lit}, i + 1, atoms | {lit.predicate})

    dfs(frozenset(), 0, frozenset())
    return found


def _assemble_tree(search: _TargetSearch, premises: list[frozenset]) -> InferenceNode:
    """Link probabilistic laws into an inference tree.

    Each law hangs under its largest proper same-conclusion sub-law (which
    always has strictly smaller conditional probability).
    """
    premises = sorted(premises, key=lambda p: (len(p), sorted(l.key for l in p)))
    found = set(premises)
    nodes: dict[frozenset, InferenceNode] = {}
    for prem in premises:
        parent = None
        lits = sorted(prem)
        for size in range(len(lits) - 1, -1, -1):
            for sub in combinations(lits, size):
                fs = frozenset(sub)
                if fs in found:
                    parent = nodes[fs]
                    break
            if parent is not None:
                break
        nodes[prem] = search.node(prem, parent)
    return nodes[frozenset()]


def _stepwise_tree(search: _TargetSearch, depth: int, alpha: float | None) -> InferenceNode:
    sys = search.sys
    masks = sys.literal_masks
    root = search.node(frozenset(), None)
    accepted: dict[frozenset, InferenceNode] = {frozenset(): root}
    extents = {search.masses(frozenset())[0]}
    level = [root]
    for _ in range(depth):
        nxt: list[InferenceNode] = []
        for node in level:
            premise = node.rule.premise
            pm, joint, prem = search.masses(premise)
            if joint == prem:
                continue
            atoms = {l.predicate for l in premise}
            for lit in search.candidates:
                if lit.predicate in atoms:
                    continue
                child = premise | {lit}
                if child in accepted or pm & ~masks[lit] == 0:
                    continue
                cm, cj, cp = search.masses(child)
                if cm in extents:
                    continue
                if cj == 0 or cj * prem <= joint * cp:
                    continue
                if not search.is_lp(child):
                    continue
                p = None
                if alpha is not None:
                    ok, p = fisher_gate(search.edge_table(premise, [lit]), alpha)
                    if not ok:
                        continue
                n = search.node(child, node, p)
                accepted[child] = n
                extents.add(cm)
                nxt.append(n)
        level = nxt
    return root


def sp_inference_tree(sys: EmpiricalSystem, target: Literal, cfg: MinerConfig | None = None) -> InferenceNode | None:
    """Inference tree rooted at ``(=> target)``; None when the target never holds."""
    cfg = cfg or MinerConfig()
    search = _TargetSearch(sys, target)
    if search.masses(frozenset())[1] == 0:
        return None
    if cfg.resolved_strategy == "exhaustive":
        return _assemble_tree(search, _exhaustive_lp(search, cfg.max_premise_len))
    return _stepwise_tree(search, cfg.max_premise_len, cfg.alpha)


def _maximal(nodes: list[InferenceNode]) -> list[InferenceNode]:
    """Nodes whose premise is not strictly contained in another node's premise."""
    premises = {n.rule.premise for n in nodes}
    dominated: set[frozenset] = set()
    for prem in premises:
        lits = sorted(prem)
        for size in range(len(lits)):
            for sub in combinations(lits, size):
                fs = frozenset(sub)
                if fs in premises:
                    dominated.add(fs)
    return [n for n in nodes if n.rule.premise not in dominated]


def _classify_tree(root: InferenceNode | None, target: Literal) -> TargetRules:
    if root is None:
        return TargetRules(target, [], [], [])
    nodes = sorted(root.walk(), key=lambda n: n.rule)
    spl = _maximal(nodes)
    best = max(n.stats.cond_prob for n in spl)
    msr = [n for n in spl if n.stats.cond_prob == best]
    conv = lambda ns: [MinedRule.from_node(n) for n in ns]
    return TargetRules(target, conv(nodes), conv(spl), conv(msr))


def mine_target(sys: EmpiricalSystem, target: Literal, cfg: MinerConfig | None = None) -> TargetRules:
    return _classify_tree(sp_inference_tree(sys, target, cfg), target)


def mine_spl(sys: EmpiricalSystem, target: Literal, cfg: MinerConfig | None = None) -> set[Rule]:
    """Strongest probabilistic laws for ``target`` within the depth cap."""
    return {m.rule for m in mine_target(sys, target, cfg).spl}


def mine_msr(sys: EmpiricalSystem, target: Literal, cfg: MinerConfig | None = None) -> set[Rule]:
    """Strongest laws of maximal conditional probability; ties all kept."""
    return {m.rule for m in mine_target(sys, target, cfg).msr}


def _mine_one(args):
    sys, target, cfg = args
    return mine_target(sys, target, cfg)


def mine_all(sys: EmpiricalSystem, cfg: MinerConfig | None = None, workers: int = 1) -> RuleSet:
    """Mine every target literal.  Output is independent of ``workers``."""
    cfg = cfg or MinerConfig()
    targets = list(cfg.targets) if cfg.targets is not None else sorted(sys.literals())
    jobs = [(sys, t, cfg) for t in targets]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_mine_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_mine_one(j) for j in jobs]
    per_target = {r.target: r for r in results}
    log.info(
        "mined %d targets: %d LP, %d SPL, %d MSR",
        len(targets),
        sum(len(r.lp) for r in results),
        sum(len(r.spl) for r in results),
        sum(len(r.msr) for r in results),
    )
    return RuleSet(tuple(sys.predicates), sys.n_objects, cfg, per_target)
