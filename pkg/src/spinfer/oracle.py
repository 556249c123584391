"""Brute-force reference implementations and property checkers for small systems.

Nothing here reuses the engine's evaluation code: probabilities are summed
row by row as :class:`~fractions.Fraction` objects and rules are enumerated
directly from their definitions.  Only the data types (``Literal``,
``Rule``, ``EmpiricalSystem``) are shared.
"""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Iterable, Sequence

import numpy as np

from .core import EmpiricalSystem, Literal, Rule, load_system

__all__ = [
    "OracleRules",
    "Violation",
    "CheckReport",
    "VerifyConfig",
    "SuiteReport",
    "brute_force_rules",
    "check_consistency",
    "check_rms",
    "check_complement_gain",
    "check_law_beneath_truth",
    "check_subrule_truth",
    "check_lp_beneath_rule",
    "check_exclusion_split",
    "check_chain",
    "compare_with_miner",
    "random_system",
    "run_suite",
]

MAX_PREDICATES = 6
MAX_PREMISE = 4
RMS_MAX_PREDICATES = 5
RMS_TOL = 1e-9


# -- direct evaluation -------------------------------------------------------


def _holds(row, lit: Literal) -> bool:
    return bool(row[lit.predicate]) == lit.positive


def _prob(sys: EmpiricalSystem, conj: Iterable[Literal]) -> Fraction:
    conj = tuple(conj)
    total = Fraction(0)
    for w, row in zip(sys.mu, sys.truth):
        if all(_holds(row, l) for l in conj):
            total += w
    return total


def _cond(sys: EmpiricalSystem, premise: Iterable[Literal], concl: Literal) -> Fraction | None:
    premise = tuple(premise)
    den = _prob(sys, premise)
    if den == 0:
        return None
    return _prob(sys, premise + (concl,)) / den


def _true(sys: EmpiricalSystem, premise: Iterable[Literal], concl: Literal) -> bool:
    premise = tuple(premise)
    return not any(all(_holds(r, l) for l in premise) and not _holds(r, concl) for r in sys.truth)


def _all_subrules(premise: tuple[Literal, ...], concl: Literal) -> list[tuple[tuple[Literal, ...], Literal]]:
    out = []
    for k in range(len(premise)):
        out.extend((sub, concl) for sub in combinations(premise, k))
    for i, a in enumerate(premise):
        rest = premise[:i] + premise[i + 1 :]
        for k in range(len(rest) + 1):
            out.extend((sub, -a) for sub in combinations(rest, k))
    return out


def _is_law(sys, premise, concl) -> bool:
    if not _true(sys, premise, concl):
        return False
    return not any(_true(sys, p, c) for p, c in _all_subrules(premise, concl))


def _is_lp(sys, premise, concl) -> bool:
    c = _cond(sys, premise, concl)
    if c is None or c == 0:
        return False
    for k in range(len(premise)):
        for sub in combinations(premise, k):
            s = _cond(sys, sub, concl)
            if s is not None and s >= c:
                return False
    return True


def _premises(atoms: Sequence[int], max_len: int):
    for k in range(max_len + 1):
        for chosen in combinations(atoms, k):
            for signs in product((True, False), repeat=k):
                yield tuple(Literal(a, s) for a, s in zip(chosen, signs))


# -- brute force rule classes ------------------------------------------------


@dataclass
class OracleRules:
    """Per-target rule classes found by exhaustive enumeration."""

    laws: dict[Literal, set[Rule]]
    lp: dict[Literal, set[Rule]]
    spl: dict[Literal, set[Rule]]
    msr: dict[Literal, set[Rule]]
    cond: dict[Rule, Fraction]

    def kind(self, name: str) -> dict[Literal, set[Rule]]:
        return getattr(self, name)

    def all(self, name: str) -> set[Rule]:
        return set().union(*getattr(self, name).values()) if getattr(self, name) else set()


def brute_force_rules(sys: EmpiricalSystem, max_premise: int = MAX_PREMISE) -> OracleRules:
    """Classify every rule with at most ``max_premise`` premise literals."""
    k = sys.n_predicates
    if k > MAX_PREDICATES or max_premise > MAX_PREMISE:
        raise ValueError(
            f"oracle guard: at most {MAX_PREDICATES} predicates and premise length {MAX_PREMISE} "
            f"(got {k} and {max_premise})"
        )
    laws, lp, spl, msr, cond = {}, {}, {}, {}, {}
    for g in range(k):
        for sign in (True, False):
            target = Literal(g, sign)
            others = [a for a in range(k) if a != g]
            laws[target], found = set(), []
            for prem in _premises(others, max_premise):
                if _is_law(sys, prem, target):
                    laws[target].add(Rule(frozenset(prem), target))
                if _is_lp(sys, prem, target):
                    r = Rule(frozenset(prem), target)
                    found.append(r)
                    cond[r] = _cond(sys, prem, target)
            lp[target] = set(found)
            maximal = {r for r in found if not any(r.premise < o.premise for o in found)}
            spl[target] = maximal
            best = max((cond[r] for r in maximal), default=None)
            msr[target] = {r for r in maximal if cond[r] == best}
    return OracleRules(laws, lp, spl, msr, cond)


# -- reports -----------------------------------------------------------------


@dataclass
class Violation:
    kind: str
    detail: str
    reproducer: dict = field(default_factory=dict)


@dataclass
class CheckReport:
    name: str
    checked: int = 0
    violations: list[Violation] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def by_kind(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for v in self.violations:
            out[v.kind] = out.get(v.kind, 0) + 1
        return out

    def merge(self, other: "CheckReport") -> None:
        self.checked += other.checked
        self.violations.extend(other.violations)
        self.notes.extend(other.notes)


def _lits(lits: Iterable[Literal], names) -> list[str]:
    return [l.render(names) for l in sorted(lits)]


def _system_dict(sys: EmpiricalSystem) -> dict:
    """Distinct rows with multiplicities (weights are uniform in the suite)."""
    counts: dict[tuple, int] = {}
    for row in sys.truth.astype(int).tolist():
        counts[tuple(row)] = counts.get(tuple(row), 0) + 1
    return {"predicates": list(sys.predicates), "rows": [list(r) for r in counts], "counts": list(counts.values())}


# -- consistency of forward inference -----------------------------------------


def _rule_of(r) -> Rule:
    return getattr(r, "rule", r)


def _step(L: frozenset, rules: Sequence[Rule]) -> frozenset:
    return L | {r.conclusion for r in rules if r.premise <= L}


def _closure(L: frozenset, rules: Sequence[Rule]) -> frozenset:
    while True:
        nxt = _step(L, rules)
        if nxt == L:
            return L
        L = nxt


def _consistent(L) -> bool:
    return not any(-l in L for l in L)


def _compatible(sys, L) -> bool:
    return _consistent(L) and _prob(sys, L) > 0


def _failures(sys, L: frozenset, rules) -> list[str]:
    step = _step(L, rules)
    out = []
    if not _compatible(sys, step):
        out.append("step-incompatible")
    if not _consistent(step):
        out.append("step-inconsistent")
    if not _consistent(_closure(L, rules)):
        out.append("closure-inconsistent")
    return out


def _shrink(sys, L: frozenset, rules, kind: str) -> frozenset:
    """Drop literals greedily while the same failure persists and ``L`` stays compatible."""
    for lit in sorted(L, reverse=True):
        trial = L - {lit}
        if _compatible(sys, trial) and kind in _failures(sys, trial, rules):
            L = trial
    return L


def _witness(sys, L: frozenset, rules) -> list[str]:
    step = _step(L, rules)
    bad = {l for l in step if -l in step}
    return [r.render(sys.predicates) for r in rules if r.premise <= L and (r.conclusion in bad or -r.conclusion in bad)]


def check_consistency(
    sys: EmpiricalSystem,
    rules: Iterable,
    trials: int = 1000,
    seed: int = 0,
    *,
    exhaustive: bool = False,
) -> CheckReport:
    """Apply one forward step and the full closure to compatible literal sets.

    Samples pick an object and keep each of its literals with probability
    one half, so every sample is compatible.  ``exhaustive`` instead visits
    every subset of every object description.  Each violation kind is
    reported once per system with an inclusion-minimal reproducer.
    """
    rules = sorted({_rule_of(r) for r in rules})
    report = CheckReport("consistency")
    rng = np.random.default_rng(seed)
    rows = [frozenset(Literal(p, bool(v)) for p, v in enumerate(row)) for row in sys.truth]
    if exhaustive:
        seen: set[frozenset] = set()
        samples = []
        for S in dict.fromkeys(rows):
            lits = sorted(S)
            for k in range(len(lits) + 1):
                for sub in combinations(lits, k):
                    fs = frozenset(sub)
                    if fs not in seen:
                        seen.add(fs)
                        samples.append(fs)
    else:
        samples = []
        for _ in range(trials):
            S = sorted(rows[int(rng.integers(len(rows)))])
            keep = rng.random(len(S)) < 0.5
            samples.append(frozenset(l for l, k in zip(S, keep) if k))
    reported: set[str] = set()
    for L in samples:
        report.checked += 1
        for kind in _failures(sys, L, rules):
            if kind in reported:
                continue
            reported.add(kind)
            small = _shrink(sys, L, rules, kind)
            report.violations.append(
                Violation(
                    kind,
                    f"{kind}: L={_lits(small, sys.predicates)}",
                    {
                        "system": _system_dict(sys),
                        "literals": _lits(small, sys.predicates),
                        "step": _lits(_step(small, rules), sys.predicates),
                        "rules": _witness(sys, small, rules),
                        "seed": seed,
                    },
                )
            )
    if not samples:
        report.notes.append("no samples drawn: vacuous pass")
    return report


# -- maximal specificity -----------------------------------------------------


def check_rms(sys: EmpiricalSystem, msr_rules: Iterable) -> CheckReport:
    """Every refinement ``H`` of an MSR premise leaves the conditional unchanged."""
    if sys.n_predicates > RMS_MAX_PREDICATES:
        raise ValueError(f"RMS check limited to {RMS_MAX_PREDICATES} predicates")
    report = CheckReport("rms")
    for rule in sorted({_rule_of(r) for r in msr_rules}):
        prem = rule.sorted_premise
        base = _cond(sys, prem, rule.conclusion)
        if base is None:
            report.violations.append(Violation("undefined", f"{rule.render(sys.predicates)} has empty premise support"))
            continue
        used = {l.predicate for l in prem} | {rule.conclusion.predicate}
        rest = [a for a in range(sys.n_predicates) if a not in used]
        for H in _premises(rest, len(rest)):
            if not H:
                continue
            c = _cond(sys, prem + H, rule.conclusion)
            if c is None:
                continue
            report.checked += 1
            if abs(float(c - base)) > RMS_TOL:
                report.violations.append(
                    Violation(
                        "rms",
                        f"{rule.render(sys.predicates)}: eta={base} but with H={_lits(H, sys.predicates)} eta={c}",
                        {"system": _system_dict(sys), "rule": rule.render(sys.predicates), "H": _lits(H, sys.predicates)},
                    )
                )
    return report


def check_complement_gain(sys: EmpiricalSystem, max_premise: int = 3) -> CheckReport:
    """If adding ``H`` lowers a conditional, adding ``~H`` raises it."""
    report = CheckReport("complement-gain")
    k = sys.n_predicates
    for g, sign in product(range(k), (True, False)):
        G = Literal(g, sign)
        others = [a for a in range(k) if a != g]
        for F in _premises(others, min(max_premise, len(others) - 1)):
            base = _cond(sys, F, G)
            if base is None:
                continue
            used = {l.predicate for l in F}
            for h in others:
                if h in used:
                    continue
                H = Literal(h, True)
                for lit in (H, -H):
                    lo, hi = _cond(sys, F + (lit,), G), _cond(sys, F + (-lit,), G)
                    if lo is None or hi is None:
                        continue
                    report.checked += 1
                    if lo < base and not hi > base:
                        report.violations.append(Violation("complement-gain", f"F={_lits(F, sys.predicates)} G={G.render(sys.predicates)} H={lit.render(sys.predicates)}"))
    return report


# -- structural properties -----------------------------------------------------


def _every_rule(sys, max_premise):
    k = sys.n_predicates
    for g, sign in product(range(k), (True, False)):
        G = Literal(g, sign)
        for prem in _premises([a for a in range(k) if a != g], max_premise):
            yield prem, G


def check_law_beneath_truth(sys: EmpiricalSystem, max_premise: int = MAX_PREMISE) -> CheckReport:
    """Each rule true on the data has a sub-rule (or itself) that is a law."""
    report = CheckReport("law-beneath-truth")
    for prem, G in _every_rule(sys, max_premise):
        if not _true(sys, prem, G):
            continue
        report.checked += 1
        cands = [(prem, G)] + _all_subrules(prem, G)
        if not any(_is_law(sys, p, c) for p, c in cands):
            report.violations.append(Violation("law-beneath-truth", Rule(frozenset(prem), G).render(sys.predicates)))
    return report


def check_subrule_truth(sys: EmpiricalSystem, max_premise: int = MAX_PREMISE) -> CheckReport:
    """A rule with a true sub-rule is itself true."""
    report = CheckReport("subrule-truth")
    for prem, G in _every_rule(sys, max_premise):
        report.checked += 1
        if any(_true(sys, p, c) for p, c in _all_subrules(prem, G)) and not _true(sys, prem, G):
            report.violations.append(Violation("subrule-truth", Rule(frozenset(prem), G).render(sys.predicates)))
    return report


def check_lp_beneath_rule(sys: EmpiricalSystem, max_premise: int = MAX_PREMISE) -> CheckReport:
    """Every rule with positive joint support has a probabilistic-law sub-rule
    (possibly itself) with the same conclusion and no smaller conditional."""
    report = CheckReport("lp-beneath-rule")
    for prem, G in _every_rule(sys, max_premise):
        c = _cond(sys, prem, G)
        if not c:
            continue
        report.checked += 1
        subs = [sub for k in range(len(prem) + 1) for sub in combinations(prem, k)]
        if not any(_is_lp(sys, s, G) and _cond(sys, s, G) >= c for s in subs):
            report.violations.append(Violation("lp-beneath-rule", Rule(frozenset(prem), G).render(sys.predicates)))
    return report


def check_exclusion_split(sys: EmpiricalSystem, max_len: int = 2) -> CheckReport:
    """When excluding ``B`` raises the conditional of ``A => G``, some split
    ``A & B' => G`` (``B'`` a sign pattern over B's atoms other than B itself)
    beats ``A => G`` strictly."""
    report = CheckReport("exclusion-split")
    k = sys.n_predicates
    for g, sign in product(range(k), (True, False)):
        G = Literal(g, sign)
        others = [a for a in range(k) if a != g]
        for A in _premises(others, max_len):
            base = _cond(sys, A, G)
            if base is None:
                continue
            free = [a for a in others if a not in {l.predicate for l in A}]
            for B in _premises(free, max_len):
                if not B:
                    continue
                # rows satisfying A and not all of B
                num = den = Fraction(0)
                for w, row in zip(sys.mu, sys.truth):
                    if all(_holds(row, l) for l in A) and not all(_holds(row, l) for l in B):
                        den += w
                        num += w if _holds(row, G) else 0
                if den == 0 or num / den <= base:
                    continue
                report.checked += 1
                splits = [
                    tuple(l if keep else -l for l, keep in zip(B, pattern))
                    for pattern in product((True, False), repeat=len(B))
                    if not all(pattern)
                ]
                if not any((c := _cond(sys, A + s, G)) is not None and c > base for s in splits):
                    report.violations.append(
                        Violation("exclusion-split", f"A={_lits(A, sys.predicates)} B={_lits(B, sys.predicates)} G={G.render(sys.predicates)}")
                    )
    return report


def check_chain(sys: EmpiricalSystem, oracle: OracleRules | None = None, max_premise: int = MAX_PREMISE) -> CheckReport:
    """Within each target: laws are MSR, MSR are SPL, SPL are probabilistic laws."""
    oracle = oracle or brute_force_rules(sys, max_premise)
    report = CheckReport("chain")
    for t in oracle.lp:
        report.checked += 1
        for small, big in (("laws", "msr"), ("msr", "spl"), ("spl", "lp")):
            extra = oracle.kind(small)[t] - oracle.kind(big)[t]
            for r in sorted(extra):
                report.violations.append(Violation(f"{small}-not-{big}", r.render(sys.predicates)))
    return report


def compare_with_miner(sys: EmpiricalSystem, depth: int = MAX_PREMISE, oracle: OracleRules | None = None) -> CheckReport:
    """Exhaustive miner output must match the oracle exactly for LP, SPL and MSR."""
    from .miner import MinerConfig, mine_all

    oracle = oracle or brute_force_rules(sys, depth)
    mined = mine_all(sys, MinerConfig(max_premise_len=depth, strategy="exhaustive"))
    report = CheckReport("oracle-equivalence")
    for kind in ("lp", "spl", "msr"):
        got, want = mined.rule_sets(kind), oracle.kind(kind)
        for t in sorted(set(got) | set(want)):
            report.checked += 1
            g, w = got.get(t, set()), want.get(t, set())
            if g != w:
                names = sys.predicates
                report.violations.append(
                    Violation(
                        f"{kind}-mismatch",
                        f"{kind} for {t.render(names)}: miner-only {[r.render(names) for r in sorted(g - w)]}, "
                        f"oracle-only {[r.render(names) for r in sorted(w - g)]}",
                        {"system": _system_dict(sys)},
                    )
                )
    return report


# -- random suite ------------------------------------------------------------


def random_system(rng: np.random.Generator, max_objects: int = 5, max_predicates: int = 4) -> EmpiricalSystem:
    """A uniform-weight system of random size with i.i.d. fair-coin cells."""
    n = int(rng.integers(1, max_objects + 1))
    k = int(rng.integers(1, max_predicates + 1))
    return load_system(rng.random((n, k)) < 0.5)


@dataclass(frozen=True)
class VerifyConfig:
    n_systems: int = 100
    max_objects: int = 5
    max_predicates: int = 4
    depth: int = 4
    trials: int = 1000
    seed: int = 0
    rules: str = "msr"

    def __post_init__(self):
        if self.rules not in ("lp", "spl", "msr"):
            raise ValueError("rules must be one of lp, spl, msr")
        if min(self.n_systems, self.trials) < 0 or min(self.max_objects, self.max_predicates) < 1:
            raise ValueError("sizes must be positive")
        if self.max_predicates > RMS_MAX_PREDICATES or self.depth > MAX_PREMISE:
            raise ValueError(f"suite limited to {RMS_MAX_PREDICATES} predicates and depth {MAX_PREMISE}")


@dataclass
class SuiteReport:
    config: VerifyConfig
    checks: dict[str, CheckReport]
    seconds: float

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks.values())

    def to_text(self, max_examples: int = 3) -> str:
        lines = [f"verification suite: {self.config.n_systems} systems, seed {self.config.seed}, rules {self.config.rules}"]
        for name, c in self.checks.items():
            status = "ok" if c.ok else "FAIL"
            kinds = ", ".join(f"{k}={v}" for k, v in sorted(c.by_kind().items()))
            lines.append(f"  {name:<20} {status:<4} checked={c.checked} violations={len(c.violations)} {kinds}".rstrip())
            for v in c.violations[:max_examples]:
                lines.append(f"      {v.detail}")
                if v.reproducer:
                    lines.append(f"      reproducer: {json.dumps(v.reproducer, sort_keys=True)}")
            for note in c.notes[:max_examples]:
                lines.append(f"      note: {note}")
        lines.append(f"overall: {'PASS' if self.ok else 'FAIL'} ({self.seconds:.1f}s)")
        return "\n".join(lines)

    def to_json(self) -> str:
        data = {
            "config": asdict(self.config),
            "ok": self.ok,
            "checks": {
                n: {"checked": c.checked, "violations": len(c.violations), "by_kind": c.by_kind(),
                    "examples": [asdict(v) for v in c.violations[:10]], "notes": c.notes}
                for n, c in self.checks.items()
            },
        }
        return json.dumps(data, indent=1, sort_keys=True)


CHECKS = (
    "oracle-equivalence", "chain", "law-beneath-truth", "subrule-truth", "complement-gain",
    "lp-beneath-rule", "exclusion-split", "rms", "consistency",
)


def run_suite(cfg: VerifyConfig | None = None) -> SuiteReport:
    """Run every check on ``cfg.n_systems`` seeded random systems.

    Consistency trials are split evenly across systems; forward inference
    uses the rule kind named by ``cfg.rules``.
    """
    cfg = cfg or VerifyConfig()
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    checks = {name: CheckReport(name) for name in CHECKS}
    per_system = -(-cfg.trials // cfg.n_systems) if cfg.n_systems else 0
    for i in range(cfg.n_systems):
        sys = random_system(rng, cfg.max_objects, cfg.max_predicates)
        depth = min(cfg.depth, max(sys.n_predicates - 1, 0))
        oracle = brute_force_rules(sys, depth)
        checks["oracle-equivalence"].merge(compare_with_miner(sys, depth, oracle))
        checks["chain"].merge(check_chain(sys, oracle))
        checks["law-beneath-truth"].merge(check_law_beneath_truth(sys, depth))
        checks["subrule-truth"].merge(check_subrule_truth(sys, depth))
        checks["complement-gain"].merge(check_complement_gain(sys))
        checks["lp-beneath-rule"].merge(check_lp_beneath_rule(sys, depth))
        checks["exclusion-split"].merge(check_exclusion_split(sys))
        checks["rms"].merge(check_rms(sys, oracle.all("msr")))
        cons = check_consistency(sys, oracle.all(cfg.rules), trials=per_system, seed=cfg.seed + i)
        for v in cons.violations:
            v.reproducer["system_index"] = i
        checks["consistency"].checked += cons.checked
        checks["consistency"].violations.extend(cons.violations)
    if cfg.trials == 0 or cfg.n_systems == 0:
        checks["consistency"].notes.append("zero trials requested: consistency check is vacuous")
    return SuiteReport(cfg, checks, time.perf_counter() - t0)
