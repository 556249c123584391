"""On-disk formats: rule files (JSON lines) and class files (JSON).

Both carry a ``format``/``version`` header, the predicate list they were
built against and the effective configuration that produced them.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .core import Literal, Rule
from .fixpoint import ClassEnumeration, RuleBase
from .miner import MinedRule, RuleSet
from .recognize import RegularMatrix, Threshold, regular_matrix

RULES_FORMAT = "spinfer-rules"
CLASSES_FORMAT = "spinfer-classes"
VERSION = 1


class FormatError(ValueError):
    """Malformed or incompatible file."""


def atomic_write(path, text: str) -> None:
    """Write via a temporary sibling so a failed run leaves no partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def parse_literal(text: str, names: Sequence[str]) -> Literal:
    positive = not text.startswith("~")
    name = text if positive else text[1:]
    try:
        return Literal(list(names).index(name), positive)
    except ValueError:
        raise FormatError(f"unknown predicate {name!r}") from None


def parse_rule(text: str, names: Sequence[str]) -> Rule:
    lhs, sep, rhs = text.partition("=>")
    if not sep:
        raise FormatError(f"not a rule: {text!r}")
    prem = [parse_literal(t.strip(), names) for t in lhs.split(" & ") if t.strip()]
    return Rule(frozenset(prem), parse_literal(rhs.strip(), names))


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


# -- rules -------------------------------------------------------------------


@dataclass
class RuleFile:
    predicates: tuple[str, ...]
    n_objects: int
    config: dict
    rules: list[MinedRule]
    kinds: list[set[str]]

    def select(self, kind: str) -> list[MinedRule]:
        return [r for r, k in zip(self.rules, self.kinds) if kind in k]


def dump_rules(rs: RuleSet, config: dict) -> str:
    names = rs.predicates
    spl, msr = {m.rule for m in rs.spl}, {m.rule for m in rs.msr}
    header = {"format": RULES_FORMAT, "version": VERSION, "predicates": list(names),
              "n_objects": rs.n_objects, "config": config}
    lines = [json.dumps(header, sort_keys=True)]
    for m in rs.lp:
        lines.append(json.dumps({
            "premise": [l.render(names) for l in m.rule.sorted_premise],
            "conclusion": m.rule.conclusion.render(names),
            "eta": _frac(m.eta),
            "eta_float": float(m.eta),
            "support": _frac(m.support),
            "p_value": m.p_value,
            "path": [r.render(names) for r in m.path],
            "spl": m.rule in spl,
            "msr": m.rule in msr,
        }, sort_keys=True))
    return "\n".join(lines) + "\n"


def load_rules(path) -> RuleFile:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise FormatError(f"{path}: {e.strerror}") from e
    if not lines:
        raise FormatError(f"{path}: empty rule file")
    try:
        header = json.loads(lines[0])
        if header.get("format") != RULES_FORMAT or header.get("version") != VERSION:
            raise FormatError(f"{path}: not a {RULES_FORMAT} v{VERSION} file")
        names = tuple(header["predicates"])
        rules, kinds = [], []
        for ln in lines[1:]:
            if not ln.strip():
                continue
            d = json.loads(ln)
            rule = Rule(frozenset(parse_literal(t, names) for t in d["premise"]), parse_literal(d["conclusion"], names))
            path_rules = tuple(parse_rule(t, names) for t in d["path"])
            rules.append(MinedRule(rule, Fraction(d["eta"]), Fraction(d["support"]), d["p_value"], path_rules))
            kinds.append({"lp"} | ({"spl"} if d["spl"] else set()) | ({"msr"} if d["msr"] else set()))
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise FormatError(f"{path}: malformed rule file ({e})") from e
    return RuleFile(names, header["n_objects"], header.get("config", {}), rules, kinds)


# -- classes -----------------------------------------------------------------


@dataclass
class ClassRecord:
    class_id: str
    fixpoint: frozenset[Literal]
    kr: float
    members: tuple[str, ...]
    matrix: RegularMatrix
    threshold: Threshold | None


@dataclass
class ClassFile:
    predicates: tuple[str, ...]
    config: dict
    classes: list[ClassRecord]

    @property
    def matrices(self) -> list[RegularMatrix]:
        return [c.matrix for c in self.classes]


def dump_classes(
    enum: ClassEnumeration,
    base: RuleBase,
    names: Sequence[str],
    config: dict,
    thresholds: dict[str, Threshold] | None = None,
) -> str:
    ids = {r: f"R{i + 1}" for i, r in enumerate(base.rules)}
    classes = []
    for c in enum.classes:
        m = regular_matrix(c, base)
        classes.append({
            "id": c.class_id,
            "fixpoint": [l.render(names) for l in c.literals],
            "kr": c.kr,
            "kr_trace": list(c.kr_trace),
            "members": list(c.members),
            "seeds": list(c.seeds),
            "generating": [l.render(names) for l in c.generating],
            "sat_rules": [ids[r] for r in c.sat_rules],
            "weights": {l.render(names): m.weights[l] for l in m.literals},
            "threshold": thresholds[c.class_id].to_dict() if thresholds else None,
        })
    doc = {
        "format": CLASSES_FORMAT,
        "version": VERSION,
        "predicates": list(names),
        "config": config,
        "rules": [{"id": ids[r], "rule": r.render(names), "v": w} for r, w in zip(base.rules, base.weights)],
        "pruned_rules": [ids[r] for r in enum.pruned_rules],
        "classes": classes,
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def load_classes(path) -> ClassFile:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise FormatError(f"{path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e})") from e
    if doc.get("format") != CLASSES_FORMAT or doc.get("version") != VERSION:
        raise FormatError(f"{path}: not a {CLASSES_FORMAT} v{VERSION} file")
    names = tuple(doc["predicates"])
    out = []
    for c in doc["classes"]:
        weights = {parse_literal(k, names): float(v) for k, v in c["weights"].items()}
        th = Threshold.from_dict(c["threshold"]) if c.get("threshold") else None
        out.append(ClassRecord(
            c["id"], frozenset(parse_literal(t, names) for t in c["fixpoint"]), float(c["kr"]),
            tuple(c["members"]), RegularMatrix(c["id"], weights), th,
        ))
    return ClassFile(names, doc.get("config", {}), out)


def accept_all() -> Threshold:
    return Threshold(-math.inf, math.nan, math.nan, True, 0, 0, math.nan)
