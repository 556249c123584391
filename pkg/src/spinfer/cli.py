"""Command-line pipeline: mine -> classes -> classify, plus verify and demos.

Exit codes: 0 ok, 1 usage, 2 data or I/O error, 3 verification failure.
Settings resolve as command-line flags, then ``--config`` JSON, then defaults;
the effective settings are written into every output file.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections import Counter
from pathlib import Path

from . import datasets, serialize
from .core import EmpiricalSystem
from .fixpoint import ClassEnumeration, RuleBase, default_eps, enumerate_classes
from .miner import MinerConfig, mine_all
from .oracle import VerifyConfig, run_suite
from .recognize import calibrate_classes, classify_system, confusion, regular_matrix, write_report

log = logging.getLogger("spinfer")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3

DEFAULTS = {
    "mine": {"depth": 6, "alpha": None, "strategy": "auto", "targets": None, "workers": 1},
    "classes": {"kind": "msr", "eps": None, "target_fpr": 0.05, "workers": 1},
    "classify": {"target_fpr": None},
    "verify": {"systems": 100, "trials": 1000, "seed": 0, "rules": "msr",
               "max_objects": 5, "max_predicates": 4, "depth": 4},
    "demo": {"copies": 30, "test_copies": 10, "flip": 0.0, "seed": 0, "depth": 6, "alpha": 0.05,
             "n": 200, "workers": 1, "target_fpr": 0.05},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Flags beat the config file, which beats the defaults."""
    cfg = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ValueError(f"cannot read config {args.config}: {e}") from e
        section = data.get(command, data) if isinstance(data, dict) else None
        if not isinstance(section, dict):
            raise UsageError(f"config {args.config} must be a JSON object")
        unknown = set(section) - set(cfg) - set(DEFAULTS) - {"config"}
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update({k: v for k, v in section.items() if k in cfg})
    for k in cfg:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _load_data(path, schema_path=None) -> EmpiricalSystem:
    schema = datasets.FieldSchema.load(schema_path) if schema_path else None
    return datasets.load_csv(path, schema)


def _miner_config(cfg: dict, sys: EmpiricalSystem) -> MinerConfig:
    targets = None
    if cfg["targets"]:
        try:
            targets = tuple(sys.literal_index(t) for t in cfg["targets"])
        except KeyError as e:
            raise UsageError(f"--targets: {e.args[0]}") from None
    try:
        return MinerConfig(cfg["depth"], cfg["alpha"], targets, cfg["strategy"])
    except ValueError as e:
        raise UsageError(str(e)) from None


# -- commands ----------------------------------------------------------------


def cmd_mine(args) -> int:
    cfg = resolve("mine", args)
    sys_ = _load_data(args.input, args.schema)
    mcfg = _miner_config(cfg, sys_)
    t0 = time.perf_counter()
    rs = mine_all(sys_, mcfg, workers=cfg["workers"])
    effective = {**mcfg.to_dict(sys_.predicates), "workers": cfg["workers"], "input": str(args.input)}
    serialize.atomic_write(args.output, serialize.dump_rules(rs, effective))
    msr = rs.msr
    print(f"mined {len(rs.per_target)} targets in {time.perf_counter() - t0:.2f}s: "
          f"{len(rs.lp)} LP, {len(rs.spl)} SPL, {len(msr)} MSR -> {args.output}")
    if msr:
        print(f"max eta (MSR): {max(float(m.eta) for m in msr):.4f}")
        hist = Counter(len(m.rule.premise) for m in msr)
        print("premise length histogram (MSR): " + ", ".join(f"{k}:{hist[k]}" for k in sorted(hist)))
        per = Counter(m.rule.conclusion for m in msr)
        print("MSR per target:")
        for t in sorted(per):
            etas = {float(m.eta) for m in msr if m.rule.conclusion == t}
            print(f"  {t.render(sys_.predicates):<12} {per[t]:>5}  eta={max(etas):.4f}")
        if mcfg.alpha is not None:
            ps = [m.p_value for m in rs.lp if m.p_value is not None]
            if ps:
                print(f"max recorded p-value: {max(ps):.3g} (alpha {mcfg.alpha})")
    return EXIT_OK


def _check_schema(names_a, names_b, what: str) -> None:
    if tuple(names_a) != tuple(names_b):
        raise ValueError(f"{what}: predicate names do not match the data")


def cmd_classes(args) -> int:
    cfg = resolve("classes", args)
    rf = serialize.load_rules(args.rules)
    sys_ = _load_data(args.input, args.schema)
    _check_schema(rf.predicates, sys_.predicates, str(args.rules))
    mined = rf.select(cfg["kind"])
    eps = cfg["eps"] if cfg["eps"] is not None else default_eps(sys_.n_objects)
    effective = {**cfg, "eps": eps, "rules": str(args.rules), "input": str(args.input), "miner": rf.config}
    base = RuleBase.from_mined(mined, sys_.n_objects, eps)
    if not mined:
        print(f"warning: rule file holds no {cfg['kind']} rules; no classes formed", file=sys.stderr)
        enum = ClassEnumeration([], [], [])
    else:
        enum = enumerate_classes(sys_, base, workers=cfg["workers"])
    members = {c.class_id: c.members for c in enum.classes}
    mats = [regular_matrix(c, base) for c in enum.classes]
    thresholds = calibrate_classes(sys_, mats, members, cfg["target_fpr"]) if mats else {}
    serialize.atomic_write(args.output, serialize.dump_classes(enum, base, sys_.predicates, effective, thresholds))
    print(f"{len(enum.classes)} classes from {len(base)} {cfg['kind'].upper()} rules "
          f"({len(enum.pruned_rules)} pruned) -> {args.output}")
    for c in enum.classes:
        print(f"  {c.class_id:<5} kr={c.kr:10.4f} literals={len(c.fixpoint):>3} "
              f"members={len(c.members):>4} seeds={len(c.seeds):>4} generating={len(c.generating)}")
    return EXIT_OK


def cmd_classify(args) -> int:
    cfg = resolve("classify", args)
    cf = serialize.load_classes(args.classes)
    sys_ = _load_data(args.input, args.schema)
    _check_schema(cf.predicates, sys_.predicates, str(args.classes))
    if args.confusion and not args.labels:
        raise UsageError("--confusion needs --labels")
    mats = cf.matrices
    if cfg["target_fpr"] is not None:
        if not args.calibration:
            raise UsageError("--target-fpr needs --calibration data (objects named as class members)")
        cal = _load_data(args.calibration, args.schema)
        _check_schema(cf.predicates, cal.predicates, str(args.calibration))
        thresholds = calibrate_classes(cal, mats, {c.class_id: c.members for c in cf.classes}, cfg["target_fpr"])
        for cid, th in thresholds.items():
            print(f"  {cid:<5} threshold={th.value:.4f} fpr={th.fpr:.4f} fnr={th.fnr:.4f}"
                  + (" degenerate" if th.degenerate else ""))
    else:
        thresholds = {c.class_id: c.threshold or serialize.accept_all() for c in cf.classes}
    results = classify_system(sys_, mats, thresholds)
    write_report(results, [m.class_id for m in mats], args.output)
    rejected = sum(r.top is None for r in results)
    print(f"classified {len(results)} objects against {len(mats)} classes ({rejected} rejected) -> {args.output}")
    if args.labels:
        labels = datasets.load_labels(args.labels)
        summary = confusion(results, labels)
        print(f"accuracy (majority label per assigned class): {summary['accuracy']:.4f}")
        if args.confusion:
            for cid in [m.class_id for m in mats] + ["reject"]:
                if cid in summary["table"]:
                    row = ", ".join(f"{k}:{v}" for k, v in summary["table"][cid].items())
                    print(f"  {cid:<6} -> {summary['majority'].get(cid, '-'):<4} {row}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = resolve("verify", args)
    try:
        vcfg = VerifyConfig(cfg["systems"], cfg["max_objects"], cfg["max_predicates"], cfg["depth"],
                            cfg["trials"], cfg["seed"], cfg["rules"])
    except ValueError as e:
        raise UsageError(str(e)) from None
    if vcfg.trials == 0:
        print("warning: --trials 0 makes the consistency check vacuous", file=sys.stderr)
    report = run_suite(vcfg)
    text = report.to_text()
    print(text)
    if args.report:
        serialize.atomic_write(args.report, text + "\n")
    if args.json:
        serialize.atomic_write(args.json, report.to_json() + "\n")
    return EXIT_OK if report.ok else EXIT_VERIFY


def cmd_demo(args) -> int:
    cfg = resolve("demo", args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.dataset == "penicillin":
        sys_ = datasets.gen_penicillin(cfg["n"])
        datasets.save_csv(sys_, out / "penicillin.csv")
        print(f"wrote {out / 'penicillin.csv'} ({sys_.n_objects} objects)")
        steps = [
            ["mine", "--input", str(out / "penicillin.csv"), "--output", str(out / "rules.jsonl"), "--depth", "3"],
            ["classes", "--rules", str(out / "rules.jsonl"), "--input", str(out / "penicillin.csv"),
             "--output", str(out / "classes.json")],
        ]
    else:
        train = datasets.gen_digits_noisy(cfg["copies"], cfg["flip"], cfg["seed"], shuffle_seed=cfg["seed"])
        test = datasets.gen_digits(cfg["test_copies"], shuffle_seed=cfg["seed"] + 1)
        datasets.save_csv(train.system, out / "train.csv")
        datasets.save_labels(train, out / "train_labels.csv")
        datasets.save_csv(test.system, out / "test.csv")
        datasets.save_labels(test, out / "test_labels.csv")
        print(f"wrote digits: {train.system.n_objects} training objects "
              f"({train.metadata['perturbed_slots']} perturbed slots), {test.system.n_objects} test objects")
        mine = ["mine", "--input", str(out / "train.csv"), "--output", str(out / "rules.jsonl"),
                "--depth", str(cfg["depth"]), "--workers", str(cfg["workers"])]
        if cfg["alpha"] is not None:
            mine += ["--alpha", str(cfg["alpha"])]
        steps = [
            mine,
            ["classes", "--rules", str(out / "rules.jsonl"), "--input", str(out / "train.csv"),
             "--output", str(out / "classes.json"), "--workers", str(cfg["workers"]),
             "--target-fpr", str(cfg["target_fpr"])],
            ["classify", "--classes", str(out / "classes.json"), "--input", str(out / "test.csv"),
             "--output", str(out / "report.csv"), "--labels", str(out / "test_labels.csv"), "--confusion"],
        ]
    for step in steps:
        print("$ spinfer " + " ".join(step))
        code = main(step)
        if code:
            return code
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spinfer", description="Probabilistic rule mining, fixed-point classes and recognition.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("mine", help="mine probabilistic laws from a CSV")
    m.add_argument("--input", required=True)
    m.add_argument("--schema", help="JSON field schema for multi-valued columns")
    m.add_argument("--output", required=True, help="rule file (JSON lines)")
    m.add_argument("--depth", type=int, help="maximum premise length (default 6)")
    m.add_argument("--alpha", type=float, help="Fisher gate significance level (implies stepwise search)")
    m.add_argument("--strategy", choices=["auto", "exhaustive", "stepwise"])
    m.add_argument("--targets", nargs="+", help="restrict to these literals (name or ~name)")
    m.add_argument("--workers", type=int)
    m.add_argument("--config")
    m.set_defaults(func=cmd_mine)

    c = sub.add_parser("classes", help="fixed-point classes from a rule file")
    c.add_argument("--rules", required=True)
    c.add_argument("--input", required=True)
    c.add_argument("--schema")
    c.add_argument("--output", required=True, help="class file (JSON)")
    c.add_argument("--kind", choices=["msr", "spl", "lp"], help="rule kind to use (default msr)")
    c.add_argument("--eps", type=float, help="floor on 1 - eta in rule weights (default 1/(2N))")
    c.add_argument("--target-fpr", type=float, help="false-positive target for stored thresholds")
    c.add_argument("--workers", type=int)
    c.add_argument("--config")
    c.set_defaults(func=cmd_classes)

    k = sub.add_parser("classify", help="score objects against class matrices")
    k.add_argument("--classes", required=True)
    k.add_argument("--input", required=True)
    k.add_argument("--schema")
    k.add_argument("--output", required=True, help="CSV report")
    k.add_argument("--labels", help="CSV with id,label for an accuracy summary")
    k.add_argument("--confusion", action="store_true", help="print the label table per class")
    k.add_argument("--target-fpr", type=float, help="recalibrate thresholds on --calibration data")
    k.add_argument("--calibration", help="CSV whose objects include the class members")
    k.add_argument("--config")
    k.set_defaults(func=cmd_classify)

    v = sub.add_parser("verify", help="run the small-instance property suite")
    v.add_argument("--systems", type=int)
    v.add_argument("--trials", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--rules", choices=["msr", "spl", "lp"], help="rule kind fed to forward inference")
    v.add_argument("--max-objects", type=int)
    v.add_argument("--max-predicates", type=int)
    v.add_argument("--depth", type=int)
    v.add_argument("--report", help="write the text report here")
    v.add_argument("--json", help="write the JSON summary here")
    v.add_argument("--config")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("demo", help="generate a fixture and run the pipeline on it")
    d.add_argument("dataset", choices=["digits", "penicillin"])
    d.add_argument("--out", required=True, help="output directory")
    d.add_argument("--copies", type=int)
    d.add_argument("--test-copies", type=int)
    d.add_argument("--flip", type=float, help="per-field resampling probability for training copies")
    d.add_argument("--seed", type=int)
    d.add_argument("--depth", type=int)
    d.add_argument("--alpha", type=float)
    d.add_argument("--n", type=int, help="penicillin sample size")
    d.add_argument("--target-fpr", type=float)
    d.add_argument("--workers", type=int)
    d.add_argument("--config")
    d.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"spinfer {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"spinfer {args.command}: {msg}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
