"""Property suite on seeded random systems; writes text and JSON reports."""
import argparse
from pathlib import Path

from spinfer.oracle import VerifyConfig, run_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--systems", type=int, default=100)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rules", choices=("msr", "spl", "lp"), default="msr")
    ap.add_argument("--out", type=Path, default=None, help="directory for verify.txt / verify.json")
    args = ap.parse_args()

    rep = run_suite(VerifyConfig(n_systems=args.systems, trials=args.trials, seed=args.seed, rules=args.rules))
    print(rep.to_text())
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "verify.txt").write_text(rep.to_text() + "\n")
        (args.out / "verify.json").write_text(rep.to_json() + "\n")


if __name__ == "__main__":
    main()
