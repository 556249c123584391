"""Digits experiment: mine, form classes, compare with prototypes, classify held-out copies.

    python scripts/run_digits.py                       # noiseless, depth 6
    python scripts/run_digits.py --flip 0.1 --depth 2  # noisy training copies
"""
import argparse
import time
from collections import Counter

from spinfer.datasets import digit_prototypes, gen_digits, gen_digits_noisy
from spinfer.fixpoint import RuleBase, enumerate_classes
from spinfer.miner import MinerConfig, mine_all
from spinfer.recognize import calibrate_classes, classify_system, confusion, regular_matrix


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--copies", type=int, default=30)
    ap.add_argument("--flip", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--depth", type=int, default=6)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--test-copies", type=int, default=10)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    train = gen_digits_noisy(args.copies, args.flip, args.seed) if args.flip else gen_digits(args.copies)
    s = train.system
    t0 = time.perf_counter()
    rs = mine_all(s, MinerConfig(max_premise_len=args.depth, alpha=args.alpha), workers=args.workers)
    t1 = time.perf_counter()
    print(f"mined {len(rs.lp)} LP / {len(rs.spl)} SPL / {len(rs.msr)} MSR in {t1 - t0:.1f}s")
    base = RuleBase.from_mined(rs.msr, s.n_objects)
    enum = enumerate_classes(s, base, workers=args.workers)
    print(f"{len(enum.classes)} classes in {time.perf_counter() - t1:.1f}s")

    protos = digit_prototypes()
    name_of = {p: lab for lab, p in protos.items()}
    reached = {o: c.fixpoint for c in enum.classes for o in c.seeds}
    for lab, proto in protos.items():
        counts = Counter(reached[o] for o, l in zip(s.objects, train.labels) if l == lab)
        top, n = counts.most_common(1)[0]
        got = name_of.get(top, "other")
        print(f"  {lab}: majority fixed point = {got} ({n}/{sum(counts.values())} copies)")

    matrices = [regular_matrix(c, base) for c in enum.classes]
    th = calibrate_classes(s, matrices, {c.class_id: c.members for c in enum.classes}, 0.05)
    test = gen_digits(args.test_copies, shuffle_seed=args.seed + 1)
    results = classify_system(test.system, matrices, th)
    conf = confusion(results, dict(zip(test.system.objects, test.labels)))
    print(f"held-out accuracy {conf['accuracy']:.4f}, rejected {conf['rejected']}/{conf['n']}")


if __name__ == "__main__":
    main()
