"""Penicillin fixture: statistical ambiguity under all probabilistic laws versus MSR."""
import argparse

from spinfer.datasets import gen_penicillin
from spinfer.fixpoint import RuleBase, enumerate_classes
from spinfer.miner import MinerConfig, mine_all
from spinfer.oracle import check_consistency


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--trials", type=int, default=1000)
    args = ap.parse_args()

    s = gen_penicillin(args.n)
    rs = mine_all(s, MinerConfig(max_premise_len=3))
    names = s.predicates
    for kind in ("lp", "msr"):
        rules = rs.rules(kind)
        print(f"{kind.upper()}: {len(rules)} rules")
        for m in rules:
            if m.rule.conclusion.predicate == names.index("E"):
                print(f"  {m.rule.render(names)}  eta={float(m.eta):.3f}")
        rep = check_consistency(s, rules, trials=args.trials)
        print(f"  consistency over {rep.checked} compatible sets: {rep.by_kind() or 'no violations'}")
        for v in rep.violations[:1]:
            print(f"  e.g. {v.reproducer['literals']} -> {v.reproducer['step']} via {v.reproducer['rules']}")
    enum = enumerate_classes(s, RuleBase.from_mined(rs.msr, s.n_objects))
    for c in enum.classes:
        print(f"{c.class_id}: {{{', '.join(l.render(names) for l in c.literals)}}} kr={c.kr:.3f} members={len(c.members)}")


if __name__ == "__main__":
    main()
