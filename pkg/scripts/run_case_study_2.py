"""
Lane-merge robustness sweeps.

A straight-driving car and a merging car each weight proximity with a
private aggressiveness parameter.  This script compares the mutual learner
against the expert-peer baseline under randomized conditions: per-run true
intents ("intents"), perturbed initial peer estimates ("init"), and
perturbed prior variances ("var").  For every variant it reports each
method's median final estimation error and the fraction of paired draws
the mutual learner wins outright.
"""

import argparse
from pathlib import Path

from npace.harness import McSummary, run_montecarlo
from npace.scenarios import make_scenario

SWEEP_VARIANTS = ("intents", "init", "var")


def paired_win_rate(summary: McSummary, challenger: str, incumbent: str) -> float:
    """Fraction of draws where the challenger's final error is smaller."""
    wins = 0
    decided = 0
    pairs = zip(summary.per_run[challenger], summary.per_run[incumbent])
    for ours, theirs in pairs:
        if ours is None or theirs is None:
            continue
        decided += 1
        wins += ours.final_error_sum < theirs.final_error_sum
    return wins / decided if decided else float("nan")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=50, help="draws per variant")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="directory root for CSV logs per variant")
    args = parser.parse_args(argv)

    scenario = make_scenario("lane_merge")
    for variant in SWEEP_VARIANTS:
        out_dir = Path(args.out) / variant if args.out is not None else None
        summary = run_montecarlo(
            scenario,
            ["expert", "npace"],
            runs=args.runs,
            seed=args.seed,
            out_dir=out_dir,
            variant=variant,
        )
        print(f"variant {variant!r} ({args.runs} paired draws, seed {args.seed})")
        for aggregate in summary.methods:
            print(
                f"  {aggregate.method:8} median final error "
                f"{aggregate.final_error_sum_median:8.3f}   "
                f"hard failures {aggregate.hard_failures}"
            )
        rate = paired_win_rate(summary, "npace", "expert")
        print(f"  npace beats expert on {100.0 * rate:.1f}% of draws")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
