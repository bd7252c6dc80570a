"""
Uncontrolled-intersection Monte Carlo study.

Two cars approach a shared intersection, each weighting proximity with a
private aggressiveness parameter drawn per run.  All methods replay the
identical draw sequence, so rates are directly comparable: complete
information, expert peer, the mutual learner, the signaling variant at
several weights, the worst-case planner, and the fitted-peer tracker are
scored on collision rate, control effort, and crossing time.
"""

import argparse
from pathlib import Path

from npace.harness import run_montecarlo
from npace.scenarios import make_scenario


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=300, help="paired draws")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="directory for CSV logs and summary.ini")
    parser.add_argument(
        "--methods",
        default="complete,expert,npace,npace_comm,minmax",
        help="comma-separated method list",
    )
    parser.add_argument(
        "--eta-list", default="0.1,1,10", help="signaling weights to expand"
    )
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)

    scenario = make_scenario("intersection")
    summary = run_montecarlo(
        scenario,
        [m for m in args.methods.split(",") if m],
        runs=args.runs,
        seed=args.seed,
        etas=[float(v) for v in args.eta_list.split(",") if v],
        out_dir=Path(args.out) if args.out is not None else None,
        workers=args.workers,
    )

    print(f"{args.runs} paired draws, seed {args.seed}")
    header = f"{'method':22} {'collisions':>10} {'effort':>8} {'crossing [s]':>16}"
    print(header)
    for agg in summary.methods:
        crossing = (
            f"{agg.crossing_mean:.3f} +- {agg.crossing_std:.3f}"
            if agg.crossed_runs
            else "-"
        )
        print(
            f"{agg.method:22} {100.0 * agg.collision_rate:9.2f}% "
            f"{agg.mean_effort:8.3f} {crossing:>16}"
        )
        if agg.hard_failures:
            print(f"{'':22} ({agg.hard_failures} hard failures)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
