"""
Per-step timing benchmark.

Times the control and estimation phases of repeated nominal runs and
prints median and 95th-percentile wall times per step.  Reports only;
the acceptance thresholds live in the test suite.
"""

import argparse

from npace.harness import benchmark_timing
from npace.scenarios import SCENARIO_NAMES, make_scenario


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenario", choices=SCENARIO_NAMES, default="intersection")
    parser.add_argument(
        "--methods", default="complete,npace", help="comma-separated labels"
    )
    parser.add_argument("--runs", type=int, default=30)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    scenario = make_scenario(args.scenario)
    print(f"scenario {args.scenario}, {args.runs} runs per method")
    row = "{:18} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}"
    print(
        row.format(
            "method", "ctrl med", "ctrl p95", "est med", "est p95", "tot med", "tot p95"
        )
    )
    for label in (m for m in args.methods.split(",") if m):
        table = benchmark_timing(scenario, label, runs=args.runs, seed=args.seed)
        print(
            row.format(
                label,
                f"{table.control_median_ms:.2f}",
                f"{table.control_p95_ms:.2f}",
                f"{table.estimation_median_ms:.2f}",
                f"{table.estimation_p95_ms:.2f}",
                f"{table.total_median_ms:.2f}",
                f"{table.total_p95_ms:.2f}",
            )
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
