"""
Assistive landing comparison.

Runs the shared-control landing game once per method on the nominal setup
and reports the landing miss (distance between the final position and the
jointly owned target) plus each intent's final estimation error.  The two
agents split the goal: one knows only the target altitude, the other only
the lateral target, so neither can land well before learning the peer's
coordinate.
"""

import argparse
import math
from pathlib import Path
from typing import Optional

from npace.harness import simulate_run, write_run_csv
from npace.loop import RunLog
from npace.scenarios import Scenario, make_scenario

METHOD_LABELS = ("complete", "expert", "npace", "mpc")


def landing_miss(log: RunLog) -> float:
    """Distance between the final (x, y) position and the true target."""
    y_goal = float(log.true_intents[0][0])
    x_goal = float(log.true_intents[1][0])
    return math.hypot(log.final_state[0] - x_goal, log.final_state[1] - y_goal)


def final_intent_errors(log: RunLog) -> Optional[tuple]:
    means = log.records[-1].estimate_means
    if means is None:
        return None
    return tuple(
        abs(float(means[j][0]) - float(log.true_intents[j][0])) for j in range(2)
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="directory for per-run CSV logs")
    args = parser.parse_args(argv)

    scenario: Scenario = make_scenario("lunar_lander")
    print(f"{'method':10} {'landing miss':>12} {'err(y_goal)':>12} {'err(x_goal)':>12}")
    for label in METHOD_LABELS:
        log = simulate_run(scenario, label, seed=args.seed)
        if log.failed:
            print(f"{label:10} FAILED: {log.failure}")
            continue
        errors = final_intent_errors(log)
        shown = (
            ("-", "-") if errors is None else tuple(f"{e:12.3f}" for e in errors)
        )
        print(
            f"{label:10} {landing_miss(log):12.3f} {shown[0]:>12} {shown[1]:>12}"
        )
        if args.out is not None:
            out_dir = Path(args.out)
            out_dir.mkdir(parents=True, exist_ok=True)
            write_run_csv(log, scenario, out_dir / f"{label}.csv")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
