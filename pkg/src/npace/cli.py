"""
Command-line front end.

Four subcommands: `simulate` runs one closed-loop game and reports its
metrics, `montecarlo` runs a paired sweep and writes per-run CSV logs plus
a summary file, `benchmark` times the per-step solver work, and `check`
runs the built-in verification battery.  Method names accept hyphens on
the command line (npace-comm) and map to the internal labels.
"""

import argparse
import statistics
import sys
from pathlib import Path
from typing import Optional, Sequence

from npace.checks import run_all_checks
from npace.game import ContractError
from npace.harness import (
    benchmark_timing,
    compute_metrics,
    load_config,
    render_summary,
    run_montecarlo,
    simulate_run,
    write_run_csv,
)
from npace.loop import METHODS
from npace.scenarios import (
    SCENARIO_NAMES,
    VARIANTS,
    Scenario,
    build_scenario,
    default_config,
)


def _method_label(raw: str) -> str:
    """CLI method name (hyphenated) to the internal label."""
    label = raw.replace("-", "_")
    if label.split("_eta")[0] not in METHODS:
        raise ContractError(
            f"unknown method {raw!r}; choose from "
            + ", ".join(m.replace("_", "-") for m in METHODS)
        )
    return label


def _load_scenario(name: str, config_path: Optional[str]) -> Scenario:
    if config_path is None:
        return build_scenario(default_config(name))
    config = load_config(Path(config_path))
    if config.name != name:
        raise ContractError(
            f"config file describes scenario {config.name!r}, not {name!r}."
        )
    return build_scenario(config)


def _cmd_simulate(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args.scenario, args.config)
    method = _method_label(args.method)
    if method == "npace_comm":
        if args.eta is None:
            raise ContractError("npace-comm requires --eta.")
        label = f"npace_comm_eta{args.eta:g}"
    else:
        if args.eta is not None:
            raise ContractError("--eta applies to npace-comm only.")
        label = method
    log = simulate_run(scenario, label, seed=args.seed)

    print(f"scenario:  {scenario.name}")
    print(f"method:    {label}")
    print(f"steps:     {len(log.records)} of {scenario.spec.horizon_steps}")
    if log.failed:
        print(f"FAILED:    {log.failure}")
    else:
        metrics = compute_metrics(log, scenario)
        if metrics.collision is not None:
            print(f"collision: {metrics.collision}")
        if metrics.min_separation is not None:
            print(f"min separation:      {metrics.min_separation:.3f}")
        if metrics.crossing_times is not None:
            crossings = ", ".join(
                "-" if t is None else f"{t:.2f}s" for t in metrics.crossing_times
            )
            print(f"crossing times:      {crossings}")
        print(
            "total costs:         "
            + ", ".join(f"{c:.3f}" for c in metrics.total_costs)
        )
        if metrics.final_abs_errors is not None:
            errors = ", ".join(
                f"{name}={err:.3f}"
                for name, err in zip(scenario.intent_names, metrics.final_abs_errors)
            )
            print(f"final intent errors: {errors}")
        control_median = statistics.median(float(v) for v in metrics.control_ms)
        print(f"control median:      {control_median:.1f} ms")
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{label}.csv"
        write_run_csv(log, scenario, path)
        print(f"wrote:     {path}")
    return 1 if log.failed else 0


def _cmd_montecarlo(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args.scenario, args.config)
    methods = [_method_label(m) for m in args.methods.split(",") if m]
    etas = [float(v) for v in args.eta_list.split(",") if v] if args.eta_list else []
    summary = run_montecarlo(
        scenario,
        methods,
        runs=args.runs,
        seed=args.seed,
        etas=etas,
        out_dir=Path(args.out),
        variant=args.variant,
        workers=args.workers,
    )
    print(render_summary(summary), end="")
    return 0


def _cmd_benchmark(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args.scenario, args.config)
    table = benchmark_timing(
        scenario, _method_label(args.method), runs=args.runs, seed=args.seed
    )
    print(f"scenario: {scenario.name}  method: {args.method}  runs: {table.runs}")
    print(f"steps timed: {table.steps}")
    for part in ("control", "estimation", "total"):
        median = getattr(table, f"{part}_median_ms")
        p95 = getattr(table, f"{part}_p95_ms")
        print(f"{part:>10}: median {median:8.2f} ms   p95 {p95:8.2f} ms")
    return 0


def _cmd_check(_args: argparse.Namespace) -> int:
    failures = 0
    for name, passed, detail in run_all_checks():
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        failures += 0 if passed else 1
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="npace",
        description="Two-player dynamic games with mutual online intent estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument("scenario", choices=SCENARIO_NAMES)
        p.add_argument("--config", help="scenario config file overriding the defaults")

    sim = sub.add_parser("simulate", help="run one closed-loop game")
    scenario_arg(sim)
    sim.add_argument("--method", required=True, help="complete, expert, npace, npace-comm, minmax, or mpc")
    sim.add_argument("--eta", type=float, help="signaling weight (npace-comm only)")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", help="directory for the run CSV")
    sim.set_defaults(handler=_cmd_simulate)

    mc = sub.add_parser("montecarlo", help="paired Monte Carlo sweep")
    scenario_arg(mc)
    mc.add_argument("--runs", type=int, required=True)
    mc.add_argument("--methods", required=True, help="comma-separated method list")
    mc.add_argument("--eta-list", help="comma-separated weights for npace-comm")
    mc.add_argument("--seed", type=int, required=True)
    mc.add_argument("--out", required=True, help="directory for CSV logs and summary")
    mc.add_argument("--variant", choices=VARIANTS, default="intents")
    mc.add_argument("--workers", type=int, default=1)
    mc.set_defaults(handler=_cmd_montecarlo)

    bench = sub.add_parser("benchmark", help="time per-step solver work")
    scenario_arg(bench)
    bench.add_argument("--method", required=True)
    bench.add_argument("--runs", type=int, default=30)
    bench.add_argument("--seed", type=int, default=0)
    bench.set_defaults(handler=_cmd_benchmark)

    chk = sub.add_parser("check", help="run the built-in verification battery")
    chk.set_defaults(handler=_cmd_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ContractError as error:
        print(f"error: {error}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
