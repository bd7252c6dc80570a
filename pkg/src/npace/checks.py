"""
Built-in verification battery behind the `check` CLI command.

Five fast self-checks cover the numerical core: equilibrium stationarity
on random linear-quadratic games, one-iteration exactness of the iterative
solver on that class, the Gaussian intent learner against the closed-form
scalar filter, the shared estimate ledger on a short mutual-learning run,
and the case-study cost anchors.  Each check returns (name, passed,
detail); the battery never raises on failure so the CLI can report every
result and exit nonzero.
"""

import math
from dataclasses import replace
from typing import Callable, List, Tuple

import numpy as np

from npace.game import rollout, zero_policy
from npace.ilq import linearize_quadratize, solve_ilq
from npace.learning import GaussianBelief
from npace.loop import RunOptions, WarmStarts, npace_step
from npace.lqgame import solve_lq_nash, stationarity_residual
from npace.scenarios import (
    build_scenario,
    default_config,
    initial_estimator_state,
    make_scenario,
)
from npace.synthetic import random_lq_data, random_lq_game

CheckResult = Tuple[str, bool, str]


def check_lq_stationarity() -> CheckResult:
    """Random LQ games: the returned policies must be Nash-stationary."""
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        lq = random_lq_data(rng, n, int(rng.integers(1, 3)), int(rng.integers(1, 3)), 8)
        solution = solve_lq_nash(lq)
        states = rng.normal(size=(5, n))
        worst = max(worst, stationarity_residual(solution, states))
    return (
        "lq_nash_stationarity",
        worst <= 1.0e-8,
        f"max action-gradient residual {worst:.3e} (limit 1e-8)",
    )


def check_ilq_exactness() -> CheckResult:
    """On LQ instances the iterative solver finishes in one exact iteration."""
    rng = np.random.default_rng(1)
    intents = (np.zeros(1), np.zeros(1))
    iterations = []
    worst = 0.0
    for _ in range(5):
        spec = random_lq_game(rng, 3, 1, 2, 10)
        state = rng.normal(size=3)
        solution = solve_ilq(spec, state, intents)
        iterations.append(solution.iterations)
        coast = rollout(
            spec, state, tuple(zero_policy(10, m, 3) for m in spec.action_dims)
        )
        direct = solve_lq_nash(linearize_quadratize(spec, coast, intents))
        for k in range(2):
            worst = max(
                worst,
                float(np.max(np.abs(solution.policies[k].gains - direct.policies[k].gains))),
            )
    passed = all(i == 1 for i in iterations) and worst <= 1.0e-10
    return (
        "ilq_exact_on_lq",
        passed,
        f"iterations {iterations}, max gain gap vs direct solve {worst:.3e}",
    )


def check_kalman_oracle() -> CheckResult:
    """Gaussian learner against the closed-form scalar filter."""
    belief = GaussianBelief(
        mean=np.array([2.0]), covariance=np.array([[4.0]]), action_noise=0.5
    )
    mean, variance = 2.0, 4.0
    worst = 0.0
    rng = np.random.default_rng(2)
    for _ in range(20):
        jac = float(rng.normal())
        predicted = float(rng.normal())
        observed = predicted + jac * (rng.normal() - mean) * 0.1
        belief = belief.updated(
            np.array([[jac]]), np.array([predicted]), np.array([observed])
        )
        gain = variance * jac / (0.25 + jac * jac * variance)
        mean = mean + gain * (observed - predicted)
        variance = variance - gain * jac * variance
        worst = max(
            worst,
            abs(float(belief.mean[0]) - mean),
            abs(float(belief.covariance[0, 0]) - variance),
        )
    return (
        "kalman_scalar_oracle",
        worst <= 1.0e-12,
        f"max deviation from closed form {worst:.3e} (limit 1e-12)",
    )


def check_shared_ledger() -> CheckResult:
    """Mutual learning keeps both agents' estimate pairs bitwise equal."""
    config = replace(default_config("intersection"), horizon_seconds=0.5)
    scenario = build_scenario(config)
    spec = scenario.spec
    estimator = initial_estimator_state(config)
    truths = config.intent_vectors()
    state = config.initial_state.copy()
    warm = WarmStarts()
    options = RunOptions()
    shared = True
    for step in range(config.horizon_steps):
        actions, estimator, record = npace_step(
            spec, state, step, truths, estimator, options, warm, None
        )
        for k in range(2):
            same_mean = np.array_equal(
                estimator.beliefs[k].mean, estimator.reflected[1 - k].mean
            )
            same_cov = np.array_equal(
                estimator.beliefs[k].covariance,
                estimator.reflected[1 - k].covariance,
            )
            shared = shared and same_mean and same_cov
        state = state + spec.dt * spec.dynamics.vector_field(state, *actions)
    return (
        "shared_estimate_ledger",
        shared,
        "estimate pairs bitwise equal at every step"
        if shared
        else "ledgers diverged",
    )


def check_cost_anchors() -> CheckResult:
    """Hand-computed stage-cost values for all three case studies."""
    failures: List[str] = []

    lander = make_scenario("lunar_lander")
    s = np.array([0.0, 0.0, math.pi / 2.0, 0.0, 0.0, 0.0])
    value = float(
        lander.spec.costs[0].stage(
            s, np.array([1.0]), np.array([0.0]), np.array([-5.0]), np.array([5.0])
        )
    )
    if abs(value - 501.0) > 1.0e-9:
        failures.append(f"lander anchor {value} != 501")

    merge = make_scenario("lane_merge")
    s = np.array([2.0, 0.0, 0.0, 0.0, 0.0, 0.0])  # squared gap 4 = d_safe
    zero1, zero2 = np.array([0.0]), np.array([0.0, 0.0])
    lifted = float(merge.spec.costs[0].stage(s, zero1, zero2, np.array([7.0]), zero1))
    base = float(merge.spec.costs[0].stage(s, zero1, zero2, np.array([0.0]), zero1))
    if abs((lifted - base) - 7.0) > 1.0e-9:
        failures.append(f"merge proximity gain {lifted - base} != 7")
    s = np.array([3.0, 0.0, 0.0, 0.0, 0.0, 0.0])  # squared gap 9, five past d_safe
    lifted = float(merge.spec.costs[0].stage(s, zero1, zero2, np.array([7.0]), zero1))
    base = float(merge.spec.costs[0].stage(s, zero1, zero2, np.array([0.0]), zero1))
    if abs((lifted - base) - 7.0 * math.exp(-5.0)) > 1.0e-9:
        failures.append(f"merge proximity decay {lifted - base} != 7/e^5")

    crossing = make_scenario("intersection")
    s = np.array([1.0, 0.0, math.sqrt(2.0), 0.0])  # squared distance 3 = d_safe + 1
    zero = np.array([0.0])
    lifted = float(crossing.spec.costs[0].stage(s, zero, zero, np.array([3.0]), zero))
    base = float(crossing.spec.costs[0].stage(s, zero, zero, np.array([0.0]), zero))
    if abs((lifted - base) - 30.0 * math.exp(-1.0)) > 1.0e-9:
        failures.append(f"crossing proximity gain {lifted - base} != 30/e")

    return (
        "case_study_cost_anchors",
        not failures,
        "; ".join(failures) if failures else "all anchor values match",
    )


ALL_CHECKS: Tuple[Callable[[], CheckResult], ...] = (
    check_lq_stationarity,
    check_ilq_exactness,
    check_kalman_oracle,
    check_shared_ledger,
    check_cost_anchors,
)


def run_all_checks() -> List[CheckResult]:
    return [check() for check in ALL_CHECKS]
