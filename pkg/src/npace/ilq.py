"""
Iterative LQ solver for the nonlinear two-player general-sum game.

Starting from an admissible policy pair (all-zero by default, or a warm
start), the solver alternates: roll the closed loop out, linearize the
dynamics and quadratize both stage costs around the iterate, solve the
resulting LQ game for its feedback Nash equilibrium, and re-center the LQ
policies onto the iterate with a damped feedforward.  The loop stops when
the state trajectory stops moving, which is the fixed-point notion of a
local equilibrium here: the returned policies reproduce the returned
trajectory exactly when rolled out.

Iteration counting: `iterations` is the number of accepted updates that
moved the trajectory by at least the tolerance.  The pass that finds the
iterate already fixed certifies convergence and is not counted, so an
exactly-LQ game reports one iteration and a warm start at the solution
reports zero.
"""

import dataclasses
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from npace.game import (
    AffinePolicy,
    ContractError,
    DivergedRolloutError,
    DoubleArray,
    GameSpec,
    IntentPair,
    Trajectory,
    eval_cost,
    rollout,
    zero_policy,
)
from npace.lqgame import DEFAULT_REGULARIZATION, LQApprox, LqSolution, solve_lq_nash


class IlqDivergenceError(RuntimeError):
    """Every damped candidate rollout diverged; no finite iterate exists."""


@dataclass(frozen=True)
class IlqOptions:
    """Iteration controls for solve_ilq.

    :param max_iterations: cap on accepted trajectory updates.
    :param trajectory_tolerance: max-norm state change below which the
        iterate counts as a fixed point [state units].
    :param step_scale_init: initial feedforward damping scale in (0, 1].
    :param step_backoff: multiplicative backoff applied on rejection.
    :param min_step_scale: floor for the damping scale; a finite candidate
        at the floor is accepted even if both costs rose.
    :param regularization: own-action Tikhonov seed forwarded to the LQ solve.
    """

    max_iterations: int = 50
    trajectory_tolerance: float = 1.0e-4
    step_scale_init: float = 1.0
    step_backoff: float = 0.5
    min_step_scale: float = 1.0 / 64.0
    regularization: float = DEFAULT_REGULARIZATION

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ContractError("max_iterations must be >= 1.")
        if self.trajectory_tolerance <= 0.0:
            raise ContractError("trajectory_tolerance must be > 0.")
        if not (0.0 < self.step_scale_init <= 1.0):
            raise ContractError("step_scale_init must be in (0, 1].")
        if not (0.0 < self.step_backoff < 1.0):
            raise ContractError("step_backoff must be in (0, 1).")
        if not (0.0 < self.min_step_scale <= self.step_scale_init):
            raise ContractError("min_step_scale must be in (0, step_scale_init].")


@dataclass(frozen=True)
class IlqSolution:
    """Converged (or best-iterate) equilibrium of the nonlinear game.

    The policies are centered on the converged trajectory: the feedforward
    equals minus the trajectory action, so rolling them out reproduces the
    trajectory bit for bit.  `lq` and `lq_solution` are the quadratization
    around that trajectory and its equilibrium, which downstream consumers
    use for policy sensitivities and one-step value models.
    """

    policies: Tuple[AffinePolicy, AffinePolicy]
    trajectory: Trajectory
    lq: LQApprox
    lq_solution: LqSolution
    intents: IntentPair
    iterations: int
    converged: bool


def linearize_quadratize(spec: GameSpec, trajectory: Trajectory, intents: IntentPair) -> LQApprox:
    """Expand dynamics and both stage costs around a trajectory.

    Dynamics become A_t = I + dt*df/ds and B_t^k = dt*df/da_k (exact for the
    Euler discretization).  Cost blocks are the analytic gradients/Hessians
    of each agent's stage cost at the trajectory points under the given
    intent pair; the terminal state-cost entry is zero because cumulative
    cost carries no terminal term.
    """
    if trajectory.horizon_steps != spec.horizon_steps:
        raise ContractError(
            f"trajectory spans {trajectory.horizon_steps} steps, spec expects "
            f"{spec.horizon_steps}."
        )
    states = trajectory.states[:-1]
    a1, a2 = trajectory.actions
    steps = spec.horizon_steps
    n = spec.state_dim

    f_s, f_a1, f_a2 = spec.dynamics.jacobians(states, a1, a2)
    state_jacs = np.eye(n) + spec.dt * f_s
    action_jacs = (spec.dt * f_a1, spec.dt * f_a2)

    state_hessians = []
    state_grads = []
    action_hessians = []
    action_grads = []
    for k in range(2):
        expansion = spec.costs[k].expand(states, a1, a2, intents[k], intents[1 - k])
        state_hessians.append(np.concatenate([expansion.hess_state, np.zeros((1, n, n))]))
        state_grads.append(np.concatenate([expansion.grad_state, np.zeros((1, n))]))
        action_hessians.append((expansion.hess_action_1, expansion.hess_action_2))
        action_grads.append((expansion.grad_action_1, expansion.grad_action_2))

    lq = LQApprox(
        state_jacobians=state_jacs,
        action_jacobians=action_jacs,
        state_hessians=tuple(state_hessians),  # type: ignore[arg-type]
        state_grads=tuple(state_grads),  # type: ignore[arg-type]
        action_hessians=tuple(action_hessians),  # type: ignore[arg-type]
        action_grads=tuple(action_grads),  # type: ignore[arg-type]
    )
    for name, blocks in (
        ("state_jacobians", (lq.state_jacobians,)),
        ("action_jacobians", lq.action_jacobians),
        ("state_hessians", lq.state_hessians),
        ("state_grads", lq.state_grads),
        ("action_hessians", lq.action_hessians[0] + lq.action_hessians[1]),
        ("action_grads", lq.action_grads[0] + lq.action_grads[1]),
    ):
        for block in blocks:
            if not np.all(np.isfinite(block)):
                bad = int(np.argwhere(~np.isfinite(block).reshape(block.shape[0], -1).all(axis=1))[0, 0])
                raise ContractError(f"non-finite {name} at step {bad}.")
    return lq


def _initial_trajectory(
    spec: GameSpec,
    initial_state: DoubleArray,
    warm_start: Optional[Tuple[AffinePolicy, AffinePolicy]],
) -> Trajectory:
    if warm_start is not None:
        try:
            return rollout(spec, initial_state, warm_start)
        except DivergedRolloutError:
            pass  # fall back to coasting below
    policies = tuple(zero_policy(spec.horizon_steps, m, spec.state_dim) for m in spec.action_dims)
    return rollout(spec, initial_state, policies)  # type: ignore[arg-type]


def solve_ilq(
    spec: GameSpec,
    initial_state: DoubleArray,
    intents: IntentPair,
    warm_start: Optional[Tuple[AffinePolicy, AffinePolicy]] = None,
    options: IlqOptions = IlqOptions(),
) -> IlqSolution:
    """Find a local feedback Nash equilibrium of the nonlinear game.

    Raises IlqDivergenceError when no damped candidate stays finite; returns
    the best iterate with converged=False when the iteration cap is reached.
    """
    initial_state = np.asarray(initial_state, dtype=float)
    trajectory = _initial_trajectory(spec, initial_state, warm_start)
    costs = [eval_cost(spec, trajectory, k, intents) for k in range(2)]

    lq: Optional[LQApprox] = None
    lq_solution: Optional[LqSolution] = None
    expansion_current = False
    iterations = 0
    converged = False
    for _ in range(options.max_iterations):
        lq = linearize_quadratize(spec, trajectory, intents)
        lq_solution = solve_lq_nash(lq, options.regularization)
        expansion_current = True

        candidate: Optional[Trajectory] = None
        candidate_costs = costs
        fallback: Optional[Tuple[Trajectory, List[float]]] = None
        undamped_change: Optional[float] = None
        scale = options.step_scale_init
        while True:
            trial_policies = tuple(
                AffinePolicy(
                    feedforwards=scale * lq_solution.policies[k].feedforwards
                    - trajectory.actions[k],
                    gains=lq_solution.policies[k].gains,
                    references=trajectory.states[:-1],
                )
                for k in range(2)
            )
            try:
                candidate = rollout(spec, initial_state, trial_policies)  # type: ignore[arg-type]
            except DivergedRolloutError:
                candidate = None
            if candidate is not None:
                candidate_costs = [eval_cost(spec, candidate, k, intents) for k in range(2)]
                if scale == options.step_scale_init:
                    undamped_change = float(
                        np.max(np.abs(candidate.states - trajectory.states))
                    )
                if fallback is None:
                    fallback = (candidate, candidate_costs)
                both_worse = candidate_costs[0] > costs[0] and candidate_costs[1] > costs[1]
                if not both_worse:
                    break
            if scale <= options.min_step_scale:
                if fallback is None:
                    raise IlqDivergenceError(
                        "all damped policy updates diverged during rollout."
                    )
                # Every damped candidate raised both costs: a cost increase is
                # a legal equilibrium move in a general-sum game, so take the
                # least-damped finite step rather than stalling.
                candidate, candidate_costs = fallback
                break
            scale *= options.step_backoff

        # The fixed-point test uses the undamped step: a heavily damped
        # candidate moving little says nothing about stationarity.
        if undamped_change is not None and undamped_change < options.trajectory_tolerance:
            converged = True
            break
        trajectory = candidate
        costs = candidate_costs
        expansion_current = False
        iterations += 1

    if not expansion_current or lq is None or lq_solution is None:
        lq = linearize_quadratize(spec, trajectory, intents)
        lq_solution = solve_lq_nash(lq, options.regularization)

    final_policies = tuple(
        AffinePolicy(
            feedforwards=-trajectory.actions[k],
            gains=lq_solution.policies[k].gains,
            references=trajectory.states[:-1],
        )
        for k in range(2)
    )
    return IlqSolution(
        policies=final_policies,  # type: ignore[arg-type]
        trajectory=trajectory,
        lq=lq,
        lq_solution=lq_solution,
        intents=intents,
        iterations=iterations,
        converged=converged,
    )


def local_nash_residual(solution: IlqSolution) -> float:
    """Max action-gradient of each agent's Q-function along the trajectory.

    Plays both agents' trajectory actions (zero deviation) and measures the
    gradient of stage-plus-value-to-go in each agent's own action under the
    final quadratization; small values certify a local equilibrium.
    """
    eff = solution.lq_solution.effective
    worst = 0.0
    for t in range(eff.horizon_steps):
        for k in range(2):
            grad = (
                eff.action_grads[k][k][t]
                + eff.action_jacobians[k][t].T @ solution.lq_solution.value_grads[k][t + 1]
            )
            worst = max(worst, float(np.max(np.abs(grad))))
    return worst


def shifted_warm_start(
    solution: IlqSolution,
) -> Optional[Tuple[AffinePolicy, AffinePolicy]]:
    """Drop the first step of a solution's policies for the next receding solve."""
    if solution.policies[0].horizon_steps <= 1:
        return None
    return tuple(policy.tail(1) for policy in solution.policies)  # type: ignore[return-value]


def receding_spec(spec: GameSpec, step: int) -> GameSpec:
    """Spec for the remaining horizon [step, T) of a full-horizon spec."""
    if not 0 <= step < spec.horizon_steps:
        raise ContractError(f"step {step} outside horizon {spec.horizon_steps}.")
    if step == 0:
        return spec
    return dataclasses.replace(spec, horizon_steps=spec.horizon_steps - step)
