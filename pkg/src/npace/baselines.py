"""
Non-learning comparison controllers.

Two families live here.  The worst-case controller assumes nothing about the
peer beyond a bounded intent set: it searches that set for the intent that
maximizes the ego's complete-information equilibrium cost and plays against
it.  The filtering controller drops the game structure entirely: it models
the peer as an affine goal-seeking feedback law, tracks the law's parameters
online with an extended Kalman filter, folds the fitted law into the
dynamics, and solves a single-agent receding-horizon problem against it.

Both produce one action per call; the surrounding run loop owns records and
timing.
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from npace.game import (
    ContractError,
    CostExpansion,
    CostModel,
    DivergedRolloutError,
    DoubleArray,
    DynamicsModel,
    GameSpec,
)
from npace.ilq import IlqDivergenceError, IlqOptions, IlqSolution, solve_ilq

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class MinMaxConfig:
    """Worst-case search settings over the opponent's admissible intents.

    :param intent_box: (low, high) bounds on the opponent intent vector.
    :param tolerance: interval width at which the scalar search stops.
    :param max_evaluations: cap on equilibrium solves per search.
    """

    intent_box: Tuple[DoubleArray, DoubleArray]
    tolerance: float = 0.1
    max_evaluations: int = 40

    def __post_init__(self) -> None:
        low, high = self.intent_box
        if low.shape != high.shape or np.any(low > high):
            raise ContractError("intent_box must satisfy low <= high with equal shapes.")
        if self.tolerance <= 0.0 or self.max_evaluations < 2:
            raise ContractError("tolerance must be > 0 and max_evaluations >= 2.")


@dataclass(frozen=True)
class MinMaxOutcome:
    """Worst-case action plus the search evidence behind it."""

    action: DoubleArray
    worst_intent: DoubleArray
    predicted_cost: float
    evaluations: int
    solution: IlqSolution
    warnings: Tuple[str, ...] = ()


def minmax_action(
    spec: GameSpec,
    state: DoubleArray,
    agent: int,
    own_intent: DoubleArray,
    config: MinMaxConfig,
    options: IlqOptions = IlqOptions(),
    warm_start=None,
) -> MinMaxOutcome:
    """Act against the most costly admissible opponent intent.

    Golden-section search over each opponent-intent coordinate (the search is
    exact for the scalar intents used in practice; multi-dimensional boxes
    get one coordinate sweep each).  Every evaluation solves the
    complete-information equilibrium at (own_intent, candidate) and scores
    the ego agent's cumulative cost; candidates whose solve diverges score
    +inf and are recorded as warnings.
    """
    low, high = config.intent_box
    p = low.shape[0]
    warnings: List[str] = []
    evaluations = 0
    cache: dict = {}
    best_warm = warm_start

    def evaluate(candidate: DoubleArray) -> Tuple[float, Optional[IlqSolution]]:
        nonlocal evaluations, best_warm
        key = tuple(np.round(candidate, 12))
        if key in cache:
            return cache[key]
        evaluations += 1
        intents = tuple(
            own_intent if k == agent else candidate for k in range(2)
        )
        try:
            solution = solve_ilq(spec, state, intents, warm_start=best_warm, options=options)  # type: ignore[arg-type]
            best_warm = solution.policies
            cost = float(
                np.sum(
                    spec.costs[agent].stage(
                        solution.trajectory.states[:-1],
                        solution.trajectory.actions[0],
                        solution.trajectory.actions[1],
                        own_intent,
                        candidate,
                    )
                )
            )
            result = (cost, solution)
        except (IlqDivergenceError, DivergedRolloutError) as err:
            warnings.append(f"candidate {np.array2string(candidate)} diverged: {err}")
            result = (float("inf"), None)
        cache[key] = result
        return result

    worst = 0.5 * (low + high)
    for c in range(p):
        lo, hi = float(low[c]), float(high[c])
        if hi - lo < 1e-12:
            worst[c] = lo
            continue
        inner_lo, inner_hi = lo, hi
        left = inner_hi - GOLDEN * (inner_hi - inner_lo)
        right = inner_lo + GOLDEN * (inner_hi - inner_lo)

        def at(value: float) -> float:
            probe = worst.copy()
            probe[c] = value
            return evaluate(probe)[0]

        # The box edges are probed first: interior golden-section points
        # never touch them, yet a cost convex in the candidate peaks exactly
        # there.  Every probe is kept so the sweep returns the best seen.
        seen = [(at(lo), lo), (at(hi), hi)]
        if evaluations < config.max_evaluations:
            value_left = at(left)
            seen.append((value_left, left))
            if evaluations < config.max_evaluations:
                value_right = at(right)
                seen.append((value_right, right))
                while (
                    inner_hi - inner_lo > config.tolerance
                    and evaluations < config.max_evaluations
                ):
                    if value_left < value_right:  # keep the larger-cost side
                        inner_lo, left, value_left = left, right, value_right
                        right = inner_lo + GOLDEN * (inner_hi - inner_lo)
                        value_right = at(right)
                        seen.append((value_right, right))
                    else:
                        inner_hi, right, value_right = right, left, value_left
                        left = inner_hi - GOLDEN * (inner_hi - inner_lo)
                        value_left = at(left)
                        seen.append((value_left, left))
        worst[c] = max(seen, key=lambda pair: pair[0])[1]

    predicted_cost, solution = evaluate(worst)
    if solution is None:
        # Fall back to the box midpoint; a diverging worst case cannot be played.
        worst = 0.5 * (low + high)
        predicted_cost, solution = evaluate(worst)
        if solution is None:
            raise IlqDivergenceError("worst-case and midpoint intents both diverged.")
    action = solution.trajectory.actions[agent][0].copy()
    return MinMaxOutcome(
        action=action,
        worst_intent=worst,
        predicted_cost=predicted_cost,
        evaluations=evaluations,
        solution=solution,
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class PeerPolicyModel:
    """Affine goal-seeking model of the peer, tracked by an extended Kalman filter.

    The peer is modeled as a(s) = gains @ (s - goal_point(goal_estimate)) + bias.
    The filter state stacks (goal_estimate, vec(gains), bias) with covariance
    over the whole stack; `goal_point` and its Jacobian come from the scenario.

    Two guards keep the fitted law usable inside a planner.  The goal estimate
    is clamped to `goal_box` after every update, matching how the game-side
    learners treat intent bounds.  The modeled action saturates at
    `action_envelope`: an affine fit is only trusted near the data that
    produced it, and letting it extrapolate freely along a multi-second
    rollout makes the believed plant exponentially unstable.

    :param process_noise: per-step random-walk variance added to the covariance.
    :param observation_noise: std of the assumed action observation noise.
    :param reinflation: covariance reset scale when positive-definiteness is lost.
    :param goal_box: optional (low, high) clamp on the goal estimate.
    :param action_envelope: optional per-channel cap on |modeled action|.
    """

    goal_estimate: DoubleArray  # [p]
    gains: DoubleArray  # [m, n]
    bias: DoubleArray  # [m]
    covariance: DoubleArray  # [p + m*n + m, p + m*n + m]
    goal_point: Callable[[DoubleArray], DoubleArray]
    goal_point_jacobian: Callable[[DoubleArray], DoubleArray]
    process_noise: float = 1.0e-4
    observation_noise: float = 0.5
    reinflation: float = 10.0
    goal_box: Optional[Tuple[DoubleArray, DoubleArray]] = None
    action_envelope: Optional[float] = None

    def __post_init__(self) -> None:
        p = self.goal_estimate.shape[0]
        m, n = self.gains.shape
        size = p + m * n + m
        if self.bias.shape != (m,):
            raise ContractError("bias must match the gain row count.")
        if self.covariance.shape != (size, size):
            raise ContractError(f"covariance must be [{size}, {size}].")
        if not np.allclose(self.covariance, self.covariance.T, atol=1e-9):
            raise ContractError("covariance must be symmetric.")
        if np.min(np.linalg.eigvalsh(self.covariance)) <= 0.0:
            raise ContractError("covariance must be positive definite.")
        if self.process_noise < 0.0 or self.observation_noise <= 0.0:
            raise ContractError("noise scales must be positive.")
        if self.goal_box is not None:
            low, high = self.goal_box
            if low.shape != (p,) or high.shape != (p,) or np.any(low > high):
                raise ContractError("goal_box must satisfy low <= high with shape [p].")
        if self.action_envelope is not None and self.action_envelope <= 0.0:
            raise ContractError("action_envelope must be positive.")

    @property
    def parameter_size(self) -> int:
        m, n = self.gains.shape
        return self.goal_estimate.shape[0] + m * n + m

    def predicted_action(self, state: DoubleArray) -> DoubleArray:
        raw = self.gains @ (state - self.goal_point(self.goal_estimate)) + self.bias
        if self.action_envelope is None:
            return raw
        return np.clip(raw, -self.action_envelope, self.action_envelope)


def initial_peer_model(
    goal_estimate: DoubleArray,
    action_dim: int,
    state_dim: int,
    goal_point: Callable[[DoubleArray], DoubleArray],
    goal_point_jacobian: Callable[[DoubleArray], DoubleArray],
    prior_variance: float = 10.0,
    process_noise: float = 1.0e-4,
    observation_noise: float = 0.5,
    goal_box: Optional[Tuple[DoubleArray, DoubleArray]] = None,
    action_envelope: Optional[float] = None,
) -> PeerPolicyModel:
    """Fresh peer model: zero feedback, zero bias, broad diagonal prior."""
    size = goal_estimate.shape[0] + action_dim * state_dim + action_dim
    return PeerPolicyModel(
        goal_estimate=goal_estimate.astype(float).copy(),
        gains=np.zeros((action_dim, state_dim)),
        bias=np.zeros(action_dim),
        covariance=prior_variance * np.eye(size),
        goal_point=goal_point,
        goal_point_jacobian=goal_point_jacobian,
        process_noise=process_noise,
        observation_noise=observation_noise,
        goal_box=goal_box,
        action_envelope=action_envelope,
    )


def update_peer_model(
    model: PeerPolicyModel,
    state: DoubleArray,
    observed_action: DoubleArray,
) -> Tuple[PeerPolicyModel, bool]:
    """One EKF step on the peer model from an observed (state, action) pair.

    Random-walk process noise inflates the covariance first, then the
    measurement update pulls the stacked parameters toward explaining the
    observation.  Returns (next model, reinflated), the flag set when the
    posterior covariance lost positive-definiteness and was reset.
    """
    p = model.goal_estimate.shape[0]
    m, n = model.gains.shape
    size = model.parameter_size

    covariance = model.covariance + model.process_noise * np.eye(size)

    goal = model.goal_point(model.goal_estimate)
    offset = state - goal
    predicted = model.gains @ offset + model.bias
    jac = np.zeros((m, size))
    jac[:, :p] = -model.gains @ model.goal_point_jacobian(model.goal_estimate)
    jac[:, p : p + m * n] = np.kron(np.eye(m), offset)
    jac[:, p + m * n :] = np.eye(m)

    innovation_cov = jac @ covariance @ jac.T + model.observation_noise**2 * np.eye(m)
    gain = np.linalg.solve(innovation_cov.T, (covariance @ jac.T).T).T
    delta = gain @ (observed_action - predicted)
    covariance = covariance - gain @ jac @ covariance
    covariance = 0.5 * (covariance + covariance.T)

    reinflated = False
    if np.min(np.linalg.eigvalsh(covariance)) <= 0.0:
        covariance = model.reinflation * np.eye(size)
        reinflated = True

    goal_estimate = model.goal_estimate + delta[:p]
    if model.goal_box is not None:
        goal_estimate = np.clip(goal_estimate, model.goal_box[0], model.goal_box[1])

    return (
        replace(
            model,
            goal_estimate=goal_estimate,
            gains=model.gains + delta[p : p + m * n].reshape(m, n),
            bias=model.bias + delta[p + m * n :],
            covariance=covariance,
        ),
        reinflated,
    )


def _frozen_peer_spec(spec: GameSpec, agent: int, model: PeerPolicyModel) -> GameSpec:
    """Single-agent problem with the modeled peer folded into the dynamics.

    The peer's affine law replaces its action everywhere in the dynamics; a
    one-dimensional dummy agent with zero input matrix and unit action cost
    stands in for the second player so the game solver applies unchanged (its
    equilibrium policy is exactly zero).  Scenario costs carry no cross-agent
    action terms, so the ego cost keeps its own expansion blocks.
    """
    peer = 1 - agent
    n = spec.state_dim
    m_own = spec.action_dims[agent]

    def raw_peer_action(s: DoubleArray) -> DoubleArray:
        offset = s - model.goal_point(model.goal_estimate)
        return offset @ model.gains.T + model.bias

    def peer_action(s: DoubleArray) -> DoubleArray:
        raw = raw_peer_action(s)
        if model.action_envelope is None:
            return raw
        return np.clip(raw, -model.action_envelope, model.action_envelope)

    def split(s, own_action):
        a = [None, None]
        a[agent] = own_action
        a[peer] = peer_action(s)
        return a[0], a[1]

    def vector_field(s, own_action, dummy):
        a1, a2 = split(s, own_action)
        return spec.dynamics.vector_field(s, a1, a2)

    def jacobians(s, own_action, dummy):
        a1, a2 = split(s, own_action)
        f_s, f_a1, f_a2 = spec.dynamics.jacobians(s, a1, a2)
        f_peer = f_a1 if peer == 0 else f_a2
        f_own = f_a1 if agent == 0 else f_a2
        gains = model.gains
        if model.action_envelope is not None:
            # Saturated channels stop responding to the state.
            live = (np.abs(raw_peer_action(s)) < model.action_envelope).astype(float)
            gains = live[..., :, None] * model.gains
        closed_f_s = f_s + f_peer @ gains
        dummy_jac = np.zeros(s.shape[:-1] + (n, 1))
        return closed_f_s, f_own, dummy_jac

    dynamics = DynamicsModel(
        state_dim=n,
        action_dims=(m_own, 1),
        vector_field=vector_field,
        jacobians=jacobians,
    )

    base_cost = spec.costs[agent]

    def stage(s, own_action, dummy, own, peer_intent):
        a1, a2 = split(s, own_action)
        return base_cost.stage(s, a1, a2, own, peer_intent)

    def expand(s, own_action, dummy, own, peer_intent):
        a1, a2 = split(s, own_action)
        exp = base_cost.expand(s, a1, a2, own, peer_intent)
        lead = s.shape[:-1]
        own_grad = exp.grad_action_1 if agent == 0 else exp.grad_action_2
        own_hess = exp.hess_action_1 if agent == 0 else exp.hess_action_2
        return CostExpansion(
            grad_state=exp.grad_state,
            grad_action_1=own_grad,
            grad_action_2=np.zeros(lead + (1,)),
            hess_state=exp.hess_state,
            hess_action_1=own_hess,
            hess_action_2=np.zeros(lead + (1, 1)),
        )

    def grad_intent(s, own_action, dummy, own, peer_intent):
        a1, a2 = split(s, own_action)
        return base_cost.grad_intent(s, a1, a2, own, peer_intent)

    ego_cost = CostModel(
        intent_dim=base_cost.intent_dim,
        stage=stage,
        expand=expand,
        grad_intent=grad_intent,
    )

    def dummy_stage(s, own_action, dummy, own, peer_intent):
        return 0.5 * dummy[..., 0] ** 2

    def dummy_expand(s, own_action, dummy, own, peer_intent):
        lead = s.shape[:-1]
        return CostExpansion(
            grad_state=np.zeros(lead + (n,)),
            grad_action_1=np.zeros(lead + (m_own,)),
            grad_action_2=dummy.copy(),
            hess_state=np.zeros(lead + (n, n)),
            hess_action_1=np.zeros(lead + (m_own, m_own)),
            hess_action_2=np.ones(lead + (1, 1)),
        )

    # The dummy agent carries the peer's intent vector so the ego cost can
    # read the fitted goal estimate through its peer-intent slot.
    peer_intent_dim = spec.costs[peer].intent_dim

    def dummy_grad_intent(s, own_action, dummy, own, peer_intent):
        return np.zeros(s.shape[:-1] + (peer_intent_dim,))

    dummy_cost = CostModel(
        intent_dim=peer_intent_dim,
        stage=dummy_stage,
        expand=dummy_expand,
        grad_intent=dummy_grad_intent,
    )

    return GameSpec(
        dt=spec.dt,
        horizon_steps=spec.horizon_steps,
        dynamics=dynamics,
        costs=(ego_cost, dummy_cost),
        intent_bounds=(spec.intent_bounds[agent], spec.intent_bounds[peer]),
    )


def mpc_action(
    spec: GameSpec,
    state: DoubleArray,
    agent: int,
    own_intent: DoubleArray,
    model: PeerPolicyModel,
    options: IlqOptions = IlqOptions(),
    warm_start=None,
) -> Tuple[DoubleArray, IlqSolution]:
    """Receding-horizon best response to the current fitted peer model.

    Builds the frozen-peer single-agent problem and runs the iterative solver
    on it; returns the first action and the solution (whose policies warm
    start the next step after a one-step shift).
    """
    composed = _frozen_peer_spec(spec, agent, model)
    # The ego agent always occupies slot 0 of the composed problem; the peer
    # slot carries the fitted goal estimate so costs coupled through the
    # peer's intent (shared-goal games) are evaluated at the model's belief.
    intents = (own_intent, model.goal_estimate)
    solution = solve_ilq(composed, state, intents, warm_start=warm_start, options=options)  # type: ignore[arg-type]
    return solution.trajectory.actions[0][0].copy(), solution
