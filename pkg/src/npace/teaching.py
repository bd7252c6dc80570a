"""
Intent-signaling action selection.

A learning peer infers the ego agent's intent from the actions it observes,
so the ego agent can spend a little control effort to make its intent easier
to read.  The selected action minimizes

    Phi(a) = one_step_cost(a) + weight * teaching_error(a)

over a box trust region around the nominal equilibrium action.  The first
term is the ego agent's quadratic cost-to-go built from its own converged
solve (with the peer's action held at its predicted policy value); the second
simulates the peer's next learning update as driven by the candidate action
and measures how far the peer's estimate of the ego intent would land from
the truth.  Only the peer's immediate next update is simulated, not its whole
future learning trajectory.

With weight zero the nominal action is returned untouched.  The inner
optimizer is projected gradient descent with finite-difference gradients and
monotone acceptance, so the returned action never scores worse than the
nominal one.
"""

import time
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from npace.game import ContractError, DoubleArray, GameSpec
from npace.ilq import IlqSolution
from npace.learning import GaussianBelief, GradientBelief, policy_jacobian

Belief = Union[GaussianBelief, GradientBelief]


@dataclass(frozen=True)
class TeachingConfig:
    """Weight and inner-optimizer settings for intent-signaling actions.

    :param weight: trade-off between control cost and peer estimation error.
    :param trust_radius: max-norm box half-width around the nominal action.
    :param gradient_steps: projected-gradient iteration budget.
    :param initial_step: first gradient step length; adapted by backtracking.
    :param fd_step: half-width of the central difference in action space.
    :param stationarity_tolerance: projected-gradient residual below which
        the inner solve counts as stationary.
    """

    weight: float
    trust_radius: float = 2.0
    gradient_steps: int = 25
    initial_step: float = 0.5
    fd_step: float = 1.0e-4
    stationarity_tolerance: float = 1.0e-6

    def __post_init__(self) -> None:
        if self.weight < 0.0:
            raise ContractError("weight must be >= 0.")
        if self.trust_radius <= 0.0:
            raise ContractError("trust_radius must be > 0.")
        if self.gradient_steps < 1 or self.initial_step <= 0.0 or self.fd_step <= 0.0:
            raise ContractError("optimizer settings must be positive.")


@dataclass(frozen=True)
class TeachingOutcome:
    """Result of one teaching-action optimization.

    fell_back is set when the inner optimizer met a non-finite objective and
    the nominal action was returned instead.  stationary reports whether the
    projected-gradient residual reached tolerance, which gates the
    monotonicity guarantees downstream tests rely on.  nominal_objective is
    the objective value at the unadjusted action; the optimizer only accepts
    improvements, so objective <= nominal_objective whenever both are finite.
    """

    action: DoubleArray
    objective: float
    nominal_objective: float
    error: float
    stationary: bool
    fell_back: bool
    seconds: float


def teaching_error(
    spec: GameSpec,
    state: DoubleArray,
    agent: int,
    candidate: DoubleArray,
    peer_belief_of_self: Belief,
    true_intent: DoubleArray,
    predictive: IlqSolution,
    jacobian: Optional[DoubleArray] = None,
    predicted: Optional[DoubleArray] = None,
) -> float:
    """Peer estimation error after one learning update driven by `candidate`.

    Simulates the peer updating its belief about the ego agent's intent: the
    peer compares `candidate` against the action predicted for the ego agent
    by the shared predictive solve, moves its belief along the predictive
    policy's intent sensitivity, and clamps to the intent box.  Returns the
    squared distance of the updated mean to the true intent.

    `jacobian` and `predicted` can be passed in when the caller already has
    them; they depend only on the predictive solution, not the candidate.
    """
    if jacobian is None:
        jacobian = policy_jacobian(spec, predictive, agent, state=state)
    if predicted is None:
        predicted = predictive.policies[agent].action(0, state)
    updated = peer_belief_of_self.updated(
        jacobian, predicted, candidate, spec.intent_bounds[agent]
    )
    gap = updated.mean - true_intent
    return float(gap @ gap)


def teaching_action(
    spec: GameSpec,
    state: DoubleArray,
    agent: int,
    nominal: DoubleArray,
    config: TeachingConfig,
    ego: IlqSolution,
    peer_belief_of_self: Belief,
    true_intent: DoubleArray,
    predictive: IlqSolution,
) -> TeachingOutcome:
    """Pick the current action that trades control cost against readability.

    Minimizes the ego one-step cost-to-go plus `config.weight` times the
    simulated peer estimation error, over the box
    ||a - nominal||_inf <= trust_radius.  With weight zero the nominal action
    is returned exactly: the objective then has no signaling term and the
    nominal action already is the solver's equilibrium choice.
    """
    started = time.perf_counter()
    if config.weight == 0.0:
        base_error = teaching_error(
            spec, state, agent, nominal, peer_belief_of_self, true_intent, predictive
        )
        return TeachingOutcome(
            action=nominal,
            objective=float("nan"),
            nominal_objective=float("nan"),
            error=base_error,
            stationary=True,
            fell_back=False,
            seconds=time.perf_counter() - started,
        )

    peer = 1 - agent
    eff = ego.lq_solution.effective
    own_b = eff.action_jacobians[agent][0]
    peer_b = eff.action_jacobians[peer][0]
    r_own = eff.action_hessians[agent][agent][0]
    r_own_lin = eff.action_grads[agent][agent][0]
    value_hess = ego.lq_solution.value_hessians[agent][1]
    value_grad = ego.lq_solution.value_grads[agent][1]
    base_action = ego.trajectory.actions[agent][0]
    # Peer action frozen at its predicted policy value at the current state.
    peer_dev = ego.policies[peer].action(0, state) - ego.trajectory.actions[peer][0]
    peer_drift = peer_b @ peer_dev

    def one_step_cost(action: DoubleArray) -> float:
        own_dev = action - base_action
        next_dev = own_b @ own_dev + peer_drift
        return float(
            0.5 * own_dev @ r_own @ own_dev
            + r_own_lin @ own_dev
            + 0.5 * next_dev @ value_hess @ next_dev
            + value_grad @ next_dev
        )

    jacobian = policy_jacobian(spec, predictive, agent, state=state)
    predicted = predictive.policies[agent].action(0, state)

    def objective(action: DoubleArray) -> float:
        return one_step_cost(action) + config.weight * teaching_error(
            spec,
            state,
            agent,
            action,
            peer_belief_of_self,
            true_intent,
            predictive,
            jacobian=jacobian,
            predicted=predicted,
        )

    low = nominal - config.trust_radius
    high = nominal + config.trust_radius

    def gradient(action: DoubleArray) -> DoubleArray:
        grad = np.empty_like(action)
        for c in range(action.shape[0]):
            bumped = action.copy()
            bumped[c] += config.fd_step
            up = objective(bumped)
            bumped[c] -= 2.0 * config.fd_step
            down = objective(bumped)
            grad[c] = (up - down) / (2.0 * config.fd_step)
        return grad

    current = nominal.copy()
    current_value = objective(current)
    nominal_value = current_value
    if not np.isfinite(current_value):
        base_error = teaching_error(
            spec, state, agent, nominal, peer_belief_of_self, true_intent, predictive,
            jacobian=jacobian, predicted=predicted,
        )
        return TeachingOutcome(
            action=nominal,
            objective=float("nan"),
            nominal_objective=nominal_value,
            error=base_error,
            stationary=False,
            fell_back=True,
            seconds=time.perf_counter() - started,
        )

    step = config.initial_step
    grad = gradient(current)
    for _ in range(config.gradient_steps):
        if not np.all(np.isfinite(grad)):
            return TeachingOutcome(
                action=nominal,
                objective=float("nan"),
                nominal_objective=nominal_value,
                error=teaching_error(
                    spec, state, agent, nominal, peer_belief_of_self, true_intent,
                    predictive, jacobian=jacobian, predicted=predicted,
                ),
                stationary=False,
                fell_back=True,
                seconds=time.perf_counter() - started,
            )
        moved = False
        while step > 1e-12:
            trial = np.clip(current - step * grad, low, high)
            trial_value = objective(trial)
            if np.isfinite(trial_value) and trial_value < current_value:
                current = trial
                current_value = trial_value
                step *= 1.5
                moved = True
                break
            step *= 0.5
        if not moved:
            break
        grad = gradient(current)

    residual = float(np.max(np.abs(current - np.clip(current - grad, low, high))))
    return TeachingOutcome(
        action=current,
        objective=current_value,
        nominal_objective=nominal_value,
        error=teaching_error(
            spec, state, agent, current, peer_belief_of_self, true_intent, predictive,
            jacobian=jacobian, predicted=predicted,
        ),
        stationary=residual <= config.stationarity_tolerance,
        fell_back=False,
        seconds=time.perf_counter() - started,
    )
