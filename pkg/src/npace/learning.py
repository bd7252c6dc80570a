"""
Online intent estimation from observed actions.

Both learners compare the action an agent actually took against the action
predicted for it by an equilibrium solve under the current intent estimate,
then move the estimate along the policy's intent sensitivity:

  gradient learner   point estimate, fixed step along J'(predicted - observed)
  Gaussian learner   Kalman-style mean/covariance update treating the
                     predicted action as a linear observation of the intent

The sensitivity J itself comes from `policy_jacobian`: finite differences of
the equilibrium policy with respect to one agent's intent.  The default mode
freezes the converged trajectory and only re-solves the backward LQ pass per
perturbation, which is what keeps the per-step cost flat; the exact mode
re-runs the full iterative solve and exists as a reference for tests.
"""

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from npace.game import ContractError, DoubleArray, GameSpec
from npace.ilq import IlqOptions, IlqSolution, linearize_quadratize, solve_ilq
from npace.lqgame import solve_lq_nash

IntentBounds = Optional[Tuple[DoubleArray, DoubleArray]]


def _clamp(mean: DoubleArray, bounds: IntentBounds) -> DoubleArray:
    if bounds is None:
        return mean
    return np.clip(mean, bounds[0], bounds[1])


@dataclass(frozen=True)
class GradientBelief:
    """Point estimate of a peer's intent, refined by gradient steps.

    :param mean: current estimate [p].
    :param learning_rate: step size; stable against a linear observation
        model whenever it stays below 2 / ||J'J||.
    """

    mean: DoubleArray
    learning_rate: float

    def __post_init__(self) -> None:
        if self.mean.ndim != 1:
            raise ContractError("belief mean must be a vector.")
        if self.learning_rate <= 0.0:
            raise ContractError("learning_rate must be positive.")

    @property
    def variances(self) -> DoubleArray:
        """Point beliefs carry no spread."""
        return np.zeros_like(self.mean)

    def updated(
        self,
        jacobian: DoubleArray,
        predicted: DoubleArray,
        observed: DoubleArray,
        bounds: IntentBounds = None,
    ) -> "GradientBelief":
        return gradient_update(self, jacobian, predicted, observed, bounds)


@dataclass(frozen=True)
class GaussianBelief:
    """Gaussian belief over a peer's intent.

    :param mean: current mean [p].
    :param covariance: current covariance [p, p], symmetric PSD.
    :param action_noise: std of the action observation noise model; the
        observation covariance is its square times the identity.
    :param innovation_gate: optional Mahalanobis outlier gate; an update
        whose innovation exceeds this many predicted standard deviations
        (per observation channel) is skipped entirely.  Guards the filter
        against near-discontinuous policy responses far from the current
        operating point.
    """

    mean: DoubleArray
    covariance: DoubleArray
    action_noise: float
    innovation_gate: Optional[float] = None

    def __post_init__(self) -> None:
        p = self.mean.shape[0]
        if self.mean.ndim != 1 or self.covariance.shape != (p, p):
            raise ContractError("mean must be [p] and covariance [p, p].")
        if not np.allclose(self.covariance, self.covariance.T, atol=1e-9):
            raise ContractError("covariance must be symmetric.")
        if self.action_noise <= 0.0:
            raise ContractError("action_noise must be positive.")
        if self.innovation_gate is not None and self.innovation_gate <= 0.0:
            raise ContractError("innovation_gate must be positive when set.")

    @property
    def variances(self) -> DoubleArray:
        return np.diag(self.covariance).copy()

    def updated(
        self,
        jacobian: DoubleArray,
        predicted: DoubleArray,
        observed: DoubleArray,
        bounds: IntentBounds = None,
    ) -> "GaussianBelief":
        return bayes_update(self, jacobian, predicted, observed, bounds)


def gradient_update(
    belief: GradientBelief,
    jacobian: DoubleArray,
    predicted: DoubleArray,
    observed: DoubleArray,
    bounds: IntentBounds = None,
) -> GradientBelief:
    """One gradient step on the squared action-prediction error.

    The estimate moves by -rate * J'(predicted - observed) and is then
    clamped to the admissible box.
    """
    step = belief.learning_rate * jacobian.T @ (predicted - observed)
    return replace(belief, mean=_clamp(belief.mean - step, bounds))


def bayes_update(
    belief: GaussianBelief,
    jacobian: DoubleArray,
    predicted: DoubleArray,
    observed: DoubleArray,
    bounds: IntentBounds = None,
) -> GaussianBelief:
    """Kalman measurement update of the intent belief.

    Treats the observed action as predicted + J (intent - mean) + noise, so
    the gain is Sigma J' (R + J Sigma J')^{-1}.  The covariance never grows:
    there is no process-noise inflation between steps.  The mean is clamped
    to the admissible box after the update.  With an innovation gate set,
    an innovation outside the gate's Mahalanobis radius leaves the belief
    untouched instead of being absorbed as signal.
    """
    m = predicted.shape[0]
    noise = belief.action_noise**2 * np.eye(m)
    innovation = observed - predicted
    innovation_cov = noise + jacobian @ belief.covariance @ jacobian.T
    if belief.innovation_gate is not None:
        z2 = float(innovation @ np.linalg.solve(innovation_cov, innovation))
        if z2 > belief.innovation_gate**2 * m:
            return belief
    gain = np.linalg.solve(innovation_cov.T, (belief.covariance @ jacobian.T).T).T
    mean = belief.mean + gain @ innovation
    covariance = belief.covariance - gain @ jacobian @ belief.covariance
    covariance = 0.5 * (covariance + covariance.T)
    return replace(belief, mean=_clamp(mean, bounds), covariance=covariance)


def policy_jacobian(
    spec: GameSpec,
    solution: IlqSolution,
    agent: int,
    state: Optional[DoubleArray] = None,
    step: int = 0,
    step_scale: float = 1.0e-4,
    frozen: bool = True,
    options: IlqOptions = IlqOptions(),
) -> DoubleArray:
    """Sensitivity of one agent's equilibrium action to its own intent slot.

    Central differences over each intent component c with half-width
    step_scale * max(1, |theta_c|).  In frozen mode each perturbation
    re-quadratizes the costs on the solution's converged trajectory and
    re-runs only the backward LQ pass, then evaluates the perturbed policy's
    absolute action at (step, state).  The exact mode re-solves the full
    iterative game from the perturbed intents (warm-started) and is used as
    a reference oracle.

    Returns d(action_agent) / d(intent_agent), shape [m_agent, p_agent].
    Perturbed intents are taken literally, without box clamping, so the
    result is the two-sided derivative even at a bound.
    """
    trajectory = solution.trajectory
    if state is None:
        state = trajectory.states[step]
    base = solution.intents[agent]
    p = base.shape[0]
    m = spec.action_dims[agent]
    jac = np.empty((m, p))
    for c in range(p):
        width = step_scale * max(1.0, abs(float(base[c])))
        actions = []
        for sign in (1.0, -1.0):
            bumped = base.copy()
            bumped[c] += sign * width
            intents = tuple(
                bumped if k == agent else solution.intents[k] for k in range(2)
            )
            if frozen:
                lq = linearize_quadratize(spec, trajectory, intents)  # type: ignore[arg-type]
                lq_solution = solve_lq_nash(lq, options.regularization)
                policy = lq_solution.policies[agent]
                deviation = state - trajectory.states[step]
                action = trajectory.actions[agent][step] + policy.action(step, deviation)
            else:
                resolved = solve_ilq(
                    spec,
                    trajectory.states[0],
                    intents,  # type: ignore[arg-type]
                    warm_start=solution.policies,
                    options=options,
                )
                action = resolved.policies[agent].action(step, state)
            actions.append(action)
        jac[:, c] = (actions[0] - actions[1]) / (2.0 * width)
    return jac
