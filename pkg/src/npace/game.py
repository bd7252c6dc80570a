"""
Core data model for two-player general-sum dynamic games.

A game couples one shared state with two agents acting simultaneously in
discrete time.  Continuous dynamics ds/dt = f(s, a1, a2) are integrated with
a forward Euler step of size dt, so s[t+1] = s[t] + dt * f(s[t], a1[t], a2[t]).
Each agent owns a running stage cost g(s, a1, a2; intent) parameterized by a
private intent vector; cumulative cost is the sum of stage costs over the
horizon with no separate terminal term.

All numeric callables stored on the models broadcast over leading axes, so a
whole trajectory can be evaluated in one call.
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np
import numpy.typing as npt

DoubleArray = npt.NDArray[np.float64]

# Pair of per-agent intent vectors, indexed by agent (0, 1).
IntentPair = Tuple[DoubleArray, DoubleArray]

# State norm beyond which an Euler rollout is declared divergent.
ROLLOUT_GUARD = 1.0e6


class ContractError(ValueError):
    """A precondition on construction or call arguments was violated."""


class DivergedRolloutError(RuntimeError):
    """Euler integration left the trusted region (non-finite or huge state)."""

    def __init__(self, step: int, message: str) -> None:
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class CostExpansion:
    """Second-order expansion of one agent's stage cost at trajectory points.

    All arrays carry a leading time axis.  Mixed state/action second
    derivatives are not represented: the stage costs this toolkit targets are
    additively separable in state and actions.
    """

    grad_state: DoubleArray  # [T, n]
    grad_action_1: DoubleArray  # [T, m1]
    grad_action_2: DoubleArray  # [T, m2]
    hess_state: DoubleArray  # [T, n, n]
    hess_action_1: DoubleArray  # [T, m1, m1]
    hess_action_2: DoubleArray  # [T, m2, m2]

    def grad_action(self, agent: int) -> DoubleArray:
        return self.grad_action_1 if agent == 0 else self.grad_action_2

    def hess_action(self, agent: int) -> DoubleArray:
        return self.hess_action_1 if agent == 0 else self.hess_action_2


@dataclass(frozen=True)
class DynamicsModel:
    """Control-affine-or-not continuous dynamics shared by both agents.

    :param state_dim: dimension n of the shared state.
    :param action_dims: (m1, m2) action dimensions per agent.
    :param vector_field: (s, a1, a2) -> ds/dt, shape [..., n].
    :param jacobians: (s, a1, a2) -> (df/ds [..., n, n],
        df/da1 [..., n, m1], df/da2 [..., n, m2]), evaluated analytically.
    """

    state_dim: int
    action_dims: Tuple[int, int]
    vector_field: Callable[[DoubleArray, DoubleArray, DoubleArray], DoubleArray]
    jacobians: Callable[
        [DoubleArray, DoubleArray, DoubleArray],
        Tuple[DoubleArray, DoubleArray, DoubleArray],
    ]

    def __post_init__(self) -> None:
        if self.state_dim < 1:
            raise ContractError(f"state_dim must be positive, got {self.state_dim}.")
        if len(self.action_dims) != 2 or min(self.action_dims) < 1:
            raise ContractError(f"action_dims must be two positive ints, got {self.action_dims}.")


@dataclass(frozen=True)
class CostModel:
    """One agent's running stage cost, parameterized by both intents.

    The owning agent's private intent enters as `own`; the peer's intent (or
    the current estimate standing in for it) enters as `peer` to cover games
    whose stage costs couple both private parameters, e.g. a shared goal split
    between the agents.  Costs that depend only on `own` ignore the peer slot.

    :param intent_dim: dimension p of the owning agent's intent vector.
    :param stage: (s, a1, a2, own, peer) -> scalar cost, shape [...].
    :param expand: (s, a1, a2, own, peer) -> CostExpansion with analytic
        first and second derivatives in state and both actions.
    :param grad_intent: (s, a1, a2, own, peer) -> d(stage)/d(own), [..., p].
    """

    intent_dim: int
    stage: Callable[..., DoubleArray]
    expand: Callable[..., CostExpansion]
    grad_intent: Callable[..., DoubleArray]

    def __post_init__(self) -> None:
        if self.intent_dim < 1:
            raise ContractError(f"intent_dim must be positive, got {self.intent_dim}.")


@dataclass(frozen=True)
class GameSpec:
    """Immutable description of one two-agent game instance.

    :param dt: Euler step [s], > 0.
    :param horizon_steps: number of discrete steps T in the horizon, >= 1.
    :param dynamics: shared state dynamics.
    :param costs: per-agent stage-cost models, index 0 and 1.
    :param intent_bounds: optional per-agent (low, high) box for intent
        estimates; estimates are clamped to this box after every update.
    """

    dt: float
    horizon_steps: int
    dynamics: DynamicsModel
    costs: Tuple[CostModel, CostModel]
    intent_bounds: Tuple[Optional[Tuple[DoubleArray, DoubleArray]], ...] = (None, None)

    def __post_init__(self) -> None:
        if not (np.isfinite(self.dt) and self.dt > 0.0):
            raise ContractError(f"dt must be positive and finite, got {self.dt}.")
        if self.horizon_steps < 1:
            raise ContractError(f"horizon_steps must be >= 1, got {self.horizon_steps}.")
        if len(self.costs) != 2:
            raise ContractError("exactly two cost models are required.")
        if len(self.intent_bounds) != 2:
            raise ContractError("intent_bounds must have one entry per agent.")
        for bounds, cost in zip(self.intent_bounds, self.costs):
            if bounds is None:
                continue
            low, high = bounds
            if low.shape != (cost.intent_dim,) or high.shape != (cost.intent_dim,):
                raise ContractError("intent bound shapes must match intent_dim.")
            if np.any(low > high):
                raise ContractError("intent bounds must satisfy low <= high.")

    @property
    def state_dim(self) -> int:
        return self.dynamics.state_dim

    @property
    def action_dims(self) -> Tuple[int, int]:
        return self.dynamics.action_dims

    def with_horizon(self, horizon_steps: int) -> "GameSpec":
        """Copy of this spec over a shorter or longer horizon (receding use)."""
        return replace(self, horizon_steps=horizon_steps)

    def clamp_intent(self, agent: int, intent: DoubleArray) -> DoubleArray:
        bounds = self.intent_bounds[agent]
        if bounds is None:
            return intent
        return np.clip(intent, bounds[0], bounds[1])


@dataclass(frozen=True)
class Trajectory:
    """A state/action rollout: T+1 states and T actions per agent."""

    states: DoubleArray  # [T+1, n]
    actions: Tuple[DoubleArray, DoubleArray]  # ([T, m1], [T, m2])

    def __post_init__(self) -> None:
        if self.states.ndim != 2:
            raise ContractError(f"states must be [T+1, n], got shape {self.states.shape}.")
        steps = self.states.shape[0] - 1
        if steps < 1:
            raise ContractError("a trajectory needs at least one step.")
        for actions in self.actions:
            if actions.ndim != 2 or actions.shape[0] != steps:
                raise ContractError(
                    f"actions must be [T, m] with T={steps}, got shape {actions.shape}."
                )
        if not np.all(np.isfinite(self.states)):
            raise ContractError("states must be finite.")
        if not all(np.all(np.isfinite(a)) for a in self.actions):
            raise ContractError("actions must be finite.")

    @property
    def horizon_steps(self) -> int:
        return self.states.shape[0] - 1


@dataclass(frozen=True)
class AffinePolicy:
    """Time-varying affine state-feedback policy for one agent.

    The action at step t in state s is

        a(t, s) = -feedforwards[t] - gains[t] @ (s - references[t]),

    so on the reference trajectory itself the action is -feedforwards[t].
    Policies returned by the equilibrium solvers are centered on their
    converged trajectory; deviation-coordinate policies use zero references.
    """

    feedforwards: DoubleArray  # [T, m]
    gains: DoubleArray  # [T, m, n]
    references: DoubleArray  # [T, n]

    def __post_init__(self) -> None:
        steps, action_dim = self.feedforwards.shape
        if self.gains.shape[:2] != (steps, action_dim):
            raise ContractError(f"gains must be [T, m, n], got shape {self.gains.shape}.")
        if self.references.shape != (steps, self.gains.shape[2]):
            raise ContractError(
                f"references must be [T, n], got shape {self.references.shape}."
            )

    @property
    def horizon_steps(self) -> int:
        return self.feedforwards.shape[0]

    def action(self, step: int, state: DoubleArray) -> DoubleArray:
        return -self.feedforwards[step] - self.gains[step] @ (state - self.references[step])

    def tail(self, start: int) -> "AffinePolicy":
        """Suffix policy from `start` onward, used to warm start receding solves."""
        return AffinePolicy(
            feedforwards=self.feedforwards[start:],
            gains=self.gains[start:],
            references=self.references[start:],
        )


def zero_policy(horizon_steps: int, action_dim: int, state_dim: int) -> AffinePolicy:
    """All-zero policy: the agent coasts regardless of state."""
    return AffinePolicy(
        feedforwards=np.zeros((horizon_steps, action_dim)),
        gains=np.zeros((horizon_steps, action_dim, state_dim)),
        references=np.zeros((horizon_steps, state_dim)),
    )


def rollout(
    spec: GameSpec,
    initial_state: DoubleArray,
    policies: Tuple[AffinePolicy, AffinePolicy],
    guard: float = ROLLOUT_GUARD,
) -> Trajectory:
    """Roll the closed loop forward with Euler integration.

    Raises DivergedRolloutError (with the failing step index) as soon as a
    state is non-finite or its max-norm exceeds `guard`.
    """
    steps = spec.horizon_steps
    for agent, policy in enumerate(policies):
        if policy.horizon_steps < steps:
            raise ContractError(
                f"policy for agent {agent} covers {policy.horizon_steps} steps, "
                f"needs {steps}."
            )
    n = spec.state_dim
    states = np.empty((steps + 1, n))
    actions = tuple(np.empty((steps, m)) for m in spec.action_dims)
    states[0] = initial_state
    state = np.asarray(initial_state, dtype=float)
    for t in range(steps):
        a1 = policies[0].action(t, state)
        a2 = policies[1].action(t, state)
        state = state + spec.dt * spec.dynamics.vector_field(state, a1, a2)
        if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > guard:
            raise DivergedRolloutError(t, f"rollout diverged at step {t}.")
        actions[0][t] = a1
        actions[1][t] = a2
        states[t + 1] = state
    return Trajectory(states=states, actions=actions)


def eval_cost(
    spec: GameSpec,
    trajectory: Trajectory,
    agent: int,
    intents: IntentPair,
) -> float:
    """Cumulative cost of `agent` along a trajectory under the given intents.

    Sums the agent's stage cost over steps 0..T-1 at (s[t], a1[t], a2[t]);
    there is no separate terminal-cost term.
    """
    if trajectory.horizon_steps != spec.horizon_steps:
        raise ContractError(
            f"trajectory has {trajectory.horizon_steps} steps, spec expects "
            f"{spec.horizon_steps}."
        )
    cost = spec.costs[agent]
    stage = cost.stage(
        trajectory.states[:-1],
        trajectory.actions[0],
        trajectory.actions[1],
        intents[agent],
        intents[1 - agent],
    )
    return float(np.sum(stage))
