"""
The three case-study games.

* ``lunar_lander``: two agents jointly steer one vehicle toward a landing
  point whose coordinates are split between them — one agent knows only the
  target altitude and controls thrust, the other knows only the lateral
  target and controls torque.  Both stage costs track the same goal state, so
  each agent's cost depends on both private parameters.
* ``lane_merge``: a straight-driving car and a merging car, each penalizing
  proximity with a private aggressiveness weight that only enters its own
  cost.
* ``intersection``: two cars crossing orthogonally through a shared
  conflict region, again with private aggressiveness weights.

Builders return a ``GameSpec`` with analytic cost expansions (the proximity
terms differentiate in closed form).  ``ScenarioConfig`` carries every
tunable constant; anything not dictated by the game structure (safety
distances, initial states, estimate priors, collision geometry) is exposed
there with documented defaults.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Tuple

import numpy as np

from npace.baselines import PeerPolicyModel, initial_peer_model
from npace.game import (
    ContractError,
    CostExpansion,
    CostModel,
    DoubleArray,
    DynamicsModel,
    GameSpec,
    IntentPair,
)
from npace.learning import GaussianBelief
from npace.loop import EstimatorState, initial_estimator

SCENARIO_NAMES = ("lunar_lander", "lane_merge", "intersection")

# Monte Carlo variation modes; "nominal" reuses the config values unchanged.
VARIANTS = ("nominal", "intents", "init", "var")

_HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class ScenarioConfig:
    """All tunable constants of one case study.

    Intents are scalar in every scenario, so they are stored as plain floats
    indexed by the owning agent.  ``initial_estimates[j]`` is the starting
    estimate of agent j's intent as held by its peer; ``prior_variance[j]``
    the matching belief variance.

    :param constants: scenario geometry (safety distance, collision radius,
        crossing threshold) keyed by name; empty where not applicable.
    """

    name: str
    initial_state: DoubleArray
    true_intents: Tuple[float, float]
    initial_estimates: Tuple[float, float]
    prior_variance: Tuple[float, float]
    intent_low: Tuple[float, float]
    intent_high: Tuple[float, float]
    dt: float = 0.1
    horizon_seconds: float = 5.0
    assumed_action_noise: float = 0.5
    constants: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.name not in SCENARIO_NAMES:
            raise ContractError(f"unknown scenario {self.name!r}.")
        steps = self.horizon_seconds / self.dt
        if abs(steps - round(steps)) > 1.0e-9 or round(steps) < 1:
            raise ContractError(
                f"horizon {self.horizon_seconds}s is not a positive whole "
                f"number of {self.dt}s steps."
            )
        for j in range(2):
            if self.intent_low[j] > self.intent_high[j]:
                raise ContractError("intent bounds must satisfy low <= high.")
            if self.prior_variance[j] <= 0.0:
                raise ContractError("prior variances must be positive.")
            # Estimates are clamped to the box during learning, so values
            # outside it could never be reached and would silently break
            # convergence; reject them up front.
            if not self.intent_low[j] <= self.true_intents[j] <= self.intent_high[j]:
                raise ContractError("true intents must lie inside the intent box.")
            if (
                not self.intent_low[j]
                <= self.initial_estimates[j]
                <= self.intent_high[j]
            ):
                raise ContractError("initial estimates must lie inside the intent box.")
        if self.assumed_action_noise <= 0.0:
            raise ContractError("assumed action noise must be positive.")
        for key, value in self.constants.items():
            if value <= 0.0:
                raise ContractError(f"constant {key!r} must be positive.")

    @property
    def horizon_steps(self) -> int:
        return int(round(self.horizon_seconds / self.dt))

    def intent_vectors(self) -> IntentPair:
        return (
            np.array([self.true_intents[0]]),
            np.array([self.true_intents[1]]),
        )


@dataclass(frozen=True)
class Scenario:
    """A built case study: the game plus the metadata the harness needs.

    :param effort_channels: (agent, action channel) pairs measured in m/s²,
        the only channels entering the control-effort metric.
    :param separation: optional map from a state block [..., n] to the
        inter-vehicle distance [...]; None when the scenario has no
        collision notion.
    :param crossing_coordinates: per-agent state index whose value passing
        the crossing threshold marks that agent as clear of the conflict
        region; None when crossing is undefined.
    :param peer_model_factory: builds the per-agent fitted peer models used
        by the model-predictive baseline; None when the scenario provides no
        peer goal parameterization.
    """

    config: ScenarioConfig
    spec: GameSpec
    state_names: Tuple[str, ...]
    action_names: Tuple[Tuple[str, ...], Tuple[str, ...]]
    intent_names: Tuple[str, str]
    effort_channels: Tuple[Tuple[int, int], ...]
    separation: Optional[Callable[[DoubleArray], DoubleArray]] = None
    crossing_coordinates: Optional[Tuple[int, int]] = None
    peer_model_factory: Optional[
        Callable[[], Tuple[PeerPolicyModel, PeerPolicyModel]]
    ] = None

    @property
    def name(self) -> str:
        return self.config.name

    def intent_range(self, agent: int) -> float:
        """Width of the admissible intent interval, for error normalization."""
        return self.config.intent_high[agent] - self.config.intent_low[agent]


def _intent_bounds(cfg: ScenarioConfig):
    return tuple(
        (np.array([cfg.intent_low[j]]), np.array([cfg.intent_high[j]]))
        for j in range(2)
    )


def _outer(vec: DoubleArray) -> DoubleArray:
    return np.einsum("...i,...j->...ij", vec, vec)


# --------------------------------------------------------------------------
# Case study 1: assistive landing with a split goal.


def _lander_dynamics() -> DynamicsModel:
    """State (x, y, phi, vx, vy, omega); thrust acts along the body angle."""

    def vector_field(s, a1, a2):
        thrust = a1[..., 0]
        torque = a2[..., 0]
        phi = s[..., 2]
        out = np.empty_like(s)
        out[..., 0] = s[..., 3]
        out[..., 1] = s[..., 4]
        out[..., 2] = s[..., 5]
        out[..., 3] = thrust * np.sin(phi)
        out[..., 4] = thrust * np.cos(phi)
        out[..., 5] = torque
        return out

    def jacobians(s, a1, a2):
        lead = s.shape[:-1]
        thrust = a1[..., 0]
        phi = s[..., 2]
        f_s = np.zeros(lead + (6, 6))
        f_s[..., 0, 3] = 1.0
        f_s[..., 1, 4] = 1.0
        f_s[..., 2, 5] = 1.0
        f_s[..., 3, 2] = thrust * np.cos(phi)
        f_s[..., 4, 2] = -thrust * np.sin(phi)
        f_1 = np.zeros(lead + (6, 1))
        f_1[..., 3, 0] = np.sin(phi)
        f_1[..., 4, 0] = np.cos(phi)
        f_2 = np.zeros(lead + (6, 1))
        f_2[..., 5, 0] = 1.0
        return f_s, f_1, f_2

    return DynamicsModel(
        state_dim=6, action_dims=(1, 1), vector_field=vector_field, jacobians=jacobians
    )


def _lander_cost(agent: int) -> CostModel:
    """Shared goal-tracking state cost plus the agent's own effort penalty.

    Agent 0 owns the altitude target and pays for thrust; agent 1 owns the
    lateral target and pays for torque.  Both intents are scalar, so the
    goal state is assembled from (own, peer) according to the owner.
    """

    def goal_state(own, peer, lead):
        x_goal = peer[0] if agent == 0 else own[0]
        y_goal = own[0] if agent == 0 else peer[0]
        goal = np.array([x_goal, y_goal, _HALF_PI, 0.0, 0.0, 0.0])
        return np.broadcast_to(goal, lead + (6,))

    def stage(s, a1, a2, own, peer):
        offset = s - goal_state(own, peer, s.shape[:-1])
        effort = a1[..., 0] if agent == 0 else a2[..., 0]
        return 10.0 * np.sum(offset**2, axis=-1) + effort**2

    def expand(s, a1, a2, own, peer) -> CostExpansion:
        lead = s.shape[:-1]
        offset = s - goal_state(own, peer, lead)
        own_action = a1 if agent == 0 else a2
        zeros_grad = np.zeros(lead + (1,))
        zeros_hess = np.zeros(lead + (1, 1))
        own_grad = 2.0 * own_action
        own_hess = 2.0 * np.ones(lead + (1, 1))
        return CostExpansion(
            grad_state=20.0 * offset,
            grad_action_1=own_grad if agent == 0 else zeros_grad,
            grad_action_2=zeros_grad if agent == 0 else own_grad,
            hess_state=np.broadcast_to(20.0 * np.eye(6), lead + (6, 6)).copy(),
            hess_action_1=own_hess if agent == 0 else zeros_hess,
            hess_action_2=zeros_hess if agent == 0 else own_hess,
        )

    def grad_intent(s, a1, a2, own, peer):
        # The own intent is one goal coordinate; d/dgoal of 10 (coord-goal)^2.
        coord = 1 if agent == 0 else 0
        goal = own[0]
        return -20.0 * (s[..., coord : coord + 1] - goal)

    return CostModel(intent_dim=1, stage=stage, expand=expand, grad_intent=grad_intent)


def make_lunar_lander(cfg: ScenarioConfig) -> GameSpec:
    """Two-agent shared-control landing game; see the module docstring."""
    if cfg.name != "lunar_lander":
        raise ContractError(f"config is for {cfg.name!r}, not lunar_lander.")
    return GameSpec(
        dt=cfg.dt,
        horizon_steps=cfg.horizon_steps,
        dynamics=_lander_dynamics(),
        costs=(_lander_cost(0), _lander_cost(1)),
        intent_bounds=_intent_bounds(cfg),
    )


def _lander_peer_models(cfg: ScenarioConfig):
    """Fitted-peer models: each side knows its own goal coordinate and treats
    the other coordinate as the single unknown goal parameter."""
    y_goal_true = cfg.true_intents[0]
    x_goal_true = cfg.true_intents[1]
    envelope = cfg.constants.get("model_action_envelope")
    envelope = float(envelope) if envelope is not None else None

    def box(owner: int):
        return (
            np.array([cfg.intent_low[owner]]),
            np.array([cfg.intent_high[owner]]),
        )

    def torque_goal(theta: DoubleArray) -> DoubleArray:
        return np.array([theta[0], y_goal_true, _HALF_PI, 0.0, 0.0, 0.0])

    def thrust_goal(theta: DoubleArray) -> DoubleArray:
        return np.array([x_goal_true, theta[0], _HALF_PI, 0.0, 0.0, 0.0])

    def x_column(theta: DoubleArray) -> DoubleArray:
        jac = np.zeros((6, 1))
        jac[0, 0] = 1.0
        return jac

    def y_column(theta: DoubleArray) -> DoubleArray:
        jac = np.zeros((6, 1))
        jac[1, 0] = 1.0
        return jac

    return (
        initial_peer_model(
            np.array([cfg.initial_estimates[1]]),
            1,
            6,
            torque_goal,
            x_column,
            goal_box=box(1),
            action_envelope=envelope,
        ),
        initial_peer_model(
            np.array([cfg.initial_estimates[0]]),
            1,
            6,
            thrust_goal,
            y_column,
            goal_box=box(0),
            action_envelope=envelope,
        ),
    )


# --------------------------------------------------------------------------
# Case study 2: lane merge.


def _merge_dynamics() -> DynamicsModel:
    """State (x1, v1, x2, y2, phi2, v2); red action channels (accel, steer)."""

    def vector_field(s, a1, a2):
        phi = s[..., 4]
        speed = s[..., 5]
        out = np.empty_like(s)
        out[..., 0] = s[..., 1]
        out[..., 1] = a1[..., 0]
        out[..., 2] = speed * np.cos(phi)
        out[..., 3] = speed * np.sin(phi)
        out[..., 4] = a2[..., 1]
        out[..., 5] = a2[..., 0]
        return out

    def jacobians(s, a1, a2):
        lead = s.shape[:-1]
        phi = s[..., 4]
        speed = s[..., 5]
        f_s = np.zeros(lead + (6, 6))
        f_s[..., 0, 1] = 1.0
        f_s[..., 2, 4] = -speed * np.sin(phi)
        f_s[..., 2, 5] = np.cos(phi)
        f_s[..., 3, 4] = speed * np.cos(phi)
        f_s[..., 3, 5] = np.sin(phi)
        f_1 = np.zeros(lead + (6, 1))
        f_1[..., 1, 0] = 1.0
        f_2 = np.zeros(lead + (6, 2))
        f_2[..., 5, 0] = 1.0
        f_2[..., 4, 1] = 1.0
        return f_s, f_1, f_2

    return DynamicsModel(
        state_dim=6, action_dims=(1, 2), vector_field=vector_field, jacobians=jacobians
    )


def _merge_proximity(d_safe: float):
    """Analytic pieces of theta * exp(-(d - d_safe)) between the cars.

    `d` is the squared separation (x1 - x2)^2 + y2^2, so the term decays
    monotonically with separation and blows up toward overlap: a car
    approaching from outside pays a strictly increasing toll, which is
    what lets a cautious weight hold a real gap.
    """

    def parts(s):
        gap = s[..., 0] - s[..., 2]
        lateral = s[..., 3]
        d = gap**2 + lateral**2
        weight = np.exp(-(d - d_safe))
        grad_d = np.zeros(s.shape)
        grad_d[..., 0] = 2.0 * gap
        grad_d[..., 2] = -2.0 * gap
        grad_d[..., 3] = 2.0 * lateral
        hess_d = np.zeros(s.shape + (6,))
        hess_d[..., 0, 0] = 2.0
        hess_d[..., 0, 2] = -2.0
        hess_d[..., 2, 0] = -2.0
        hess_d[..., 2, 2] = 2.0
        hess_d[..., 3, 3] = 2.0
        grad = -weight[..., None] * grad_d
        hess = weight[..., None, None] * (_outer(grad_d) - hess_d)
        return weight, grad, hess

    return parts


def _merge_cost(agent: int, d_safe: float) -> CostModel:
    """Blue tracks progress alone; red additionally tracks lane center and
    heading.  The proximity weight is the agent's own private intent."""
    proximity = _merge_proximity(d_safe)
    target = 25.0

    def quad_parts(s):
        lead = s.shape[:-1]
        grad = np.zeros(lead + (6,))
        hess = np.zeros(lead + (6, 6))
        if agent == 0:
            value = 0.1 * (s[..., 0] - target) ** 2 + 0.1 * s[..., 1] ** 2
            grad[..., 0] = 0.2 * (s[..., 0] - target)
            grad[..., 1] = 0.2 * s[..., 1]
            hess[..., 0, 0] = 0.2
            hess[..., 1, 1] = 0.2
        else:
            value = (
                s[..., 3] ** 2
                + 10.0 * s[..., 4] ** 2
                + 0.1 * s[..., 5] ** 2
                + 0.1 * (s[..., 2] - target) ** 2
            )
            grad[..., 2] = 0.2 * (s[..., 2] - target)
            grad[..., 3] = 2.0 * s[..., 3]
            grad[..., 4] = 20.0 * s[..., 4]
            grad[..., 5] = 0.2 * s[..., 5]
            hess[..., 2, 2] = 0.2
            hess[..., 3, 3] = 2.0
            hess[..., 4, 4] = 20.0
            hess[..., 5, 5] = 0.2
        return value, grad, hess

    def stage(s, a1, a2, own, peer):
        value, _, _ = quad_parts(s)
        weight, _, _ = proximity(s)
        own_action = a1 if agent == 0 else a2
        return value + own[0] * weight + np.sum(own_action**2, axis=-1)

    def expand(s, a1, a2, own, peer) -> CostExpansion:
        lead = s.shape[:-1]
        _, grad, hess = quad_parts(s)
        _, prox_grad, prox_hess = proximity(s)
        dims = (a1.shape[-1], a2.shape[-1])
        grads = [np.zeros(lead + (m,)) for m in dims]
        hessians = [np.zeros(lead + (m, m)) for m in dims]
        grads[agent] = 2.0 * (a1 if agent == 0 else a2)
        hessians[agent] = np.broadcast_to(
            2.0 * np.eye(dims[agent]), lead + (dims[agent], dims[agent])
        ).copy()
        return CostExpansion(
            grad_state=grad + own[0] * prox_grad,
            grad_action_1=grads[0],
            grad_action_2=grads[1],
            hess_state=hess + own[0] * prox_hess,
            hess_action_1=hessians[0],
            hess_action_2=hessians[1],
        )

    def grad_intent(s, a1, a2, own, peer):
        weight, _, _ = proximity(s)
        return weight[..., None]

    return CostModel(intent_dim=1, stage=stage, expand=expand, grad_intent=grad_intent)


def make_lane_merge(cfg: ScenarioConfig) -> GameSpec:
    """Straight-driving blue car versus merging red car."""
    if cfg.name != "lane_merge":
        raise ContractError(f"config is for {cfg.name!r}, not lane_merge.")
    d_safe = cfg.constants["d_safe"]
    return GameSpec(
        dt=cfg.dt,
        horizon_steps=cfg.horizon_steps,
        dynamics=_merge_dynamics(),
        costs=(_merge_cost(0, d_safe), _merge_cost(1, d_safe)),
        intent_bounds=_intent_bounds(cfg),
    )


# --------------------------------------------------------------------------
# Case study 3: intersection crossing.


def _crossing_dynamics() -> DynamicsModel:
    """State (x1, v1, y2, v2): two double integrators on orthogonal axes."""

    def vector_field(s, a1, a2):
        out = np.empty_like(s)
        out[..., 0] = s[..., 1]
        out[..., 1] = a1[..., 0]
        out[..., 2] = s[..., 3]
        out[..., 3] = a2[..., 0]
        return out

    def jacobians(s, a1, a2):
        lead = s.shape[:-1]
        f_s = np.zeros(lead + (4, 4))
        f_s[..., 0, 1] = 1.0
        f_s[..., 2, 3] = 1.0
        f_1 = np.zeros(lead + (4, 1))
        f_1[..., 1, 0] = 1.0
        f_2 = np.zeros(lead + (4, 1))
        f_2[..., 3, 0] = 1.0
        return f_s, f_1, f_2

    return DynamicsModel(
        state_dim=4, action_dims=(1, 1), vector_field=vector_field, jacobians=jacobians
    )


def _crossing_cost(agent: int, d_safe: float) -> CostModel:
    """Progress toward coordinate 8 plus 10*theta*exp(-(d - d_safe)), where
    d = x1^2 + y2^2.  The exponent is linear in d, not squared."""
    position = 0 if agent == 0 else 2
    velocity = position + 1

    def proximity(s):
        d = s[..., 0] ** 2 + s[..., 2] ** 2
        weight = 10.0 * np.exp(-(d - d_safe))
        grad_d = np.zeros(s.shape)
        grad_d[..., 0] = 2.0 * s[..., 0]
        grad_d[..., 2] = 2.0 * s[..., 2]
        hess_d = np.zeros(s.shape + (4,))
        hess_d[..., 0, 0] = 2.0
        hess_d[..., 2, 2] = 2.0
        grad = -weight[..., None] * grad_d
        hess = weight[..., None, None] * (_outer(grad_d) - hess_d)
        return weight, grad, hess

    def stage(s, a1, a2, own, peer):
        weight, _, _ = proximity(s)
        own_action = a1 if agent == 0 else a2
        return (
            (s[..., position] - 8.0) ** 2
            + s[..., velocity] ** 2
            + own[0] * weight
            + own_action[..., 0] ** 2
        )

    def expand(s, a1, a2, own, peer) -> CostExpansion:
        lead = s.shape[:-1]
        _, prox_grad, prox_hess = proximity(s)
        grad = own[0] * prox_grad
        grad[..., position] += 2.0 * (s[..., position] - 8.0)
        grad[..., velocity] += 2.0 * s[..., velocity]
        hess = own[0] * prox_hess
        hess[..., position, position] += 2.0
        hess[..., velocity, velocity] += 2.0
        own_grad = 2.0 * (a1 if agent == 0 else a2)
        own_hess = 2.0 * np.ones(lead + (1, 1))
        zeros_grad = np.zeros(lead + (1,))
        zeros_hess = np.zeros(lead + (1, 1))
        return CostExpansion(
            grad_state=grad,
            grad_action_1=own_grad if agent == 0 else zeros_grad,
            grad_action_2=zeros_grad if agent == 0 else own_grad,
            hess_state=hess,
            hess_action_1=own_hess if agent == 0 else zeros_hess,
            hess_action_2=zeros_hess if agent == 0 else own_hess,
        )

    def grad_intent(s, a1, a2, own, peer):
        weight, _, _ = proximity(s)
        return weight[..., None]

    return CostModel(intent_dim=1, stage=stage, expand=expand, grad_intent=grad_intent)


def make_intersection(cfg: ScenarioConfig) -> GameSpec:
    """Two cars crossing orthogonally through a shared conflict region."""
    if cfg.name != "intersection":
        raise ContractError(f"config is for {cfg.name!r}, not intersection.")
    d_safe = cfg.constants["d_safe"]
    return GameSpec(
        dt=cfg.dt,
        horizon_steps=cfg.horizon_steps,
        dynamics=_crossing_dynamics(),
        costs=(_crossing_cost(0, d_safe), _crossing_cost(1, d_safe)),
        intent_bounds=_intent_bounds(cfg),
    )


# --------------------------------------------------------------------------
# Defaults, registry, estimator and sampler helpers.


def default_config(name: str) -> ScenarioConfig:
    """Shipped defaults; unstated constants are documented package choices."""
    if name == "lunar_lander":
        return ScenarioConfig(
            name=name,
            initial_state=np.array([-5.0, 8.0, 0.0, 0.0, 0.0, 0.0]),
            true_intents=(-5.0, 5.0),
            initial_estimates=(0.0, 0.0),
            prior_variance=(10.0, 10.0),
            intent_low=(-10.0, -10.0),
            intent_high=(10.0, 10.0),
            constants={"model_action_envelope": 25.0},
        )
    if name == "lane_merge":
        return ScenarioConfig(
            name=name,
            initial_state=np.array([-15.0, 8.0, -15.0, 3.5, 0.0, 8.0]),
            true_intents=(5.0, 80.0),
            initial_estimates=(100.0, 100.0),
            prior_variance=(1600.0, 300.0),
            intent_low=(0.0, 0.0),
            intent_high=(100.0, 100.0),
            assumed_action_noise=0.22,
            constants={"d_safe": 4.0},
        )
    if name == "intersection":
        return ScenarioConfig(
            name=name,
            initial_state=np.array([-8.0, 6.0, -8.0, 6.0]),
            true_intents=(25.0, 40.0),
            initial_estimates=(50.0, 50.0),
            prior_variance=(25.0, 25.0),
            intent_low=(20.0, 20.0),
            intent_high=(50.0, 50.0),
            constants={"d_safe": 2.0, "collision_radius": 1.0, "crossing_threshold": 1.0},
        )
    raise ContractError(f"unknown scenario {name!r}.")


def build_scenario(config: ScenarioConfig) -> Scenario:
    """Assemble the game and its harness metadata from a config."""
    if config.name == "lunar_lander":
        return Scenario(
            config=config,
            spec=make_lunar_lander(config),
            state_names=("x", "y", "phi", "vx", "vy", "omega"),
            action_names=(("thrust",), ("torque",)),
            intent_names=("y_goal", "x_goal"),
            effort_channels=((0, 0),),
            peer_model_factory=lambda: _lander_peer_models(config),
        )
    if config.name == "lane_merge":

        def merge_separation(states: DoubleArray) -> DoubleArray:
            return np.sqrt(
                (states[..., 0] - states[..., 2]) ** 2 + states[..., 3] ** 2
            )

        return Scenario(
            config=config,
            spec=make_lane_merge(config),
            state_names=("x1", "v1", "x2", "y2", "phi2", "v2"),
            action_names=(("accel1",), ("accel2", "steer2")),
            intent_names=("aggressiveness1", "aggressiveness2"),
            effort_channels=((0, 0), (1, 0)),
            separation=merge_separation,
        )
    if config.name == "intersection":

        def crossing_separation(states: DoubleArray) -> DoubleArray:
            return np.sqrt(states[..., 0] ** 2 + states[..., 2] ** 2)

        return Scenario(
            config=config,
            spec=make_intersection(config),
            state_names=("x1", "v1", "y2", "v2"),
            action_names=(("accel1",), ("accel2",)),
            intent_names=("aggressiveness1", "aggressiveness2"),
            effort_channels=((0, 0), (1, 0)),
            separation=crossing_separation,
            crossing_coordinates=(0, 2),
        )
    raise ContractError(f"unknown scenario {config.name!r}.")


def make_scenario(name: str) -> Scenario:
    return build_scenario(default_config(name))


def initial_estimator_state(
    config: ScenarioConfig,
    estimate_means: Optional[Tuple[float, float]] = None,
    reflected_variances: Optional[Tuple[float, float]] = None,
    mode: str = "npace",
) -> EstimatorState:
    """Starting beliefs for a run.

    ``estimate_means[j]`` replaces the configured initial estimate of
    intent j in both ledgers at once, so the shared-ledger regime holds
    at any start point.  ``reflected_variances[j]`` overrides agent j's
    copy of the peer's belief variance about agent j's own intent — the
    knob the mismatched-learning-dynamics robustness study perturbs.
    """
    noise = config.assumed_action_noise
    gate = config.constants.get("innovation_gate")
    means = estimate_means if estimate_means is not None else config.initial_estimates

    def belief(mean: float, variance: float) -> GaussianBelief:
        return GaussianBelief(
            mean=np.array([mean]),
            covariance=np.array([[variance]]),
            action_noise=noise,
            innovation_gate=gate,
        )

    beliefs = tuple(belief(means[1 - k], config.prior_variance[1 - k]) for k in range(2))
    reflected = None
    if reflected_variances is not None:
        reflected = tuple(belief(means[k], reflected_variances[k]) for k in range(2))
    return initial_estimator(beliefs, mode=mode, reflected=reflected)


def monte_carlo_draws(
    config: ScenarioConfig, rng: np.random.Generator, runs: int, variant: str
) -> DoubleArray:
    """Per-run variation matrix [runs, 2]; identical across methods by reuse.

    * ``intents``: true aggressiveness pairs, uniform over the intent box.
    * ``init``: starting estimates of both intents, uniform within ±70%
      of the nominal initial estimates (ledgers stay coherent).
    * ``var``: each agent's (wrong) guess of the peer's belief variance,
      uniform within ±55% of the nominal prior variances.
    * ``nominal``: no variation; rows repeat the configured values.
    """
    if variant not in VARIANTS:
        raise ContractError(f"unknown variant {variant!r}.")
    if runs < 1:
        raise ContractError(f"runs must be >= 1, got {runs}.")
    if variant == "nominal":
        return np.tile(np.asarray(config.true_intents), (runs, 1))
    if variant == "intents":
        low = np.asarray(config.intent_low)
        high = np.asarray(config.intent_high)
        return rng.uniform(low, high, size=(runs, 2))
    if variant == "init":
        nominal = np.asarray(config.initial_estimates)
        return rng.uniform(0.3 * nominal, 1.7 * nominal, size=(runs, 2))
    nominal = np.asarray(config.prior_variance)
    return rng.uniform(0.45 * nominal, 1.55 * nominal, size=(runs, 2))


def run_setup_from_draw(
    config: ScenarioConfig, variant: str, draw: DoubleArray, mode: str = "npace"
) -> Tuple[IntentPair, EstimatorState]:
    """Expand one sampler row into (true intents, starting estimator)."""
    if variant == "intents":
        truths = (np.array([draw[0]]), np.array([draw[1]]))
        return truths, initial_estimator_state(config, mode=mode)
    truths = config.intent_vectors()
    if variant == "init":
        estimator = initial_estimator_state(
            config, estimate_means=(draw[0], draw[1]), mode=mode
        )
    elif variant == "var":
        estimator = initial_estimator_state(
            config, reflected_variances=(draw[0], draw[1]), mode=mode
        )
    elif variant == "nominal":
        estimator = initial_estimator_state(config, mode=mode)
    else:
        raise ContractError(f"unknown variant {variant!r}.")
    return truths, estimator
