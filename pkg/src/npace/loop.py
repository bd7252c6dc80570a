"""
Receding-horizon game loop with mutual online intent estimation.

Each simulated step runs three phases:

  control     every agent solves the receding game from its own point of
              view (true own intent, estimated peer intent) and takes the
              first action of its equilibrium policy, optionally adjusted
              by the intent-signaling optimizer;
  prediction  the game is solved again at the current estimate pair, which
              is what each agent believes the PAIR of them looks like from
              outside; this solve yields predicted actions for both agents
              and the sensitivities of those predictions to each intent;
  learning    every agent compares observed against predicted actions and
              updates both entries of its estimate ledger.

Because both agents initialize their ledgers identically and apply identical
deterministic updates, the ledgers stay equal at every step; the loop
exploits that by running the prediction phase once and sharing it.  When the
ledgers genuinely differ (mismatched initial estimates), the loop detects the
mismatch and falls back to per-agent prediction solves automatically.

The expert-peer variant differs in exactly one substitution: each agent's
prediction phase uses its own TRUE intent instead of the ledger entry for
itself, collapsing the prediction solve into the control solve.  All other
code paths are shared.
"""

import time as _time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from npace.baselines import (
    MinMaxConfig,
    PeerPolicyModel,
    minmax_action,
    mpc_action,
    update_peer_model,
)
from npace.game import (
    ContractError,
    DivergedRolloutError,
    DoubleArray,
    GameSpec,
    IntentPair,
    ROLLOUT_GUARD,
)
from npace.ilq import (
    IlqDivergenceError,
    IlqOptions,
    IlqSolution,
    receding_spec,
    shifted_warm_start,
    solve_ilq,
)
from npace.learning import GaussianBelief, GradientBelief, policy_jacobian
from npace.lqgame import SingularGainSystemError
from npace.teaching import TeachingConfig, teaching_action

Belief = Union[GaussianBelief, GradientBelief]

METHODS = ("complete", "expert", "npace", "npace_comm", "minmax", "mpc")


@dataclass(frozen=True)
class EstimatorState:
    """Both agents' intent-estimate ledgers.

    beliefs[k] is agent k's belief over the PEER's intent; reflected[k] is
    agent k's copy of the peer's belief over agent k's own intent.  In the
    mutual-learning mode both agents can reconstruct the same estimate pair,
    so beliefs[0] mirrors reflected[1] and vice versa whenever the ledgers
    started out equal.

    mode selects the prediction-phase substitution: "npace" predicts with
    the tracked estimate pair, "expert" substitutes each agent's true intent
    for its own slot.
    """

    beliefs: Tuple[Belief, Belief]
    reflected: Tuple[Belief, Belief]
    mode: str = "npace"

    def __post_init__(self) -> None:
        if self.mode not in ("npace", "expert"):
            raise ContractError(f"mode must be 'npace' or 'expert', got {self.mode!r}.")

    def estimate_pair(self, agent: int) -> IntentPair:
        """Agent's tracked estimate pair, indexed by intent owner."""
        means = [None, None]
        means[agent] = self.reflected[agent].mean
        means[1 - agent] = self.beliefs[agent].mean
        return (means[0], means[1])  # type: ignore[return-value]

    def outgoing_means(self) -> IntentPair:
        """Current estimate of each agent's intent, held by its peer."""
        return (self.beliefs[1].mean, self.beliefs[0].mean)

    def outgoing_variances(self) -> IntentPair:
        return (self.beliefs[1].variances, self.beliefs[0].variances)


def initial_estimator(
    beliefs: Tuple[Belief, Belief],
    mode: str = "npace",
    reflected: Optional[Tuple[Belief, Belief]] = None,
) -> EstimatorState:
    """Ledgers where, by default, both agents agree on the initial estimates."""
    if reflected is None:
        reflected = (beliefs[1], beliefs[0])
    return EstimatorState(beliefs=beliefs, reflected=reflected, mode=mode)


@dataclass(frozen=True)
class StepRecord:
    """Everything observable about one executed step.

    estimate_means/variances are ordered by intent owner: entry j is the
    peer's current estimate of agent j's intent after this step's update,
    or None for estimation-free methods.
    """

    step: int
    time: float
    state: DoubleArray
    actions: Tuple[DoubleArray, DoubleArray]
    estimate_means: Optional[IntentPair]
    estimate_variances: Optional[IntentPair]
    stage_costs: Tuple[float, float]
    control_seconds: float
    estimation_seconds: float
    teaching_fallback: bool = False

    def __post_init__(self) -> None:
        if self.control_seconds < 0.0 or self.estimation_seconds < 0.0:
            raise ContractError("wall times must be nonnegative.")
        if not np.all(np.isfinite(self.state)):
            raise ContractError("recorded state must be finite.")
        for action in self.actions:
            if not np.all(np.isfinite(action)):
                raise ContractError("recorded actions must be finite.")


@dataclass(frozen=True)
class RunLog:
    """Complete record of one simulated run."""

    method: str
    seed: Optional[int]
    true_intents: IntentPair
    initial_state: DoubleArray
    records: Tuple[StepRecord, ...]
    final_state: DoubleArray
    failed: bool = False
    failure: str = ""
    diagnostics: Tuple[Mapping[str, float], ...] = ()


@dataclass
class WarmStarts:
    """Mutable per-run cache of shifted policies for every solve role."""

    ego: List = field(default_factory=lambda: [None, None])
    predictive: List = field(default_factory=lambda: [None, None])
    shared: Optional[Tuple] = None
    search: List = field(default_factory=lambda: [None, None])


@dataclass(frozen=True)
class RunOptions:
    """Method-independent knobs plus per-method configuration blocks.

    :param action_noise_std: std of Gaussian noise added to applied actions;
        zero (the default) keeps runs fully deterministic.
    :param teaching: intent-signaling settings, required for npace_comm.
    :param minmax: worst-case search settings, required for minmax.
    :param peer_models: initial affine peer models, required for mpc.
    """

    ilq: IlqOptions = IlqOptions()
    action_noise_std: float = 0.0
    teaching: Optional[TeachingConfig] = None
    minmax: Optional[MinMaxConfig] = None
    peer_models: Optional[Tuple[PeerPolicyModel, PeerPolicyModel]] = None

    def __post_init__(self) -> None:
        if self.action_noise_std < 0.0:
            raise ContractError("action_noise_std must be >= 0.")


def _predicted_actions(solution: IlqSolution, state: DoubleArray) -> Tuple[DoubleArray, DoubleArray]:
    """Both agents' first actions under a prediction solve, at the given state."""
    return tuple(solution.policies[k].action(0, state) for k in range(2))  # type: ignore[return-value]


def _ledger_update(
    spec: GameSpec,
    agent: int,
    beliefs: Tuple[Belief, Belief],
    predictive: IlqSolution,
    state: DoubleArray,
    observed: Tuple[DoubleArray, DoubleArray],
    update_reflected: bool,
    jacobians: Optional[Tuple[DoubleArray, DoubleArray]] = None,
) -> Tuple[Belief, Belief]:
    """One agent's learning phase: update (belief over peer, reflected copy).

    `beliefs` is (belief over peer intent, reflected belief over own intent)
    for this agent.  Both updates draw on the same prediction solve; the
    reflected update is skipped in expert mode, where the peer is assumed to
    already know this agent's intent.
    """
    peer = 1 - agent
    predicted = _predicted_actions(predictive, state)
    if jacobians is not None:
        jac_peer: DoubleArray = jacobians[peer]
    else:
        jac_peer = policy_jacobian(spec, predictive, peer, state=state)
    belief_over_peer = beliefs[0].updated(
        jac_peer, predicted[peer], observed[peer], spec.intent_bounds[peer]
    )
    reflected = beliefs[1]
    if update_reflected:
        if jacobians is not None:
            jac_own: DoubleArray = jacobians[agent]
        else:
            jac_own = policy_jacobian(spec, predictive, agent, state=state)
        reflected = reflected.updated(
            jac_own, predicted[agent], observed[agent], spec.intent_bounds[agent]
        )
    return belief_over_peer, reflected


def npace_step(
    spec: GameSpec,
    state: DoubleArray,
    step: int,
    true_intents: IntentPair,
    estimator: EstimatorState,
    options: RunOptions = RunOptions(),
    warm: Optional[WarmStarts] = None,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[Tuple[DoubleArray, DoubleArray], EstimatorState, StepRecord]:
    """One control-predict-learn step of the mutual-estimation loop.

    `spec` is the full-horizon game; the solves run on the remaining horizon
    [step, T).  Returns the applied actions, the updated ledgers, and the
    step record.  The warm cache, when provided, is updated in place.
    """
    if warm is None:
        warm = WarmStarts()
    horizon = receding_spec(spec, step)
    expert = estimator.mode == "expert"

    control_started = _time.perf_counter()
    ego: List[IlqSolution] = []
    for k in range(2):
        pair = list(estimator.estimate_pair(k))
        pair[k] = true_intents[k]
        solution = solve_ilq(
            horizon, state, (pair[0], pair[1]), warm_start=warm.ego[k], options=options.ilq
        )
        warm.ego[k] = shifted_warm_start(solution)
        ego.append(solution)
    actions = [ego[k].trajectory.actions[k][0].copy() for k in range(2)]
    control_seconds = _time.perf_counter() - control_started

    # Prediction phase: solve at the tracked estimate pairs.  Identical pairs
    # (the common case) share one solve and one set of sensitivities.
    estimation_started = _time.perf_counter()
    pairs = []
    for k in range(2):
        pair = list(estimator.estimate_pair(k))
        if expert:
            pair[k] = true_intents[k]
        pairs.append((pair[0], pair[1]))
    if expert:
        # The prediction pair equals the control pair, so the control solve
        # is reused outright.
        predictive = [ego[0], ego[1]]
        shared_jacobians = None
    elif np.array_equal(pairs[0][0], pairs[1][0]) and np.array_equal(pairs[0][1], pairs[1][1]):
        solution = solve_ilq(
            horizon, state, pairs[0], warm_start=warm.shared, options=options.ilq
        )
        warm.shared = shifted_warm_start(solution)
        predictive = [solution, solution]
        shared_jacobians = tuple(
            policy_jacobian(horizon, solution, j, state=state) for j in range(2)
        )
    else:
        predictive = []
        for k in range(2):
            solution = solve_ilq(
                horizon, state, pairs[k], warm_start=warm.predictive[k], options=options.ilq
            )
            warm.predictive[k] = shifted_warm_start(solution)
            predictive.append(solution)
        shared_jacobians = None
    estimation_seconds = _time.perf_counter() - estimation_started

    # Intent signaling adjusts the applied action before the peer observes it.
    teaching_fallback = False
    teach_seconds = 0.0
    if options.teaching is not None and options.teaching.weight > 0.0:
        for k in range(2):
            outcome = teaching_action(
                horizon,
                state,
                k,
                actions[k],
                options.teaching,
                ego[k],
                estimator.reflected[k],
                true_intents[k],
                predictive[k],
            )
            actions[k] = outcome.action
            teaching_fallback = teaching_fallback or outcome.fell_back
            teach_seconds += outcome.seconds
    control_seconds += teach_seconds

    if rng is not None and options.action_noise_std > 0.0:
        actions = [
            a + options.action_noise_std * rng.standard_normal(a.shape) for a in actions
        ]
    observed = (actions[0], actions[1])

    learning_started = _time.perf_counter()
    new_beliefs: List[Belief] = [None, None]  # type: ignore[list-item]
    new_reflected: List[Belief] = [None, None]  # type: ignore[list-item]
    for k in range(2):
        new_beliefs[k], new_reflected[k] = _ledger_update(
            horizon,
            k,
            (estimator.beliefs[k], estimator.reflected[k]),
            predictive[k],
            state,
            observed,
            update_reflected=not expert,
            jacobians=shared_jacobians,
        )
    estimation_seconds += _time.perf_counter() - learning_started

    next_estimator = replace(
        estimator,
        beliefs=(new_beliefs[0], new_beliefs[1]),
        reflected=(new_reflected[0], new_reflected[1]),
    )
    stage_costs = tuple(
        float(
            spec.costs[k].stage(
                state, observed[0], observed[1], true_intents[k], true_intents[1 - k]
            )
        )
        for k in range(2)
    )
    record = StepRecord(
        step=step,
        time=step * spec.dt,
        state=np.asarray(state, dtype=float).copy(),
        actions=observed,
        estimate_means=next_estimator.outgoing_means(),
        estimate_variances=next_estimator.outgoing_variances(),
        stage_costs=stage_costs,  # type: ignore[arg-type]
        control_seconds=control_seconds,
        estimation_seconds=estimation_seconds,
        teaching_fallback=teaching_fallback,
    )
    return observed, next_estimator, record


def expert_step(
    spec: GameSpec,
    state: DoubleArray,
    step: int,
    true_intents: IntentPair,
    estimator: EstimatorState,
    options: RunOptions = RunOptions(),
    warm: Optional[WarmStarts] = None,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[Tuple[DoubleArray, DoubleArray], EstimatorState, StepRecord]:
    """Expert-peer step: the mutual loop with the single substitution applied."""
    if estimator.mode != "expert":
        estimator = replace(estimator, mode="expert")
    return npace_step(spec, state, step, true_intents, estimator, options, warm, rng)


def _advance(spec: GameSpec, state: DoubleArray, actions) -> DoubleArray:
    next_state = state + spec.dt * spec.dynamics.vector_field(state, actions[0], actions[1])
    if not np.all(np.isfinite(next_state)) or np.max(np.abs(next_state)) > ROLLOUT_GUARD:
        raise DivergedRolloutError(0, "state left the trusted region.")
    return next_state


def _stage_costs(spec, state, actions, true_intents) -> Tuple[float, float]:
    return tuple(
        float(
            spec.costs[k].stage(
                state, actions[0], actions[1], true_intents[k], true_intents[1 - k]
            )
        )
        for k in range(2)
    )  # type: ignore[return-value]


def run_game(
    spec: GameSpec,
    initial_state: DoubleArray,
    true_intents: IntentPair,
    method: str,
    init_estimates: Optional[EstimatorState] = None,
    options: RunOptions = RunOptions(),
    seed: Optional[int] = None,
) -> RunLog:
    """Simulate one closed-loop run of the chosen method over the full horizon.

    Per-step solver failures terminate the run early with `failed` set and
    the partial record list preserved.  With action_noise_std == 0 (default)
    the run is fully deterministic and the seed only labels the log.
    """
    if method not in METHODS:
        raise ContractError(f"unknown method {method!r}; expected one of {METHODS}.")
    if method == "npace_comm" and options.teaching is None:
        raise ContractError("npace_comm requires options.teaching.")
    if method == "minmax" and options.minmax is None:
        raise ContractError("minmax requires options.minmax.")
    if method == "mpc" and options.peer_models is None:
        raise ContractError("mpc requires options.peer_models.")
    if method in ("npace", "npace_comm", "expert") and init_estimates is None:
        raise ContractError(f"{method} requires init_estimates.")
    if method in ("npace", "npace_comm") and init_estimates.mode != "npace":
        raise ContractError(f"{method} requires ledgers in 'npace' mode.")
    if method != "npace_comm" and options.teaching is not None and options.teaching.weight > 0.0:
        raise ContractError("teaching weight is only honored by npace_comm.")

    rng = np.random.default_rng(seed) if options.action_noise_std > 0.0 else None
    state = np.asarray(initial_state, dtype=float).copy()
    estimator = init_estimates
    if method == "expert" and estimator is not None and estimator.mode != "expert":
        estimator = replace(estimator, mode="expert")
    models = list(options.peer_models) if options.peer_models is not None else None
    previous_actions: Optional[Tuple[DoubleArray, DoubleArray]] = None
    previous_state: Optional[DoubleArray] = None
    warm = WarmStarts()
    records: List[StepRecord] = []
    diagnostics: List[Dict[str, float]] = []
    failed = False
    failure = ""

    for step in range(spec.horizon_steps):
        horizon = receding_spec(spec, step)
        try:
            if method in ("npace", "npace_comm", "expert"):
                actions, estimator, record = npace_step(
                    spec, state, step, true_intents, estimator, options, warm, rng
                )
                diagnostics.append({})
            elif method == "complete":
                started = _time.perf_counter()
                solution = solve_ilq(
                    horizon, state, true_intents, warm_start=warm.shared, options=options.ilq
                )
                warm.shared = shifted_warm_start(solution)
                actions = tuple(solution.trajectory.actions[k][0].copy() for k in range(2))
                if rng is not None:
                    actions = tuple(
                        a + options.action_noise_std * rng.standard_normal(a.shape)
                        for a in actions
                    )
                record = StepRecord(
                    step=step,
                    time=step * spec.dt,
                    state=state.copy(),
                    actions=actions,
                    estimate_means=None,
                    estimate_variances=None,
                    stage_costs=_stage_costs(spec, state, actions, true_intents),
                    control_seconds=_time.perf_counter() - started,
                    estimation_seconds=0.0,
                )
                diagnostics.append({})
            elif method == "minmax":
                started = _time.perf_counter()
                actions = []
                extra: Dict[str, float] = {}
                for k in range(2):
                    outcome = minmax_action(
                        horizon,
                        state,
                        k,
                        true_intents[k],
                        options.minmax,
                        options=options.ilq,
                        warm_start=warm.search[k],
                    )
                    warm.search[k] = shifted_warm_start(outcome.solution)
                    actions.append(outcome.action)
                    extra[f"worst_intent_{k + 1}"] = float(outcome.worst_intent[0])
                    extra[f"predicted_worst_cost_{k + 1}"] = outcome.predicted_cost
                    extra[f"search_evaluations_{k + 1}"] = float(outcome.evaluations)
                if rng is not None:
                    actions = [
                        a + options.action_noise_std * rng.standard_normal(a.shape)
                        for a in actions
                    ]
                actions = tuple(actions)
                record = StepRecord(
                    step=step,
                    time=step * spec.dt,
                    state=state.copy(),
                    actions=actions,
                    estimate_means=None,
                    estimate_variances=None,
                    stage_costs=_stage_costs(spec, state, actions, true_intents),
                    control_seconds=_time.perf_counter() - started,
                    estimation_seconds=0.0,
                )
                diagnostics.append(extra)
            else:  # mpc
                estimation_started = _time.perf_counter()
                reinflations = 0
                if previous_actions is not None:
                    for k in range(2):
                        models[k], reinflated = update_peer_model(
                            models[k], previous_state, previous_actions[1 - k]
                        )
                        reinflations += int(reinflated)
                estimation_seconds = _time.perf_counter() - estimation_started

                control_started = _time.perf_counter()
                actions = []
                solver_fallbacks = 0
                for k in range(2):
                    try:
                        action, solution = mpc_action(
                            horizon,
                            state,
                            k,
                            true_intents[k],
                            models[k],
                            options=options.ilq,
                            warm_start=warm.predictive[k],
                        )
                        warm.predictive[k] = shifted_warm_start(solution)
                    except (IlqDivergenceError, DivergedRolloutError, SingularGainSystemError):
                        # A fitted peer model can make the believed plant
                        # unstable enough that no damped solve survives.  A
                        # receding-horizon stack degrades to a neutral command
                        # in that case; the filter keeps updating and later
                        # solves start cold.
                        action = np.zeros(spec.action_dims[k])
                        warm.predictive[k] = None
                        solver_fallbacks += 1
                    actions.append(action)
                if rng is not None:
                    actions = [
                        a + options.action_noise_std * rng.standard_normal(a.shape)
                        for a in actions
                    ]
                actions = tuple(actions)
                record = StepRecord(
                    step=step,
                    time=step * spec.dt,
                    state=state.copy(),
                    actions=actions,
                    estimate_means=(models[1].goal_estimate, models[0].goal_estimate),
                    estimate_variances=(
                        np.diag(models[1].covariance)[: models[1].goal_estimate.shape[0]].copy(),
                        np.diag(models[0].covariance)[: models[0].goal_estimate.shape[0]].copy(),
                    ),
                    stage_costs=_stage_costs(spec, state, actions, true_intents),
                    control_seconds=_time.perf_counter() - control_started,
                    estimation_seconds=estimation_seconds,
                )
                diagnostics.append(
                    {
                        "reinflations": float(reinflations),
                        "solver_fallbacks": float(solver_fallbacks),
                    }
                )
                previous_actions = actions
                previous_state = state.copy()

            records.append(record)
            state = _advance(spec, state, record.actions)
        except (IlqDivergenceError, DivergedRolloutError, SingularGainSystemError) as err:
            failed = True
            failure = f"step {step}: {type(err).__name__}: {err}"
            break

    return RunLog(
        method=method,
        seed=seed,
        true_intents=true_intents,
        initial_state=np.asarray(initial_state, dtype=float).copy(),
        records=tuple(records),
        final_state=state,
        failed=failed,
        failure=failure,
        diagnostics=tuple(diagnostics),
    )
