"""Closed-loop stepping: ledger sharing, mode pinning, dispatch, failure handling."""

import numpy as np
import pytest

from npace.baselines import MinMaxConfig, initial_peer_model
from npace.game import ContractError
from npace.ilq import receding_spec, shifted_warm_start, solve_ilq
from npace.learning import GaussianBelief, GradientBelief
from npace.loop import (
    EstimatorState,
    RunOptions,
    WarmStarts,
    expert_step,
    initial_estimator,
    npace_step,
    run_game,
)
from npace.teaching import TeachingConfig

from helpers import coupled_goal_game, ego_game_cost

TRUTHS = (np.array([2.0]), np.array([-1.5]))
START = np.array([1.0, -1.0])


def fresh_beliefs(means=(0.0, 0.0), variance=4.0):
    return tuple(
        GaussianBelief(
            mean=np.array([float(m)]),
            covariance=np.array([[variance]]),
            action_noise=0.5,
        )
        for m in means
    )


class TestSharedLedger:
    def test_tracked_pairs_bitwise_equal_every_step(self):
        """Equal initial ledgers imply exactly equal ledgers forever after.

        Agent 0's belief about agent 1 must match agent 1's copy of that
        belief bit for bit, and vice versa, at every step of a run.
        """
        spec = coupled_goal_game(horizon=6)
        estimator = initial_estimator(fresh_beliefs())
        warm = WarmStarts()
        state = START.copy()
        for step in range(spec.horizon_steps):
            actions, estimator, record = npace_step(
                spec, state, step, TRUTHS, estimator, warm=warm
            )
            for agent in range(2):
                mirror = estimator.reflected[1 - agent]
                assert np.array_equal(estimator.beliefs[agent].mean, mirror.mean)
                assert np.array_equal(
                    estimator.beliefs[agent].covariance, mirror.covariance
                )
            state = state + spec.dt * spec.dynamics.vector_field(
                state, actions[0], actions[1]
            )

    def test_mismatched_ledgers_run_independent_predictions(self):
        """Disagreeing initial estimates still step without error and converge
        toward the truth from both sides."""
        spec = coupled_goal_game(horizon=8)
        beliefs = fresh_beliefs(means=(1.0, -2.0))
        reflected = fresh_beliefs(means=(3.0, 1.0))
        estimator = EstimatorState(beliefs=beliefs, reflected=reflected, mode="npace")
        warm = WarmStarts()
        state = START.copy()
        for step in range(spec.horizon_steps):
            actions, estimator, record = npace_step(
                spec, state, step, TRUTHS, estimator, warm=warm
            )
            state = state + spec.dt * spec.dynamics.vector_field(
                state, actions[0], actions[1]
            )
        for agent in range(2):
            start_gap = abs(
                float(fresh_beliefs(means=(1.0, -2.0))[agent].mean[0])
                - float(TRUTHS[1 - agent][0])
            )
            end_gap = abs(
                float(estimator.beliefs[agent].mean[0]) - float(TRUTHS[1 - agent][0])
            )
            assert end_gap < start_gap


class TestConsistentBeliefs:
    def test_truthful_estimates_reproduce_complete_information_play(self):
        spec = coupled_goal_game(horizon=8)
        estimator = initial_estimator(
            fresh_beliefs(means=(float(TRUTHS[1][0]), float(TRUTHS[0][0])))
        )
        log = run_game(spec, START, TRUTHS, "npace", init_estimates=estimator)
        reference = run_game(spec, START, TRUTHS, "complete")
        assert not log.failed and not reference.failed
        for ours, theirs in zip(log.records, reference.records):
            for k in range(2):
                assert np.max(np.abs(ours.actions[k] - theirs.actions[k])) <= 1e-6
            # Estimates are fixed points of the update when already truthful.
            assert np.max(np.abs(ours.estimate_means[0] - TRUTHS[0])) <= 1e-6
            assert np.max(np.abs(ours.estimate_means[1] - TRUTHS[1])) <= 1e-6


class TestExpertPinning:
    def test_expert_equals_mutual_mode_at_truthful_estimates(self):
        """The two modes differ by one substitution which vanishes at truth."""
        spec = coupled_goal_game(horizon=6)
        means = (float(TRUTHS[1][0]), float(TRUTHS[0][0]))

        npace_est = initial_estimator(fresh_beliefs(means=means))
        expert_est = initial_estimator(fresh_beliefs(means=means), mode="expert")
        npace_warm, expert_warm = WarmStarts(), WarmStarts()
        npace_state, expert_state = START.copy(), START.copy()

        for step in range(spec.horizon_steps):
            npace_actions, npace_est, _ = npace_step(
                spec, npace_state, step, TRUTHS, npace_est, warm=npace_warm
            )
            expert_actions, expert_est, _ = expert_step(
                spec, expert_state, step, TRUTHS, expert_est, warm=expert_warm
            )
            for k in range(2):
                assert np.array_equal(npace_actions[k], expert_actions[k])
                assert np.array_equal(
                    npace_est.beliefs[k].mean, expert_est.beliefs[k].mean
                )
                assert np.array_equal(
                    npace_est.beliefs[k].covariance, expert_est.beliefs[k].covariance
                )
            npace_state = npace_state + spec.dt * spec.dynamics.vector_field(
                npace_state, npace_actions[0], npace_actions[1]
            )
            expert_state = expert_state + spec.dt * spec.dynamics.vector_field(
                expert_state, expert_actions[0], expert_actions[1]
            )

    def test_expert_mode_never_touches_reflected_beliefs(self):
        spec = coupled_goal_game(horizon=4)
        estimator = initial_estimator(fresh_beliefs(means=(0.5, -0.5)), mode="expert")
        before = estimator.reflected
        _, after, _ = expert_step(spec, START, 0, TRUTHS, estimator)
        assert after.reflected[0] is before[0]
        assert after.reflected[1] is before[1]

    def test_gradient_learner_ledgers_also_stay_shared(self):
        spec = coupled_goal_game(horizon=4)
        beliefs = tuple(
            GradientBelief(mean=np.zeros(1), learning_rate=0.3) for _ in range(2)
        )
        estimator = initial_estimator(beliefs)
        _, after, _ = npace_step(spec, START, 0, TRUTHS, estimator)
        for agent in range(2):
            assert np.array_equal(
                after.beliefs[agent].mean, after.reflected[1 - agent].mean
            )


class TestRunGameDispatch:
    def test_complete_matches_manual_receding_resolve(self):
        """The dispatch must be exactly a warm-started receding-horizon solve."""
        spec = coupled_goal_game(horizon=8)
        log = run_game(spec, START, TRUTHS, "complete")

        state = START.copy()
        warm = None
        for record in log.records:
            horizon = receding_spec(spec, record.step)
            solution = solve_ilq(horizon, state, TRUTHS, warm_start=warm)
            warm = shifted_warm_start(solution)
            assert np.array_equal(record.state, state)
            for k in range(2):
                assert np.array_equal(
                    record.actions[k], solution.trajectory.actions[k][0]
                )
            state = state + spec.dt * spec.dynamics.vector_field(
                state, record.actions[0], record.actions[1]
            )
        assert np.array_equal(log.final_state, state)

    def test_deterministic_and_complete_logs(self):
        spec = coupled_goal_game(horizon=6)
        estimator = initial_estimator(fresh_beliefs())
        first = run_game(spec, START, TRUTHS, "npace", init_estimates=estimator)
        second = run_game(spec, START, TRUTHS, "npace", init_estimates=estimator)
        assert not first.failed
        assert len(first.records) == spec.horizon_steps
        for a, b in zip(first.records, second.records):
            assert np.array_equal(a.state, b.state)
            assert np.array_equal(a.actions[0], b.actions[0])
            assert np.array_equal(a.actions[1], b.actions[1])
            assert a.control_seconds >= 0.0 and a.estimation_seconds >= 0.0

    def test_signaling_runs_and_adjusts_actions(self):
        spec = coupled_goal_game(horizon=6)
        plain = run_game(
            spec, START, TRUTHS, "npace", init_estimates=initial_estimator(fresh_beliefs())
        )
        taught = run_game(
            spec, START, TRUTHS, "npace_comm",
            init_estimates=initial_estimator(fresh_beliefs()),
            options=RunOptions(teaching=TeachingConfig(weight=1.0)),
        )
        assert not taught.failed
        assert not any(r.teaching_fallback for r in taught.records)
        first_difference = max(
            float(np.max(np.abs(p.actions[k] - t.actions[k])))
            for p, t in zip(plain.records, taught.records)
            for k in range(2)
        )
        assert first_difference > 0.0

    def test_minmax_diagnostics_bound_true_intent_cost(self):
        """Logged worst-case values upper-bound the cost at the true intent."""
        spec = coupled_goal_game(horizon=5)
        box = (np.array([-3.0]), np.array([3.0]))
        log = run_game(
            spec, START, TRUTHS, "minmax",
            options=RunOptions(minmax=MinMaxConfig(intent_box=box)),
        )
        assert not log.failed
        for record, extra in zip(log.records, log.diagnostics):
            for k in range(2):
                predicted = extra[f"predicted_worst_cost_{k + 1}"]
                horizon = receding_spec(spec, record.step)
                at_truth = ego_game_cost(
                    horizon, record.state, k, TRUTHS[k], TRUTHS[1 - k]
                )
                assert at_truth <= predicted + 1e-6

    def test_mpc_runs_and_reports_goal_estimates(self):
        spec = coupled_goal_game(horizon=6)
        models = (
            initial_peer_model(
                np.array([0.0]), 1, 2,
                lambda th: np.array([0.3 * th[0], th[0]]),
                lambda th: np.array([[0.3], [1.0]]),
            ),
            initial_peer_model(
                np.array([0.0]), 1, 2,
                lambda th: np.array([th[0], 0.2 * th[0]]),
                lambda th: np.array([[1.0], [0.2]]),
            ),
        )
        log = run_game(
            spec, START, TRUTHS, "mpc", options=RunOptions(peer_models=models)
        )
        assert not log.failed
        for record in log.records:
            assert record.estimate_means is not None
            assert record.estimate_means[0].shape == (1,)
            assert record.estimate_variances[0].shape == (1,)

    def test_estimation_free_methods_record_no_estimates(self):
        spec = coupled_goal_game(horizon=4)
        log = run_game(spec, START, TRUTHS, "complete")
        assert all(r.estimate_means is None for r in log.records)
        assert all(r.estimation_seconds == 0.0 for r in log.records)


class TestRunGameContracts:
    def test_unknown_method_rejected(self):
        spec = coupled_goal_game(horizon=4)
        with pytest.raises(ContractError):
            run_game(spec, START, TRUTHS, "psychic")

    def test_missing_method_configs_rejected(self):
        spec = coupled_goal_game(horizon=4)
        with pytest.raises(ContractError):
            run_game(spec, START, TRUTHS, "npace")  # no estimates
        with pytest.raises(ContractError):
            run_game(spec, START, TRUTHS, "minmax")  # no search box
        with pytest.raises(ContractError):
            run_game(spec, START, TRUTHS, "mpc")  # no peer models
        with pytest.raises(ContractError):
            run_game(
                spec, START, TRUTHS, "npace_comm",
                init_estimates=initial_estimator(fresh_beliefs()),
            )  # no teaching weight

    def test_teaching_weight_only_honored_by_signaling_method(self):
        spec = coupled_goal_game(horizon=4)
        with pytest.raises(ContractError):
            run_game(
                spec, START, TRUTHS, "complete",
                options=RunOptions(teaching=TeachingConfig(weight=1.0)),
            )

    def test_action_noise_is_seed_deterministic(self):
        spec = coupled_goal_game(horizon=4)
        options = RunOptions(action_noise_std=0.1)
        one = run_game(spec, START, TRUTHS, "complete", options=options, seed=42)
        two = run_game(spec, START, TRUTHS, "complete", options=options, seed=42)
        different = run_game(spec, START, TRUTHS, "complete", options=options, seed=43)
        for a, b in zip(one.records, two.records):
            assert np.array_equal(a.actions[0], b.actions[0])
        assert any(
            not np.array_equal(a.actions[0], d.actions[0])
            for a, d in zip(one.records, different.records)
        )

    def test_blowup_yields_flagged_partial_log(self):
        spec = coupled_goal_game(horizon=6)
        # Noise far beyond the rollout guard forces a mid-run state escape.
        options = RunOptions(action_noise_std=1.0e9)
        log = run_game(spec, START, TRUTHS, "complete", options=options, seed=0)
        assert log.failed
        assert log.failure.startswith("step")
        assert 1 <= len(log.records) < spec.horizon_steps
