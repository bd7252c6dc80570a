"""Worst-case search and fitted-peer-model baselines against independent oracles."""

import numpy as np
import pytest

from npace.baselines import (
    MinMaxConfig,
    PeerPolicyModel,
    initial_peer_model,
    minmax_action,
    mpc_action,
    update_peer_model,
)
from npace.game import ContractError, GameSpec
from npace.ilq import solve_ilq
from npace.synthetic import constant_dynamics, quadratic_cost

from helpers import coupled_goal_game, ego_game_cost

OWN_INTENT = np.array([2.0])


class TestMinMaxSearch:
    def test_singleton_box_matches_complete_information(self):
        spec = coupled_goal_game(horizon=8)
        state = np.array([1.0, -1.0])
        fixed = np.array([-1.5])
        config = MinMaxConfig(intent_box=(fixed, fixed))
        outcome = minmax_action(spec, state, 0, OWN_INTENT, config)
        direct = solve_ilq(spec, state, (OWN_INTENT, fixed))
        assert np.array_equal(outcome.worst_intent, fixed)
        assert np.array_equal(outcome.action, direct.trajectory.actions[0][0])
        assert outcome.evaluations == 1

    def test_worst_intent_matches_grid_argmax(self):
        spec = coupled_goal_game(horizon=8)
        config = MinMaxConfig(intent_box=(np.array([-3.0]), np.array([3.0])))
        rng = np.random.default_rng(5)
        for _ in range(3):
            state = np.array([1.0, -1.0]) + rng.standard_normal(2)
            outcome = minmax_action(spec, state, 0, OWN_INTENT, config)
            grid = np.arange(-3.0, 3.0 + 1e-9, 0.1)
            costs = [ego_game_cost(spec, state, 0, OWN_INTENT, np.array([c])) for c in grid]
            grid_argmax = grid[int(np.argmax(costs))]
            assert abs(float(outcome.worst_intent[0]) - grid_argmax) <= 0.2

    def test_predicted_cost_bounds_true_intent_cost(self):
        """The worst-case value upper-bounds the cost at any in-box true intent."""
        spec = coupled_goal_game(horizon=8)
        config = MinMaxConfig(intent_box=(np.array([-3.0]), np.array([3.0])))
        state = np.array([1.5, -0.5])
        outcome = minmax_action(spec, state, 0, OWN_INTENT, config)
        for true_peer in (-3.0, -1.0, 0.0, 2.0, 3.0):
            at_truth = ego_game_cost(spec, state, 0, OWN_INTENT, np.array([true_peer]))
            assert at_truth <= outcome.predicted_cost + 1e-6

    def test_evaluation_budget_respected(self):
        spec = coupled_goal_game(horizon=8)
        config = MinMaxConfig(
            intent_box=(np.array([-3.0]), np.array([3.0])), max_evaluations=6
        )
        outcome = minmax_action(spec, np.array([1.0, -1.0]), 0, OWN_INTENT, config)
        assert outcome.evaluations <= 6

    def test_rejects_inverted_box(self):
        with pytest.raises(ContractError):
            MinMaxConfig(intent_box=(np.array([1.0]), np.array([-1.0])))


def constant_goal(point):
    target = np.asarray(point, dtype=float)
    return (lambda th: target.copy()), (lambda th: np.zeros((target.shape[0], th.shape[0])))


class TestPeerFilter:
    def test_exact_affine_peer_gives_zero_innovation(self):
        goal_point, goal_jac = constant_goal([0.3, -0.7])
        true_gains = np.array([[0.4, -0.2]])
        true_bias = np.array([0.1])
        model = PeerPolicyModel(
            goal_estimate=np.array([1.0]),
            gains=true_gains.copy(),
            bias=true_bias.copy(),
            covariance=10.0 * np.eye(4),
            goal_point=goal_point,
            goal_point_jacobian=goal_jac,
        )
        rng = np.random.default_rng(3)
        for _ in range(10):
            state = rng.normal(scale=2.0, size=2)
            observed = model.predicted_action(state)
            model, reinflated = update_peer_model(model, state, observed)
            assert not reinflated
            # Zero innovation moves no parameter at all.
            assert np.array_equal(model.gains, true_gains)
            assert np.array_equal(model.bias, true_bias)
            assert np.array_equal(model.goal_estimate, np.array([1.0]))

    def test_linear_filter_matches_batch_least_squares(self):
        """With a constant goal point the filter is exactly linear in (K, b).

        The posterior mean must then equal the batch normal-equations
        solution with the matching Gaussian prior, and the goal-parameter
        block must never move.
        """
        goal_point, goal_jac = constant_goal([0.3, -0.7])
        sigma = 0.5
        model = initial_peer_model(
            np.array([5.0]), 1, 2, goal_point, goal_jac,
            prior_variance=10.0, process_noise=0.0, observation_noise=sigma,
        )
        rng = np.random.default_rng(11)
        true_gains = np.array([[0.6, -0.3]])
        true_bias = np.array([-0.2])
        features = []
        targets = []
        for _ in range(25):
            state = rng.normal(scale=2.0, size=2)
            offset = state - np.array([0.3, -0.7])
            observed = true_gains @ offset + true_bias + 0.1 * rng.standard_normal(1)
            features.append(np.concatenate([offset, [1.0]]))
            targets.append(observed[0])
            model, _ = update_peer_model(model, state, observed)

        phi = np.asarray(features)
        y = np.asarray(targets)
        prior_info = np.eye(3) / 10.0
        posterior = np.linalg.solve(
            prior_info + phi.T @ phi / sigma**2, phi.T @ y / sigma**2
        )
        fitted = np.concatenate([model.gains.flatten(), model.bias])
        assert np.max(np.abs(fitted - posterior)) <= 1e-8
        assert np.array_equal(model.goal_estimate, np.array([5.0]))
        assert model.covariance[0, 0] == 10.0

    def test_trace_growth_bounded_by_process_noise(self):
        goal_point, goal_jac = constant_goal([0.0, 0.0])
        model = initial_peer_model(np.array([0.0]), 1, 2, goal_point, goal_jac)
        rng = np.random.default_rng(17)
        for _ in range(15):
            state = rng.normal(scale=2.0, size=2)
            observed = rng.normal(scale=1.0, size=1)
            previous_trace = float(np.trace(model.covariance))
            model, _ = update_peer_model(model, state, observed)
            injected = model.process_noise * model.parameter_size
            assert float(np.trace(model.covariance)) <= previous_trace + injected + 1e-10

    def test_covariance_stays_symmetric_positive_definite(self):
        goal_point, goal_jac = constant_goal([0.0, 0.0])
        model = initial_peer_model(np.array([0.0]), 1, 2, goal_point, goal_jac)
        rng = np.random.default_rng(23)
        for _ in range(20):
            model, _ = update_peer_model(
                model, rng.normal(scale=3.0, size=2), rng.normal(size=1)
            )
            assert np.allclose(model.covariance, model.covariance.T, atol=1e-12)
            assert np.min(np.linalg.eigvalsh(model.covariance)) > 0.0

    def test_lost_definiteness_reinflates_and_flags(self):
        # An enormous prior against a nearly noiseless observation makes the
        # covariance downdate cancel catastrophically, which is exactly the
        # failure mode the reset guards against.
        goal_point, goal_jac = constant_goal([0.0])
        model = PeerPolicyModel(
            goal_estimate=np.array([0.0]),
            gains=np.array([[0.0]]),
            bias=np.array([0.0]),
            covariance=1e8 * np.eye(3),
            goal_point=goal_point,
            goal_point_jacobian=goal_jac,
            process_noise=0.0,
            observation_noise=1e-9,
        )
        model, reinflated = update_peer_model(model, np.array([1.0]), np.array([3.0]))
        assert reinflated
        assert np.array_equal(model.covariance, model.reinflation * np.eye(3))


class TestFittedPeerControl:
    def test_dummy_stand_in_agent_stays_exactly_zero(self):
        spec = coupled_goal_game(horizon=8)
        goal_point, goal_jac = constant_goal([0.0, 0.0])
        model = initial_peer_model(np.array([0.0]), 1, 2, goal_point, goal_jac)
        _, solution = mpc_action(spec, np.array([1.0, -1.0]), 0, OWN_INTENT, model)
        assert np.array_equal(
            solution.trajectory.actions[1], np.zeros_like(solution.trajectory.actions[1])
        )

    def test_zero_peer_model_matches_inert_peer_game(self):
        """A zeroed peer model must reproduce the game where the peer cannot act."""
        state_matrix = np.array([[1.0, 0.1], [-0.05, 1.0]])
        input_1 = np.array([[0.1], [0.02]])
        input_2 = np.array([[0.03], [0.1]])
        cost_1 = quadratic_cost(
            np.array([[2.0, 0.4], [0.4, 1.0]]),
            np.zeros(2),
            (2.0 * np.eye(1), np.zeros((1, 1))),
            (np.zeros(1), np.zeros(1)),
            goal_map=np.array([[1.0], [0.2]]),
        )
        cost_2 = quadratic_cost(
            np.zeros((2, 2)), np.zeros(2),
            (np.zeros((1, 1)), 2.0 * np.eye(1)),
            (np.zeros(1), np.zeros(1)),
        )
        live = GameSpec(
            dt=0.1, horizon_steps=8,
            dynamics=constant_dynamics(state_matrix, input_1, input_2, 0.1),
            costs=(cost_1, cost_2),
        )
        # Same game but the peer's input channel is disconnected; its optimal
        # play is exactly zero, leaving the ego with a one-player problem.
        inert = GameSpec(
            dt=0.1, horizon_steps=8,
            dynamics=constant_dynamics(state_matrix, input_1, np.zeros((2, 1)), 0.1),
            costs=(cost_1, cost_2),
        )
        state = np.array([1.0, -1.0])
        goal_point, goal_jac = constant_goal([0.0, 0.0])
        model = initial_peer_model(np.array([0.0]), 1, 2, goal_point, goal_jac)
        action, _ = mpc_action(live, state, 0, OWN_INTENT, model)
        reference = solve_ilq(inert, state, (OWN_INTENT, np.array([0.0])))
        assert np.max(np.abs(action - reference.trajectory.actions[0][0])) <= 1e-10
