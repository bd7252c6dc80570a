"""Intent-signaling action selection: error oracles, reduction, monotonicity."""

import numpy as np
import pytest

from npace.ilq import solve_ilq
from npace.learning import GaussianBelief, GradientBelief
from npace.teaching import TeachingConfig, teaching_action, teaching_error

from helpers import coupled_goal_game

TRUE_OWN = np.array([2.0])
BELIEF_OF_OWN = 0.5  # peer's current estimate of the ego agent's intent
ESTIMATE_OF_PEER = np.array([-0.5])


@pytest.fixture(scope="module")
def game():
    """Ego and prediction solves for agent 0 on the coupled goal game."""
    spec = coupled_goal_game(horizon=10)
    state = np.array([1.0, -1.0])
    ego = solve_ilq(spec, state, (TRUE_OWN, ESTIMATE_OF_PEER))
    predictive = solve_ilq(spec, state, (np.array([BELIEF_OF_OWN]), ESTIMATE_OF_PEER))
    return spec, state, ego, predictive


def gaussian_belief(mean: float = BELIEF_OF_OWN, variance: float = 4.0) -> GaussianBelief:
    return GaussianBelief(
        mean=np.array([mean]), covariance=np.array([[variance]]), action_noise=0.5
    )


class TestErrorOracles:
    def test_scalar_kalman_hand_values(self, game):
        spec, state, _, predictive = game
        # Unit prior variance, unit action noise, unit sensitivity: the
        # Kalman gain is 1/2, so a candidate two above the prediction moves
        # the mean from 0 exactly onto the true value 1.
        belief = GaussianBelief(
            mean=np.array([0.0]), covariance=np.array([[1.0]]), action_noise=1.0
        )
        jacobian = np.array([[1.0]])
        predicted = np.array([0.0])
        true_intent = np.array([1.0])

        hit = teaching_error(
            spec, state, 0, np.array([2.0]), belief, true_intent, predictive,
            jacobian=jacobian, predicted=predicted,
        )
        assert abs(hit) <= 1e-12

        stay = teaching_error(
            spec, state, 0, np.array([0.0]), belief, true_intent, predictive,
            jacobian=jacobian, predicted=predicted,
        )
        assert abs(stay - 1.0) <= 1e-12

    def test_gradient_learner_hand_values(self, game):
        spec, state, _, predictive = game
        belief = GradientBelief(mean=np.array([0.0]), learning_rate=0.5)
        jacobian = np.array([[1.0]])
        predicted = np.array([0.0])
        true_intent = np.array([1.0])

        # mean' = mean - rate * J^T (predicted - candidate) = candidate / 2.
        for candidate, expected in [(2.0, 0.0), (0.0, 1.0), (1.0, 0.25)]:
            got = teaching_error(
                spec, state, 0, np.array([candidate]), belief, true_intent, predictive,
                jacobian=jacobian, predicted=predicted,
            )
            assert abs(got - expected) <= 1e-12

    def test_zero_jacobian_keeps_prior_error(self, game):
        spec, state, _, predictive = game
        true_intent = TRUE_OWN
        prior_error = float((BELIEF_OF_OWN - true_intent[0]) ** 2)
        for belief in (gaussian_belief(), GradientBelief(np.array([BELIEF_OF_OWN]), 0.5)):
            for candidate in (-1.0, 0.0, 3.0):
                got = teaching_error(
                    spec, state, 0, np.array([candidate]), belief, true_intent,
                    predictive, jacobian=np.zeros((1, 1)), predicted=np.array([0.0]),
                )
                assert abs(got - prior_error) <= 1e-12

    def test_candidate_at_prediction_leaves_estimate_unchanged(self, game):
        spec, state, _, predictive = game
        predicted = predictive.policies[0].action(0, state)
        prior_error = float((BELIEF_OF_OWN - TRUE_OWN[0]) ** 2)
        for belief in (gaussian_belief(), GradientBelief(np.array([BELIEF_OF_OWN]), 0.5)):
            got = teaching_error(
                spec, state, 0, predicted.copy(), belief, TRUE_OWN, predictive
            )
            assert abs(got - prior_error) <= 1e-12


class TestActionSelection:
    def test_zero_weight_returns_nominal_exactly(self, game):
        spec, state, ego, predictive = game
        nominal = ego.trajectory.actions[0][0]
        outcome = teaching_action(
            spec, state, 0, nominal, TeachingConfig(weight=0.0), ego,
            gaussian_belief(), TRUE_OWN, predictive,
        )
        assert np.array_equal(outcome.action, nominal)
        assert np.isnan(outcome.objective)
        assert outcome.stationary
        assert not outcome.fell_back
        recomputed = teaching_error(
            spec, state, 0, nominal, gaussian_belief(), TRUE_OWN, predictive
        )
        assert abs(outcome.error - recomputed) <= 1e-12

    def test_objective_never_worse_than_nominal(self, game):
        spec, state, ego, predictive = game
        nominal = ego.trajectory.actions[0][0]
        for weight in (0.1, 1.0, 10.0):
            outcome = teaching_action(
                spec, state, 0, nominal, TeachingConfig(weight=weight), ego,
                gaussian_belief(), TRUE_OWN, predictive,
            )
            assert not outcome.fell_back
            assert np.isfinite(outcome.objective)
            assert outcome.objective <= outcome.nominal_objective + 1e-9

    def test_reported_error_matches_recomputation(self, game):
        spec, state, ego, predictive = game
        nominal = ego.trajectory.actions[0][0]
        belief = gaussian_belief()
        outcome = teaching_action(
            spec, state, 0, nominal, TeachingConfig(weight=1.0), ego, belief,
            TRUE_OWN, predictive,
        )
        recomputed = teaching_error(
            spec, state, 0, outcome.action, belief, TRUE_OWN, predictive
        )
        assert abs(outcome.error - recomputed) <= 1e-12

    def test_action_stays_in_trust_box(self, game):
        spec, state, ego, predictive = game
        nominal = ego.trajectory.actions[0][0]
        config = TeachingConfig(weight=50.0)
        outcome = teaching_action(
            spec, state, 0, nominal, config, ego, gaussian_belief(), TRUE_OWN, predictive
        )
        assert np.max(np.abs(outcome.action - nominal)) <= config.trust_radius + 1e-12

    def test_error_monotone_in_weight(self, game):
        """Larger signaling weights never increase the peer's resulting error.

        Holds at inner-optimizer stationary points; instances where the trust
        box caps the action are excluded, since the constrained optimum can
        sit off the unconstrained monotone path.
        """
        spec = coupled_goal_game(horizon=10)
        rng = np.random.default_rng(7)
        weights = (0.0, 0.1, 1.0, 10.0)
        stationary_count = 0
        comparisons = 0
        for _ in range(6):
            state = np.array([1.0, -1.0]) + 1.5 * rng.standard_normal(2)
            ego = solve_ilq(spec, state, (TRUE_OWN, ESTIMATE_OF_PEER))
            predictive = solve_ilq(
                spec, state, (np.array([BELIEF_OF_OWN]), ESTIMATE_OF_PEER)
            )
            nominal = ego.trajectory.actions[0][0]
            outcomes = []
            for weight in weights:
                config = TeachingConfig(weight=weight)
                outcome = teaching_action(
                    spec, state, 0, nominal, config, ego, gaussian_belief(),
                    TRUE_OWN, predictive,
                )
                capped = bool(
                    np.max(np.abs(outcome.action - nominal))
                    >= config.trust_radius - 1e-9
                )
                outcomes.append((outcome, capped))
                stationary_count += int(outcome.stationary)
            for low, high in zip(outcomes, outcomes[1:]):
                if low[0].stationary and high[0].stationary and not (low[1] or high[1]):
                    assert high[0].error <= low[0].error + 1e-9
                    comparisons += 1
        assert stationary_count >= int(0.8 * 6 * len(weights))
        assert comparisons >= 6

    @pytest.mark.filterwarnings("ignore:overflow encountered")
    def test_fallback_on_nonfinite_objective(self, game):
        spec, state, ego, predictive = game
        nominal = ego.trajectory.actions[0][0]
        # An astronomically distant true intent overflows the squared error.
        outcome = teaching_action(
            spec, state, 0, nominal, TeachingConfig(weight=1.0), ego,
            gaussian_belief(), np.array([1.0e308]), predictive,
        )
        assert outcome.fell_back
        assert not outcome.stationary
        assert np.array_equal(outcome.action, nominal)
