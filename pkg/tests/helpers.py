"""Shared test oracles, implemented independently of the package solvers."""

from typing import Tuple

import numpy as np

from npace.game import DoubleArray
from npace.lqgame import LQApprox, LqSolution


def affine_lqr_best_response(
    eff: LQApprox,
    agent: int,
    opponent_gains: DoubleArray,
    opponent_feeds: DoubleArray,
) -> Tuple[DoubleArray, DoubleArray]:
    """Single-agent affine LQR best response against a frozen opponent policy.

    Folds the opponent's affine policy into the dynamics (drift from its
    feedforward) and into the agent's cost (cross action-cost terms become
    state costs), then runs a plain one-player backward recursion.  Returns
    (gains [T, m, n], feedforwards [T, m]) in the same deviation-coordinate
    convention as the game solver: a = -K ds - d.
    """
    other = 1 - agent
    steps = eff.horizon_steps
    n = eff.state_dim
    m = eff.action_dims[agent]

    z_mat = eff.state_hessians[agent][steps].copy()
    zeta = eff.state_grads[agent][steps].copy()
    gains = np.empty((steps, m, n))
    feeds = np.empty((steps, m))
    for t in range(steps - 1, -1, -1):
        b_own = eff.action_jacobians[agent][t]
        b_other = eff.action_jacobians[other][t]
        p_opp = opponent_gains[t]
        a_opp = opponent_feeds[t]
        # Opponent folded in: reduced dynamics ds' = a_red ds + b_own u + drift.
        a_red = eff.state_jacobians[t] - b_other @ p_opp
        drift = -b_other @ a_opp
        # Reduced state cost picks up the opponent's action cost terms.
        r_cross = eff.action_hessians[agent][other][t]
        rl_cross = eff.action_grads[agent][other][t]
        q_red = eff.state_hessians[agent][t] + p_opp.T @ r_cross @ p_opp
        l_red = eff.state_grads[agent][t] + p_opp.T @ (r_cross @ a_opp - rl_cross)

        r_own = eff.action_hessians[agent][agent][t]
        rl_own = eff.action_grads[agent][agent][t]
        gram = r_own + b_own.T @ z_mat @ b_own
        gains[t] = np.linalg.solve(gram, b_own.T @ z_mat @ a_red)
        feeds[t] = np.linalg.solve(gram, rl_own + b_own.T @ (z_mat @ drift + zeta))

        closed = a_red - b_own @ gains[t]
        closed_drift = drift - b_own @ feeds[t]
        z_new = q_red + gains[t].T @ r_own @ gains[t] + closed.T @ z_mat @ closed
        zeta = (
            l_red
            + gains[t].T @ (r_own @ feeds[t] - rl_own)
            + closed.T @ (z_mat @ closed_drift + zeta)
        )
        z_mat = 0.5 * (z_new + z_new.T)
    return gains, feeds


def lq_game_cost(
    eff: LQApprox,
    agent: int,
    initial_dev: DoubleArray,
    own_deltas: DoubleArray,
    solution: LqSolution,
) -> float:
    """Agent's quadratic cost when it plays its policy plus open-loop deltas.

    The other agent reacts through its feedback policy.  Includes the
    terminal state-cost entry, matching the value recursion's convention.
    """
    other = 1 - agent
    steps = eff.horizon_steps
    ds = np.asarray(initial_dev, dtype=float)
    total = 0.0
    for t in range(steps):
        actions = [solution.policies[k].action(t, ds) for k in range(2)]
        actions[agent] = actions[agent] + own_deltas[t]
        total += 0.5 * ds @ eff.state_hessians[agent][t] @ ds + eff.state_grads[agent][t] @ ds
        for kap in range(2):
            total += (
                0.5 * actions[kap] @ eff.action_hessians[agent][kap][t] @ actions[kap]
                + eff.action_grads[agent][kap][t] @ actions[kap]
            )
        ds = (
            eff.state_jacobians[t] @ ds
            + eff.action_jacobians[0][t] @ actions[0]
            + eff.action_jacobians[1][t] @ actions[1]
        )
    total += (
        0.5 * ds @ eff.state_hessians[agent][steps] @ ds + eff.state_grads[agent][steps] @ ds
    )
    return float(total)


def coupled_goal_game(horizon: int = 10, dt: float = 0.1):
    """Linear-quadratic game where each agent chases a private goal point.

    Both agents' goals enter through goal maps with off-axis components and
    the state matrix couples the two coordinates, so each equilibrium policy
    responds to BOTH intents.  Used by the signaling and loop tests, which
    need estimates of either agent to matter to either policy.
    """
    from npace.game import GameSpec
    from npace.synthetic import constant_dynamics, quadratic_cost

    state_matrix = np.array([[1.0, 0.1], [-0.05, 1.0]])
    input_1 = np.array([[0.1], [0.02]])
    input_2 = np.array([[0.03], [0.1]])
    dynamics = constant_dynamics(state_matrix, input_1, input_2, dt)
    cost_1 = quadratic_cost(
        np.array([[2.0, 0.4], [0.4, 1.0]]),
        np.zeros(2),
        (2.0 * np.eye(1), np.zeros((1, 1))),
        (np.zeros(1), np.zeros(1)),
        goal_map=np.array([[1.0], [0.2]]),
    )
    cost_2 = quadratic_cost(
        np.array([[1.0, -0.3], [-0.3, 2.0]]),
        np.zeros(2),
        (np.zeros((1, 1)), 2.0 * np.eye(1)),
        (np.zeros(1), np.zeros(1)),
        goal_map=np.array([[0.3], [1.0]]),
    )
    bounds = (np.array([-10.0]), np.array([10.0]))
    return GameSpec(
        dt=dt,
        horizon_steps=horizon,
        dynamics=dynamics,
        costs=(cost_1, cost_2),
        intent_bounds=(bounds, bounds),
    )


def ego_game_cost(spec, state, agent: int, own, candidate) -> float:
    """Ego cumulative cost of the complete-information equilibrium at a candidate."""
    from npace.ilq import solve_ilq

    intents = tuple(own if k == agent else candidate for k in range(2))
    solution = solve_ilq(spec, state, intents)
    trajectory = solution.trajectory
    total = 0.0
    for t in range(spec.horizon_steps):
        total += float(
            spec.costs[agent].stage(
                trajectory.states[t],
                trajectory.actions[0][t],
                trajectory.actions[1][t],
                intents[agent],
                intents[1 - agent],
            )
        )
    return total
