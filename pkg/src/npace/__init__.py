"""Two-player dynamic games with mutual online intent estimation.

Layering, bottom up: `game` (specs, trajectories, policies, rollout),
`lqgame` (coupled LQ Nash recursion), `ilq` (iterative LQ equilibrium),
`learning` (intent estimators and policy sensitivities), `loop` (the
per-step estimation/control loop and its expert/complete variants),
`teaching` (intent-communication action selection), `baselines` (min-max
and affine-peer MPC), `scenarios` (the three case studies), `harness`
(CLI, Monte Carlo, metrics, serialization).
"""

from npace.game import (
    AffinePolicy,
    ContractError,
    CostExpansion,
    CostModel,
    DivergedRolloutError,
    DynamicsModel,
    GameSpec,
    Trajectory,
    eval_cost,
    rollout,
    zero_policy,
)
from npace.ilq import IlqOptions, IlqSolution, linearize_quadratize, solve_ilq
from npace.lqgame import LQApprox, LqSolution, solve_lq_nash

__all__ = [
    "AffinePolicy",
    "ContractError",
    "CostExpansion",
    "CostModel",
    "DivergedRolloutError",
    "DynamicsModel",
    "GameSpec",
    "IlqOptions",
    "IlqSolution",
    "LQApprox",
    "LqSolution",
    "Trajectory",
    "eval_cost",
    "linearize_quadratize",
    "rollout",
    "solve_ilq",
    "solve_lq_nash",
    "zero_policy",
]
