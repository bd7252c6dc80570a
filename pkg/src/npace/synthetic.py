"""
Synthetic game constructors for unit tests and the self-check battery.

These build exactly-linear dynamics and exactly-quadratic costs, so the LQ
machinery can be exercised against closed-form expectations, plus a random
LQ game generator for stationarity/oracle sweeps.
"""

from typing import Optional, Tuple

import numpy as np

from npace.game import CostExpansion, CostModel, DoubleArray, DynamicsModel, GameSpec
from npace.lqgame import LQApprox


def _broadcast_mat(mat: DoubleArray, lead_shape: Tuple[int, ...]) -> DoubleArray:
    return np.broadcast_to(mat, lead_shape + mat.shape).copy()


def constant_dynamics(
    state_matrix: DoubleArray,
    input_1: DoubleArray,
    input_2: DoubleArray,
    dt: float,
) -> DynamicsModel:
    """Dynamics whose Euler discretization at `dt` is exactly (A, B1, B2)."""
    n = state_matrix.shape[0]
    f_s = (state_matrix - np.eye(n)) / dt
    f_1 = input_1 / dt
    f_2 = input_2 / dt

    def vector_field(s: DoubleArray, a1: DoubleArray, a2: DoubleArray) -> DoubleArray:
        return s @ f_s.T + a1 @ f_1.T + a2 @ f_2.T

    def jacobians(s: DoubleArray, a1: DoubleArray, a2: DoubleArray):
        lead = s.shape[:-1]
        return (
            _broadcast_mat(f_s, lead),
            _broadcast_mat(f_1, lead),
            _broadcast_mat(f_2, lead),
        )

    return DynamicsModel(
        state_dim=n,
        action_dims=(input_1.shape[1], input_2.shape[1]),
        vector_field=vector_field,
        jacobians=jacobians,
    )


def quadratic_cost(
    state_hess: DoubleArray,
    state_lin: DoubleArray,
    action_hess: Tuple[DoubleArray, DoubleArray],
    action_lin: Tuple[DoubleArray, DoubleArray],
    goal_map: Optional[DoubleArray] = None,
    intent_dim: int = 1,
) -> CostModel:
    """Quadratic stage cost, optionally tracking a goal linear in the intent.

    g(s, a1, a2, own) = 1/2 (s - G own)' H (s - G own) + h'(s - G own)
                        + sum_k [ 1/2 ak' Rk ak + rk' ak ]

    With goal_map G = None the intent is ignored entirely (zero sensitivity).
    """
    hess = np.asarray(state_hess, dtype=float)
    lin = np.asarray(state_lin, dtype=float)
    if goal_map is not None:
        goal_map = np.asarray(goal_map, dtype=float)
        intent_dim = goal_map.shape[1]

    def _offset(s: DoubleArray, own: DoubleArray) -> DoubleArray:
        if goal_map is None:
            return s
        return s - own @ goal_map.T

    def stage(s, a1, a2, own, peer):
        ds = _offset(s, own)
        value = 0.5 * np.einsum("...i,ij,...j->...", ds, hess, ds) + ds @ lin
        for a, r_mat, r_lin in ((a1, *_pair(0)), (a2, *_pair(1))):
            value = value + 0.5 * np.einsum("...i,ij,...j->...", a, r_mat, a) + a @ r_lin
        return value

    def _pair(k: int) -> Tuple[DoubleArray, DoubleArray]:
        return np.asarray(action_hess[k], dtype=float), np.asarray(action_lin[k], dtype=float)

    def expand(s, a1, a2, own, peer) -> CostExpansion:
        lead = s.shape[:-1]
        ds = _offset(s, own)
        r1, rl1 = _pair(0)
        r2, rl2 = _pair(1)
        return CostExpansion(
            grad_state=ds @ hess.T + lin,
            grad_action_1=a1 @ r1.T + rl1,
            grad_action_2=a2 @ r2.T + rl2,
            hess_state=_broadcast_mat(hess, lead),
            hess_action_1=_broadcast_mat(r1, lead),
            hess_action_2=_broadcast_mat(r2, lead),
        )

    def grad_intent(s, a1, a2, own, peer):
        if goal_map is None:
            return np.zeros(s.shape[:-1] + (intent_dim,))
        ds = _offset(s, own)
        return -(ds @ hess.T + lin) @ goal_map

    return CostModel(intent_dim=intent_dim, stage=stage, expand=expand, grad_intent=grad_intent)


def random_lq_data(rng: np.random.Generator, n: int, m1: int, m2: int, horizon: int) -> LQApprox:
    """Random well-posed LQ game data: PSD state costs, PD own-action costs."""
    dims = (m1, m2)

    def psd(size: int, scale: float) -> DoubleArray:
        root = rng.normal(size=(size, size))
        return scale * (root @ root.T) / size

    state_jacs = np.stack([
        np.eye(n) + 0.3 * rng.normal(size=(n, n)) / np.sqrt(n) for _ in range(horizon)
    ])
    action_jacs = tuple(
        np.stack([rng.normal(size=(n, m)) / np.sqrt(n) for _ in range(horizon)]) for m in dims
    )
    state_hessians = tuple(
        np.stack([psd(n, 1.0) for _ in range(horizon + 1)]) for _ in range(2)
    )
    state_grads = tuple(rng.normal(size=(horizon + 1, n)) for _ in range(2))
    action_hessians = tuple(
        tuple(
            np.stack([
                psd(dims[kap], 1.0) + (np.eye(dims[kap]) if kap == k else 0.1 * np.eye(dims[kap]))
                for _ in range(horizon)
            ])
            for kap in range(2)
        )
        for k in range(2)
    )
    action_grads = tuple(
        tuple(0.3 * rng.normal(size=(horizon, dims[kap])) for kap in range(2)) for k in range(2)
    )
    return LQApprox(
        state_jacobians=state_jacs,
        action_jacobians=action_jacs,  # type: ignore[arg-type]
        state_hessians=state_hessians,  # type: ignore[arg-type]
        state_grads=state_grads,  # type: ignore[arg-type]
        action_hessians=action_hessians,  # type: ignore[arg-type]
        action_grads=action_grads,  # type: ignore[arg-type]
    )


def random_lq_game(
    rng: np.random.Generator, n: int, m1: int, m2: int, horizon: int, dt: float = 0.1
) -> GameSpec:
    """Random linear-quadratic GameSpec (time-invariant, intent-free costs)."""
    state_matrix = np.eye(n) + dt * rng.normal(size=(n, n)) / np.sqrt(n)
    inputs = tuple(dt * rng.normal(size=(n, m)) for m in (m1, m2))
    dynamics = constant_dynamics(state_matrix, inputs[0], inputs[1], dt)

    def psd(size: int, extra: float) -> DoubleArray:
        root = rng.normal(size=(size, size))
        return (root @ root.T) / size + extra * np.eye(size)

    costs = tuple(
        quadratic_cost(
            state_hess=psd(n, 0.1),
            state_lin=0.5 * rng.normal(size=n),
            action_hess=(psd(m1, 1.0 if k == 0 else 0.0), psd(m2, 1.0 if k == 1 else 0.0)),
            action_lin=(0.2 * rng.normal(size=m1), 0.2 * rng.normal(size=m2)),
        )
        for k in range(2)
    )
    return GameSpec(dt=dt, horizon_steps=horizon, dynamics=dynamics, costs=costs)  # type: ignore[arg-type]
