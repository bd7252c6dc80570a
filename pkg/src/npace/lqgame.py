"""
Feedback Nash equilibrium of a finite-horizon two-player linear-quadratic game.

The game is given in deviation coordinates around a reference trajectory:
ds[t+1] = A[t] ds[t] + B1[t] da1[t] + B2[t] da2[t], and each agent k pays

    sum_t  1/2 ds' Qk[t] ds + lk[t]' ds
         + sum_kappa ( 1/2 da_kappa' Rk[kappa][t] da_kappa + rk[kappa][t]' da_kappa )

with state-cost entries for t = 0..T (index T acting as the terminal cost)
and action costs for t = 0..T-1.  The backward recursion propagates each
agent's quadratic value function V[t](ds) = 1/2 ds' Z[t] ds + zeta[t]' ds
from the terminal entry; at each step the two agents' first-order conditions
couple through the shared state, giving one stacked linear system in both
gain matrices (and one in both feedforwards) per step.

Both policies come back in deviation coordinates, da[t] = -P[t] ds - alpha[t];
the iterative solver re-centers them onto its reference trajectory.

Before solving, the input is normalized into the "effective" game actually
solved: state Hessians are symmetrized and eigenvalue-clamped to be PSD, and
own-action Hessians are symmetrized and Tikhonov-regularized.  Stationarity
holds exactly for the effective game and is documented as the solver
contract; the effective data ride along on the solution for any consumer
that needs value functions consistent with the returned gains.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from npace.game import AffinePolicy, ContractError, DoubleArray

# Condition-number ceiling for the stacked per-step gain system.
GAIN_SYSTEM_MAX_CONDITION = 1.0e12

# Base scale of the own-action Tikhonov term, lambda = reg*(1 + trace(R)/m).
DEFAULT_REGULARIZATION = 1.0e-6


class SingularGainSystemError(RuntimeError):
    """The stacked per-step gain system was numerically singular."""

    def __init__(self, step: int, condition: float) -> None:
        super().__init__(
            f"coupled gain system at step {step} has condition estimate "
            f"{condition:.3e} beyond {GAIN_SYSTEM_MAX_CONDITION:.0e}."
        )
        self.step = step
        self.condition = condition


@dataclass(frozen=True)
class LQApprox:
    """Time-varying LQ game data for two agents.

    Shapes (T = horizon steps, n = state dim, mk = agent-k action dim):
      state_jacobians          [T, n, n]
      action_jacobians         ([T, n, m1], [T, n, m2])
      state_hessians[k]        [T+1, n, n]   (entry T is the terminal cost)
      state_grads[k]           [T+1, n]
      action_hessians[k][kap]  [T, m_kap, m_kap]   (agent k's cost in agent kap's action)
      action_grads[k][kap]     [T, m_kap]
    """

    state_jacobians: DoubleArray
    action_jacobians: Tuple[DoubleArray, DoubleArray]
    state_hessians: Tuple[DoubleArray, DoubleArray]
    state_grads: Tuple[DoubleArray, DoubleArray]
    action_hessians: Tuple[Tuple[DoubleArray, DoubleArray], Tuple[DoubleArray, DoubleArray]]
    action_grads: Tuple[Tuple[DoubleArray, DoubleArray], Tuple[DoubleArray, DoubleArray]]

    def __post_init__(self) -> None:
        steps, n, _ = self.state_jacobians.shape
        if self.state_jacobians.shape != (steps, n, n):
            raise ContractError("state_jacobians must be [T, n, n].")
        for b in self.action_jacobians:
            if b.shape[:2] != (steps, n):
                raise ContractError(f"action_jacobians must be [T, n, m], got {b.shape}.")
        for k in range(2):
            if self.state_hessians[k].shape != (steps + 1, n, n):
                raise ContractError("state_hessians must be [T+1, n, n].")
            if self.state_grads[k].shape != (steps + 1, n):
                raise ContractError("state_grads must be [T+1, n].")
            for kap in range(2):
                m = self.action_jacobians[kap].shape[2]
                if self.action_hessians[k][kap].shape != (steps, m, m):
                    raise ContractError("action_hessians must be [T, m, m] per acting agent.")
                if self.action_grads[k][kap].shape != (steps, m):
                    raise ContractError("action_grads must be [T, m] per acting agent.")

    @property
    def horizon_steps(self) -> int:
        return self.state_jacobians.shape[0]

    @property
    def state_dim(self) -> int:
        return self.state_jacobians.shape[1]

    @property
    def action_dims(self) -> Tuple[int, int]:
        return (self.action_jacobians[0].shape[2], self.action_jacobians[1].shape[2])


@dataclass(frozen=True)
class LqSolution:
    """Equilibrium policies plus the value recursion they came from.

    policies: per-agent deviation-coordinate AffinePolicy (zero references).
    value_hessians[k]: [T+1, n, n] Z matrices; value_grads[k]: [T+1, n] zeta.
    effective: the normalized LQApprox actually solved (see module docstring).
    """

    policies: Tuple[AffinePolicy, AffinePolicy]
    value_hessians: Tuple[DoubleArray, DoubleArray]
    value_grads: Tuple[DoubleArray, DoubleArray]
    effective: LQApprox


def _symmetrize(mats: DoubleArray) -> DoubleArray:
    return 0.5 * (mats + np.swapaxes(mats, -1, -2))


def _clamp_psd(mats: DoubleArray) -> DoubleArray:
    """Project symmetric matrices onto the PSD cone by clamping eigenvalues."""
    eigvals, eigvecs = np.linalg.eigh(mats)
    if np.all(eigvals >= 0.0):
        return mats
    clamped = np.clip(eigvals, 0.0, None)
    return np.einsum("...ij,...j,...kj->...ik", eigvecs, clamped, eigvecs)


def _normalize(lq: LQApprox, regularization: float) -> LQApprox:
    """Build the effective game: PSD state costs, PD regularized own-action costs."""
    state_hessians = tuple(_clamp_psd(_symmetrize(lq.state_hessians[k])) for k in range(2))
    action_hessians: List[List[DoubleArray]] = [list(lq.action_hessians[0]), list(lq.action_hessians[1])]
    for k in range(2):
        own = _symmetrize(lq.action_hessians[k][k])
        m = own.shape[-1]
        traces = np.trace(own, axis1=-2, axis2=-1)
        lam = regularization * (1.0 + traces / m)
        own = own + lam[:, None, None] * np.eye(m)
        min_eig = np.min(np.linalg.eigvalsh(own))
        if min_eig <= 0.0:
            raise ContractError(
                f"agent {k} own-action cost is not positive definite after "
                f"regularization (min eigenvalue {min_eig:.3e})."
            )
        action_hessians[k][k] = own
    return LQApprox(
        state_jacobians=lq.state_jacobians,
        action_jacobians=lq.action_jacobians,
        state_hessians=state_hessians,  # type: ignore[arg-type]
        state_grads=lq.state_grads,
        action_hessians=(tuple(action_hessians[0]), tuple(action_hessians[1])),  # type: ignore[arg-type]
        action_grads=lq.action_grads,
    )


def solve_lq_nash(lq: LQApprox, regularization: float = DEFAULT_REGULARIZATION) -> LqSolution:
    """Solve for the feedback Nash equilibrium of the (normalized) LQ game.

    Walks backward from the terminal state cost.  At step t, with value
    matrices Z[t+1] in hand, the stacked first-order conditions

        [ R1[11]+B1'Z1B1   B1'Z1B2 ] [P1]   [ B1'Z1A ]
        [ B2'Z2B1   R2[22]+B2'Z2B2 ] [P2] = [ B2'Z2A ]

    (and the same matrix against [alpha1; alpha2] with right side
    [B1'zeta1 + r1[11]; B2'zeta2 + r2[22]]) give both agents' policies; the
    closed-loop system F = A - B1 P1 - B2 P2 then propagates each agent's
    value function one step back, carrying cross action costs.
    """
    eff = _normalize(lq, regularization)
    steps = eff.horizon_steps
    n = eff.state_dim
    dims = eff.action_dims
    a_jacs = eff.state_jacobians
    b_jacs = eff.action_jacobians

    gains = tuple(np.empty((steps, m, n)) for m in dims)
    feeds = tuple(np.empty((steps, m)) for m in dims)
    value_hessians = tuple(np.empty((steps + 1, n, n)) for _ in range(2))
    value_grads = tuple(np.empty((steps + 1, n)) for _ in range(2))
    for k in range(2):
        value_hessians[k][steps] = eff.state_hessians[k][steps]
        value_grads[k][steps] = eff.state_grads[k][steps]

    total_m = dims[0] + dims[1]
    offsets = (0, dims[0])
    for t in range(steps - 1, -1, -1):
        a_t = a_jacs[t]
        b_t = (b_jacs[0][t], b_jacs[1][t])
        z_next = (value_hessians[0][t + 1], value_hessians[1][t + 1])
        zeta_next = (value_grads[0][t + 1], value_grads[1][t + 1])

        # Stacked simultaneous stationarity system for gains and feedforwards.
        system = np.empty((total_m, total_m))
        rhs_gain = np.empty((total_m, n))
        rhs_feed = np.empty(total_m)
        for k in range(2):
            rows = slice(offsets[k], offsets[k] + dims[k])
            btz = b_t[k].T @ z_next[k]
            for kap in range(2):
                cols = slice(offsets[kap], offsets[kap] + dims[kap])
                block = btz @ b_t[kap]
                if kap == k:
                    block = block + eff.action_hessians[k][k][t]
                system[rows, cols] = block
            rhs_gain[rows] = btz @ a_t
            rhs_feed[rows] = b_t[k].T @ zeta_next[k] + eff.action_grads[k][k][t]

        condition = np.linalg.cond(system)
        if not np.isfinite(condition) or condition > GAIN_SYSTEM_MAX_CONDITION:
            raise SingularGainSystemError(t, float(condition))
        solved = np.linalg.solve(system, np.concatenate([rhs_gain, rhs_feed[:, None]], axis=1))
        for k in range(2):
            rows = slice(offsets[k], offsets[k] + dims[k])
            gains[k][t] = solved[rows, :n]
            feeds[k][t] = solved[rows, n]

        # Closed-loop propagation of both value functions.
        closed_a = a_t - b_t[0] @ gains[0][t] - b_t[1] @ gains[1][t]
        closed_drift = -(b_t[0] @ feeds[0][t] + b_t[1] @ feeds[1][t])
        for k in range(2):
            z_new = eff.state_hessians[k][t] + closed_a.T @ z_next[k] @ closed_a
            zeta_new = (
                eff.state_grads[k][t]
                + closed_a.T @ (z_next[k] @ closed_drift + zeta_next[k])
            )
            for kap in range(2):
                gain = gains[kap][t]
                feed = feeds[kap][t]
                r_block = eff.action_hessians[k][kap][t]
                r_lin = eff.action_grads[k][kap][t]
                z_new = z_new + gain.T @ r_block @ gain
                zeta_new = zeta_new + gain.T @ (r_block @ feed - r_lin)
            value_hessians[k][t] = _symmetrize(z_new)
            value_grads[k][t] = zeta_new

    policies = tuple(
        AffinePolicy(
            feedforwards=feeds[k],
            gains=gains[k],
            references=np.zeros((steps, n)),
        )
        for k in range(2)
    )
    return LqSolution(
        policies=policies,  # type: ignore[arg-type]
        value_hessians=value_hessians,  # type: ignore[arg-type]
        value_grads=value_grads,  # type: ignore[arg-type]
        effective=eff,
    )


def stationarity_residual(solution: LqSolution, states: DoubleArray) -> float:
    """Max-norm Nash stationarity residual of a solution over test states.

    For each agent, step, and state ds, evaluates the gradient of that
    agent's one-step objective (own stage action cost plus value-to-go
    through the dynamics) with respect to its own action at the policy
    actions of both agents.  Zero for an exact feedback Nash solution of the
    effective game.
    """
    eff = solution.effective
    steps = eff.horizon_steps
    worst = 0.0
    for t in range(steps):
        a_t = eff.state_jacobians[t]
        for ds in states:
            actions = [solution.policies[k].action(t, ds) for k in range(2)]
            ds_next = a_t @ ds + sum(
                eff.action_jacobians[k][t] @ actions[k] for k in range(2)
            )
            for k in range(2):
                grad = (
                    eff.action_hessians[k][k][t] @ actions[k]
                    + eff.action_grads[k][k][t]
                    + eff.action_jacobians[k][t].T
                    @ (solution.value_hessians[k][t + 1] @ ds_next + solution.value_grads[k][t + 1])
                )
                worst = max(worst, float(np.max(np.abs(grad))))
    return worst
