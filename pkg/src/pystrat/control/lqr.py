"""Linear quadratic regulation: Riccati recursions and reference tracking."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any, Self

import numpy as np

from ..core.deadline import checkpoint
from ..core.exceptions import ContractError, NoConvergenceError
from ..dynamics import (
    AnyModel, Trajectory, nominal_controls, step, step_jacobians
)
from .reference import reference_states, state_error


__all__ = [
    'LqrWeights', 'solve_dare', 'lqr_gain', 'lqr_track', 'tracking_cost',
    'DARE_TOL', 'DARE_MAX_ITERS',
]


logger = logging.getLogger(__name__)

DARE_TOL = 1e-10
DARE_MAX_ITERS = 10_000


def _check_psd(name: str, M: np.ndarray, definite: bool = False) -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractError(f'{name} must be square, got {M.shape}')
    if not np.allclose(M, M.T, atol=1e-12):
        raise ContractError(f'{name} must be symmetric')
    if definite:
        try:
            np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            raise ContractError(f'{name} must be positive definite') from None
    elif np.min(np.linalg.eigvalsh(M), initial=0.0) < -1e-9:
        raise ContractError(f'{name} must be positive semidefinite')


@dataclass(frozen=True, eq=False)
class LqrWeights:
    """Quadratic cost weights.

    Attributes:
        Q: State weight (n x n, positive semidefinite).
        R: Control weight (m x m, positive definite).
        Qf: Terminal weight, Q when None.
        horizon: Step count, or None for the infinite horizon.
    """

    Q: np.ndarray
    R: np.ndarray
    Qf: np.ndarray | None = None
    horizon: int | None = None

    def __post_init__(self) -> None:
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        Qf = Q if self.Qf is None else np.atleast_2d(
            np.asarray(self.Qf, dtype=float)
        )
        _check_psd('Q', Q)
        _check_psd('R', R, definite=True)
        _check_psd('Qf', Qf)
        if Qf.shape != Q.shape:
            raise ContractError('Qf must match the shape of Q')
        if self.horizon is not None and self.horizon < 1:
            raise ContractError(f'Invalid horizon {self.horizon}')

        object.__setattr__(self, 'Q', Q)
        object.__setattr__(self, 'R', R)
        object.__setattr__(self, 'Qf', Qf)

    @classmethod
    def scaled(cls, n: int, m: int, q: float = 1.0, r: float = 0.1,
               qf: float = 10.0, horizon: int | None = None) -> Self:
        """Multiples of the identity."""

        return cls(q * np.eye(n), r * np.eye(m), qf * np.eye(n), horizon)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], n: int, m: int) -> Self:
        """Builds weights from scalar multiples q, r, qf (defaults 1, 0.1,
        10) or explicit matrices Q, R, Qf."""

        data = dict(data)
        try:
            if any(k in data for k in ('Q', 'R', 'Qf')):
                return cls(data.get('Q', np.eye(n)),
                           data.get('R', 0.1 * np.eye(m)),
                           data.get('Qf'), data.get('horizon'))
            return cls.scaled(n, m, float(data.get('q', 1.0)),
                              float(data.get('r', 0.1)),
                              float(data.get('qf', 10.0)),
                              data.get('horizon'))
        except (TypeError, ValueError) as e:
            raise ContractError(f'Invalid LQR weights: {e}') from None


def _riccati_step(A: np.ndarray, B: np.ndarray, Q: np.ndarray,
                  R: np.ndarray, P: np.ndarray
                  ) -> tuple[np.ndarray, np.ndarray]:
    """One backward step: returns (K, P_prev)."""

    K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    P_prev = Q + A.T @ P @ (A - B @ K)
    return K, 0.5 * (P_prev + P_prev.T)


def _check_system(A: np.ndarray, B: np.ndarray, Q: np.ndarray,
                  R: np.ndarray) -> tuple[np.ndarray, ...]:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim < 2:
        B = B.reshape(A.shape[0], -1)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    n, m = B.shape
    if A.shape != (n, n) or Q.shape != (n, n) or R.shape != (m, m):
        raise ContractError(
            f'Inconsistent shapes A{A.shape} B{B.shape} Q{Q.shape} R{R.shape}'
        )
    _check_psd('R', R, definite=True)
    return A, B, Q, R


def solve_dare(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray,
               tol: float = DARE_TOL, max_iters: int = DARE_MAX_ITERS
               ) -> np.ndarray:
    """Solves the discrete algebraic Riccati equation by fixed-point
    iteration from P = Q.

    Raises:
        NoConvergenceError: If |P_k - P_k+1|_inf stays above tol for
            max_iters iterations or P stops being finite.
    """

    A, B, Q, R = _check_system(A, B, Q, R)
    P = Q.copy()
    for it in range(max_iters):
        _, P_next = _riccati_step(A, B, Q, R, P)
        if not np.all(np.isfinite(P_next)):
            raise NoConvergenceError(
                f'Riccati iteration diverged after {it} iterations'
            )
        if np.max(np.abs(P_next - P)) < tol:
            logger.debug('Riccati iteration converged in %d steps', it + 1)
            return P_next
        P = P_next

    raise NoConvergenceError(
        f'Riccati iteration did not converge in {max_iters} iterations', P
    )


def lqr_gain(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray,
             horizon: int | None = None, Qf: np.ndarray | None = None
             ) -> np.ndarray:
    """LQR feedback gains for u = -K x.

    Arguments:
        A: State matrix (n x n).
        B: Input matrix (n x m).
        Q: State weight.
        R: Control weight, positive definite.
        horizon: Steps N of a finite horizon, None for infinite.
        Qf: Terminal weight for a finite horizon, Q when None.

    Returns:
        The (N, m, n) schedule K_0..K_N-1, or a single (m, n) gain for
        the infinite horizon.

    Raises:
        NoConvergenceError: Infinite horizon only, see solve_dare.
    """

    A, B, Q, R = _check_system(A, B, Q, R)

    if horizon is None:
        P = solve_dare(A, B, Q, R)
        return np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)

    if horizon < 1:
        raise ContractError(f'Invalid horizon {horizon}')
    P = Q if Qf is None else np.atleast_2d(np.asarray(Qf, dtype=float))
    gains = np.empty((horizon, B.shape[1], A.shape[0]))
    for k in range(horizon - 1, -1, -1):
        gains[k], P = _riccati_step(A, B, Q, R, P)
    return gains


def tracking_cost(model: AnyModel, states: np.ndarray, controls: np.ndarray,
                  reference: np.ndarray, u_ref: np.ndarray,
                  weights: LqrWeights) -> float:
    """sum_k e_k'Q e_k + du_k'R du_k over k < N, plus e_N'Qf e_N, where
    e is the state error and du = u - u_ref."""

    err = state_error(model, states, reference)
    du = controls - u_ref
    stage = np.einsum('ki,ij,kj->', err[:-1], weights.Q, err[:-1])
    effort = np.einsum('ki,ij,kj->', du, weights.R, du)
    terminal = err[-1] @ weights.Qf @ err[-1]
    return float(stage + effort + terminal)


def lqr_track(model: AnyModel, x0: np.ndarray,
              reference: Trajectory | np.ndarray, weights: LqrWeights,
              dt: float) -> tuple[np.ndarray, Trajectory]:
    """Tracks a state reference with time-varying finite-horizon LQR.

    The feed-forward u_ref comes from nominal_controls; the model is
    linearized along (reference, u_ref) by the exact step Jacobians, and
    u_k = u_ref_k - K_k (x_k - x_ref_k), saturated, is applied in closed
    loop. The horizon is len(reference) - 1, or weights.horizon (the
    reference then holding its last state) when set.

    Returns:
        (controls, trajectory).

    Raises:
        ContractError: On a malformed reference or weights.
    """

    ref = reference_states(model, reference)
    horizon = weights.horizon or len(ref) - 1
    if horizon < 1:
        raise ContractError('A tracking reference needs two samples')
    ref = reference_states(model, ref, horizon + 1)
    if weights.Q.shape != (model.n, model.n) or (
            weights.R.shape != (model.m, model.m)):
        raise ContractError('LQR weights do not match the model dimensions')

    u_ref = nominal_controls(model, ref, dt)
    gains = np.empty((horizon, model.m, model.n))
    P = weights.Qf
    for k in range(horizon - 1, -1, -1):
        A, B = step_jacobians(model, ref[k], u_ref[k], dt)
        gains[k], P = _riccati_step(A, B, weights.Q, weights.R, P)

    x = np.asarray(x0, dtype=float)
    states, controls = [x], []
    for k in range(horizon):
        checkpoint()
        u = model.clamp(u_ref[k] - gains[k] @ state_error(model, x, ref[k]))
        x = step(model, x, u, dt)
        states.append(x)
        controls.append(u)

    return np.array(controls), Trajectory(np.array(states), dt)
