"""Model predictive control by direct shooting over a condensed QP."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Self

import numpy as np

from ..core.deadline import checkpoint
from ..core.exceptions import (
    ContractError, InfeasibleError, NoConvergenceError
)
from ..dynamics import (
    AnyModel, Trajectory, nominal_controls, rollout_states, step,
    step_jacobians
)
from .lqr import LqrWeights, tracking_cost
from .reference import reference_states, state_error


__all__ = [
    'MpcParams', 'MpcProblem', 'MpcResult', 'box_qp', 'solve_mpc',
    'mpc_solve', 'mpc_track',
]


logger = logging.getLogger(__name__)

# Quadratic penalty on state bound violations, and the slack above which a
# bound is declared unattainable.
STATE_PENALTY = 1e6
SLACK_TOL = 1e-3


@dataclass(frozen=True)
class MpcParams:
    """Scalar configuration of a receding-horizon tracker."""

    horizon: int = 15
    q: float = 1.0
    r: float = 0.1
    qf: float = 10.0
    max_sqp_iters: int = 20
    convergence_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.horizon < 1 or self.max_sqp_iters < 1:
            raise ContractError('MPC horizon and iteration cap must be >= 1')
        if self.q < 0 or self.qf < 0 or not self.r > 0:
            raise ContractError('MPC weights need q, qf >= 0 and r > 0')
        if not self.convergence_tol > 0:
            raise ContractError('convergence_tol must be positive')

    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | None) -> Self:
        data = dict(data or {})
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ContractError(
                f'Unknown MPC parameters: {", ".join(sorted(unknown))}'
            )
        try:
            return cls(**data)
        except TypeError as e:
            raise ContractError(str(e)) from None

    def weights(self, n: int, m: int) -> LqrWeights:
        return LqrWeights.scaled(n, m, self.q, self.r, self.qf)


@dataclass(frozen=True, eq=False)
class MpcProblem:
    """One horizon problem.

    Attributes:
        model: Dynamics model.
        x0: Initial state.
        reference: At least horizon + 1 reference states.
        horizon: Number of control steps N.
        weights: Q, R and terminal Qf.
        dt: Time step.
        control_bounds: (lower, upper) arrays, the model's bounds if None.
        state_bounds: Optional (lower, upper) arrays on x_1..x_N.
        u_ref: Control reference of the effort term, nominal controls of
            the reference if None.
        max_sqp_iters: Iteration cap of the sequential linearization.
        convergence_tol: Step norm below which the iteration stops.
        warm_start: Initial control guess.
    """

    model: AnyModel
    x0: np.ndarray
    reference: np.ndarray
    horizon: int
    weights: LqrWeights
    dt: float = 0.1
    control_bounds: tuple[np.ndarray, np.ndarray] | None = None
    state_bounds: tuple[np.ndarray, np.ndarray] | None = None
    u_ref: np.ndarray | None = None
    max_sqp_iters: int = 20
    convergence_tol: float = 1e-6
    warm_start: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        model = self.model
        if self.horizon < 1:
            raise ContractError(f'Invalid MPC horizon {self.horizon}')

        ref = reference_states(model, self.reference)
        if len(ref) < self.horizon + 1:
            raise ContractError(
                f'Reference has {len(ref)} states, need {self.horizon + 1}'
            )
        object.__setattr__(self, 'reference', ref[:self.horizon + 1])

        x0 = np.asarray(self.x0, dtype=float)
        if x0.shape != (model.n,):
            raise ContractError(f'x0 must have dimension {model.n}')
        object.__setattr__(self, 'x0', x0)

        if self.weights.Q.shape != (model.n, model.n) or (
                self.weights.R.shape != (model.m, model.m)):
            raise ContractError('MPC weights do not match the model')

        lo, hi = self.control_bounds or (model.lower, model.upper)
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (model.m,))
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (model.m,))
        if np.any(lo > hi):
            raise ContractError('Invalid MPC control bounds')
        object.__setattr__(self, 'control_bounds', (lo, hi))

        if self.state_bounds is not None:
            slo, shi = (np.broadcast_to(np.asarray(b, dtype=float),
                                        (model.n,))
                        for b in self.state_bounds)
            if np.any(slo > shi):
                raise ContractError('Invalid MPC state bounds')
            object.__setattr__(self, 'state_bounds', (slo, shi))

        if self.u_ref is None:
            u_ref = nominal_controls(model, self.reference, self.dt)
        else:
            u_ref = np.asarray(self.u_ref, dtype=float).reshape(
                self.horizon, model.m
            )
        object.__setattr__(self, 'u_ref', u_ref)

    @property
    def lower(self) -> np.ndarray:
        return np.tile(self.control_bounds[0], self.horizon)

    @property
    def upper(self) -> np.ndarray:
        return np.tile(self.control_bounds[1], self.horizon)

    def cost(self, controls: np.ndarray) -> tuple[float, np.ndarray]:
        """Objective of a control sequence (with the state bound penalty)
        and the predicted states."""

        states = rollout_states(self.model, self.x0, controls, self.dt)
        value = tracking_cost(self.model, states, controls, self.reference,
                              self.u_ref, self.weights)
        slack = self.slack(states)
        return value + STATE_PENALTY * float(np.sum(slack ** 2)), states

    def slack(self, states: np.ndarray) -> np.ndarray:
        if self.state_bounds is None:
            return np.zeros(0)
        lo, hi = self.state_bounds
        return np.maximum(np.maximum(lo - states[1:], states[1:] - hi), 0.0)


class MpcResult(NamedTuple):
    controls: np.ndarray
    trajectory: Trajectory
    cost: float
    iterations: int
    cost_history: tuple[float, ...]
    converged: bool
    stalled: bool = False


def box_qp(H: np.ndarray, g: np.ndarray, lo: np.ndarray, hi: np.ndarray,
           z0: np.ndarray | None = None, max_iters: int = 200,
           tol: float = 1e-10) -> np.ndarray:
    """Minimizes z'Hz/2 + g'z subject to lo <= z <= hi.

    Clipped Newton steps on the free variables, with the active set
    re-derived from the gradient signs each iteration and a backtracking
    search along the projection arc; stops when the projected gradient
    vanishes. H must be positive definite.
    """

    z = np.clip(np.zeros_like(g) if z0 is None else z0, lo, hi)
    scale = 1.0 + np.max(np.abs(g), initial=0.0)

    def f(z: np.ndarray) -> float:
        return 0.5 * z @ H @ z + g @ z

    for _ in range(max_iters):
        grad = H @ z + g
        if np.max(np.abs(z - np.clip(z - grad, lo, hi)),
                  initial=0.0) <= tol * scale:
            break

        active = ((z <= lo) & (grad > 0)) | ((z >= hi) & (grad < 0))
        free = ~active
        d = np.zeros_like(z)
        d[free] = np.linalg.solve(H[np.ix_(free, free)], -grad[free])

        f0, t = f(z), 1.0
        while t > 1e-12:
            trial = np.clip(z + t * d, lo, hi)
            if f(trial) <= f0 + 1e-4 * grad @ (trial - z):
                break
            t *= 0.5
        else:
            # projected gradient fallback
            step_size = 1.0 / max(np.linalg.eigvalsh(H)[-1], 1e-12)
            trial = np.clip(z - step_size * grad, lo, hi)
        z = trial

    return z


def _condense(model: AnyModel, states: np.ndarray, controls: np.ndarray,
              dt: float) -> np.ndarray:
    """Sensitivity S with dX[1:] = S dU for the linearization along a
    rollout; S has shape (N n, N m)."""

    N, m = controls.shape
    n = model.n
    jac = [step_jacobians(model, states[k], controls[k], dt)
           for k in range(N)]
    S = np.zeros((N * n, N * m))
    for j in range(N):
        block = jac[j][1]
        S[j * n:(j + 1) * n, j * m:(j + 1) * m] = block
        for k in range(j + 1, N):
            block = jac[k][0] @ block
            S[k * n:(k + 1) * n, j * m:(j + 1) * m] = block
    return S


def _violation_side(problem: MpcProblem, x: np.ndarray) -> np.ndarray:
    """+1 above the upper state bound, -1 below the lower, 0 inside, for
    flattened states x_1..x_N."""

    if problem.state_bounds is None:
        return np.zeros(x.size, dtype=int)
    lo, hi = (np.tile(b, problem.horizon) for b in problem.state_bounds)
    return np.where(x > hi, 1, np.where(x < lo, -1, 0))


def _qp_terms(problem: MpcProblem, states: np.ndarray, controls: np.ndarray,
              S: np.ndarray, side: np.ndarray
              ) -> tuple[np.ndarray, np.ndarray]:
    """Hessian and gradient of the cost in dU about the iterate.

    State components flagged in side are pulled onto their bound by a
    quadratic penalty.
    """

    N, n = problem.horizon, problem.model.n
    W = np.kron(np.eye(N), problem.weights.Q)
    W[-n:, -n:] = problem.weights.Qf
    Rb = np.kron(np.eye(N), problem.weights.R)

    err = state_error(problem.model, states[1:],
                      problem.reference[1:]).reshape(-1)
    du = (controls - problem.u_ref).reshape(-1)

    resid = np.zeros(N * n)
    if problem.state_bounds is not None:
        lo, hi = (np.tile(b, N) for b in problem.state_bounds)
        bound = np.where(side > 0, hi, lo)
        resid = np.where(side != 0, states[1:].reshape(-1) - bound, 0.0)
    D = STATE_PENALTY * (side != 0)

    H = 2.0 * (S.T @ W @ S + S.T @ (D[:, None] * S) + Rb)
    g = 2.0 * (S.T @ (W @ err + D * resid) + Rb @ du)
    return 0.5 * (H + H.T), g


def _qp_update(problem: MpcProblem, states: np.ndarray,
               controls: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Control update of one SQP iteration.

    The penalized state components start as the currently violated ones
    and grow by those the linear prediction violates, until the set is
    stable.
    """

    N, m = controls.shape
    flat = controls.reshape(-1)
    lo, hi = problem.lower - flat, problem.upper - flat
    x = states[1:].reshape(-1)
    side = _violation_side(problem, x)

    for _ in range(N * problem.model.n + 1):
        H, g = _qp_terms(problem, states, controls, S, side)
        update = box_qp(H, g, lo, hi)
        if problem.state_bounds is None:
            break
        predicted = _violation_side(problem, x + S @ update)
        grown = np.where(side != 0, side, predicted)
        if np.array_equal(grown, side):
            break
        side = grown

    return update.reshape(N, m)


def solve_mpc(problem: MpcProblem) -> MpcResult:
    """Solves one horizon problem by sequential linearization.

    Each iteration linearizes the dynamics along the current rollout,
    solves the condensed bounded QP for the control update and halves the
    update until the true cost does not increase. Linear models converge
    on the first update. When no halving keeps the cost from increasing
    the solve stops there, flagged stalled rather than converged.

    Raises:
        InfeasibleError: If the state bounds cannot be met.
        NoConvergenceError: After max_sqp_iters without convergence; the
            exception carries the last MpcResult.
    """

    model, N, m = problem.model, problem.horizon, problem.model.m
    lo, hi = problem.lower, problem.upper

    if problem.warm_start is not None:
        controls = np.asarray(problem.warm_start, dtype=float).reshape(N, m)
    else:
        controls = problem.u_ref
    controls = np.clip(controls.reshape(-1), lo, hi).reshape(N, m)
    cost, states = problem.cost(controls)
    history = [cost]

    converged = stalled = False
    iterations = 0
    for iterations in range(1, problem.max_sqp_iters + 1):
        checkpoint()
        S = _condense(model, states, controls, problem.dt)
        update = _qp_update(problem, states, controls, S)
        if np.max(np.abs(update)) < problem.convergence_tol:
            converged = True
            break

        accepted = None
        for _ in range(30):
            trial = np.clip(controls + update, lo.reshape(N, m),
                            hi.reshape(N, m))
            trial_cost, trial_states = problem.cost(trial)
            if trial_cost <= cost:
                accepted = trial, trial_cost, trial_states
                break
            update = 0.5 * update

        if accepted is None:
            logger.debug('SQP iteration %d: no descent along the update, '
                         'stopping at cost %.8g', iterations, cost)
            stalled = True
            break

        step_norm = float(np.max(np.abs(accepted[0] - controls)))
        controls, cost, states = accepted
        history.append(cost)
        logger.debug('SQP iteration %d: cost %.8g, step %.3g', iterations,
                     cost, step_norm)
        if step_norm < problem.convergence_tol:
            converged = True
            break

    result = MpcResult(controls, Trajectory(states, problem.dt), cost,
                       iterations, tuple(history), converged, stalled)

    slack = problem.slack(states)
    if slack.size and np.max(slack) > SLACK_TOL:
        raise InfeasibleError(
            f'State bounds violated by {np.max(slack):.3g} at the optimum'
        )
    if not (converged or stalled):
        raise NoConvergenceError(
            f'SQP did not converge in {problem.max_sqp_iters} iterations',
            result
        )
    return result


def mpc_solve(problem: MpcProblem) -> tuple[np.ndarray, Trajectory]:
    """Open-loop solve: controls for N steps and the predicted trajectory."""

    result = solve_mpc(problem)
    return result.controls, result.trajectory


def mpc_track(model: AnyModel, x0: np.ndarray,
              reference: Trajectory | np.ndarray, dt: float,
              params: MpcParams | None = None,
              state_bounds: tuple[np.ndarray, np.ndarray] | None = None
              ) -> tuple[np.ndarray, Trajectory]:
    """Receding-horizon tracking of a reference.

    Re-solves the horizon problem at every step from the measured state,
    warm-started with the shifted previous solution, and applies the first
    control. A non-converged solve is used as is, with a warning.

    Returns:
        (controls, trajectory) over len(reference) - 1 steps.

    Raises:
        InfeasibleError: If a horizon problem cannot meet the state bounds.
    """

    params = params or MpcParams()
    ref = reference_states(model, reference)
    steps = len(ref) - 1
    if steps < 1:
        raise ContractError('A tracking reference needs two samples')

    N = params.horizon
    ref = reference_states(model, ref, steps + N + 1)
    u_ref = nominal_controls(model, ref, dt)
    weights = params.weights(model.n, model.m)

    x = np.asarray(x0, dtype=float)
    states, controls = [x], []
    warm = None
    for k in range(steps):
        problem = MpcProblem(
            model, x, ref[k:k + N + 1], N, weights, dt,
            state_bounds=state_bounds, u_ref=u_ref[k:k + N],
            max_sqp_iters=params.max_sqp_iters,
            convergence_tol=params.convergence_tol, warm_start=warm
        )
        try:
            result = solve_mpc(problem)
        except NoConvergenceError as e:
            logger.warning('Step %d: %s; applying the last iterate', k, e)
            result = e.result

        u = result.controls[0]
        warm = np.vstack([result.controls[1:], result.controls[-1:]])
        x = step(model, x, u, dt)
        states.append(x)
        controls.append(u)

    return np.array(controls), Trajectory(np.array(states), dt)
