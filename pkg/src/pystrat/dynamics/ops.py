"""Evaluation, integration and linearization of dynamics models.

All functions accept either a single state/control pair or stacks of them
with matching leading dimensions, which lets the sampling planners roll out
whole populations at once.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from ..core.exceptions import ContractError, NumericOverflowError
from .model import AnyModel, DynamicsModel, LinearSystem, Method, ModelKind
from .trajectory import Trajectory


__all__ = [
    'eval_f', 'jacobians', 'step', 'linearize', 'rollout', 'rollout_states',
    'nominal_controls', 'wrap_angle', 'step_jacobians',
]


def wrap_angle(angle: np.ndarray | float) -> np.ndarray | float:
    """Wraps angles to [-pi, pi)."""

    return (np.asarray(angle) + np.pi) % (2 * np.pi) - np.pi


def _as_vectors(model: AnyModel, x, u) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape[-1:] != (model.n,):
        raise ContractError(
            f'State must have dimension {model.n}, got shape {x.shape}'
        )
    if u.shape[-1:] != (model.m,):
        raise ContractError(
            f'Control must have dimension {model.m}, got shape {u.shape}'
        )
    return x, u


def _f(model: DynamicsModel, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    match model.kind:
        case ModelKind.SINGLE_INTEGRATOR_2D:
            return np.broadcast_to(u, x.shape).copy()
        case ModelKind.DOUBLE_INTEGRATOR_2D:
            return np.concatenate([x[..., 2:4], u], axis=-1)
        case ModelKind.UNICYCLE:
            theta = x[..., 2]
            v, omega = u[..., 0], u[..., 1]
            return np.stack(
                [v * np.cos(theta), v * np.sin(theta), omega], axis=-1
            )
        case ModelKind.PENDULUM:
            g, l, M = model.params['g'], model.params['l'], model.params['M']
            theta, omega = x[..., 0], x[..., 1]
            return np.stack(
                [omega, -(g / l) * np.sin(theta) + u[..., 0] / (M * l * l)],
                axis=-1
            )


def eval_f(model: DynamicsModel, x, u) -> np.ndarray:
    """Evaluates the state derivative f(x, u).

    Raises:
        ContractError: On dimension mismatch, non-finite input, or a
            discrete-time LinearSystem.
    """

    if isinstance(model, LinearSystem):
        raise ContractError('A LinearSystem has no continuous-time form')

    x, u = _as_vectors(model, x, u)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))):
        raise ContractError('State and control must be finite')

    return _f(model, x, u)


def jacobians(model: DynamicsModel, x, u) -> tuple[np.ndarray, np.ndarray]:
    """Analytic continuous-time Jacobians (df/dx, df/du) at a single point."""

    x, u = _as_vectors(model, x, u)
    n, m = model.n, model.m
    fx = np.zeros((n, n))
    fu = np.zeros((n, m))

    match model.kind:
        case ModelKind.SINGLE_INTEGRATOR_2D:
            fu[:] = np.eye(2)
        case ModelKind.DOUBLE_INTEGRATOR_2D:
            fx[0, 2] = fx[1, 3] = 1.0
            fu[2, 0] = fu[3, 1] = 1.0
        case ModelKind.UNICYCLE:
            theta, v = x[2], u[0]
            fx[0, 2] = -v * np.sin(theta)
            fx[1, 2] = v * np.cos(theta)
            fu[0, 0] = np.cos(theta)
            fu[1, 0] = np.sin(theta)
            fu[2, 1] = 1.0
        case ModelKind.PENDULUM:
            g, l, M = model.params['g'], model.params['l'], model.params['M']
            fx[0, 1] = 1.0
            fx[1, 0] = -(g / l) * np.cos(x[0])
            fu[1, 0] = 1.0 / (M * l * l)

    return fx, fu


def step(model: AnyModel, x, u, dt: float,
         method: Method | str | None = None) -> np.ndarray:
    """Advances the state by one step of length dt.

    The control is saturated to the model's bounds first. A LinearSystem
    is already discrete, so dt and method are ignored for it.

    Raises:
        ContractError: If dt <= 0 or on dimension mismatch.
        NumericOverflowError: If the new state is not finite.
    """

    if not dt > 0:
        raise ContractError(f'Invalid time step {dt}')

    x, u = _as_vectors(model, x, u)
    u = model.clamp(u)

    if isinstance(model, LinearSystem):
        x_next = x @ model.A.T + u @ model.B.T
    else:
        method = Method(method) if method is not None else model.method
        if method is Method.EULER:
            x_next = x + dt * _f(model, x, u)
        else:
            k1 = _f(model, x, u)
            k2 = _f(model, x + 0.5 * dt * k1, u)
            k3 = _f(model, x + 0.5 * dt * k2, u)
            k4 = _f(model, x + dt * k3, u)
            x_next = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    if not np.all(np.isfinite(x_next)):
        raise NumericOverflowError(
            'Non-finite state during integration (unstable rollout)'
        )

    return x_next


def linearize(model: AnyModel, x0, u0, dt: float
              ) -> tuple[np.ndarray, np.ndarray]:
    """Discrete-time Jacobians of an Euler step about (x0, u0).

    Returns:
        (A, B) with A = I + dt * df/dx and B = dt * df/du.
    """

    if isinstance(model, LinearSystem):
        return model.A.copy(), model.B.copy()

    x0, u0 = _as_vectors(model, x0, u0)
    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(u0))):
        raise ContractError('Linearization point must be finite')

    fx, fu = jacobians(model, x0, model.clamp(u0))
    return np.eye(model.n) + dt * fx, dt * fu


def rollout_states(model: AnyModel, x0, controls, dt: float,
                   method: Method | str | None = None) -> np.ndarray:
    """Rolls out controls of shape (..., H, m) and returns states of shape
    (..., H + 1, n). Leading dimensions are rolled out independently."""

    controls = np.asarray(controls, dtype=float)
    if controls.ndim < 2 or controls.shape[-2] == 0:
        raise ContractError('Rollout needs at least one control')

    x = np.broadcast_to(
        np.asarray(x0, dtype=float), controls.shape[:-2] + (model.n,)
    )
    states = [x]
    for k in range(controls.shape[-2]):
        x = step(model, x, controls[..., k, :], dt, method)
        states.append(x)

    return np.stack(states, axis=-2)


def rollout(model: AnyModel, x0, controls: Sequence | np.ndarray, dt: float,
            method: Method | str | None = None) -> Trajectory:
    """Simulates the model from x0 under a control sequence.

    Returns:
        A Trajectory of len(controls) + 1 states.

    Raises:
        ContractError: If controls is empty or dimensions mismatch.
        NumericOverflowError: If the rollout becomes non-finite.
    """

    controls = np.asarray(controls, dtype=float)
    if controls.ndim == 1:
        controls = controls.reshape(-1, model.m)
    if controls.ndim != 2:
        raise ContractError(f'Controls must be (H, m), got {controls.shape}')

    return Trajectory(rollout_states(model, x0, controls, dt, method), dt)


def nominal_controls(model: AnyModel, reference, dt: float) -> np.ndarray:
    """Feed-forward controls that reproduce a state reference under Euler
    steps, saturated to the bounds.

    Arguments:
        model: The dynamics model.
        reference: States of shape (T, n), or a Trajectory.
        dt: Time step.

    Returns:
        Controls of shape (T - 1, m).
    """

    ref = reference.states if isinstance(reference, Trajectory) else (
        np.asarray(reference, dtype=float)
    )
    if ref.ndim != 2 or ref.shape[1] != model.n:
        raise ContractError(
            f'Reference must be (T, {model.n}), got {ref.shape}'
        )
    if len(ref) < 2:
        return np.zeros((0, model.m))

    x, x_next = ref[:-1], ref[1:]

    if isinstance(model, LinearSystem):
        rhs = (x_next - x @ model.A.T).T
        u = np.linalg.lstsq(model.B, rhs, rcond=None)[0].T
        return model.clamp(u)

    match model.kind:
        case ModelKind.SINGLE_INTEGRATOR_2D:
            u = (x_next - x) / dt
        case ModelKind.DOUBLE_INTEGRATOR_2D:
            u = (x_next[:, 2:4] - x[:, 2:4]) / dt
        case ModelKind.UNICYCLE:
            d = x_next[:, :2] - x[:, :2]
            theta = x[:, 2]
            v = (d[:, 0] * np.cos(theta) + d[:, 1] * np.sin(theta)) / dt
            omega = wrap_angle(x_next[:, 2] - theta) / dt
            u = np.stack([v, omega], axis=-1)
        case ModelKind.PENDULUM:
            g, l, M = model.params['g'], model.params['l'], model.params['M']
            alpha = (x_next[:, 1] - x[:, 1]) / dt
            u = (M * l * l * (alpha + (g / l) * np.sin(x[:, 0])))[:, None]

    return model.clamp(u)


def step_jacobians(model: AnyModel, x, u, dt: float,
                   method: Method | str | None = None
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Exact Jacobians (dx+/dx, dx+/du) of `step` at a single point.

    Unlike `linearize`, this differentiates the model's own integration
    scheme (including all RK4 stages). Saturation is treated as the
    identity, so the result is exact for controls inside the bounds.
    """

    if isinstance(model, LinearSystem):
        return model.A.copy(), model.B.copy()

    x, u = _as_vectors(model, x, u)
    u = model.clamp(u)
    eye = np.eye(model.n)
    method = Method(method) if method is not None else model.method

    if method is Method.EULER:
        fx, fu = jacobians(model, x, u)
        return eye + dt * fx, dt * fu

    # stage derivatives k_i and their sensitivities
    ks, dks_x, dks_u = [], [], []
    for scale in (0.0, 0.5, 0.5, 1.0):
        if ks:
            xi = x + scale * dt * ks[-1]
            dxi_x = eye + scale * dt * dks_x[-1]
            dxi_u = scale * dt * dks_u[-1]
        else:
            xi, dxi_x, dxi_u = x, eye, np.zeros((model.n, model.m))
        fx, fu = jacobians(model, xi, u)
        ks.append(_f(model, xi, u))
        dks_x.append(fx @ dxi_x)
        dks_u.append(fx @ dxi_u + fu)

    weights = (1.0, 2.0, 2.0, 1.0)
    A = eye + (dt / 6.0) * sum(w * d for w, d in zip(weights, dks_x))
    B = (dt / 6.0) * sum(w * d for w, d in zip(weights, dks_u))
    return A, B
