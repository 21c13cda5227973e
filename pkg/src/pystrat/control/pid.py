"""PID waypoint following."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import asdict, dataclass, fields
from typing import Any, Self

import numpy as np

from ..core.deadline import checkpoint
from ..core.exceptions import ContractError
from ..dynamics import (
    AnyModel, DynamicsModel, ModelKind, Trajectory, step, wrap_angle
)
from .reference import reference_states, tracked_dims


__all__ = ['PidGains', 'PidState', 'pid_control', 'pid_track']


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PidGains:
    """Gains of a per-axis PID loop.

    Attributes:
        kp: Proportional gain (for the unicycle, the distance gain).
        ki: Integral gain.
        kd: Derivative gain.
        integral_limit: Anti-windup clamp of each integral component.
        kff: Reference velocity feed-forward gain.
        kp_heading: Heading gain of the unicycle wrapper.
    """

    kp: float = 2.0
    ki: float = 0.0
    kd: float = 0.0
    integral_limit: float = 1.0
    kff: float = 0.0
    kp_heading: float = 2.0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value) or value < 0:
                raise ContractError(f'{f.name} must be a non-negative number')
        if not self.integral_limit > 0:
            raise ContractError('integral_limit must be positive')

    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | None) -> Self:
        data = dict(data or {})
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ContractError(
                f'Unknown PID gains: {", ".join(sorted(unknown))}'
            )
        try:
            return cls(**{k: float(v) for k, v in data.items()})
        except (TypeError, ValueError) as e:
            raise ContractError(f'Invalid PID gains: {e}') from None

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class PidState:
    """Integral and previous error carried between calls."""

    integral: np.ndarray | None = None
    prev_error: np.ndarray | None = None


def _is_unicycle(model: AnyModel | None) -> bool:
    return (isinstance(model, DynamicsModel)
            and model.kind is ModelKind.UNICYCLE)


def pid_control(ref_point: np.ndarray, x: np.ndarray, state: PidState,
                gains: PidGains, dt: float, model: AnyModel | None = None,
                ref_velocity: np.ndarray | None = None
                ) -> tuple[np.ndarray, PidState]:
    """One PID update.

    The error is e = ref_point - x[:k] with k = len(ref_point). The
    integral uses the trapezoid rule and is clamped to +-integral_limit;
    the derivative is a backward difference (zero without history).

    For a unicycle the axes are not independently actuated, so the PID
    output (a desired planar velocity) is mapped to (v, omega):
    v = |c| cos(dtheta), omega = kp_heading * wrap(dtheta), where c is
    the PID output and dtheta the angle from the heading to c.

    Arguments:
        ref_point: Target of the regulated components.
        x: Current state.
        state: Error history; PidState() for a fresh loop.
        gains: The gains.
        dt: Time step, positive.
        model: Optional model; selects the unicycle wrapper and saturates
            the output.
        ref_velocity: Reference velocity for the feed-forward term.

    Returns:
        (control, new state).
    """

    if not dt > 0:
        raise ContractError(f'Invalid time step {dt}')

    ref_point = np.atleast_1d(np.asarray(ref_point, dtype=float))
    x = np.asarray(x, dtype=float)
    k = len(ref_point)
    err = ref_point - x[:k]

    prev = err if state.prev_error is None else state.prev_error
    integral = np.zeros(k) if state.integral is None else state.integral
    integral = np.clip(integral + 0.5 * dt * (err + prev),
                       -gains.integral_limit, gains.integral_limit)
    derivative = (err - prev) / dt

    command = gains.kp * err + gains.ki * integral + gains.kd * derivative
    if ref_velocity is not None and gains.kff:
        command = command + gains.kff * np.asarray(ref_velocity, dtype=float)

    if _is_unicycle(model):
        speed = float(np.linalg.norm(command))
        if speed > 0.0:
            dtheta = float(wrap_angle(np.arctan2(command[1], command[0])
                                      - x[2]))
        else:
            dtheta = 0.0
        u = np.array([speed * np.cos(dtheta),
                      gains.kp_heading * dtheta])
    else:
        u = command

    if model is not None:
        if u.shape != (model.m,):
            raise ContractError(
                f'PID output has {u.size} components, the model takes '
                f'{model.m}'
            )
        u = model.clamp(u)

    return u, PidState(integral, err)


def pid_track(model: AnyModel, x0: np.ndarray,
              reference: Trajectory | np.ndarray, gains: PidGains,
              dt: float) -> tuple[np.ndarray, Trajectory]:
    """Closed-loop PID tracking of a state reference.

    At step k the loop regulates the leading components of x_k towards
    the reference sample k, with the forward difference of the reference
    as the feed-forward velocity. The reference holds either full states
    or only the regulated components.

    Returns:
        (controls, trajectory) with len(reference) - 1 steps.
    """

    k = tracked_dims(model)
    ref = np.asarray(reference.states if isinstance(reference, Trajectory)
                     else reference, dtype=float)
    if ref.ndim != 2 or ref.shape[1] != k:
        ref = reference_states(model, ref)
    if len(ref) < 2:
        raise ContractError('A tracking reference needs two samples')

    if _is_unicycle(model) or model.n == model.m:
        velocity = np.diff(ref[:, :k], axis=0) / dt
    else:
        velocity = None

    x = np.asarray(x0, dtype=float)
    state = PidState()
    states, controls = [x], []
    for t in range(len(ref) - 1):
        checkpoint()
        u, state = pid_control(
            ref[t, :k], x, state, gains, dt, model,
            None if velocity is None else velocity[t]
        )
        x = step(model, x, u, dt)
        states.append(x)
        controls.append(u)

    logger.debug('PID tracking final error %.4g',
                 float(np.linalg.norm(x[:k] - ref[-1, :k])))
    return np.array(controls), Trajectory(np.array(states), dt)
