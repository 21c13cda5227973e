"""Reference handling shared by the tracking controllers."""

from __future__ import annotations

import numpy as np

from ..core.exceptions import ContractError
from ..dynamics import AnyModel, DynamicsModel, ModelKind, Trajectory
from ..dynamics import wrap_angle


__all__ = ['reference_states', 'state_error', 'tracked_dims']


def reference_states(model: AnyModel, reference: Trajectory | np.ndarray,
                     length: int | None = None) -> np.ndarray:
    """The reference as a (length, n) array, holding its last state when
    it is shorter than requested."""

    states = reference.states if isinstance(reference, Trajectory) else (
        np.asarray(reference, dtype=float)
    )
    if states.ndim == 1 and model.n == 1:
        states = states.reshape(-1, 1)
    if states.ndim != 2 or states.shape[1] != model.n or len(states) == 0:
        raise ContractError(
            f'Reference must be (T, {model.n}), got {states.shape}'
        )
    if length is None:
        return states
    if len(states) < length:
        hold = np.repeat(states[-1:], length - len(states), axis=0)
        states = np.vstack([states, hold])
    return states[:length]


def state_error(model: AnyModel, x: np.ndarray, ref: np.ndarray
                ) -> np.ndarray:
    """x - ref, with the unicycle heading difference wrapped."""

    err = np.asarray(x, dtype=float) - ref
    if isinstance(model, DynamicsModel) and model.kind is ModelKind.UNICYCLE:
        err = err.copy()
        err[..., 2] = wrap_angle(err[..., 2])
    return err


def tracked_dims(model: AnyModel) -> int:
    """Number of leading state components a PID loop regulates."""

    if isinstance(model, DynamicsModel):
        return 1 if model.kind is ModelKind.PENDULUM else 2
    return model.n
