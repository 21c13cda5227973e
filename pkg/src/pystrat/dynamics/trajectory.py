"""Uniformly sampled state trajectories."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any, Self

import numpy as np

from ..core.exceptions import ContractError


__all__ = ['Trajectory']


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States sampled every dt seconds starting at time t0.

    Attributes:
        states: Array of shape (T, n), one row per sample.
        dt: Sampling period in seconds.
        t0: Time of the first sample.
    """

    states: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self) -> None:
        states = np.array(self.states, dtype=float)
        if states.ndim == 1:
            states = states.reshape(-1, 1)
        if states.ndim != 2 or states.shape[0] < 1:
            raise ContractError(
                f'Trajectory needs a (T, n) state array, got {states.shape}'
            )
        if not self.dt > 0:
            raise ContractError(f'Invalid sampling period {self.dt}')
        if not np.all(np.isfinite(states)):
            raise ContractError('Trajectory contains non-finite states')

        states.flags.writeable = False
        object.__setattr__(self, 'states', states)

    def __len__(self) -> int:
        return self.states.shape[0]

    def __getitem__(self, k: int) -> np.ndarray:
        return self.states[k]

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    @property
    def positions(self) -> np.ndarray:
        """The first two state components of every sample."""

        return self.states[:, :2]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def resized(self, length: int) -> Self:
        """Returns a copy truncated, or extended by holding the last state,
        to exactly length samples."""

        if length < 1:
            raise ContractError(f'Invalid trajectory length {length}')

        states = self.states[:length]
        if len(states) < length:
            pad = np.repeat(states[-1:], length - len(states), axis=0)
            states = np.vstack([states, pad])

        return type(self)(states, self.dt, self.t0)

    def to_dict(self) -> dict[str, Any]:
        return {
            'dt': self.dt,
            't0': self.t0,
            'states': self.states.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Self:
        try:
            return cls(np.asarray(data['states'], dtype=float),
                       float(data['dt']), float(data.get('t0', 0.0)))
        except (KeyError, TypeError, ValueError) as e:
            raise ContractError(f'Invalid trajectory data: {e}') from None
