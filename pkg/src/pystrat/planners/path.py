"""Geometric paths produced by the planners."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any, Self

import numpy as np

from ..core.exceptions import ContractError


__all__ = ['Path']


@dataclass(frozen=True, eq=False)
class Path:
    """An ordered polyline of planar waypoints.

    Attributes:
        waypoints: Array of shape (k, 2), k >= 1.
        total_cost: Sum of the consecutive Euclidean distances.
    """

    waypoints: np.ndarray

    def __post_init__(self) -> None:
        waypoints = np.array(self.waypoints, dtype=float).reshape(-1, 2)
        if len(waypoints) == 0 or not np.all(np.isfinite(waypoints)):
            raise ContractError('A path needs at least one finite waypoint')
        waypoints.flags.writeable = False
        object.__setattr__(self, 'waypoints', waypoints)

    def __len__(self) -> int:
        return len(self.waypoints)

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)

    @property
    def total_cost(self) -> float:
        return float(np.sum(self.segment_lengths))

    @property
    def start(self) -> np.ndarray:
        return self.waypoints[0]

    @property
    def end(self) -> np.ndarray:
        return self.waypoints[-1]

    def sample(self, spacing: float, count: int) -> np.ndarray:
        """Points along the path every `spacing` meters of arc length,
        starting at the first waypoint; exactly count points, holding the
        last waypoint once the path is exhausted."""

        if not spacing > 0 or count < 1:
            raise ContractError('Invalid sampling of a path')

        arc = np.concatenate([[0.0], np.cumsum(self.segment_lengths)])
        s = np.minimum(spacing * np.arange(count), arc[-1])
        if arc[-1] == 0.0:
            return np.repeat(self.waypoints[:1], count, axis=0)
        return np.column_stack([
            np.interp(s, arc, self.waypoints[:, 0]),
            np.interp(s, arc, self.waypoints[:, 1]),
        ])

    def then(self, other: Path) -> Self:
        """Concatenates two paths, dropping other's first waypoint when it
        repeats this path's end."""

        tail = other.waypoints
        if np.array_equal(tail[0], self.end):
            tail = tail[1:]
        return type(self)(np.vstack([self.waypoints, tail]))

    def to_dict(self) -> dict[str, Any]:
        return {'waypoints': self.waypoints.tolist(),
                'total_cost': self.total_cost}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Self:
        try:
            return cls(data['waypoints'])
        except (KeyError, TypeError, ValueError) as e:
            raise ContractError(f'Invalid path data: {e}') from None
