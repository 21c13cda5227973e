"""Planar obstacle geometry and collision checks.

Positions are the first two state components for every model. Checks are
vectorized over stacks of points and segments.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import Any, Self

import numpy as np

from ..core.exceptions import ContractError


__all__ = [
    'Circle', 'Rect', 'Obstacle', 'Workspace', 'obstacle_from_dict',
    'point_segment_distance', 'collides_point', 'collides_segment',
    'segments_collide', 'points_collide', 'trajectory_collision_free',
    'first_collision_step', 'signed_distance',
]


def _vec2(value, name: str) -> np.ndarray:
    vec = np.asarray(value, dtype=float)
    if vec.shape != (2,) or not np.all(np.isfinite(vec)):
        raise ContractError(f'{name} must be a finite 2-vector, got {value!r}')
    vec.flags.writeable = False
    return vec


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray
                           ) -> np.ndarray:
    """Distance from points p to segments a-b (all broadcast, last axis 2)."""

    d = b - a
    dd = np.sum(d * d, axis=-1)
    safe = np.where(dd > 0, dd, 1.0)
    t = np.clip(np.sum((p - a) * d, axis=-1) / safe, 0.0, 1.0)
    t = np.where(dd > 0, t, 0.0)
    closest = a + t[..., None] * d
    return np.linalg.norm(p - closest, axis=-1)


@dataclass(frozen=True, eq=False)
class Circle:
    """A disc obstacle.

    Attributes:
        center: Center position [m].
        radius: Radius [m], strictly positive.
    """

    center: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, 'center', _vec2(self.center, 'center'))
        if not self.radius > 0:
            raise ContractError(f'Invalid circle radius {self.radius}')
        object.__setattr__(self, 'radius', float(self.radius))

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Circle)
                and np.array_equal(self.center, other.center)
                and self.radius == other.radius)

    @property
    def bounding_radius(self) -> float:
        return self.radius

    @property
    def centroid(self) -> np.ndarray:
        return self.center

    def contains(self, points: np.ndarray, margin: float = 0.0
                 ) -> np.ndarray:
        dist = np.linalg.norm(np.asarray(points) - self.center, axis=-1)
        return dist <= self.radius + margin

    def hits_segments(self, a: np.ndarray, b: np.ndarray,
                      margin: float = 0.0) -> np.ndarray:
        return point_segment_distance(self.center, a, b) <= (
            self.radius + margin
        )

    def signed_distance(self, points: np.ndarray
                        ) -> tuple[np.ndarray, np.ndarray]:
        diff = np.asarray(points, dtype=float) - self.center
        norm = np.linalg.norm(diff, axis=-1)
        safe = np.where(norm > 1e-12, norm, 1.0)[..., None]
        grad = np.where(norm[..., None] > 1e-12, diff / safe, [1.0, 0.0])
        return norm - self.radius, grad

    def describe(self) -> str:
        return (f'circle centered at ({self.center[0]:.3f}, '
                f'{self.center[1]:.3f}) with radius {self.radius:.3f}')

    def to_dict(self) -> dict[str, Any]:
        return {'shape': 'circle', 'center': self.center.tolist(),
                'radius': self.radius}


@dataclass(frozen=True, eq=False)
class Rect:
    """An axis-aligned box obstacle.

    Attributes:
        lo: Lower-left corner [m].
        hi: Upper-right corner [m], strictly greater componentwise.
    """

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, 'lo', _vec2(self.lo, 'lo'))
        object.__setattr__(self, 'hi', _vec2(self.hi, 'hi'))
        if not np.all(self.lo < self.hi):
            raise ContractError(
                f'Invalid rect, min {self.lo} not below max {self.hi}'
            )

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Rect)
                and np.array_equal(self.lo, other.lo)
                and np.array_equal(self.hi, other.hi))

    @property
    def centroid(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def bounding_radius(self) -> float:
        return float(0.5 * np.linalg.norm(self.hi - self.lo))

    def distance(self, points: np.ndarray) -> np.ndarray:
        """Distance from points to the box, zero inside."""

        points = np.asarray(points, dtype=float)
        gap = np.maximum(np.maximum(self.lo - points, points - self.hi), 0.0)
        return np.linalg.norm(gap, axis=-1)

    def contains(self, points: np.ndarray, margin: float = 0.0
                 ) -> np.ndarray:
        if margin == 0.0:
            points = np.asarray(points)
            return np.all((points >= self.lo) & (points <= self.hi), axis=-1)
        return self.distance(points) <= margin

    def _slab(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        d = b - a
        with np.errstate(divide='ignore', invalid='ignore'):
            t1 = (self.lo - a) / d
            t2 = (self.hi - a) / d
        parallel = d == 0
        inside = (a >= self.lo) & (a <= self.hi)
        t_near = np.where(parallel, -np.inf, np.minimum(t1, t2))
        t_far = np.where(parallel, np.inf, np.maximum(t1, t2))
        t_near = np.max(t_near, axis=-1)
        t_far = np.min(t_far, axis=-1)
        ok = np.all(~parallel | inside, axis=-1)
        return ok & (t_near <= t_far) & (t_far >= 0.0) & (t_near <= 1.0)

    def hits_segments(self, a: np.ndarray, b: np.ndarray,
                      margin: float = 0.0) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        hits = self._slab(a, b)
        if margin > 0.0:
            corners = np.array([self.lo, [self.hi[0], self.lo[1]],
                                self.hi, [self.lo[0], self.hi[1]]])
            near = (self.distance(a) <= margin) | (self.distance(b) <= margin)
            for corner in corners:
                near |= point_segment_distance(corner, a, b) <= margin
            hits = hits | near
        return hits

    def signed_distance(self, points: np.ndarray
                        ) -> tuple[np.ndarray, np.ndarray]:
        points = np.asarray(points, dtype=float)
        center = self.centroid
        half = 0.5 * (self.hi - self.lo)
        rel = points - center
        q = np.abs(rel) - half
        sign = np.where(rel >= 0, 1.0, -1.0)

        outside = np.maximum(q, 0.0)
        out_norm = np.linalg.norm(outside, axis=-1)
        inside = np.minimum(np.max(q, axis=-1), 0.0)

        safe = np.where(out_norm > 1e-12, out_norm, 1.0)[..., None]
        grad_out = sign * outside / safe
        axis = np.argmax(q, axis=-1)
        grad_in = np.where(
            (np.arange(2) == axis[..., None]), sign, 0.0
        )
        grad = np.where(out_norm[..., None] > 1e-12, grad_out, grad_in)
        return out_norm + inside, grad

    def describe(self) -> str:
        return (f'box from ({self.lo[0]:.3f}, {self.lo[1]:.3f}) to '
                f'({self.hi[0]:.3f}, {self.hi[1]:.3f})')

    def to_dict(self) -> dict[str, Any]:
        return {'shape': 'rect', 'min': self.lo.tolist(),
                'max': self.hi.tolist()}


Obstacle = Circle | Rect


def obstacle_from_dict(data: Mapping[str, Any]) -> Obstacle:
    """Builds an obstacle from its dict form."""

    try:
        match data['shape']:
            case 'circle':
                return Circle(data['center'], data['radius'])
            case 'rect':
                return Rect(data['min'], data['max'])
            case other:
                raise ContractError(f'Unknown obstacle shape {other!r}')
    except (KeyError, TypeError) as e:
        raise ContractError(f'Invalid obstacle {data!r}: {e}') from None


@dataclass(frozen=True, eq=False)
class Workspace:
    """Axis-aligned bounds of the permissible region."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, 'lo', _vec2(self.lo, 'lo'))
        object.__setattr__(self, 'hi', _vec2(self.hi, 'hi'))
        if not np.all(self.lo < self.hi):
            raise ContractError('Invalid workspace bounds')

    @classmethod
    def square(cls, size: float = 10.0) -> Self:
        return cls(np.zeros(2), np.full(2, size))

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Workspace)
                and np.array_equal(self.lo, other.lo)
                and np.array_equal(self.hi, other.hi))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, points: np.ndarray, margin: float = 0.0
                 ) -> np.ndarray:
        points = np.asarray(points)
        return np.all(
            (points >= self.lo + margin) & (points <= self.hi - margin),
            axis=-1
        )

    def to_dict(self) -> dict[str, Any]:
        return {'min': self.lo.tolist(), 'max': self.hi.tolist()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Self:
        return cls(data['min'], data['max'])


def points_collide(points: np.ndarray, obstacles: Iterable[Obstacle],
                   margin: float = 0.0) -> np.ndarray:
    """Per-point collision flags for a stack of points."""

    points = np.asarray(points, dtype=float)
    hit = np.zeros(points.shape[:-1], dtype=bool)
    for obstacle in obstacles:
        hit |= obstacle.contains(points, margin)
    return hit


def collides_point(p: Sequence[float] | np.ndarray,
                   obstacles: Iterable[Obstacle], margin: float = 0.0) -> bool:
    """True if p lies in (or on the boundary of) any obstacle."""

    return bool(points_collide(np.asarray(p, dtype=float), obstacles, margin))


def segments_collide(a: np.ndarray, b: np.ndarray,
                     obstacles: Iterable[Obstacle], margin: float = 0.0
                     ) -> np.ndarray:
    """Per-segment collision flags for stacks of segments a[i]-b[i]."""

    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    hit = np.zeros(np.broadcast_shapes(a.shape, b.shape)[:-1], dtype=bool)
    for obstacle in obstacles:
        hit |= obstacle.hits_segments(a, b, margin)
    return hit


def collides_segment(a: Sequence[float] | np.ndarray,
                     b: Sequence[float] | np.ndarray,
                     obstacles: Iterable[Obstacle],
                     margin: float = 0.0) -> bool:
    """True if the closed segment a-b touches any obstacle."""

    return bool(segments_collide(np.asarray(a, dtype=float),
                                 np.asarray(b, dtype=float),
                                 obstacles, margin))


def first_collision_step(positions: np.ndarray,
                         obstacles: Sequence[Obstacle],
                         workspace: Workspace | None = None) -> int | None:
    """Index k of the first step whose segment k-1 -> k (or the start
    point for k = 0) collides or leaves the workspace; None if clear."""

    positions = np.asarray(positions, dtype=float)[:, :2]
    bad = points_collide(positions[:1], obstacles)
    if workspace is not None:
        bad = bad | ~workspace.contains(positions[:1])
    if bad[0]:
        return 0

    steps = segments_collide(positions[:-1], positions[1:], obstacles)
    if workspace is not None:
        steps |= ~workspace.contains(positions[1:])

    hits = np.flatnonzero(steps)
    return int(hits[0]) + 1 if hits.size else None


def trajectory_collision_free(traj, obstacles: Sequence[Obstacle],
                              workspace: Workspace) -> bool:
    """True if every consecutive segment of the trajectory's positions is
    obstacle-free and every position lies in the workspace."""

    states = traj.states if hasattr(traj, 'states') else np.asarray(traj)
    return first_collision_step(states, obstacles, workspace) is None


def signed_distance(points: np.ndarray, obstacles: Sequence[Obstacle]
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Signed distances (negative inside) and their gradients w.r.t. the
    points, one column per obstacle.

    Returns:
        (d, grad) with shapes (..., K) and (..., K, 2).
    """

    points = np.asarray(points, dtype=float)
    if not obstacles:
        return (np.zeros(points.shape[:-1] + (0,)),
                np.zeros(points.shape[:-1] + (0, 2)))

    parts = [obstacle.signed_distance(points) for obstacle in obstacles]
    d = np.stack([p[0] for p in parts], axis=-1)
    grad = np.stack([p[1] for p in parts], axis=-2)
    return d, grad
