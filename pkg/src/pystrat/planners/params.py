"""Parameter bags of the planners.

Every bag is a frozen dataclass validated on construction; `from_dict`
accepts the (partial) mapping an orchestrated stage carries.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import asdict, dataclass, fields
from enum import StrEnum
from typing import Any, Self

from ..core.exceptions import ContractError


__all__ = [
    'RrtVariant', 'AstarParams', 'RrtParams', 'CemParams', 'GradParams',
]


class RrtVariant(StrEnum):
    RRT = 'rrt'
    RRT_STAR = 'rrt_star'


class _Params:
    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | None) -> Self:
        """Builds the bag from a mapping, defaults filling missing keys.

        Raises:
            ContractError: On unknown keys or invalid values.
        """

        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ContractError(
                f'Unknown {cls.__name__} fields: {", ".join(sorted(unknown))}'
            )
        try:
            return cls(**data)
        except TypeError as e:
            raise ContractError(str(e)) from None

    def to_dict(self) -> dict[str, Any]:
        return {k: (str(v) if isinstance(v, StrEnum) else v)
                for k, v in asdict(self).items()}


def _positive(name: str, value: float) -> None:
    if not value > 0:
        raise ContractError(f'{name} must be positive, got {value!r}')


@dataclass(frozen=True)
class AstarParams(_Params):
    grid_resolution: float = 0.25
    connectivity: int = 8
    clearance: float = 0.0

    def __post_init__(self) -> None:
        _positive('grid_resolution', self.grid_resolution)
        if self.connectivity not in (4, 8):
            raise ContractError(
                f'connectivity must be 4 or 8, got {self.connectivity!r}'
            )
        if self.clearance < 0:
            raise ContractError('clearance must be non-negative')


@dataclass(frozen=True)
class RrtParams(_Params):
    step_size: float = 0.4
    goal_bias: float = 0.1
    max_iters: int = 5000
    variant: RrtVariant = RrtVariant.RRT
    rewire_radius: float = 1.0
    rng_seed: int = 0
    clearance: float = 0.0
    waypoint_stride: int = 4
    waypoint_radius: float = 0.3

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, 'variant', RrtVariant(self.variant))
        except ValueError:
            raise ContractError(
                f'Unknown RRT variant {self.variant!r}'
            ) from None
        _positive('step_size', self.step_size)
        _positive('max_iters', self.max_iters)
        _positive('rewire_radius', self.rewire_radius)
        _positive('waypoint_stride', self.waypoint_stride)
        _positive('waypoint_radius', self.waypoint_radius)
        if not 0.0 <= self.goal_bias <= 1.0:
            raise ContractError(f'goal_bias out of [0, 1]: {self.goal_bias}')
        if self.clearance < 0:
            raise ContractError('clearance must be non-negative')


@dataclass(frozen=True)
class CemParams(_Params):
    population: int = 64
    elite_fraction: float = 0.125
    iterations: int = 30
    init_std: float = 1.0
    rng_seed: int = 0
    std_floor: float = 1e-3

    def __post_init__(self) -> None:
        _positive('population', self.population)
        _positive('init_std', self.init_std)
        if self.iterations < 0:
            raise ContractError('iterations must be non-negative')
        if not 0.0 < self.elite_fraction <= 1.0:
            raise ContractError(
                f'elite_fraction out of (0, 1]: {self.elite_fraction}'
            )

    @property
    def elites(self) -> int:
        """Number of elite samples kept per iteration."""

        return max(1, math.ceil(self.elite_fraction * self.population - 1e-9))


@dataclass(frozen=True)
class GradParams(_Params):
    learning_rate: float = 0.5
    iterations: int = 200
    obstacle_weight: float = 10.0
    effort_weight: float = 1e-3

    def __post_init__(self) -> None:
        _positive('learning_rate', self.learning_rate)
        if self.iterations < 0:
            raise ContractError('iterations must be non-negative')
        if self.obstacle_weight < 0 or self.effort_weight < 0:
            raise ContractError('weights must be non-negative')
