"""Dynamics model descriptions."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from types import MappingProxyType
from typing import Any, Self

import numpy as np

from ..core.exceptions import ContractError


__all__ = [
    'ModelKind', 'Method', 'DynamicsModel', 'LinearSystem', 'AnyModel',
    'MODEL_DIMS', 'DEFAULT_PARAMS', 'DEFAULT_CONTROL_BOUNDS',
]


class ModelKind(StrEnum):
    SINGLE_INTEGRATOR_2D = 'single_integrator_2d'
    DOUBLE_INTEGRATOR_2D = 'double_integrator_2d'
    UNICYCLE = 'unicycle'
    PENDULUM = 'pendulum'


class Method(StrEnum):
    EULER = 'euler'
    RK4 = 'rk4'


# (n, m)
MODEL_DIMS: Mapping[ModelKind, tuple[int, int]] = MappingProxyType({
    ModelKind.SINGLE_INTEGRATOR_2D: (2, 2),
    ModelKind.DOUBLE_INTEGRATOR_2D: (4, 2),
    ModelKind.UNICYCLE: (3, 2),
    ModelKind.PENDULUM: (2, 1),
})

DEFAULT_PARAMS: Mapping[ModelKind, Mapping[str, float]] = MappingProxyType({
    ModelKind.SINGLE_INTEGRATOR_2D: {},
    ModelKind.DOUBLE_INTEGRATOR_2D: {},
    ModelKind.UNICYCLE: {},
    ModelKind.PENDULUM: {'g': 9.8, 'l': 1.0, 'M': 1.0},
})

DEFAULT_CONTROL_BOUNDS: Mapping[ModelKind, tuple[tuple[float, float], ...]] = (
    MappingProxyType({
        ModelKind.SINGLE_INTEGRATOR_2D: ((-4.0, 4.0), (-4.0, 4.0)),
        ModelKind.DOUBLE_INTEGRATOR_2D: ((-3.0, 3.0), (-3.0, 3.0)),
        ModelKind.UNICYCLE: ((-2.0, 2.0), (-2.0, 2.0)),
        ModelKind.PENDULUM: ((-5.0, 5.0),),
    })
)

_DEFAULT_METHOD = {
    ModelKind.SINGLE_INTEGRATOR_2D: Method.EULER,
    ModelKind.DOUBLE_INTEGRATOR_2D: Method.EULER,
    ModelKind.UNICYCLE: Method.RK4,
    ModelKind.PENDULUM: Method.RK4,
}


def _check_bounds(bounds: Sequence[Sequence[float]], m: int
                  ) -> tuple[tuple[float, float], ...]:
    if len(bounds) != m:
        raise ContractError(
            f'Expected {m} control bound intervals, got {len(bounds)}'
        )

    checked = []
    for interval in bounds:
        lo, hi = (float(v) for v in interval)
        if not lo <= hi:
            raise ContractError(f'Invalid control interval [{lo}, {hi}]')
        checked.append((lo, hi))

    return tuple(checked)


@dataclass(frozen=True)
class DynamicsModel:
    """A continuous-time system x' = f(x, u) of one of the supported kinds.

    Attributes:
        kind: The model kind, which fixes n, m and the closed form of f.
        params: Physical parameters (pendulum: g, l, M).
        control_bounds: One closed interval per control dimension.
        method: Default integration scheme for this model.
    """

    kind: ModelKind
    params: Mapping[str, float] = field(default_factory=dict)
    control_bounds: tuple[tuple[float, float], ...] = ()
    method: Method = Method.EULER

    def __post_init__(self) -> None:
        n, m = MODEL_DIMS[self.kind]
        object.__setattr__(
            self, 'control_bounds', _check_bounds(self.control_bounds, m)
        )

        for name in DEFAULT_PARAMS[self.kind]:
            if name not in self.params:
                raise ContractError(f'Missing {self.kind} parameter {name}')
            if not self.params[name] > 0:
                raise ContractError(
                    f'Parameter {name} must be positive, got '
                    f'{self.params[name]}'
                )
        object.__setattr__(
            self, 'params', MappingProxyType(dict(self.params))
        )

    @classmethod
    def build(
            cls,
            kind: ModelKind | str,
            params: Mapping[str, float] | None = None,
            control_bounds: Sequence[Sequence[float]] | None = None,
            method: Method | str | None = None
    ) -> Self:
        """Builds a model, filling in defaults for anything not given.

        Arguments:
            kind: The model kind.
            params: Overrides for the default physical parameters.
            control_bounds: Control intervals, defaults per kind.
            method: Default integrator, Euler for the integrator chains and
                RK4 otherwise.

        Raises:
            ContractError: If kind is unknown or params/bounds are invalid.
        """

        try:
            kind = ModelKind(kind)
        except ValueError:
            raise ContractError(f'Unknown model kind {kind!r}') from None

        merged = dict(DEFAULT_PARAMS[kind])
        merged.update(params or {})
        if control_bounds is None:
            control_bounds = DEFAULT_CONTROL_BOUNDS[kind]
        method = Method(method) if method is not None else _DEFAULT_METHOD[kind]

        return cls(kind, merged, tuple(map(tuple, control_bounds)), method)

    @property
    def n(self) -> int:
        return MODEL_DIMS[self.kind][0]

    @property
    def m(self) -> int:
        return MODEL_DIMS[self.kind][1]

    @property
    def is_linear(self) -> bool:
        return self.kind in (
            ModelKind.SINGLE_INTEGRATOR_2D, ModelKind.DOUBLE_INTEGRATOR_2D
        )

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.control_bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.control_bounds])

    def clamp(self, u: np.ndarray) -> np.ndarray:
        """Saturates u (or a stack of controls) to the control bounds."""

        return np.clip(u, self.lower, self.upper)

    def describe(self) -> str:
        """Short human-readable summary used in task texts."""

        bounds = ', '.join(
            f'[{lo:.3f}, {hi:.3f}]' for lo, hi in self.control_bounds
        )
        text = f'{self.kind} (n={self.n}, m={self.m}, control bounds {bounds}'
        if self.params:
            text += ', ' + ', '.join(
                f'{k}={v:.3f}' for k, v in self.params.items()
            )
        return text + ')'

    def to_dict(self) -> dict[str, Any]:
        return {
            'kind': str(self.kind),
            'params': dict(self.params),
            'control_bounds': [list(b) for b in self.control_bounds],
            'method': str(self.method),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Self:
        try:
            return cls.build(
                data['kind'], data.get('params'), data.get('control_bounds'),
                data.get('method')
            )
        except KeyError as e:
            raise ContractError(f'Model config missing field {e}') from None


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """A discrete-time linear system x+ = A x + B u.

    Used directly by the LQR and MPC solvers for problems that are not one
    of the planar robot models.
    """

    A: np.ndarray
    B: np.ndarray
    control_bounds: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim < 2:
            B = B.reshape(A.shape[0], -1)
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
            raise ContractError(
                f'Inconsistent system shapes A{A.shape} B{B.shape}'
            )

        bounds = self.control_bounds or ((-np.inf, np.inf),) * B.shape[1]
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'B', B)
        object.__setattr__(
            self, 'control_bounds', _check_bounds(bounds, B.shape[1])
        )

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def is_linear(self) -> bool:
        return True

    @property
    def method(self) -> Method:
        return Method.EULER

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.control_bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.control_bounds])

    def clamp(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self.lower, self.upper)


AnyModel = DynamicsModel | LinearSystem
