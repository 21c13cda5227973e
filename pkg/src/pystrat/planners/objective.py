"""Trajectory costs shared by the optimizing planners."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..core.exceptions import ContractError
from ..dynamics import Trajectory
from ..env.geometry import Obstacle, signed_distance
from ..env.scenario import GoalDisc


__all__ = ['Target', 'TrajectoryCost']


Target = GoalDisc | Trajectory | np.ndarray

# Slope of the smoothed obstacle barrier [1/m].
BARRIER_SHARPNESS = 10.0


@dataclass(frozen=True, eq=False)
class TrajectoryCost:
    """J = task term + w_obs * sum softplus(-d)^2 + w_u * |U|^2.

    The task term is the squared terminal distance to a goal center, or
    the mean squared position error against a reference. Positions are the
    first two state components (the only one for a scalar state), and
    d is the signed distance of a position to an obstacle, smoothed with
    a softplus of slope BARRIER_SHARPNESS.
    """

    horizon: int
    goal: GoalDisc | None = None
    reference: np.ndarray | None = None
    obstacles: Sequence[Obstacle] = field(default_factory=tuple)
    obstacle_weight: float = 10.0
    effort_weight: float = 1e-3

    @classmethod
    def build(cls, target: Target, horizon: int,
              obstacles: Sequence[Obstacle] = (),
              obstacle_weight: float = 10.0,
              effort_weight: float = 1e-3) -> TrajectoryCost:
        if horizon < 1:
            raise ContractError(f'Invalid horizon {horizon}')

        if isinstance(target, GoalDisc):
            return cls(horizon, goal=target, obstacles=tuple(obstacles),
                       obstacle_weight=obstacle_weight,
                       effort_weight=effort_weight)

        states = target.states if isinstance(target, Trajectory) else (
            np.asarray(target, dtype=float)
        )
        if states.ndim != 2 or len(states) == 0:
            raise ContractError('A reference must be a (T, n) array')
        if len(states) < horizon + 1:
            hold = np.repeat(states[-1:], horizon + 1 - len(states), axis=0)
            states = np.vstack([states, hold])
        return cls(horizon, reference=states[:horizon + 1],
                   obstacles=tuple(obstacles),
                   obstacle_weight=obstacle_weight,
                   effort_weight=effort_weight)

    def _barrier(self, positions: np.ndarray
                 ) -> tuple[np.ndarray, np.ndarray]:
        """Per-point penalty and its gradient w.r.t. the positions."""

        if not self.obstacles or positions.shape[-1] != 2:
            return (np.zeros(positions.shape[:-1]),
                    np.zeros(positions.shape))

        d, grad = signed_distance(positions, self.obstacles)
        z = -BARRIER_SHARPNESS * d
        soft = np.logaddexp(0.0, z) / BARRIER_SHARPNESS
        penalty = np.sum(soft ** 2, axis=-1)
        # d soft / d d = -sigmoid(z)
        coeff = -2.0 * soft * expit(z)
        return penalty, np.sum(coeff[..., None] * grad, axis=-2)

    def _positions(self, states: np.ndarray) -> np.ndarray:
        return states[..., :min(2, states.shape[-1])]

    def value(self, states: np.ndarray, controls: np.ndarray) -> np.ndarray:
        """Cost of stacked rollouts: states (..., H+1, n), controls
        (..., H, m); returns shape (...)."""

        p = self._positions(states)

        if self.goal is not None:
            task = np.sum((p[..., -1, :] - self.goal.center) ** 2, axis=-1)
        else:
            err = p[..., 1:, :] - self._positions(self.reference)[1:]
            task = np.mean(np.sum(err ** 2, axis=-1), axis=-1)

        barrier, _ = self._barrier(p[..., 1:, :])
        effort = np.sum(controls ** 2, axis=(-2, -1))
        return (task + self.obstacle_weight * np.sum(barrier, axis=-1)
                + self.effort_weight * effort)

    def gradients(self, states: np.ndarray, controls: np.ndarray
                  ) -> tuple[np.ndarray, np.ndarray]:
        """Partial derivatives (dJ/dx_t, dJ/du_t) of a single rollout."""

        gx = np.zeros_like(states)
        k = self._positions(states).shape[-1]
        p = states[:, :k]

        if self.goal is not None:
            gx[-1, :k] += 2.0 * (p[-1] - self.goal.center)
        else:
            err = p[1:] - self._positions(self.reference)[1:]
            gx[1:, :k] += 2.0 * err / self.horizon

        _, barrier_grad = self._barrier(p[1:])
        gx[1:, :k] += self.obstacle_weight * barrier_grad

        return gx, 2.0 * self.effort_weight * controls
