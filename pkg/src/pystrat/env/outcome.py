"""Judging whether a trajectory accomplishes its scenario's task."""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from ..core.exceptions import ContractError
from ..dynamics.trajectory import Trajectory
from ..stl.robustness import robustness
from .geometry import first_collision_step
from .scenario import ScenarioKind, ScenarioSpec


__all__ = ['EPS_TRACK', 'OutcomeReason', 'TaskOutcome', 'check_outcome']


EPS_TRACK = 0.15


class OutcomeReason(StrEnum):
    GOAL_REACHED = 'GoalReached'
    TRACKING_OK = 'TrackingOk'
    TRACKING_ERROR = 'TrackingError'
    COLLISION = 'Collision'
    GOAL_MISSED = 'GoalMissed'
    STL_VIOLATED = 'StlViolated'
    OUT_OF_BOUNDS = 'OutOfBounds'


_SUCCESS = (OutcomeReason.GOAL_REACHED, OutcomeReason.TRACKING_OK)


@dataclass(frozen=True)
class TaskOutcome:
    """Verdict on one trajectory.

    Attributes:
        success: Whether the task was accomplished.
        reason: Why.
        metric: RMS tracking error [m], final goal distance [m] or
            formula robustness, depending on the scenario kind.
        failure_step: First offending step for Collision and OutOfBounds.
    """

    success: bool
    reason: OutcomeReason
    metric: float
    failure_step: int | None = None

    def __post_init__(self) -> None:
        if self.success != (self.reason in _SUCCESS):
            raise ContractError(
                f'Outcome {self.reason} inconsistent with success flag'
            )


def _metric(spec: ScenarioSpec, traj: Trajectory) -> float:
    if spec.kind.is_tracking:
        err = traj.positions - spec.reference.positions
        return float(np.sqrt(np.mean(np.sum(err ** 2, axis=1))))
    if spec.kind is ScenarioKind.STL_TASK:
        return robustness(spec.stl_formula, traj)
    return spec.goal.distance(traj.final)


def check_outcome(spec: ScenarioSpec, traj: Trajectory,
                  controls: np.ndarray | None = None) -> TaskOutcome:
    """Judges a trajectory against the scenario's task.

    Leaving the workspace or touching an obstacle fails every task; the
    earlier of the two is reported.

    Arguments:
        spec: The scenario.
        traj: The closed-loop trajectory, horizon + 1 states of spec.model.
        controls: The applied controls, horizon rows, if known.

    Raises:
        ContractError: If the trajectory or controls length does not match
            the horizon.
    """

    if len(traj) != spec.horizon + 1 or traj.n != spec.model.n:
        raise ContractError(
            f'Trajectory must be ({spec.horizon + 1}, {spec.model.n}), got '
            f'{traj.states.shape}'
        )
    if controls is not None and len(controls) != spec.horizon:
        raise ContractError(
            f'Expected {spec.horizon} controls, got {len(controls)}'
        )

    metric = _metric(spec, traj)

    hit = first_collision_step(traj.states, spec.obstacles)
    out = first_collision_step(traj.states, (), spec.workspace)
    if out is not None and (hit is None or out < hit):
        return TaskOutcome(False, OutcomeReason.OUT_OF_BOUNDS, metric, out)
    if hit is not None:
        return TaskOutcome(False, OutcomeReason.COLLISION, metric, hit)

    if spec.kind.is_tracking:
        ok = metric <= EPS_TRACK
        reason = (OutcomeReason.TRACKING_OK if ok
                  else OutcomeReason.TRACKING_ERROR)
    elif spec.kind is ScenarioKind.STL_TASK:
        ok = metric >= 0.0
        reason = (OutcomeReason.GOAL_REACHED if ok
                  else OutcomeReason.STL_VIOLATED)
    else:
        ok = metric <= spec.goal.radius
        reason = (OutcomeReason.GOAL_REACHED if ok
                  else OutcomeReason.GOAL_MISSED)

    return TaskOutcome(ok, reason, metric)
