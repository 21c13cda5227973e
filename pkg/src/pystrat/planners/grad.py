"""Trajectory optimization by gradient descent through the rollout."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from ..core.deadline import checkpoint
from ..core.exceptions import ContractError, DivergedError, NumericOverflowError
from ..dynamics import AnyModel, Trajectory, rollout_states, step_jacobians
from ..env.geometry import Obstacle
from .objective import Target, TrajectoryCost
from .params import GradParams


__all__ = ['cost_gradient', 'grad_plan']


logger = logging.getLogger(__name__)


def cost_gradient(model: AnyModel, x0: np.ndarray, controls: np.ndarray,
                  dt: float, cost: TrajectoryCost
                  ) -> tuple[float, np.ndarray, np.ndarray]:
    """Cost of a control sequence and its gradient by reverse accumulation.

    The adjoint runs backwards through the step Jacobians:
    lam_H = dJ/dx_H, g_t = dJ/du_t + B_t' lam_{t+1},
    lam_t = dJ/dx_t + A_t' lam_{t+1}.

    Returns:
        (J, dJ/dU, states).

    Raises:
        NumericOverflowError: If the rollout is not finite.
    """

    states = rollout_states(model, x0, controls, dt)
    value = float(cost.value(states, controls))
    gx, gu = cost.gradients(states, controls)

    grad = np.empty_like(controls)
    lam = gx[-1]
    for t in range(len(controls) - 1, -1, -1):
        A, B = step_jacobians(model, states[t], controls[t], dt)
        grad[t] = gu[t] + B.T @ lam
        lam = gx[t] + A.T @ lam

    return value, grad, states


def grad_plan(model: AnyModel, x0: Sequence[float] | np.ndarray,
              target: Target, obstacles: Sequence[Obstacle], horizon: int,
              dt: float, params: GradParams | None = None
              ) -> tuple[np.ndarray, Trajectory]:
    """Plans controls by projected gradient descent on TrajectoryCost.

    Starts from zero controls (projected onto the bounds) and runs exactly
    params.iterations steps; controls are clipped to the bounds after each
    step so saturation never hides a gradient.

    Arguments:
        model: The dynamics model.
        x0: Initial state.
        target: A goal disc, or a reference (Trajectory or state array)
            for tracking.
        obstacles: Obstacles penalized by the smoothed barrier.
        horizon: Number of control steps.
        dt: Time step.
        params: Learning rate, iteration count and weights.

    Returns:
        The best control sequence found and its rollout.

    Raises:
        DivergedError: If a rollout or the cost becomes non-finite.
    """

    params = params or GradParams()
    if horizon < 1:
        raise ContractError(f'Invalid horizon {horizon}')

    x0 = np.asarray(x0, dtype=float)
    cost = TrajectoryCost.build(target, horizon, obstacles,
                                params.obstacle_weight, params.effort_weight)
    lower, upper = model.lower, model.upper

    controls = np.clip(np.zeros((horizon, model.m)), lower, upper)
    best, best_value = controls, np.inf

    try:
        for it in range(params.iterations + 1):
            checkpoint()
            value, grad, _ = cost_gradient(model, x0, controls, dt, cost)
            if not (np.isfinite(value) and np.all(np.isfinite(grad))):
                raise DivergedError(
                    f'Non-finite cost at iteration {it}; lower the '
                    'learning rate'
                )
            if value < best_value:
                best, best_value = controls, value
            if it == params.iterations:
                break
            controls = np.clip(controls - params.learning_rate * grad,
                               lower, upper)
    except NumericOverflowError as e:
        raise DivergedError(
            f'Rollout diverged: {e}; lower the learning rate'
        ) from e

    logger.info('Gradient plan cost %.4g after %d iterations', best_value,
                params.iterations)
    states = rollout_states(model, x0, best, dt)
    return best, Trajectory(states, dt)
