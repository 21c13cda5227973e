"""Cross-entropy method: derivative-free search with a refitted Gaussian."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from ..core.deadline import checkpoint
from ..core.exceptions import (
    ContractError, NumericOverflowError, ObjectiveError
)
from ..dynamics import AnyModel, Trajectory, rollout, rollout_states
from ..env.geometry import Obstacle
from .objective import Target, TrajectoryCost
from .params import CemParams


__all__ = [
    'CemResult', 'CrossEntropyOptimizer', 'cem_optimize', 'cem_plan',
]


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CemResult:
    """Outcome of a CEM run.

    Attributes:
        mean: The final distribution mean.
        best: The best sample seen.
        best_value: Its objective value.
        history: Best-so-far objective after each iteration.
    """

    mean: np.ndarray
    best: np.ndarray
    best_value: float
    history: tuple[float, ...]


class CrossEntropyOptimizer:
    """Iterative Gaussian CEM with a diagonal covariance.

    Each iteration draws `population` samples from N(mean, diag(std^2)),
    keeps the `elites` lowest-valued ones and refits mean and std to them
    (std floored at params.std_floor). Samples may be clipped to a box.
    """

    def __init__(self, params: CemParams | None = None) -> None:
        self.params = params or CemParams()
        if self.params.population < 2 * self.params.elites:
            raise ContractError(
                f'Population {self.params.population} must hold at least '
                f'twice the {self.params.elites} elites'
            )

    def _evaluate(self, objective: Callable, samples: np.ndarray,
                  vectorized: bool) -> np.ndarray:
        try:
            if vectorized:
                values = np.asarray(objective(samples), dtype=float)
            else:
                values = np.array([float(objective(s)) for s in samples])
        except (NumericOverflowError, FloatingPointError) as e:
            raise ObjectiveError(f'Objective evaluation failed: {e}') from e

        if values.shape != (len(samples),):
            raise ContractError(
                f'Objective returned shape {values.shape} for '
                f'{len(samples)} samples'
            )
        if not np.all(np.isfinite(values)):
            raise ObjectiveError('Objective returned a non-finite value')
        return values

    def run(self, objective: Callable[[np.ndarray], float | np.ndarray],
            init_mean: Sequence[float] | np.ndarray,
            init_std: Sequence[float] | np.ndarray | float | None = None,
            lower: np.ndarray | None = None,
            upper: np.ndarray | None = None,
            vectorized: bool = False) -> CemResult:
        """Minimizes an objective.

        Arguments:
            objective: Maps a vector (or, if vectorized, a (population, dim)
                stack) to its value(s); lower is better.
            init_mean: Initial mean, which fixes the dimension.
            init_std: Initial standard deviation, defaults to
                params.init_std.
            lower: Optional lower clip bound for samples.
            upper: Optional upper clip bound for samples.
            vectorized: Evaluate the whole population in one call.

        Raises:
            ObjectiveError: If the objective yields a non-finite value.
        """

        params = self.params
        mean = np.atleast_1d(np.asarray(init_mean, dtype=float)).copy()
        if mean.ndim != 1 or mean.size == 0:
            raise ContractError('The initial mean must be a non-empty vector')
        std = np.broadcast_to(
            np.asarray(params.init_std if init_std is None else init_std,
                       dtype=float), mean.shape
        ).copy()

        rng = np.random.default_rng(params.rng_seed)
        best = mean.copy()
        best_value = np.inf
        history = []

        for it in range(params.iterations):
            checkpoint()

            samples = mean + std * rng.standard_normal(
                (params.population, mean.size)
            )
            if lower is not None or upper is not None:
                samples = np.clip(samples, lower, upper)

            values = self._evaluate(objective, samples, vectorized)
            order = np.argsort(values, kind='stable')
            elite = samples[order[:params.elites]]

            if values[order[0]] < best_value:
                best_value = float(values[order[0]])
                best = samples[order[0]].copy()

            mean = elite.mean(axis=0)
            std = np.maximum(elite.std(axis=0), params.std_floor)
            history.append(best_value)
            logger.debug('CEM iteration %d: best %.6g', it, best_value)

        return CemResult(mean, best, best_value, tuple(history))


def cem_optimize(objective: Callable[[np.ndarray], float], dim: int,
                 init_mean: Sequence[float] | np.ndarray | float,
                 params: CemParams | None = None) -> np.ndarray:
    """Runs CEM on a scalar objective and returns the final mean."""

    if dim < 1:
        raise ContractError(f'Invalid dimension {dim}')
    mean = np.broadcast_to(np.asarray(init_mean, dtype=float), (dim,))
    return CrossEntropyOptimizer(params).run(objective, mean).mean


def cem_plan(model: AnyModel, x0: Sequence[float] | np.ndarray,
             target: Target, obstacles: Sequence[Obstacle], horizon: int,
             dt: float, params: CemParams | None = None,
             init_controls: np.ndarray | None = None,
             obstacle_weight: float = 10.0,
             effort_weight: float = 1e-3
             ) -> tuple[np.ndarray, Trajectory]:
    """Optimizes a flattened control sequence with CEM.

    The population is rolled out in one batch and scored with
    TrajectoryCost. The initial standard deviation is params.init_std
    times half the width of each control interval.

    Arguments:
        model: The dynamics model.
        x0: Initial state.
        target: A goal disc or a state reference.
        obstacles: Obstacles to stay clear of.
        horizon: Number of control steps.
        dt: Time step.
        params: CEM parameters.
        init_controls: Initial mean of shape (horizon, m), zeros if None.

    Returns:
        (controls, trajectory) for the best sample found.
    """

    params = params or CemParams()
    cost = TrajectoryCost.build(target, horizon, obstacles,
                                obstacle_weight, effort_weight)
    m = model.m

    lower = np.tile(model.lower, horizon)
    upper = np.tile(model.upper, horizon)
    half = np.where(np.isfinite(upper - lower), 0.5 * (upper - lower), 1.0)

    mean = np.zeros(horizon * m) if init_controls is None else (
        np.asarray(init_controls, dtype=float).reshape(horizon * m)
    )
    mean = np.clip(mean, lower, upper)

    def objective(samples: np.ndarray) -> np.ndarray:
        controls = samples.reshape(len(samples), horizon, m)
        states = rollout_states(model, x0, controls, dt)
        return cost.value(states, controls)

    result = CrossEntropyOptimizer(params).run(
        objective, mean, params.init_std * half, lower, upper,
        vectorized=True
    )
    logger.info('CEM plan cost %.4g after %d iterations', result.best_value,
                params.iterations)

    controls = (result.best if np.isfinite(result.best_value)
                else mean).reshape(horizon, m)
    return controls, rollout(model, x0, controls, dt)
