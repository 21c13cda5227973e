"""Running validated pipelines."""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping
from typing import Any

import numpy as np

from ..control import (
    LqrWeights, MpcParams, PidGains, lqr_track, mpc_track, pid_track
)
from ..core.deadline import checkpoint, deadline
from ..core.exceptions import (
    AlgorithmError, ContractError, NumericError, NumericOverflowError,
    StageError, WindowOverflowError
)
from ..dynamics import AnyModel, DynamicsModel, ModelKind, Trajectory
from ..env.scenario import ScenarioSpec
from ..planners import (
    AstarParams, CemParams, GradParams, Path, RrtParams, astar, cem_plan,
    grad_plan, rrt
)
from ..stl import solve_stl
from .catalog import ApiCatalog
from .config import Binding, PipelineConfig


__all__ = ['FIT_SHARE', 'path_to_reference', 'execute_pipeline']


logger = logging.getLogger(__name__)

# share of the horizon a fitted reference takes to traverse its path
FIT_SHARE = 0.9

Output = tuple[Any, np.ndarray | None]
Runner = Callable[[ScenarioSpec, Mapping[str, Any], Mapping[str, Any]],
                  Output]


def _headings(points: np.ndarray) -> np.ndarray:
    """Direction of travel at each sample, held over stops."""

    steps = np.diff(points, axis=0)
    moving = np.linalg.norm(steps, axis=1) > 1e-12
    headings = np.zeros(len(points))
    if not np.any(moving):
        return headings

    angles = np.arctan2(steps[:, 1], steps[:, 0])
    current = angles[np.argmax(moving)]
    for k in range(len(steps)):
        if moving[k]:
            current = angles[k]
        headings[k] = current
    headings[-1] = current
    return headings


def path_to_reference(path: Path, model: AnyModel, horizon: int, dt: float,
                      speed: float = 1.0, fit_horizon: bool = False
                      ) -> Trajectory:
    """Time-parameterizes a path at constant speed into a state reference.

    The path is sampled every speed * dt meters, horizon + 1 samples in
    all, holding the end once it is reached. Each sample is completed to a
    full state: double integrator velocities are the forward differences,
    unicycle headings the direction of travel.

    Arguments:
        path: The geometric path.
        model: The model whose states the reference holds.
        horizon: Number of steps.
        dt: Time step.
        speed: Traversal speed [m/s].
        fit_horizon: Raise the speed, if needed, so that the path is
            traversed within FIT_SHARE of the horizon.

    Raises:
        ContractError: For a model without a planar position or a
            non-positive speed.
    """

    if not speed > 0 or horizon < 1:
        raise ContractError('Invalid path conversion parameters')
    if fit_horizon:
        speed = max(speed, path.total_cost / (FIT_SHARE * horizon * dt))

    points = path.sample(speed * dt, horizon + 1)
    kind = model.kind if isinstance(model, DynamicsModel) else None

    match kind:
        case ModelKind.DOUBLE_INTEGRATOR_2D:
            velocity = np.vstack([np.diff(points, axis=0) / dt,
                                  np.zeros((1, 2))])
            states = np.hstack([points, velocity])
        case ModelKind.UNICYCLE:
            states = np.column_stack([points, _headings(points)])
        case ModelKind.PENDULUM:
            raise ContractError('A pendulum has no planar position')
        case _ if model.n == 2:
            states = points
        case _:
            raise ContractError(
                f'Cannot complete planar samples to {model.n}-dimensional '
                'states'
            )

    return Trajectory(states, dt)


def _astar(scenario: ScenarioSpec, args: Mapping[str, Any],
           params: Mapping[str, Any]) -> Output:
    path = astar(args['start'][:2], args['goal'].center, args['obstacles'],
                 scenario.workspace, AstarParams.from_dict(params))
    return path, None


def _rrt(scenario: ScenarioSpec, args: Mapping[str, Any],
         params: Mapping[str, Any]) -> Output:
    path = rrt(args['start'][:2], args['goal'], args['obstacles'],
               scenario.workspace, RrtParams.from_dict(params),
               route=args.get('route'))
    return path, None


def _split(params: Mapping[str, Any]) -> tuple[dict, float, float]:
    rest = dict(params)
    return (rest, float(rest.pop('obstacle_weight', 10.0)),
            float(rest.pop('effort_weight', 1e-3)))


def _cem(scenario: ScenarioSpec, args: Mapping[str, Any],
         params: Mapping[str, Any]) -> Output:
    rest, w_obs, w_u = _split(params)
    controls, traj = cem_plan(
        scenario.model, args['x0'], args['target'], args.get('obstacles', ()),
        scenario.horizon, scenario.dt, CemParams.from_dict(rest),
        obstacle_weight=w_obs, effort_weight=w_u
    )
    return traj, controls


def _grad(scenario: ScenarioSpec, args: Mapping[str, Any],
          params: Mapping[str, Any]) -> Output:
    controls, traj = grad_plan(
        scenario.model, args['x0'], args['target'], args.get('obstacles', ()),
        scenario.horizon, scenario.dt, GradParams.from_dict(params)
    )
    return traj, controls


def _lqr(scenario: ScenarioSpec, args: Mapping[str, Any],
         params: Mapping[str, Any]) -> Output:
    model = scenario.model
    weights = LqrWeights.from_dict(params, model.n, model.m)
    controls, traj = lqr_track(model, args['x0'], args['reference'],
                               weights, scenario.dt)
    return traj, controls


def _mpc(scenario: ScenarioSpec, args: Mapping[str, Any],
         params: Mapping[str, Any]) -> Output:
    controls, traj = mpc_track(scenario.model, args['x0'], args['reference'],
                               scenario.dt, MpcParams.from_dict(params))
    return traj, controls


def _pid(scenario: ScenarioSpec, args: Mapping[str, Any],
         params: Mapping[str, Any]) -> Output:
    controls, traj = pid_track(scenario.model, args['x0'], args['reference'],
                               PidGains.from_dict(params), scenario.dt)
    return traj, controls


def _milp(scenario: ScenarioSpec, args: Mapping[str, Any],
          params: Mapping[str, Any]) -> Output:
    plan = solve_stl(args['formula'], scenario.model, args['x0'],
                     scenario.horizon, scenario.dt, scenario.workspace,
                     node_limit=int(params['node_limit']),
                     lp_method=params['lp_method'])
    return plan.trajectory, plan.controls


_RUNNERS: Mapping[str, Runner] = {
    'astar': _astar,
    'rrt': _rrt,
    'cem': _cem,
    'grad': _grad,
    'lqr': _lqr,
    'mpc': _mpc,
    'pid': _pid,
    'milp': _milp,
}


def _resolve(binding: Binding, values: Mapping[str, Any],
             scenario: ScenarioSpec) -> Any:
    value = values[binding.source]
    if binding.convert is None:
        return value
    return path_to_reference(value, scenario.model, scenario.horizon,
                             scenario.dt, binding.speed, binding.fit_horizon)


def execute_pipeline(config: PipelineConfig, scenario: ScenarioSpec,
                     timeout_s: float, catalog: ApiCatalog | None = None
                     ) -> tuple[Trajectory, np.ndarray | None]:
    """Runs the stages of a validated pipeline in order.

    The whole run shares one wall-clock budget; the algorithms poll it
    through `checkpoint()`.

    Arguments:
        config: A pipeline that passed validate_pipeline.
        scenario: The scenario supplying the bound fields.
        timeout_s: Wall-clock budget in seconds.
        catalog: Supplies the parameter defaults.

    Returns:
        (final trajectory, its controls), controls None when the final
        stage does not produce any.

    Raises:
        DeadlineExceeded: When the budget runs out.
        StageError: When a stage's algorithm fails, or the final trajectory
            does not span the scenario horizon.
    """

    catalog = catalog or ApiCatalog.build()
    values: dict[str, Any] = {
        'x0': scenario.x0, 'goal': scenario.goal,
        'obstacles': scenario.obstacles, 'reference': scenario.reference,
        'stl_formula': scenario.stl_formula,
    }
    controls: dict[str, np.ndarray | None] = {}

    with deadline(timeout_s):
        for index, stage in enumerate(config.stages, 1):
            checkpoint()
            params = {**catalog[stage.api].defaults(), **stage.params}
            try:
                args = {name: _resolve(b, values, scenario)
                        for name, b in stage.inputs.items()}
                value, u = _RUNNERS[stage.api](scenario, args, params)
            except (AlgorithmError, ContractError, NumericError,
                    NumericOverflowError, WindowOverflowError) as e:
                raise StageError(index, stage.api,
                                 f'{type(e).__name__}: {e}') from e

            logger.debug('Stage %d (%s) produced %s', index, stage.api,
                         stage.output)
            values[stage.output] = value
            controls[stage.output] = u
        checkpoint()

    final = values[config.final]
    if len(final) != scenario.horizon + 1:
        producer = next(i for i, s in enumerate(config.stages, 1)
                        if s.output == config.final)
        raise StageError(
            producer, config.stages[producer - 1].api,
            f'final trajectory has {len(final)} states, the task needs '
            f'{scenario.horizon + 1}'
        )
    return final, controls[config.final]
