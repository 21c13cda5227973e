"""The API catalog offered to the language model.

Every entry carries a one-paragraph description (shown when strategies are
selected), a typed signature, a parameter schema and the full documentation
returned once the API has been selected.
"""

from __future__ import annotations

import json
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from types import MappingProxyType
from typing import Any, Self

from ..dynamics import AnyModel, ModelKind


__all__ = [
    'PortType', 'ParamType', 'ParamSpec', 'InputSpec', 'ModelRule',
    'ApiSpec', 'ApiCatalog', 'API_IDS',
]


class PortType(StrEnum):
    """Semantic type of a value flowing through a pipeline."""

    STATE = 'State'
    GOAL = 'GoalDisc'
    OBSTACLES = 'Obstacles'
    FORMULA = 'StlFormula'
    PATH = 'Path'
    TRAJECTORY = 'Trajectory'


class ParamType(StrEnum):
    INT = 'int'
    FLOAT = 'float'
    CHOICE = 'choice'


@dataclass(frozen=True)
class ParamSpec:
    """Schema of one stage parameter.

    Attributes:
        name: Parameter name.
        type: Value type.
        default: Value used when the stage omits the parameter.
        lo: Inclusive lower bound (numeric types).
        hi: Inclusive upper bound (numeric types).
        choices: Admissible values (choice type).
        doc: One-line description.
    """

    name: str
    type: ParamType
    default: Any
    lo: float | None = None
    hi: float | None = None
    choices: tuple[Any, ...] = ()
    doc: str = ''

    def check(self, value: Any) -> str | None:
        """Returns the violated rule for value, None when it conforms."""

        match self.type:
            case ParamType.INT:
                if isinstance(value, bool) or not isinstance(value, int):
                    return (f'parameter {self.name} must be an integer, got '
                            f'{value!r}')
            case ParamType.FLOAT:
                if isinstance(value, bool) or not isinstance(
                        value, (int, float)):
                    return (f'parameter {self.name} must be a number, got '
                            f'{value!r}')

        if self.choices:
            if value not in self.choices:
                return (f'parameter {self.name} must be one of '
                        f'{", ".join(map(str, self.choices))}, got {value!r}')
        elif not self.lo <= value <= self.hi:
            return (f'parameter {self.name} = {value!r} is outside the range '
                    f'[{self.lo:g}, {self.hi:g}]')
        return None

    def describe(self) -> str:
        if self.choices:
            domain = 'one of ' + ', '.join(map(str, self.choices))
        else:
            domain = f'{self.type} in [{self.lo:g}, {self.hi:g}]'
        return f'{self.name} ({domain}, default {self.default!r}): {self.doc}'


@dataclass(frozen=True)
class InputSpec:
    name: str
    types: tuple[PortType, ...]
    required: bool = True

    def describe(self) -> str:
        kinds = ' | '.join(self.types)
        return f'{self.name}: {kinds}' + ('' if self.required else ' (optional)')


@dataclass(frozen=True)
class ModelRule:
    """A model-compatibility rule: `applies(model)` must hold."""

    message: str
    applies: Callable[[AnyModel], bool]


def _linear(model: AnyModel) -> bool:
    return model.is_linear


def _planar(model: AnyModel) -> bool:
    return getattr(model, 'kind', None) is not ModelKind.PENDULUM and (
        model.n >= 2
    )


@dataclass(frozen=True)
class ApiSpec:
    """One catalog entry.

    Attributes:
        id: The API id used in selections and stages.
        description: One paragraph for the selection prompt.
        inputs: The typed inputs.
        output: The type of the stage output.
        params: The parameter schema.
        rules: Model-compatibility rules.
        notes: Extra documentation text.
        example: A worked stage wiring.
    """

    id: str
    description: str
    inputs: tuple[InputSpec, ...]
    output: PortType
    params: tuple[ParamSpec, ...]
    rules: tuple[ModelRule, ...] = ()
    notes: str = ''
    example: Mapping[str, Any] = field(default_factory=dict)

    def param(self, name: str) -> ParamSpec | None:
        for p in self.params:
            if p.name == name:
                return p
        return None

    def input(self, name: str) -> InputSpec | None:
        for i in self.inputs:
            if i.name == name:
                return i
        return None

    def defaults(self) -> dict[str, Any]:
        return {p.name: p.default for p in self.params}

    @property
    def signature(self) -> str:
        args = ', '.join(i.describe() for i in self.inputs)
        return f'{self.id}({args}) -> {self.output}'

    @property
    def docs(self) -> str:
        """The full documentation returned on retrieval."""

        lines = [f'### {self.id}', self.description, '',
                 f'Signature: {self.signature}', 'Parameters:']
        lines.extend(f'  - {p.describe()}' for p in self.params)
        if self.rules:
            lines.append('Requirements:')
            lines.extend(f'  - {r.message}' for r in self.rules)
        if self.notes:
            lines.extend(['', self.notes])
        if self.example:
            lines.extend(['', 'Example stage:',
                          json.dumps(self.example, indent=2)])
        return '\n'.join(lines)


def _f(name: str, default: float, lo: float, hi: float, doc: str
       ) -> ParamSpec:
    return ParamSpec(name, ParamType.FLOAT, default, lo, hi, doc=doc)


def _i(name: str, default: int, lo: int, hi: int, doc: str) -> ParamSpec:
    return ParamSpec(name, ParamType.INT, default, lo, hi, doc=doc)


_START = InputSpec('start', (PortType.STATE,))
_X0 = InputSpec('x0', (PortType.STATE,))
_GOAL = InputSpec('goal', (PortType.GOAL,))
_OBSTACLES = InputSpec('obstacles', (PortType.OBSTACLES,))
_REFERENCE = InputSpec('reference', (PortType.TRAJECTORY,))
_TARGET = InputSpec('target', (PortType.GOAL, PortType.TRAJECTORY))
_SEED = _i('rng_seed', 0, 0, 2 ** 32 - 1, 'random seed')
_WEIGHTS = (
    _f('obstacle_weight', 10.0, 0.0, 1e4, 'weight of the obstacle barrier'),
    _f('effort_weight', 1e-3, 0.0, 10.0, 'weight of the control effort'),
)
_TRACK_WEIGHTS = (
    _f('q', 1.0, 0.0, 1e6, 'state error weight (times identity)'),
    _f('r', 0.1, 1e-6, 1e6, 'control weight (times identity)'),
    _f('qf', 10.0, 0.0, 1e6, 'terminal state error weight'),
)
_PLANAR = ModelRule('the model must have a planar position', _planar)
_LINEAR = ModelRule('milp requires linear dynamics', _linear)

_CONVERT = ('A Path reaches a reference input only through the conversion '
            '{"from": "<path output>", "convert": "path_to_reference", '
            '"speed": <m/s>, "fit_horizon": <bool>}, which samples the path '
            'at constant speed every dt and completes each sample to a full '
            'model state; with fit_horizon the speed is raised so that the '
            'path is traversed within 90% of the horizon.')


def _default_specs() -> tuple[ApiSpec, ...]:
    return (
        ApiSpec(
            'astar',
            'A* graph search on an occupancy grid of the workspace. Fast '
            'and complete on the grid: it returns the shortest grid path '
            'from the start to the goal center or reports that none exists. '
            'Best for coarse global routes through mazes; the path hugs '
            'grid cells and is not dynamically feasible by itself.',
            (_START, _GOAL, _OBSTACLES), PortType.PATH,
            (
                _f('grid_resolution', 0.25, 0.05, 2.0, 'cell size [m]'),
                ParamSpec('connectivity', ParamType.INT, 8, None, None, (4, 8),
                          'grid neighbourhood'),
                _f('clearance', 0.0, 0.0, 1.0,
                   'extra obstacle inflation [m]'),
            ),
            (_PLANAR,),
            'Cells whose centers come closer to an obstacle than half a '
            'cell plus the clearance are blocked. ' + _CONVERT,
            {'api': 'astar', 'params': {'grid_resolution': 0.25},
             'inputs': {'start': 'x0', 'goal': 'goal',
                        'obstacles': 'obstacles'},
             'output': 'route'},
        ),
        ApiSpec(
            'rrt',
            'Rapidly-exploring random tree (RRT, or RRT* with rewiring) '
            'sampling planner for a point robot. Handles cluttered '
            'continuous spaces and returns a collision-free piecewise '
            'linear path from the start into the goal disc. An optional '
            'coarse route (e.g. from astar) is refined segment by segment.',
            (_START, _GOAL, _OBSTACLES,
             InputSpec('route', (PortType.PATH,), False)),
            PortType.PATH,
            (
                _f('step_size', 0.4, 0.05, 2.0, 'tree extension step [m]'),
                _f('goal_bias', 0.1, 0.0, 1.0,
                   'probability of sampling the goal'),
                _i('max_iters', 5000, 1, 100_000, 'iteration budget'),
                ParamSpec('variant', ParamType.CHOICE, 'rrt', None, None,
                          ('rrt', 'rrt_star'), 'plain or rewiring tree'),
                _f('rewire_radius', 1.0, 0.1, 5.0,
                   'RRT* neighbourhood radius [m]'),
                _SEED,
                _f('clearance', 0.0, 0.0, 1.0,
                   'extra obstacle inflation [m]'),
                _i('waypoint_stride', 4, 1, 100,
                   'route points between intermediate goals'),
                _f('waypoint_radius', 0.3, 0.05, 2.0,
                   'radius of intermediate goals [m]'),
            ),
            (_PLANAR,),
            'Fails with NoPath when the budget runs out. ' + _CONVERT,
            {'api': 'rrt', 'params': {'clearance': 0.15},
             'inputs': {'start': 'x0', 'goal': 'goal',
                        'obstacles': 'obstacles'},
             'output': 'path'},
        ),
        ApiSpec(
            'cem',
            'Cross-entropy method: derivative-free stochastic optimization '
            'of the whole control sequence. Samples control sequences, '
            'rolls them out through the dynamics and refits a Gaussian to '
            'the best ones. Works with any dynamics model and either a goal '
            'disc or a reference trajectory as target.',
            (_X0, _TARGET, InputSpec('obstacles', (PortType.OBSTACLES,),
                                     False)),
            PortType.TRAJECTORY,
            (
                _i('population', 64, 4, 4096, 'samples per iteration'),
                _f('elite_fraction', 0.125, 0.01, 0.5,
                   'share of samples refitted'),
                _i('iterations', 30, 1, 1000, 'iterations'),
                _f('init_std', 1.0, 1e-3, 10.0,
                   'initial std as a share of the control range'),
                _SEED,
                *_WEIGHTS,
            ),
            (),
            'The control sequence spans the scenario horizon.',
            {'api': 'cem', 'inputs': {'x0': 'x0', 'target': 'goal',
                                      'obstacles': 'obstacles'},
             'output': 'traj'},
        ),
        ApiSpec(
            'grad',
            'Gradient-based trajectory optimization: projected gradient '
            'descent on the control sequence, with exact gradients through '
            'the dynamics. Fast local refinement for smooth objectives; may '
            'get stuck behind obstacles.',
            (_X0, _TARGET, InputSpec('obstacles', (PortType.OBSTACLES,),
                                     False)),
            PortType.TRAJECTORY,
            (
                _f('learning_rate', 0.5, 1e-6, 10.0, 'step size'),
                _i('iterations', 200, 0, 10_000, 'descent steps'),
                *_WEIGHTS,
            ),
            (),
            'Fails with Diverged when the rollout becomes non-finite. The '
            'control sequence spans the scenario horizon.',
            {'api': 'grad', 'inputs': {'x0': 'x0', 'target': 'goal'},
             'output': 'traj'},
        ),
        ApiSpec(
            'lqr',
            'Linear quadratic regulator: time-varying LQR feedback along a '
            'reference trajectory, linearizing nonlinear models around it. '
            'Cheap and smooth; requires a reference to track.',
            (_X0, _REFERENCE), PortType.TRAJECTORY,
            _TRACK_WEIGHTS,
            (),
            'The closed loop runs for len(reference) - 1 steps. ' + _CONVERT,
            {'api': 'lqr', 'inputs': {'x0': 'x0', 'reference': 'reference'},
             'output': 'traj'},
        ),
        ApiSpec(
            'mpc',
            'Model predictive control: receding-horizon optimal control '
            'solved by sequential quadratic programming with control '
            'bounds. Handles nonlinear models such as the unicycle; the '
            'standard choice to track a given reference.',
            (_X0, _REFERENCE), PortType.TRAJECTORY,
            (
                _i('horizon', 15, 1, 100, 'prediction horizon [steps]'),
                *_TRACK_WEIGHTS,
                _i('max_sqp_iters', 20, 1, 200, 'SQP iterations per solve'),
            ),
            (),
            'The closed loop runs for len(reference) - 1 steps. ' + _CONVERT,
            {'api': 'mpc', 'params': {'horizon': 15},
             'inputs': {'x0': 'x0', 'reference': 'reference'},
             'output': 'traj'},
        ),
        ApiSpec(
            'pid',
            'PID controller following a reference waypoint by waypoint, '
            'with optional velocity feed-forward. Simple and robust for '
            'integrator dynamics; pair it with a planner for navigation.',
            (_X0, _REFERENCE), PortType.TRAJECTORY,
            (
                _f('kp', 2.0, 0.0, 100.0, 'proportional gain'),
                _f('ki', 0.0, 0.0, 100.0, 'integral gain'),
                _f('kd', 0.0, 0.0, 100.0, 'derivative gain'),
                _f('kff', 0.0, 0.0, 10.0, 'velocity feed-forward gain'),
                _f('integral_limit', 1.0, 1e-6, 100.0, 'anti-windup clamp'),
                _f('kp_heading', 2.0, 0.0, 100.0, 'unicycle heading gain'),
            ),
            (),
            'The closed loop runs for len(reference) - 1 steps. ' + _CONVERT,
            {'api': 'pid', 'params': {'kff': 1.0},
             'inputs': {'x0': 'x0',
                        'reference': {'from': 'path',
                                      'convert': 'path_to_reference',
                                      'fit_horizon': True}},
             'output': 'traj'},
        ),
        ApiSpec(
            'milp',
            'Mixed-integer linear programming: encodes a signal temporal '
            'logic task over linear dynamics with big-M constraints and '
            'solves it by branch and bound. The method of choice for '
            'temporal logic specifications.',
            (_X0, InputSpec('formula', (PortType.FORMULA,))),
            PortType.TRAJECTORY,
            (
                _i('node_limit', 500, 1, 1_000_000,
                   'branch-and-bound node budget'),
                ParamSpec('lp_method', ParamType.CHOICE, 'highs', None, None,
                          ('simplex', 'highs'), 'LP relaxation engine'),
            ),
            (_LINEAR,),
            'The plan spans the scenario horizon.',
            {'api': 'milp', 'inputs': {'x0': 'x0', 'formula': 'stl_formula'},
             'output': 'traj'},
        ),
    )


API_IDS = ('astar', 'cem', 'grad', 'lqr', 'milp', 'mpc', 'pid', 'rrt')


class ApiCatalog(Mapping[str, ApiSpec]):
    """Immutable id -> ApiSpec mapping."""

    _specs: Mapping[str, ApiSpec]

    def __init__(self, specs: Sequence[ApiSpec]) -> None:
        by_id = {}
        for spec in specs:
            if spec.id in by_id:
                raise ValueError(f'Duplicate API id {spec.id}')
            by_id[spec.id] = spec
        self._specs = MappingProxyType(dict(sorted(by_id.items())))

    @classmethod
    def build(cls) -> Self:
        """The eight standard APIs."""

        return cls(_default_specs())

    def __getitem__(self, api_id: str) -> ApiSpec:
        return self._specs[api_id]

    def __iter__(self) -> Iterator[str]:
        return iter(self._specs)

    def __len__(self) -> int:
        return len(self._specs)

    def descriptions(self) -> str:
        """`- id: description` lines for the selection prompt."""

        return '\n'.join(f'- {s.id}: {s.description}'
                         for s in self._specs.values())
