"""A deterministic stand-in for a language model.

The rule-based backend reads the machine-readable markers of the prompts
(`Scenario-Kind:` in the environment block and `Response-Format:` in the
format section) and answers with the known-good strategy for the scenario
kind. Optional fault injection replaces answers with malformed text to
exercise the refinement loop.
"""

from __future__ import annotations

import hashlib
import re
from collections.abc import Mapping, Sequence
from types import MappingProxyType

import numpy as np

from ..core.exceptions import (
    BackendError, BackendErrorKind, UnknownScenarioError
)
from ..env.scenario import ScenarioKind
from ..orch.catalog import ApiCatalog
from ..orch.config import (
    CONVERT_PATH, Binding, PipelineConfig, StageConfig, StrategySelection
)
from .backend import ChatBackend, ChatOptions


__all__ = ['MALFORMED_RESPONSE', 'GROUND_TRUTH', 'RuleBasedBackend']


MALFORMED_RESPONSE = 'I would start with a planner and then see what happens.'

_KIND = re.compile(r'^Scenario-Kind:[ \t]*(\S+)', re.MULTILINE)
_FORMAT = re.compile(r'^Response-Format:[ \t]*(\S+)', re.MULTILINE)
_HORIZON = re.compile(r'^Horizon:[ \t]*(\d+)', re.MULTILINE)
_VECTOR = r'\(([^)]*)\)'
_X0 = re.compile(rf'^Initial-State:[ \t]*{_VECTOR}', re.MULTILINE)
_GOAL = re.compile(rf'^Goal:[ \t]*center[ \t]*{_VECTOR}', re.MULTILINE)
_REFERENCE = re.compile(r'```reference[ \t]*\r?\n(.*?)```', re.DOTALL)


def _track() -> PipelineConfig:
    return PipelineConfig.build([
        StageConfig('mpc', 'traj', {'x0': Binding('x0'),
                                    'reference': Binding('reference')}),
    ])


def _follow(path: str) -> StageConfig:
    return StageConfig(
        'pid', 'traj',
        {'x0': Binding('x0'),
         'reference': Binding(path, CONVERT_PATH, fit_horizon=True)},
        {'kp': 2.0, 'kff': 1.0},
    )


_SCENE = {'start': Binding('x0'), 'goal': Binding('goal'),
          'obstacles': Binding('obstacles')}

GROUND_TRUTH: Mapping[ScenarioKind, tuple[StrategySelection,
                                          PipelineConfig]] = MappingProxyType({
    ScenarioKind.TRACK_LINEAR: (
        StrategySelection(('mpc',), 'A reference is given; model predictive '
                          'control tracks it under the control bounds.'),
        _track(),
    ),
    ScenarioKind.TRACK_DUBINS: (
        StrategySelection(('mpc',), 'The unicycle is nonlinear; model '
                          'predictive control tracks the reference.'),
        _track(),
    ),
    ScenarioKind.SIMPLE_PLAN: (
        StrategySelection(('rrt', 'pid'), 'RRT finds a collision-free path '
                          'through the obstacles and PID follows it.'),
        PipelineConfig.build([
            StageConfig('rrt', 'path', _SCENE, {'clearance': 0.15}),
            _follow('path'),
        ]),
    ),
    ScenarioKind.MAZE_PLAN: (
        StrategySelection(('astar', 'rrt', 'pid'), 'A* finds the coarse '
                          'route through the maze, RRT refines it between '
                          'route waypoints and PID follows the result.'),
        PipelineConfig.build([
            StageConfig('astar', 'route', _SCENE,
                        {'grid_resolution': 0.25, 'clearance': 0.2}),
            StageConfig('rrt', 'path', {**_SCENE, 'route': Binding('route')},
                        {'clearance': 0.15}),
            _follow('path'),
        ]),
    ),
    ScenarioKind.STL_TASK: (
        StrategySelection(('milp',), 'The task is a temporal logic formula '
                          'over linear dynamics; a MILP encoding solves it.'),
        PipelineConfig.build([
            StageConfig('milp', 'traj', {'x0': Binding('x0'),
                                         'formula': Binding('stl_formula')},
                        {}),
        ]),
    ),
})


def _vector(match: re.Match | None, what: str) -> np.ndarray:
    if match is None:
        raise BackendError(BackendErrorKind.BAD_RESPONSE,
                           f'no {what} in prompt', False)
    return np.array([float(v) for v in match.group(1).split(',')])


def _rows(states: np.ndarray) -> str:
    return '\n'.join(' '.join(f'{v:.4f}' for v in row) for row in states)


class RuleBasedBackend(ChatBackend):
    """Answers every prompt with the known-good strategy for its scenario
    kind.

    The answer depends only on the prompt and the construction arguments.
    With probability fault_p a response is replaced by malformed text; the
    draw is derived from a hash of the seed and the prompt, so it is
    reproducible and independent of request order.

    Attributes:
        catalog: The catalog the answers use.
        fault_p: Probability of a malformed response.
        seed: Seed of the fault draws.
    """

    catalog: ApiCatalog
    fault_p: float
    seed: int

    def __init__(self, catalog: ApiCatalog | None = None,
                 fault_p: float = 0.0, seed: int = 0) -> None:
        if not 0.0 <= fault_p <= 1.0:
            raise ValueError(f'Invalid fault probability {fault_p}')

        self.catalog = catalog or ApiCatalog.build()
        self.fault_p = fault_p
        self.seed = seed

        for selection, _ in GROUND_TRUTH.values():
            missing = [a for a in selection.apis if a not in self.catalog]
            if missing:
                raise ValueError(f'Catalog lacks API {", ".join(missing)}')

    def _faulty(self, prompt: str) -> bool:
        digest = hashlib.sha256(f'{self.seed}\n{prompt}'.encode()).digest()
        draw = int.from_bytes(digest[:8], 'big') / 2 ** 64
        return draw < self.fault_p

    @staticmethod
    def _kind(prompt: str) -> ScenarioKind:
        match = _KIND.search(prompt)
        if match is None:
            raise UnknownScenarioError()
        try:
            return ScenarioKind(match.group(1))
        except ValueError:
            raise UnknownScenarioError(
                f'unknown scenario kind {match.group(1)!r}'
            ) from None

    @staticmethod
    def _table(kind: ScenarioKind, prompt: str) -> str:
        """Baseline answer: the reference itself for tracking, a straight
        line to the goal for navigation, and standing still otherwise."""

        x0 = _vector(_X0.search(prompt), 'initial state')
        horizon = _HORIZON.search(prompt)
        if horizon is None:
            raise BackendError(BackendErrorKind.BAD_RESPONSE,
                               'no horizon in prompt', False)
        steps = int(horizon.group(1))

        if kind.is_tracking and (ref := _REFERENCE.search(prompt)):
            return f'```table\n{ref.group(1).strip()}\n```'

        states = np.tile(x0, (steps + 1, 1))
        if (goal := _GOAL.search(prompt)) is not None:
            s = np.linspace(0.0, 1.0, steps + 1)[:, None]
            states[:, :2] = (1 - s) * x0[:2] + s * _vector(goal, 'goal')
        return f'```table\n{_rows(states)}\n```'

    async def complete(self, messages: Sequence[Mapping[str, str]],
                       options: ChatOptions) -> str:
        prompt = next((m['content'] for m in reversed(messages)
                       if m.get('role') == 'user'), '')
        kind = self._kind(prompt)
        if self._faulty(prompt):
            return MALFORMED_RESPONSE

        selection, config = GROUND_TRUTH[kind]
        fmt = _FORMAT.search(prompt)
        match None if fmt is None else fmt.group(1):
            case 'selection':
                return (f'{selection.rationale}\n\n'
                        + selection.to_block())
            case 'pipeline':
                return config.to_block()
            case 'table':
                return self._table(kind, prompt)
            case other:
                raise BackendError(BackendErrorKind.BAD_RESPONSE,
                                   f'unknown response format {other!r}',
                                   False)
