"""Natural-language and block renderings of scenarios for prompts."""

from __future__ import annotations

from string import Template

import numpy as np

from ..stl.syntax import format_formula
from .scenario import ScenarioKind, ScenarioSpec


__all__ = ['render_task_description', 'summarize_environment']


def _vec(values) -> str:
    return '(' + ', '.join(f'{v:.3f}' for v in np.asarray(values)) + ')'


_OBJECTIVES = {
    ScenarioKind.TRACK_LINEAR: Template(
        'Track the given reference trajectory of $samples states, from '
        '$ref_start to $ref_end, as closely as possible (RMS position '
        'error at most 0.150 m) while staying inside the workspace.'
    ),
    ScenarioKind.TRACK_DUBINS: Template(
        'Track the given reference trajectory of $samples states of the '
        'car, from $ref_start to $ref_end, as closely as possible (RMS '
        'position error at most 0.150 m) while staying inside the '
        'workspace.'
    ),
    ScenarioKind.SIMPLE_PLAN: Template(
        'Drive from the initial state to the goal region centered at '
        '$goal_center with radius $goal_radius m without colliding with any '
        'obstacle and without leaving the workspace.'
    ),
    ScenarioKind.MAZE_PLAN: Template(
        'Find a way through the 3x3 maze from the initial state to the goal '
        'region centered at $goal_center with radius $goal_radius m; the '
        'maze walls and the clutter between them must not be touched.'
    ),
    ScenarioKind.STL_TASK: Template(
        'First pick up the key by entering the key region $key within '
        '$horizon steps. Then reach the door region $door, which unlocks '
        'the room $room; the room may only be entered through the door, '
        'and not before the key has been picked up. Finally reach the '
        'goal region $goal inside the room, also within $horizon steps.'
    ),
}


def _box(rect) -> str:
    return f'[{_vec(rect.lo)} to {_vec(rect.hi)}]'


def render_task_description(spec: ScenarioSpec) -> str:
    """Describes the scenario in one deterministic English paragraph.

    Numbers are printed with three decimals.
    """

    fields = {'horizon': spec.horizon, 'samples': 0}
    if spec.reference is not None:
        fields.update(samples=len(spec.reference),
                      ref_start=_vec(spec.reference.positions[0]),
                      ref_end=_vec(spec.reference.positions[-1]))
    if spec.goal is not None:
        fields.update(goal_center=_vec(spec.goal.center),
                      goal_radius=f'{spec.goal.radius:.3f}')
    for name, rect in spec.stl_regions.items():
        fields[name] = _box(rect)

    parts = [
        f'The system is a {spec.model.describe()} model starting from '
        f'x0 = {_vec(spec.x0)}.',
        _OBJECTIVES[spec.kind].substitute(fields),
        f'The workspace is {_box(spec.workspace)}.',
    ]

    if spec.obstacles:
        parts.append(
            f'There are {len(spec.obstacles)} obstacles: '
            + '; '.join(o.describe() for o in spec.obstacles) + '.'
        )
    else:
        parts.append('There are no obstacles.')

    parts.append(
        f'The plan spans {spec.horizon} steps of dt = {spec.dt:.3f} s.'
    )
    if spec.stl_formula is not None:
        parts.append(
            f'As a formula: {format_formula(spec.stl_formula)}.'
        )

    return ' '.join(parts)


def summarize_environment(spec: ScenarioSpec) -> str:
    """The environment block of a prompt: one `Key: value` per line, led
    by the machine-readable `Scenario-Kind` marker."""

    lines = [
        f'Scenario-Kind: {spec.kind}',
        f'Scenario-Id: {spec.id}',
        f'Model: {spec.model.describe()}',
        f'Initial-State: {_vec(spec.x0)}',
        f'Workspace: {_box(spec.workspace)}',
        f'Horizon: {spec.horizon}',
        f'Dt: {spec.dt:.3f}',
    ]
    if spec.goal is not None:
        lines.append(f'Goal: center {_vec(spec.goal.center)} radius '
                     f'{spec.goal.radius:.3f}')
    if spec.reference is not None:
        ref = spec.reference
        lines.append(f'Reference: {len(ref)} states from '
                     f'{_vec(ref.positions[0])} to {_vec(ref.positions[-1])}')
    lines.append(f'Obstacles: {len(spec.obstacles)}')
    lines.extend(f'  - {o.describe()}' for o in spec.obstacles)
    for name, rect in spec.stl_regions.items():
        lines.append(f'Region-{name}: {_box(rect)}')
    if spec.stl_formula is not None:
        lines.append(f'Formula: {format_formula(spec.stl_formula)}')

    return '\n'.join(lines)
