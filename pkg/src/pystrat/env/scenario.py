"""Randomized task worlds.

Each scenario is fully determined by its (kind, seed) pair; generation draws
from a generator seeded with both, so equal pairs give bit-identical specs.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from os import PathLike
from types import MappingProxyType
from typing import Any, Self

import numpy as np

from ..core.exceptions import ContractError
from ..core.sid import ScenarioId
from ..dynamics.model import DynamicsModel, ModelKind
from ..dynamics.ops import rollout
from ..dynamics.trajectory import Trajectory
from ..stl.formula import And, Eventually, Region, StlFormula, Until
from ..stl.syntax import format_formula, parse_formula
from .feasibility import path_exists
from .geometry import (
    Circle, Obstacle, Rect, Workspace, collides_point, obstacle_from_dict,
    signed_distance
)


__all__ = [
    'SCHEMA_VERSION', 'DT', 'GOAL_RADIUS', 'HORIZONS', 'ScenarioKind',
    'GoalDisc', 'ScenarioSpec', 'generate_scenario', 'dump_scenario',
    'load_scenario',
]


logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DT = 0.1
GOAL_RADIUS = 0.5
MAZE_CELLS = 3
MAX_ATTEMPTS = 200


class ScenarioKind(StrEnum):
    TRACK_LINEAR = 'track_linear'
    TRACK_DUBINS = 'track_dubins'
    SIMPLE_PLAN = 'simple_plan'
    MAZE_PLAN = 'maze_plan'
    STL_TASK = 'stl_task'

    @property
    def is_tracking(self) -> bool:
        return self in (ScenarioKind.TRACK_LINEAR, ScenarioKind.TRACK_DUBINS)


HORIZONS: Mapping[ScenarioKind, int] = MappingProxyType({
    ScenarioKind.TRACK_LINEAR: 50,
    ScenarioKind.TRACK_DUBINS: 50,
    ScenarioKind.SIMPLE_PLAN: 80,
    ScenarioKind.MAZE_PLAN: 150,
    ScenarioKind.STL_TASK: 25,
})

_MODELS = {
    ScenarioKind.TRACK_LINEAR: ModelKind.DOUBLE_INTEGRATOR_2D,
    ScenarioKind.TRACK_DUBINS: ModelKind.UNICYCLE,
    ScenarioKind.SIMPLE_PLAN: ModelKind.SINGLE_INTEGRATOR_2D,
    ScenarioKind.MAZE_PLAN: ModelKind.SINGLE_INTEGRATOR_2D,
    ScenarioKind.STL_TASK: ModelKind.SINGLE_INTEGRATOR_2D,
}


@dataclass(frozen=True, eq=False)
class GoalDisc:
    """A circular goal region."""

    center: np.ndarray
    radius: float = GOAL_RADIUS

    def __post_init__(self) -> None:
        center = np.asarray(self.center, dtype=float)
        if center.shape != (2,) or not self.radius > 0:
            raise ContractError(f'Invalid goal disc {self.center!r}')
        center.flags.writeable = False
        object.__setattr__(self, 'center', center)
        object.__setattr__(self, 'radius', float(self.radius))

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, GoalDisc)
                and np.array_equal(self.center, other.center)
                and self.radius == other.radius)

    def distance(self, point: Sequence[float] | np.ndarray) -> float:
        """Distance from point to the disc center."""

        return float(np.linalg.norm(np.asarray(point)[:2] - self.center))

    def contains(self, point: Sequence[float] | np.ndarray) -> bool:
        return self.distance(point) <= self.radius

    def to_dict(self) -> dict[str, Any]:
        return {'center': self.center.tolist(), 'radius': self.radius}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Self:
        return cls(data['center'], data.get('radius', GOAL_RADIUS))


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    """A generated task world.

    Attributes:
        kind: The scenario kind.
        seed: The generation seed.
        workspace: Permissible region for the position.
        model: Dynamics of the controlled system.
        x0: Initial state.
        goal: Goal disc for planning kinds, None otherwise.
        obstacles: Regions that must be avoided.
        reference: State reference (horizon + 1 samples) for tracking kinds.
        horizon: Number of control steps.
        dt: Time step in seconds.
        stl_regions: Named regions of the temporal logic task.
        stl_formula: The temporal logic task, StlTask only.
    """

    kind: ScenarioKind
    seed: int
    workspace: Workspace
    model: DynamicsModel
    x0: np.ndarray
    goal: GoalDisc | None = None
    obstacles: tuple[Obstacle, ...] = ()
    reference: Trajectory | None = None
    horizon: int = 50
    dt: float = DT
    stl_regions: Mapping[str, Rect] = field(default_factory=dict)
    stl_formula: StlFormula | None = None

    def __post_init__(self) -> None:
        kind = ScenarioKind(self.kind)
        object.__setattr__(self, 'kind', kind)
        object.__setattr__(self, 'obstacles', tuple(self.obstacles))
        object.__setattr__(self, 'stl_regions',
                           MappingProxyType(dict(self.stl_regions)))

        x0 = np.array(self.x0, dtype=float)
        if x0.shape != (self.model.n,):
            raise ContractError(
                f'x0 must have dimension {self.model.n}, got {x0.shape}'
            )
        x0.flags.writeable = False
        object.__setattr__(self, 'x0', x0)

        if self.horizon < 1 or not self.dt > 0:
            raise ContractError('Invalid horizon or time step')
        if not self.workspace.contains(x0[:2]) or collides_point(
                x0[:2], self.obstacles):
            raise ContractError('Initial state is outside the free space')

        if self.goal is not None:
            if not self.workspace.contains(self.goal.center,
                                           self.goal.radius):
                raise ContractError('Goal disc leaves the workspace')
            if collides_point(self.goal.center, self.obstacles,
                              self.goal.radius):
                raise ContractError('Goal disc overlaps an obstacle')

        if (self.reference is not None) != kind.is_tracking:
            raise ContractError(
                'Only tracking scenarios carry a reference, and they must'
            )
        if self.reference is not None and len(self.reference) != self.horizon + 1:
            raise ContractError(
                f'Reference needs {self.horizon + 1} samples, got '
                f'{len(self.reference)}'
            )
        if (self.stl_formula is not None) != (kind is ScenarioKind.STL_TASK):
            raise ContractError('Only stl_task scenarios carry a formula')
        if kind is ScenarioKind.STL_TASK or kind.is_tracking:
            if self.goal is not None:
                raise ContractError(f'{kind} scenarios take no goal disc')
        elif self.goal is None:
            raise ContractError(f'{kind} scenarios need a goal disc')

    @property
    def id(self) -> ScenarioId:
        return ScenarioId(str(self.kind), self.seed)

    def to_dict(self) -> dict[str, Any]:
        return {
            'schema_version': SCHEMA_VERSION,
            'kind': str(self.kind),
            'seed': self.seed,
            'workspace': self.workspace.to_dict(),
            'model': self.model.to_dict(),
            'x0': self.x0.tolist(),
            'goal': None if self.goal is None else self.goal.to_dict(),
            'obstacles': [o.to_dict() for o in self.obstacles],
            'reference': (None if self.reference is None
                          else self.reference.to_dict()),
            'horizon': self.horizon,
            'dt': self.dt,
            'stl_regions': {name: rect.to_dict()
                            for name, rect in self.stl_regions.items()},
            'stl_formula': (None if self.stl_formula is None
                            else format_formula(self.stl_formula)),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Self:
        """Builds a spec from its dict form.

        Raises:
            ContractError: On an unknown schema version or malformed data.
        """

        version = data.get('schema_version')
        if version != SCHEMA_VERSION:
            raise ContractError(f'Unsupported scenario schema {version!r}')

        try:
            goal = data.get('goal')
            reference = data.get('reference')
            formula = data.get('stl_formula')
            return cls(
                kind=ScenarioKind(data['kind']),
                seed=int(data['seed']),
                workspace=Workspace.from_dict(data['workspace']),
                model=DynamicsModel.from_dict(data['model']),
                x0=data['x0'],
                goal=None if goal is None else GoalDisc.from_dict(goal),
                obstacles=tuple(obstacle_from_dict(o)
                                for o in data.get('obstacles', ())),
                reference=(None if reference is None
                           else Trajectory.from_dict(reference)),
                horizon=int(data['horizon']),
                dt=float(data['dt']),
                stl_regions={
                    name: Rect(r['min'], r['max'])
                    for name, r in data.get('stl_regions', {}).items()
                },
                stl_formula=None if formula is None else parse_formula(
                    formula
                ),
            )
        except ContractError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise ContractError(f'Invalid scenario data: {e}') from None


def dump_scenario(spec: ScenarioSpec, path: str | PathLike) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(spec.to_dict(), f, indent=2)
        f.write('\n')


def load_scenario(path: str | PathLike) -> ScenarioSpec:
    with open(path, encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ContractError(f'Invalid scenario file {path}: {e}') from None
    return ScenarioSpec.from_dict(data)


def _rng(kind: ScenarioKind, seed: int) -> np.random.Generator:
    index = list(ScenarioKind).index(kind)
    return np.random.default_rng(np.random.SeedSequence([index, seed]))


def _bezier(points: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Cubic Bezier curve through 4 control points at parameters s."""

    s = s[:, None]
    return ((1 - s) ** 3 * points[0] + 3 * (1 - s) ** 2 * s * points[1]
            + 3 * (1 - s) * s ** 2 * points[2] + s ** 3 * points[3])


def _track_linear(rng: np.random.Generator, model: DynamicsModel,
                  horizon: int, workspace: Workspace) -> Trajectory:
    """A Bezier position curve with the finite-difference velocities, so
    that the reference is an exact Euler solution of the double
    integrator."""

    limit = 0.9 * float(np.min(model.upper))
    s = np.linspace(0.0, 1.0, horizon + 1)
    for _ in range(MAX_ATTEMPTS):
        positions = _bezier(rng.uniform(2.0, 8.0, (4, 2)), s)
        velocity = np.diff(positions, axis=0) / DT
        velocity = np.vstack([velocity, velocity[-1:]])
        accel = np.diff(velocity, axis=0) / DT
        if np.max(np.abs(accel)) > limit:
            continue
        if not np.all(workspace.contains(positions, margin=0.5)):
            continue
        return Trajectory(np.hstack([positions, velocity]), DT)
    raise ContractError('No admissible linear reference found')


def _track_dubins(rng: np.random.Generator, model: DynamicsModel,
                  horizon: int, workspace: Workspace) -> Trajectory:
    """Rolls the unicycle out under smooth speed and turn-rate profiles."""

    t = np.arange(horizon) * DT
    duration = horizon * DT
    for _ in range(MAX_ATTEMPTS):
        speed = rng.uniform(0.8, 1.5)
        turn = rng.uniform(-0.8, 0.8)
        phase = rng.uniform(0.0, 2 * np.pi)
        v = speed + 0.2 * np.sin(2 * np.pi * t / duration + phase)
        omega = turn * np.sin(np.pi * t / duration + phase)

        x0 = np.array([*rng.uniform(3.0, 7.0, 2),
                       rng.uniform(-np.pi, np.pi)])
        ref = rollout(model, x0, np.column_stack([v, omega]), DT)
        if np.all(workspace.contains(ref.positions, margin=0.5)):
            return ref
    raise ContractError('No admissible unicycle reference found')


def _random_obstacle(rng: np.random.Generator, style: str, scale: float
                     ) -> Obstacle:
    center = rng.uniform(1.5, 8.5, 2)
    if style == 'circles' or (style == 'mixed' and rng.uniform() < 0.5):
        return Circle(center, scale * rng.uniform(0.5, 1.2))
    half = 0.5 * scale * rng.uniform(0.8, 2.0)
    return Rect(center - half, center + half)


def _separated(obstacles: Sequence[Obstacle], candidate: Obstacle,
               gap: float) -> bool:
    return all(
        np.linalg.norm(candidate.centroid - o.centroid)
        >= candidate.bounding_radius + o.bounding_radius + gap
        for o in obstacles
    )


def _simple_plan(rng: np.random.Generator, workspace: Workspace
                 ) -> tuple[np.ndarray, GoalDisc, tuple[Obstacle, ...]]:
    style = ('circles', 'squares', 'mixed')[int(rng.integers(3))]
    min_sep = 0.4 * workspace.diameter
    scale = 1.0

    for attempt in range(MAX_ATTEMPTS):
        # relax sizes when placement keeps failing
        if attempt and attempt % 20 == 0:
            scale *= 0.9

        count = int(rng.integers(3, 7))
        obstacles: list[Obstacle] = []
        for _ in range(50 * count):
            candidate = _random_obstacle(rng, style, scale)
            if _separated(obstacles, candidate, 0.3):
                obstacles.append(candidate)
            if len(obstacles) == count:
                break
        if len(obstacles) < count:
            continue

        start = rng.uniform(0.5 + GOAL_RADIUS, 9.5 - GOAL_RADIUS, 2)
        goal = rng.uniform(0.5 + GOAL_RADIUS, 9.5 - GOAL_RADIUS, 2)
        if np.linalg.norm(goal - start) < min_sep:
            continue
        if collides_point(start, obstacles, 0.6) or collides_point(
                goal, obstacles, GOAL_RADIUS + 0.3):
            continue
        if not path_exists(workspace, obstacles, start, goal):
            continue

        return start, GoalDisc(goal), tuple(obstacles)

    raise ContractError('Obstacle placement did not converge')


def _spanning_tree(rng: np.random.Generator, size: int
                   ) -> set[frozenset[tuple[int, int]]]:
    """Uniform random spanning tree of the size x size cell grid as a set
    of open passages, by the Aldous-Broder random walk."""

    cell = (int(rng.integers(size)), int(rng.integers(size)))
    visited = {cell}
    passages = set()
    while len(visited) < size * size:
        i, j = cell
        neighbors = [(i + di, j + dj) for di, dj in
                     ((1, 0), (-1, 0), (0, 1), (0, -1))
                     if 0 <= i + di < size and 0 <= j + dj < size]
        nxt = neighbors[int(rng.integers(len(neighbors)))]
        if nxt not in visited:
            visited.add(nxt)
            passages.add(frozenset((cell, nxt)))
        cell = nxt
    return passages


def _tree_distance(passages: set[frozenset], start: tuple[int, int],
                   goal: tuple[int, int]) -> int:
    frontier = [start]
    depth = {start: 0}
    for cell in frontier:
        for edge in passages:
            if cell in edge:
                (other,) = edge - {cell}
                if other not in depth:
                    depth[other] = depth[cell] + 1
                    frontier.append(other)
    return depth[goal]


def _maze_walls(passages: set[frozenset], size: int, cell: float,
                workspace: Workspace) -> list[Rect]:
    thick = 0.05 * cell
    walls = []
    for i in range(size):
        for j in range(size):
            if i + 1 < size and frozenset(((i, j), (i + 1, j))) not in passages:
                x = (i + 1) * cell
                lo = (x - thick / 2, j * cell - thick / 2)
                hi = (x + thick / 2, (j + 1) * cell + thick / 2)
                walls.append((lo, hi))
            if j + 1 < size and frozenset(((i, j), (i, j + 1))) not in passages:
                y = (j + 1) * cell
                lo = (i * cell - thick / 2, y - thick / 2)
                hi = ((i + 1) * cell + thick / 2, y + thick / 2)
                walls.append((lo, hi))
    return [Rect(np.maximum(lo, workspace.lo), np.minimum(hi, workspace.hi))
            for lo, hi in walls]


def _maze_plan(rng: np.random.Generator, workspace: Workspace
               ) -> tuple[np.ndarray, GoalDisc, tuple[Obstacle, ...]]:
    size = MAZE_CELLS
    cell = float(workspace.hi[0] - workspace.lo[0]) / size
    cells = [(i, j) for i in range(size) for j in range(size)]

    def center(c: tuple[int, int]) -> np.ndarray:
        return workspace.lo + cell * (np.array(c) + 0.5)

    for _ in range(MAX_ATTEMPTS):
        passages = _spanning_tree(rng, size)
        walls = _maze_walls(passages, size, cell, workspace)

        a, b = rng.choice(len(cells), 2, replace=False)
        start_cell, goal_cell = cells[a], cells[b]
        if _tree_distance(passages, start_cell, goal_cell) < 2:
            continue
        start, goal = center(start_cell), center(goal_cell)

        clutter: list[Obstacle] = []
        count = int(rng.integers(2, 5))
        for _ in range(100 * count):
            radius = rng.uniform(0.3, 0.5)
            c = rng.uniform(workspace.lo + radius + 0.8,
                            workspace.hi - radius - 0.8)
            d, _ = signed_distance(c, walls)
            if d.size and np.min(d) < radius + 0.8:
                continue
            if min(np.linalg.norm(c - start),
                   np.linalg.norm(c - goal)) < radius + 1.0:
                continue
            candidate = Circle(c, radius)
            if _separated(clutter, candidate, 0.8):
                clutter.append(candidate)
            if len(clutter) == count:
                break
        if len(clutter) < count:
            continue

        obstacles = (*walls, *clutter)
        if not path_exists(workspace, obstacles, start, goal):
            continue
        return start, GoalDisc(goal), obstacles

    raise ContractError('Maze generation did not converge')


def _stl_task(rng: np.random.Generator, workspace: Workspace, horizon: int
              ) -> tuple[np.ndarray, dict[str, Rect], StlFormula]:
    inner = (workspace.lo + 0.5, workspace.hi - 0.5)
    half_box = 0.4
    door_half = 0.5
    door_depth = 0.5

    for _ in range(10 * MAX_ATTEMPTS):
        room_lo = rng.uniform(inner[0] + 0.5, inner[1] - 3.5)
        room = Rect(room_lo, room_lo + 3.0)

        # door strip inside the room along one of its sides
        side = int(rng.integers(4))
        axis, outward = divmod(side, 2)
        along = 1 - axis
        offset = rng.uniform(room.lo[along] + door_half + 0.3,
                             room.hi[along] - door_half - 0.3)
        door_lo = np.empty(2)
        door_hi = np.empty(2)
        door_lo[along] = offset - door_half
        door_hi[along] = offset + door_half
        if outward:
            door_hi[axis] = room.hi[axis]
            door_lo[axis] = room.hi[axis] - door_depth
        else:
            door_lo[axis] = room.lo[axis]
            door_hi[axis] = room.lo[axis] + door_depth
        door = Rect(door_lo, door_hi)
        normal = np.zeros(2)
        normal[axis] = 1.0 if outward else -1.0

        goal_c = rng.uniform(room.lo + half_box + 0.1,
                             room.hi - half_box - 0.1)
        goal = Rect(goal_c - half_box, goal_c + half_box)
        if _boxes_overlap(goal, door, 0.2):
            continue

        key_c = door.centroid + normal * rng.uniform(1.0, 2.0) + (
            rng.uniform(-1.5, 1.5, 2) * (1 - np.abs(normal))
        )
        key = Rect(key_c - half_box, key_c + half_box)
        if (not np.all(workspace.contains([key.lo, key.hi], margin=0.5))
                or _boxes_overlap(key, room, 0.3)):
            continue

        angle = rng.uniform(0.0, 2 * np.pi)
        start = key_c + rng.uniform(1.0, 2.0) * np.array(
            [math.cos(angle), math.sin(angle)]
        )
        if (not workspace.contains(start, margin=0.5)
                or room.contains(start, margin=0.3)
                or key.contains(start, margin=0.3)):
            continue

        length = (np.linalg.norm(key_c - start)
                  + np.linalg.norm(door.centroid - key_c)
                  + np.linalg.norm(goal_c - door.centroid))
        if length > 6.0:
            continue

        regions = {'key': key, 'door': door, 'room': room, 'goal': goal}
        return start, regions, _stl_formula(regions, horizon)

    raise ContractError('Temporal task placement did not converge')


def _boxes_overlap(a: Rect, b: Rect, gap: float = 0.0) -> bool:
    return bool(np.all(a.lo - gap < b.hi) and np.all(b.lo - gap < a.hi))


def _stl_formula(regions: Mapping[str, Rect], horizon: int) -> StlFormula:
    """Reach the key; stay out of the room until the key is reached and
    until the door is reached, so the room is entered through the door;
    reach the goal. Every deadline is the horizon."""

    def region(name: str) -> Region:
        rect = regions[name]
        return Region(tuple(rect.lo), tuple(rect.hi), True, name)

    return And((
        Eventually(0, horizon, region('key')),
        Until(0, horizon, region('room').negated(), region('key')),
        Until(0, horizon, region('room').negated(), region('door')),
        Eventually(0, horizon, region('goal')),
    ))


def generate_scenario(kind: ScenarioKind | str, seed: int) -> ScenarioSpec:
    """Generates the scenario (kind, seed).

    Placement is retried until every invariant holds; planning worlds are
    regenerated until a fine-grid search finds a collision-free path.

    Arguments:
        kind: The scenario kind.
        seed: Unsigned 64-bit seed.

    Returns:
        The generated ScenarioSpec.
    """

    try:
        kind = ScenarioKind(kind)
    except ValueError:
        raise ContractError(f'Unknown scenario kind {kind!r}') from None
    if not 0 <= seed < 2 ** 64:
        raise ContractError(f'Seed {seed} is not an unsigned 64-bit value')

    rng = _rng(kind, seed)
    workspace = Workspace.square(10.0)
    model = DynamicsModel.build(_MODELS[kind])
    horizon = HORIZONS[kind]
    common = dict(kind=kind, seed=seed, workspace=workspace, model=model,
                  horizon=horizon, dt=DT)

    match kind:
        case ScenarioKind.TRACK_LINEAR:
            ref = _track_linear(rng, model, horizon, workspace)
            spec = ScenarioSpec(x0=ref[0], reference=ref, **common)
        case ScenarioKind.TRACK_DUBINS:
            ref = _track_dubins(rng, model, horizon, workspace)
            spec = ScenarioSpec(x0=ref[0], reference=ref, **common)
        case ScenarioKind.SIMPLE_PLAN:
            start, goal, obstacles = _simple_plan(rng, workspace)
            spec = ScenarioSpec(x0=start, goal=goal, obstacles=obstacles,
                                **common)
        case ScenarioKind.MAZE_PLAN:
            start, goal, obstacles = _maze_plan(rng, workspace)
            spec = ScenarioSpec(x0=start, goal=goal, obstacles=obstacles,
                                **common)
        case ScenarioKind.STL_TASK:
            start, regions, formula = _stl_task(rng, workspace, horizon)
            spec = ScenarioSpec(x0=start, stl_regions=regions,
                                stl_formula=formula, **common)

    logger.debug('Generated scenario %s', spec.id)
    return spec
