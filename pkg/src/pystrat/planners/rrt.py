"""Rapidly-exploring random trees, plain and asymptotically optimal."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from ..core.deadline import checkpoint
from ..core.exceptions import (
    ContractError, InvalidGoalError, InvalidStartError, NoPathError
)
from ..env.geometry import (
    Obstacle, Workspace, collides_point, points_collide, segments_collide
)
from ..env.scenario import GoalDisc
from .params import RrtParams, RrtVariant
from .path import Path


__all__ = ['rrt']


logger = logging.getLogger(__name__)


class _Tree:
    """Node storage with parent links and costs-to-come."""

    def __init__(self, root: np.ndarray, capacity: int) -> None:
        self.nodes = np.empty((capacity + 1, 2))
        self.parent = np.full(capacity + 1, -1, dtype=int)
        self.cost = np.zeros(capacity + 1)
        self.children: list[set[int]] = [set()]
        self.nodes[0] = root
        self.size = 1

    @property
    def points(self) -> np.ndarray:
        return self.nodes[:self.size]

    def add(self, point: np.ndarray, parent: int, cost: float) -> int:
        idx = self.size
        self.nodes[idx] = point
        self.parent[idx] = parent
        self.cost[idx] = cost
        self.children.append(set())
        self.children[parent].add(idx)
        self.size += 1
        return idx

    def reparent(self, idx: int, parent: int, cost: float) -> None:
        self.children[self.parent[idx]].discard(idx)
        self.children[parent].add(idx)
        self.parent[idx] = parent

        delta = cost - self.cost[idx]
        stack = [idx]
        while stack:
            node = stack.pop()
            self.cost[node] += delta
            stack.extend(self.children[node])

    def branch(self, idx: int) -> np.ndarray:
        chain = []
        while idx != -1:
            chain.append(idx)
            idx = self.parent[idx]
        return self.nodes[chain[::-1]]


class _Grower:
    def __init__(self, obstacles: Sequence[Obstacle], workspace: Workspace,
                 params: RrtParams, rng: np.random.Generator) -> None:
        self.obstacles = obstacles
        self.workspace = workspace
        self.params = params
        self.rng = rng

    def blocked(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return segments_collide(a, b, self.obstacles, self.params.clearance)

    def sample(self, goal: GoalDisc) -> np.ndarray:
        if self.rng.random() < self.params.goal_bias:
            return goal.center.copy()
        return self.rng.uniform(self.workspace.lo, self.workspace.hi)

    def grow(self, start: np.ndarray, goal: GoalDisc) -> np.ndarray:
        """Grows one tree from start towards the goal disc and returns the
        reaching branch."""

        params = self.params
        star = params.variant is RrtVariant.RRT_STAR
        tree = _Tree(start, params.max_iters)
        reached: list[int] = []

        if goal.contains(start):
            return start[None, :]

        for it in range(params.max_iters):
            if it % 64 == 0:
                checkpoint()

            target = self.sample(goal)
            points = tree.points
            dist = np.linalg.norm(points - target, axis=1)
            nearest = int(np.argmin(dist))
            if dist[nearest] == 0.0:
                continue

            new = target
            if dist[nearest] > params.step_size:
                new = points[nearest] + (
                    (target - points[nearest]) * params.step_size
                    / dist[nearest]
                )
            if not self.workspace.contains(new):
                continue
            if self.blocked(points[nearest], new):
                continue

            parent = nearest
            cost = tree.cost[nearest] + min(dist[nearest], params.step_size)

            if star:
                near = np.linalg.norm(points - new, axis=1)
                hood = np.flatnonzero(near <= params.rewire_radius)
                hood = hood[~self.blocked(points[hood], new[None, :])]
                via = tree.cost[hood] + near[hood]
                if hood.size and via.min() < cost:
                    best = int(np.argmin(via))
                    parent, cost = int(hood[best]), float(via[best])

            idx = tree.add(new, parent, cost)

            if star:
                for j in hood:
                    j = int(j)
                    if j == parent:
                        continue
                    improved = cost + near[j]
                    if improved < tree.cost[j] - 1e-12:
                        tree.reparent(j, idx, improved)

            if goal.contains(new):
                if not star:
                    logger.debug('RRT reached goal after %d iterations',
                                 it + 1)
                    return tree.branch(idx)
                reached.append(idx)

        if not reached:
            raise NoPathError(
                f'RRT did not reach the goal within {params.max_iters} '
                'iterations'
            )

        best = min(reached, key=lambda j: (tree.cost[j], j))
        logger.debug('RRT* best branch cost %.3f over %d nodes',
                     tree.cost[best], tree.size)
        return tree.branch(best)


def _disc_has_free_point(goal: GoalDisc, obstacles: Sequence[Obstacle],
                         workspace: Workspace, clearance: float) -> bool:
    rings = np.linspace(0.0, goal.radius, 5)
    angles = np.linspace(0.0, 2 * np.pi, 16, endpoint=False)
    probes = goal.center + np.concatenate([
        r * np.stack([np.cos(angles), np.sin(angles)], axis=-1)
        for r in rings
    ])
    ok = workspace.contains(probes) & ~points_collide(
        probes, obstacles, clearance
    )
    return bool(np.any(ok))


def _route_targets(start: np.ndarray, route: Path, goal: GoalDisc,
                   obstacles: Sequence[Obstacle], workspace: Workspace,
                   params: RrtParams) -> list[GoalDisc]:
    targets = []
    last = start
    for point in route.waypoints[params.waypoint_stride::
                                 params.waypoint_stride]:
        if np.linalg.norm(point - last) <= params.waypoint_radius:
            continue
        if goal.contains(point):
            break
        if not workspace.contains(point) or collides_point(
                point, obstacles, params.clearance):
            continue
        targets.append(GoalDisc(point, params.waypoint_radius))
        last = point
    targets.append(goal)
    return targets


def rrt(start: Sequence[float] | np.ndarray, goal: GoalDisc,
        obstacles: Sequence[Obstacle], workspace: Workspace,
        params: RrtParams | None = None, route: Path | None = None) -> Path:
    """Plans a collision-free path from start into a goal disc.

    Samples uniformly over the workspace (the goal center with probability
    goal_bias) and steers by at most step_size. The plain variant returns
    on the first node inside the goal disc; RRT* runs all iterations,
    choosing the cheapest parent within rewire_radius and rewiring the
    neighborhood, and returns the cheapest goal-reaching branch.

    Arguments:
        start: Start position.
        goal: The goal disc.
        obstacles: Obstacles, inflated by params.clearance.
        workspace: Sampling region.
        params: Tree parameters; the result is deterministic in rng_seed.
        route: Optional coarse path; the tree is then grown segment-wise
            through every waypoint_stride-th route point.

    Raises:
        InvalidStartError: If the start is blocked or outside the workspace.
        InvalidGoalError: If the goal disc has no free point.
        NoPathError: If a tree exhausts max_iters.
    """

    params = params or RrtParams()
    start = np.asarray(start, dtype=float)[:2]
    if start.shape != (2,):
        raise ContractError('Start must be a 2-vector')

    if not workspace.contains(start) or collides_point(
            start, obstacles, params.clearance):
        raise InvalidStartError(f'Start {start.tolist()} is blocked')
    if not _disc_has_free_point(goal, obstacles, workspace,
                                params.clearance):
        raise InvalidGoalError(f'Goal disc {goal.to_dict()} has no free point')

    grower = _Grower(obstacles, workspace, params,
                     np.random.default_rng(params.rng_seed))

    targets = [goal] if route is None else _route_targets(
        start, route, goal, obstacles, workspace, params
    )
    waypoints = [start[None, :]]
    here = start
    for target in targets:
        branch = grower.grow(here, target)
        waypoints.append(branch[1:])
        here = branch[-1]

    return Path(np.vstack(waypoints))
