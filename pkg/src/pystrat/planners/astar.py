"""A* search over an occupancy grid laid on the workspace."""

from __future__ import annotations

import heapq
import logging
import math
from collections.abc import Sequence

import numpy as np

from ..core.deadline import checkpoint
from ..core.exceptions import (
    ContractError, InvalidGoalError, InvalidStartError, NoPathError
)
from ..env.geometry import Obstacle, Workspace, points_collide
from .params import AstarParams
from .path import Path


__all__ = ['occupancy_grid', 'grid_search', 'astar']


logger = logging.getLogger(__name__)

_SQRT2 = math.sqrt(2.0)

_MOVES = {
    4: ((1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0)),
    8: ((1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
        (1, 1, _SQRT2), (1, -1, _SQRT2), (-1, 1, _SQRT2), (-1, -1, _SQRT2)),
}


def occupancy_grid(obstacles: Sequence[Obstacle], workspace: Workspace,
                   resolution: float, clearance: float = 0.0
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Free-cell mask of the workspace at a resolution.

    A cell is blocked when its center lies within half a cell plus the
    clearance of an obstacle.

    Returns:
        (free, xs, ys): free has shape (len(xs), len(ys)); xs and ys are
        the cell center coordinates.
    """

    if not resolution > 0:
        raise ContractError(f'Invalid grid resolution {resolution}')

    counts = np.maximum(
        np.ceil((workspace.hi - workspace.lo) / resolution - 1e-9), 1
    ).astype(int)
    xs = workspace.lo[0] + (np.arange(counts[0]) + 0.5) * resolution
    ys = workspace.lo[1] + (np.arange(counts[1]) + 0.5) * resolution

    centers = np.stack(np.meshgrid(xs, ys, indexing='ij'), axis=-1)
    free = ~points_collide(centers, obstacles, 0.5 * resolution + clearance)
    return free, xs, ys


def grid_search(free: np.ndarray, start: tuple[int, int],
                goal: tuple[int, int], connectivity: int = 8
                ) -> tuple[list[tuple[int, int]], float] | None:
    """Shortest path between two free cells of a boolean grid.

    Moves cost 1 (straight) and sqrt(2) (diagonal); a diagonal move needs
    both adjacent straight cells free. The Euclidean heuristic is
    consistent for both connectivities. Open nodes are ordered by
    (f, h, flat index).

    Returns:
        (cells, cost) from start to goal inclusive, None if unreachable.
    """

    if connectivity not in _MOVES:
        raise ContractError(f'Invalid connectivity {connectivity}')

    free = np.asarray(free, dtype=bool)
    nx, ny = free.shape
    goal_i, goal_j = goal

    def h(i: int, j: int) -> float:
        return math.hypot(i - goal_i, j - goal_j)

    g = np.full(free.size, math.inf)
    parent = np.full(free.size, -1, dtype=int)
    closed = np.zeros(free.size, dtype=bool)

    start_idx = start[0] * ny + start[1]
    goal_idx = goal_i * ny + goal_j
    g[start_idx] = 0.0
    heap = [(h(*start), h(*start), start_idx)]

    pops = 0
    while heap:
        _, _, idx = heapq.heappop(heap)
        if closed[idx]:
            continue
        closed[idx] = True

        pops += 1
        if pops % 256 == 0:
            checkpoint()

        if idx == goal_idx:
            cells = []
            while idx != -1:
                cells.append(divmod(int(idx), ny))
                idx = parent[idx]
            return cells[::-1], float(g[goal_idx])

        i, j = divmod(int(idx), ny)
        for di, dj, step_cost in _MOVES[connectivity]:
            ni, nj = i + di, j + dj
            if not (0 <= ni < nx and 0 <= nj < ny) or not free[ni, nj]:
                continue
            if di and dj and not (free[ni, j] and free[i, nj]):
                continue

            nidx = ni * ny + nj
            cost = g[idx] + step_cost
            if cost < g[nidx] and not closed[nidx]:
                g[nidx] = cost
                parent[nidx] = idx
                hn = h(ni, nj)
                heapq.heappush(heap, (cost + hn, hn, nidx))

    return None


def _cell_of(point: np.ndarray, workspace: Workspace, resolution: float,
             shape: tuple[int, int]) -> tuple[int, int]:
    cell = np.floor((point - workspace.lo) / resolution).astype(int)
    cell = np.clip(cell, 0, np.array(shape) - 1)
    return int(cell[0]), int(cell[1])


def astar(start: Sequence[float] | np.ndarray,
          goal: Sequence[float] | np.ndarray,
          obstacles: Sequence[Obstacle], workspace: Workspace,
          params: AstarParams | None = None) -> Path:
    """Plans a grid-optimal path from start to goal.

    Arguments:
        start: Start position.
        goal: Goal position.
        obstacles: Obstacles, inflated by half a cell plus the clearance.
        workspace: The gridded region.
        params: Resolution, connectivity and clearance.

    Returns:
        The polyline of cell centers from the start cell to the goal cell.

    Raises:
        InvalidStartError: If start is outside the workspace or its cell
            is blocked.
        InvalidGoalError: Likewise for the goal.
        NoPathError: If the goal cell cannot be reached.
    """

    params = params or AstarParams()
    start = np.asarray(start, dtype=float)[:2]
    goal = np.asarray(goal, dtype=float)[:2]

    free, xs, ys = occupancy_grid(
        obstacles, workspace, params.grid_resolution, params.clearance
    )

    if not workspace.contains(start):
        raise InvalidStartError(f'Start {start.tolist()} outside workspace')
    if not workspace.contains(goal):
        raise InvalidGoalError(f'Goal {goal.tolist()} outside workspace')

    start_cell = _cell_of(start, workspace, params.grid_resolution,
                          free.shape)
    goal_cell = _cell_of(goal, workspace, params.grid_resolution, free.shape)
    if not free[start_cell]:
        raise InvalidStartError(f'Start cell {start_cell} is blocked')
    if not free[goal_cell]:
        raise InvalidGoalError(f'Goal cell {goal_cell} is blocked')

    found = grid_search(free, start_cell, goal_cell, params.connectivity)
    if found is None:
        raise NoPathError(
            f'No grid path from {start.tolist()} to {goal.tolist()}'
        )

    cells, cost = found
    logger.debug('A* found %d cells, grid cost %.3f', len(cells),
                 cost * params.grid_resolution)
    return Path([(xs[i], ys[j]) for i, j in cells])
