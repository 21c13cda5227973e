"""Fine-grid reachability oracle for planning worlds."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy import ndimage

from .geometry import Obstacle, Workspace, points_collide


__all__ = ['RESOLUTION', 'MARGIN', 'free_grid', 'path_exists']


RESOLUTION = 0.05
MARGIN = 0.3


def free_grid(workspace: Workspace, obstacles: Sequence[Obstacle],
              resolution: float = RESOLUTION, margin: float = MARGIN
              ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Samples the workspace on a regular grid.

    Returns:
        (free, xs, ys): boolean occupancy of shape (len(xs), len(ys)), True
        where the node is farther than margin from every obstacle, and the
        node coordinates along each axis.
    """

    xs = np.arange(workspace.lo[0], workspace.hi[0] + resolution / 2,
                   resolution)
    ys = np.arange(workspace.lo[1], workspace.hi[1] + resolution / 2,
                   resolution)
    grid = np.stack(np.meshgrid(xs, ys, indexing='ij'), axis=-1)
    return ~points_collide(grid, obstacles, margin), xs, ys


def path_exists(workspace: Workspace, obstacles: Sequence[Obstacle],
                start, goal, resolution: float = RESOLUTION,
                margin: float = MARGIN) -> bool:
    """True if the grid nodes nearest to start and goal are free and
    4-connected through free nodes."""

    free, xs, ys = free_grid(workspace, obstacles, resolution, margin)

    def node(p) -> tuple[int, int]:
        p = np.asarray(p, dtype=float)
        return (int(np.clip(np.rint((p[0] - xs[0]) / resolution), 0,
                            len(xs) - 1)),
                int(np.clip(np.rint((p[1] - ys[0]) / resolution), 0,
                            len(ys) - 1)))

    s, g = node(start), node(goal)
    if not (free[s] and free[g]):
        return False

    labels, _ = ndimage.label(free)
    return bool(labels[s] == labels[g])
