"""Best-first branch and bound over LP relaxations."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from collections.abc import Callable
from typing import Literal

import numpy as np

from ..core.exceptions import ContractError
from .highs import highs_solve
from .problem import (
    LinearProgram, MilpProblem, MilpSolution, Sense, Status
)
from .simplex import simplex_solve


__all__ = ['branch_and_bound', 'solve_lp', 'LP_METHODS']


logger = logging.getLogger(__name__)

INT_TOL = 1e-6

LP_METHODS: dict[str, Callable[[LinearProgram], MilpSolution]] = {
    'simplex': simplex_solve,
    'highs': highs_solve,
}


def solve_lp(lp: LinearProgram,
             method: Literal['simplex', 'highs'] = 'simplex') -> MilpSolution:
    """Solves an LP with the named engine."""

    try:
        solver = LP_METHODS[method]
    except KeyError:
        raise ContractError(f'Unknown LP method {method!r}') from None
    return solver(lp)


def _most_fractional(values: np.ndarray, integers: np.ndarray) -> int | None:
    if integers.size == 0:
        return None
    frac = values[integers] - np.floor(values[integers])
    score = np.minimum(frac, 1.0 - frac)
    best = int(np.argmax(score))
    if score[best] <= INT_TOL:
        return None
    return int(integers[best])


class _Search:
    def __init__(self, milp: MilpProblem, node_limit: int, method: str
                 ) -> None:
        self.lp = milp.lp
        self.integers = np.array(sorted(milp.integers), dtype=int)
        self.node_limit = node_limit
        self.method = method
        self.sign = 1.0 if self.lp.sense is Sense.MIN else -1.0
        self.nodes = 0
        self.incumbent: np.ndarray | None = None
        self.incumbent_value = math.inf
        self.heap: list[tuple[float, int, np.ndarray, np.ndarray]] = []
        self.counter = itertools.count()

    def relax(self, lo: np.ndarray, hi: np.ndarray) -> MilpSolution:
        self.nodes += 1
        return solve_lp(self.lp.with_bounds(lo, hi), self.method)

    def prunable(self, bound: float) -> bool:
        gap = 1e-9 * max(1.0, abs(self.incumbent_value))
        return bound >= self.incumbent_value - gap

    def push(self, bound: float, lo: np.ndarray, hi: np.ndarray) -> None:
        heapq.heappush(self.heap, (bound, next(self.counter), lo, hi))

    def children(self, values: np.ndarray, j: int, lo: np.ndarray,
                 hi: np.ndarray) -> tuple[tuple, tuple]:
        """(down, up) bound pairs for branching on variable j."""

        down_hi = hi.copy()
        down_hi[j] = math.floor(values[j])
        up_lo = lo.copy()
        up_lo[j] = math.ceil(values[j])
        return (lo, down_hi), (up_lo, hi)

    def accept(self, values: np.ndarray) -> None:
        values = values.copy()
        values[self.integers] = np.round(values[self.integers])
        value = self.sign * self.lp.objective(values)
        if value < self.incumbent_value:
            self.incumbent = values
            self.incumbent_value = value
            logger.debug('New incumbent %.6g after %d nodes',
                         self.sign * value, self.nodes)

    def evaluate(self, lo: np.ndarray, hi: np.ndarray
                 ) -> tuple[float, np.ndarray, int] | None:
        """Solves one node; returns (bound, values, branch var) for open
        nodes and None for pruned or integral ones."""

        relaxed = self.relax(lo, hi)
        if relaxed.status is not Status.OPTIMAL:
            return None
        bound = self.sign * relaxed.objective
        if self.prunable(bound):
            return None
        j = _most_fractional(relaxed.values, self.integers)
        if j is None:
            self.accept(relaxed.values)
            return None
        return bound, relaxed.values, j

    def dive(self, root: tuple[float, np.ndarray, int], lo: np.ndarray,
             hi: np.ndarray) -> None:
        """Depth-first descent, nearer rounding first, until an incumbent
        exists. Nodes left on the stack go to the heap."""

        stack: list[tuple[float, np.ndarray, np.ndarray]] = []

        def expand(node: tuple[float, np.ndarray, int], lo: np.ndarray,
                   hi: np.ndarray) -> None:
            bound, values, j = node
            near, far = self.children(values, j, lo, hi)
            if values[j] - math.floor(values[j]) >= 0.5:
                near, far = far, near
            stack.append((bound, *far))
            stack.append((bound, *near))

        expand(root, lo, hi)
        while stack and self.incumbent is None:
            if self.nodes >= self.node_limit:
                break
            _, lo, hi = stack.pop()
            node = self.evaluate(lo, hi)
            if node is not None:
                expand(node, lo, hi)

        for bound, lo, hi in stack:
            self.push(bound, lo, hi)

    def best_first(self) -> bool:
        """Runs until the heap is empty (True) or the node limit hits."""

        while self.heap:
            bound, _, lo, hi = heapq.heappop(self.heap)
            if self.prunable(bound):
                continue
            if self.nodes >= self.node_limit:
                self.push(bound, lo, hi)
                return False

            node = self.evaluate(lo, hi)
            if node is None:
                continue
            node_bound, values, j = node
            for child in self.children(values, j, lo, hi):
                self.push(node_bound, *child)
        return True


def branch_and_bound(
        milp: MilpProblem,
        node_limit: int = 200_000,
        lp_method: Literal['simplex', 'highs'] = 'simplex',
        dive: bool = False
) -> MilpSolution:
    """Solves a MILP exactly by best-first branch and bound.

    Nodes are ordered by relaxation bound, ties first-in first-out; the
    branching variable is the most fractional one (lowest index on ties).

    Arguments:
        milp: The problem; every integer variable must have finite bounds.
        node_limit: Maximum number of relaxations to solve.
        lp_method: Relaxation engine, 'simplex' or 'highs'.
        dive: Descend depth-first to a first incumbent before the
            best-first search. The result is still exact.

    Returns:
        Optimal, Infeasible or Unbounded; NodeLimit (with the incumbent,
        if any) when the cap is reached first.

    Raises:
        ContractError: If an integer variable is unbounded.
        NumericError: Propagated from the LP engine.
    """

    lp = milp.lp
    for j in milp.integers:
        if not (np.isfinite(lp.lo[j]) and np.isfinite(lp.hi[j])):
            raise ContractError(f'Integer variable {j} must be bounded')
    if node_limit < 1:
        raise ContractError(f'Invalid node limit {node_limit}')

    search = _Search(milp, node_limit, lp_method)
    lo = np.ceil(lp.lo - INT_TOL)
    lo = np.where(np.isin(np.arange(lp.n_vars), search.integers), lo, lp.lo)
    hi = np.floor(lp.hi + INT_TOL)
    hi = np.where(np.isin(np.arange(lp.n_vars), search.integers), hi, lp.hi)

    root = search.relax(lo, hi)
    if root.status is not Status.OPTIMAL:
        return MilpSolution(root.status, nodes=search.nodes)

    root_bound = search.sign * root.objective
    j = _most_fractional(root.values, search.integers)
    if j is None:
        search.accept(root.values)
    elif dive:
        search.dive((root_bound, root.values, j), lo, hi)
    else:
        for child in search.children(root.values, j, lo, hi):
            search.push(root_bound, *child)

    finished = search.best_first()
    logger.debug('Branch and bound visited %d nodes', search.nodes)

    open_bounds = [b for b, *_ in search.heap]
    bound = min(open_bounds, default=search.incumbent_value)

    if search.incumbent is None:
        if finished:
            return MilpSolution(Status.INFEASIBLE, nodes=search.nodes)
        return MilpSolution(Status.NODE_LIMIT, nodes=search.nodes,
                            bound=search.sign * bound)

    status = Status.OPTIMAL if finished else Status.NODE_LIMIT
    return MilpSolution(
        status, search.incumbent, lp.objective(search.incumbent),
        nodes=search.nodes, bound=search.sign * min(bound,
                                                    search.incumbent_value)
    )
