"""Dense two-phase primal simplex."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..core.deadline import checkpoint
from ..core.exceptions import NumericError
from .problem import LinearProgram, MilpSolution, Relation, Sense, Status


__all__ = ['simplex_solve']


logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-10
COST_TOL = 1e-9
FEAS_TOL = 1e-7


@dataclass
class _StandardForm:
    """min cs^T y  s.t.  As y (rel) bs,  y >= 0, with x = offset + T y."""

    As: np.ndarray
    bs: np.ndarray
    relations: list[Relation]
    cs: np.ndarray
    const: float
    T: np.ndarray
    offset: np.ndarray
    n_orig_rows: int

    @classmethod
    def from_lp(cls, lp: LinearProgram) -> _StandardForm:
        n = lp.n_vars
        columns: list[tuple[int, float]] = []
        offset = np.zeros(n)
        bound_rows: list[tuple[int, float]] = []

        for j in range(n):
            lo, hi = lp.lo[j], lp.hi[j]
            if np.isfinite(lo):
                offset[j] = lo
                columns.append((j, 1.0))
                if np.isfinite(hi):
                    bound_rows.append((len(columns) - 1, hi - lo))
            elif np.isfinite(hi):
                offset[j] = hi
                columns.append((j, -1.0))
            else:
                columns.append((j, 1.0))
                columns.append((j, -1.0))

        T = np.zeros((n, len(columns)))
        for k, (j, sign) in enumerate(columns):
            T[j, k] = sign

        c = lp.c if lp.sense is Sense.MIN else -lp.c
        As = lp.A @ T
        bs = lp.rhs - lp.A @ offset
        relations = list(lp.relations)

        if bound_rows:
            extra = np.zeros((len(bound_rows), len(columns)))
            for i, (k, width) in enumerate(bound_rows):
                extra[i, k] = 1.0
            As = np.vstack([As, extra])
            bs = np.concatenate([bs, [w for _, w in bound_rows]])
            relations += [Relation.LE] * len(bound_rows)

        return cls(As, bs, relations, c @ T, float(c @ offset), T, offset,
                   lp.n_rows)


class _Tableau:
    def __init__(self, std: _StandardForm) -> None:
        m, k = std.As.shape
        self.signs = np.where(std.bs < 0, -1.0, 1.0)
        A = std.As * self.signs[:, None]
        b = std.bs * self.signs
        relations = []
        for rel, sign in zip(std.relations, self.signs):
            if sign < 0 and rel is not Relation.EQ:
                rel = Relation.GE if rel is Relation.LE else Relation.LE
            relations.append(rel)

        n_slack = sum(r is not Relation.EQ for r in relations)
        n_art = sum(r is not Relation.LE for r in relations)
        self.n_struct = k
        self.n_cols = k + n_slack + n_art
        self.art_start = k + n_slack

        self.T = np.zeros((m + 1, self.n_cols + 1))
        self.T[:m, :k] = A
        self.T[:m, -1] = b
        self.basis = np.zeros(m, dtype=int)
        self.id_col = np.zeros(m, dtype=int)
        self.rows = list(range(m))

        slack = k
        art = self.art_start
        for i, rel in enumerate(relations):
            if rel is Relation.LE:
                self.T[i, slack] = 1.0
                self.basis[i] = self.id_col[i] = slack
                slack += 1
            else:
                if rel is Relation.GE:
                    self.T[i, slack] = -1.0
                    slack += 1
                self.T[i, art] = 1.0
                self.basis[i] = self.id_col[i] = art
                art += 1

        self.iterations = 0
        self.bland_after = 10 * (self.n_cols + m)
        self.max_iterations = self.bland_after + 50 * (self.n_cols + m) + 1000

    @property
    def m(self) -> int:
        return self.T.shape[0] - 1

    def set_costs(self, costs: np.ndarray) -> None:
        self.T[-1, :] = 0.0
        self.T[-1, :self.n_cols] = costs
        for i in range(self.m):
            cb = costs[self.basis[i]]
            if cb != 0.0:
                self.T[-1] -= cb * self.T[i]

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        self.basis[row] = col
        if not np.all(np.isfinite(T)):
            raise NumericError('Non-finite tableau after pivot')

    def run(self, allowed: np.ndarray) -> Status:
        while True:
            checkpoint()
            d = self.T[-1, :self.n_cols]
            candidates = allowed & (d < -COST_TOL)
            if not candidates.any():
                return Status.OPTIMAL

            if self.iterations < self.bland_after:
                col = int(np.argmin(np.where(candidates, d, np.inf)))
            else:
                col = int(np.flatnonzero(candidates)[0])

            column = self.T[:-1, col]
            pos = column > PIVOT_TOL
            if not pos.any():
                return Status.UNBOUNDED

            ratios = np.full(self.m, np.inf)
            ratios[pos] = self.T[:-1, -1][pos] / column[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + 1e-12)
            row = int(ties[np.argmin(self.basis[ties])])

            self.pivot(row, col)
            self.iterations += 1
            if self.iterations > self.max_iterations:
                raise NumericError(
                    f'Simplex did not terminate after {self.iterations} '
                    f'pivots'
                )

    def drive_out_artificials(self) -> None:
        keep = []
        for i in range(self.m):
            if self.basis[i] >= self.art_start:
                row = self.T[i, :self.art_start]
                candidates = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                if candidates.size:
                    self.pivot(i, int(candidates[0]))
                    keep.append(i)
                # otherwise the row is redundant
            else:
                keep.append(i)

        if len(keep) < self.m:
            self.T = np.vstack([self.T[keep], self.T[-1:]])
            self.basis = self.basis[keep]
            self.id_col = self.id_col[keep]
            self.rows = [self.rows[i] for i in keep]

    def values(self) -> np.ndarray:
        y = np.zeros(self.n_cols)
        y[self.basis] = self.T[:-1, -1]
        return y[:self.n_struct]


def simplex_solve(lp: LinearProgram) -> MilpSolution:
    """Solves an LP with the two-phase primal simplex method.

    Dantzig's rule is used until 10 * (variables + rows) pivots have been
    made, then Bland's rule guarantees termination.

    Returns:
        A solution with status Optimal, Infeasible or Unbounded. Optimal
        solutions carry row duals.

    Raises:
        NumericError: If pivoting breaks down numerically.
    """

    std = _StandardForm.from_lp(lp)
    tab = _Tableau(std)
    cols = np.arange(tab.n_cols)

    # Phase 1
    phase1 = np.where(cols >= tab.art_start, 1.0, 0.0)
    tab.set_costs(phase1)
    tab.run(np.ones(tab.n_cols, dtype=bool))
    infeasibility = -tab.T[-1, -1]
    scale = max(1.0, float(np.max(np.abs(std.bs), initial=0.0)))
    if infeasibility > FEAS_TOL * scale:
        logger.debug('LP infeasible (phase 1 residual %.3g)', infeasibility)
        return MilpSolution(Status.INFEASIBLE)
    tab.drive_out_artificials()

    # Phase 2
    costs = np.zeros(tab.n_cols)
    costs[:tab.n_struct] = std.cs
    tab.set_costs(costs)
    status = tab.run(cols < tab.art_start)
    logger.debug('Simplex finished (%s) after %d pivots', status,
                 tab.iterations)
    if status is Status.UNBOUNDED:
        return MilpSolution(Status.UNBOUNDED)

    x = std.offset + std.T @ tab.values()
    objective = lp.objective(x)

    duals = np.zeros(len(std.bs))
    for r, i in enumerate(tab.rows):
        duals[i] = -tab.T[-1, tab.id_col[r]] * tab.signs[i]
    duals = duals[:std.n_orig_rows]
    if lp.sense is Sense.MAX:
        duals = -duals

    return MilpSolution(Status.OPTIMAL, x, objective, duals)
