"""LP relaxations through scipy's HiGHS interface."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from ..core.deadline import checkpoint
from ..core.exceptions import NumericError
from .problem import LinearProgram, MilpSolution, Relation, Sense, Status


__all__ = ['highs_solve']


def highs_solve(lp: LinearProgram) -> MilpSolution:
    """Solves an LP with scipy.optimize.linprog(method='highs').

    Returns the same statuses and dual convention as simplex_solve.

    Raises:
        NumericError: If HiGHS stops for any reason other than optimality,
            infeasibility or unboundedness.
    """

    checkpoint()

    sign = 1.0 if lp.sense is Sense.MIN else -1.0
    le = np.array([r is Relation.LE for r in lp.relations], dtype=bool)
    ge = np.array([r is Relation.GE for r in lp.relations], dtype=bool)
    eq = np.array([r is Relation.EQ for r in lp.relations], dtype=bool)
    ub_rows = le | ge
    ub_sign = np.where(ge, -1.0, 1.0)[ub_rows]

    A_ub = b_ub = A_eq = b_eq = None
    if ub_rows.any():
        A_ub = lp.A[ub_rows] * ub_sign[:, None]
        b_ub = lp.rhs[ub_rows] * ub_sign
    if eq.any():
        A_eq = lp.A[eq]
        b_eq = lp.rhs[eq]

    bounds = [
        (None if np.isneginf(lo) else lo, None if np.isposinf(hi) else hi)
        for lo, hi in zip(lp.lo, lp.hi)
    ]

    result = linprog(sign * lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq,
                     b_eq=b_eq, bounds=bounds, method='highs')

    match result.status:
        case 0:
            pass
        case 2:
            return MilpSolution(Status.INFEASIBLE)
        case 3:
            return MilpSolution(Status.UNBOUNDED)
        case _:
            raise NumericError(f'HiGHS failed: {result.message}')

    duals = np.zeros(lp.n_rows)
    if ub_rows.any():
        duals[ub_rows] = result.ineqlin.marginals * ub_sign
    if eq.any():
        duals[eq] = result.eqlin.marginals
    x = np.asarray(result.x, dtype=float)

    return MilpSolution(Status.OPTIMAL, x, lp.objective(x), sign * duals)
