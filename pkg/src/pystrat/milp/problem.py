"""Linear and mixed-integer program containers."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import StrEnum
from typing import Self

import numpy as np

from ..core.exceptions import ContractError


__all__ = [
    'Sense', 'Relation', 'Status', 'LinearProgram', 'MilpProblem',
    'MilpSolution', 'ProblemBuilder',
]


class Sense(StrEnum):
    MIN = 'min'
    MAX = 'max'


class Relation(StrEnum):
    LE = '<='
    EQ = '='
    GE = '>='


class Status(StrEnum):
    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'
    NODE_LIMIT = 'node_limit'


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """optimize c^T x  s.t.  A[i] x (relations[i]) rhs[i],  lo <= x <= hi.

    Attributes:
        c: Objective coefficients, shape (N,).
        A: Constraint matrix, shape (R, N).
        relations: One Relation per row.
        rhs: Right-hand sides, shape (R,).
        lo: Lower variable bounds (may be -inf).
        hi: Upper variable bounds (may be +inf).
        sense: Minimize or maximize.
        names: Optional variable names, used by the LP writer.
    """

    c: np.ndarray
    A: np.ndarray
    relations: tuple[Relation, ...]
    rhs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    sense: Sense = Sense.MIN
    names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        A = np.asarray(self.A, dtype=float).reshape(-1, n)
        rhs = np.asarray(self.rhs, dtype=float).ravel()
        relations = tuple(Relation(r) for r in self.relations)
        lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (n,)).copy()
        hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (n,)).copy()

        if not (A.shape[0] == rhs.size == len(relations)):
            raise ContractError(
                f'Inconsistent constraint dimensions: {A.shape[0]} rows, '
                f'{rhs.size} right-hand sides, {len(relations)} relations'
            )
        if np.any(lo > hi):
            bad = int(np.flatnonzero(lo > hi)[0])
            raise ContractError(
                f'Variable {bad} has lower bound {lo[bad]} above {hi[bad]}'
            )
        if self.names is not None:
            if len(self.names) != n:
                raise ContractError('One name per variable required')
            if len(set(self.names)) != n:
                raise ContractError('Variable names must be unique')

        object.__setattr__(self, 'c', c)
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'rhs', rhs)
        object.__setattr__(self, 'relations', relations)
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)
        object.__setattr__(self, 'sense', Sense(self.sense))

    @classmethod
    def build(
            cls,
            c: Sequence[float],
            constraints: Iterable[tuple[Sequence[float], Relation | str,
                                        float]] = (),
            bounds: Sequence[tuple[float | None, float | None]] | None = None,
            sense: Sense | str = Sense.MIN
    ) -> Self:
        """Builds an LP from a list of (coeffs, relation, rhs) rows.

        Arguments:
            c: Objective coefficients.
            constraints: Rows as (coefficients, relation, rhs).
            bounds: Per-variable (lo, hi); None means unbounded on that
                side. Defaults to x >= 0.
            sense: 'min' or 'max'.
        """

        n = len(c)
        rows = list(constraints)
        A = np.array([r[0] for r in rows], dtype=float).reshape(-1, n)
        relations = tuple(Relation(r[1]) for r in rows)
        rhs = np.array([r[2] for r in rows], dtype=float)

        if bounds is None:
            bounds = [(0.0, None)] * n
        lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds],
                      dtype=float)
        hi = np.array([np.inf if b[1] is None else b[1] for b in bounds],
                      dtype=float)

        return cls(np.asarray(c, dtype=float), A, relations, rhs, lo, hi,
                   Sense(sense))

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.rhs.size

    def with_bounds(self, lo: np.ndarray, hi: np.ndarray) -> Self:
        return replace(self, lo=lo, hi=hi)

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x)

    def violation(self, x: np.ndarray) -> float:
        """Largest constraint or bound violation of x (0 when feasible)."""

        x = np.asarray(x, dtype=float)
        worst = float(np.max(np.maximum(self.lo - x, 0.0), initial=0.0))
        worst = max(worst, float(np.max(np.maximum(x - self.hi, 0.0),
                                        initial=0.0)))
        if self.n_rows:
            lhs = self.A @ x
            for rel, mask_value in ((Relation.LE, 1), (Relation.GE, -1)):
                mask = np.array([r is rel for r in self.relations])
                if mask.any():
                    gap = mask_value * (lhs[mask] - self.rhs[mask])
                    worst = max(worst, float(np.max(gap, initial=0.0)))
            mask = np.array([r is Relation.EQ for r in self.relations])
            if mask.any():
                worst = max(worst, float(np.max(
                    np.abs(lhs[mask] - self.rhs[mask]))))
        return worst


@dataclass(frozen=True, eq=False)
class MilpProblem:
    """A linear program with integrality restrictions on some variables."""

    lp: LinearProgram
    integers: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        integers = frozenset(int(i) for i in self.integers)
        if any(not 0 <= i < self.lp.n_vars for i in integers):
            raise ContractError('Integer index out of range')
        object.__setattr__(self, 'integers', integers)


@dataclass(frozen=True, eq=False)
class MilpSolution:
    """Outcome of an LP or MILP solve.

    Attributes:
        status: Termination status.
        values: Variable values (None without a feasible point).
        objective: Objective value in the problem's own sense.
        duals: LP only; one multiplier per constraint row such that the
            objective equals rhs^T duals when every variable has bounds
            [0, inf).
        nodes: Number of relaxations solved (branch-and-bound only).
        bound: Best proven bound on the optimum (branch-and-bound only).
    """

    status: Status
    values: np.ndarray | None = None
    objective: float | None = None
    duals: np.ndarray | None = None
    nodes: int = 0
    bound: float | None = None

    @property
    def has_values(self) -> bool:
        return self.values is not None


@dataclass
class ProblemBuilder:
    """Incrementally assembles a MilpProblem.

    Rows are kept sparse (dicts) until `build()`.
    """

    sense: Sense = Sense.MIN
    _lo: list[float] = field(default_factory=list)
    _hi: list[float] = field(default_factory=list)
    _names: list[str] = field(default_factory=list)
    _cost: dict[int, float] = field(default_factory=dict)
    _rows: list[dict[int, float]] = field(default_factory=list)
    _relations: list[Relation] = field(default_factory=list)
    _rhs: list[float] = field(default_factory=list)
    _integers: set[int] = field(default_factory=set)

    @property
    def n_vars(self) -> int:
        return len(self._lo)

    @property
    def n_rows(self) -> int:
        return len(self._rows)

    def add_var(self, lo: float = 0.0, hi: float = np.inf, *,
                integer: bool = False, name: str | None = None) -> int:
        """Adds a variable and returns its index."""

        index = len(self._lo)
        self._lo.append(float(lo))
        self._hi.append(float(hi))
        self._names.append(name or f'x{index}')
        if integer:
            self._integers.add(index)
        return index

    def add_binary(self, name: str | None = None) -> int:
        return self.add_var(0.0, 1.0, integer=True, name=name)

    def add_constraint(self, coeffs: Mapping[int, float],
                       relation: Relation | str, rhs: float) -> int:
        """Adds sum(coeffs[j] * x[j]) (relation) rhs and returns its row."""

        row: dict[int, float] = {}
        for j, v in coeffs.items():
            if v != 0.0:
                row[j] = row.get(j, 0.0) + float(v)
        self._rows.append(row)
        self._relations.append(Relation(relation))
        self._rhs.append(float(rhs))
        return len(self._rows) - 1

    def set_cost(self, index: int, value: float) -> None:
        self._cost[index] = float(value)

    def build(self) -> MilpProblem:
        n = self.n_vars
        c = np.zeros(n)
        for j, v in self._cost.items():
            c[j] = v

        A = np.zeros((len(self._rows), n))
        for i, row in enumerate(self._rows):
            for j, v in row.items():
                A[i, j] = v

        lp = LinearProgram(
            c, A, tuple(self._relations), np.array(self._rhs),
            np.array(self._lo), np.array(self._hi), self.sense,
            tuple(self._names)
        )
        return MilpProblem(lp, frozenset(self._integers))
