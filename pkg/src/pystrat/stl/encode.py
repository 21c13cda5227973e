"""Big-M mixed-integer encoding of formulas over linear dynamics."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..core.exceptions import (
    ContractError, HorizonTooLargeError, InfeasibleError, NoConvergenceError,
    NonlinearModelError, StlViolatedError, WindowOverflowError
)
from ..dynamics.model import AnyModel
from ..dynamics.ops import linearize, rollout
from ..dynamics.trajectory import Trajectory
from ..milp.bnb import branch_and_bound
from ..milp.problem import MilpProblem, ProblemBuilder, Relation, Status
from .formula import (
    Always, And, Eventually, Not, Or, Predicate, Region, StlFormula, Until,
    formula_horizon, walk
)
from .robustness import robustness


__all__ = [
    'MAX_HORIZON', 'EPSILON', 'MilpEncoding', 'StlPlan', 'encode_stl_milp',
    'solve_stl', 'plan_stl',
]


logger = logging.getLogger(__name__)

MAX_HORIZON = 40
EPSILON = 1e-4


class StlPlan(NamedTuple):
    controls: np.ndarray
    trajectory: Trajectory
    robustness: float
    status: Status


@dataclass(frozen=True, eq=False)
class MilpEncoding:
    """A formula planning problem as a MILP plus its variable map.

    Attributes:
        problem: The MILP (minimize total absolute control effort).
        state_vars: Variable indices of x_t, shape (H + 1, n).
        control_vars: Variable indices of u_t, shape (H, m).
        effort_vars: Indices of the |u_t| bounds, shape (H, m).
        z_vars: Satisfaction binary per (subformula, step).
        root: Index of the root formula's binary at step 0.
        big_m: The big-M constant.
    """

    problem: MilpProblem
    state_vars: np.ndarray
    control_vars: np.ndarray
    effort_vars: np.ndarray
    z_vars: dict[tuple[StlFormula, int], int]
    root: int
    big_m: float

    def decode(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Returns (controls, states) from a solution vector."""

        return values[self.control_vars], values[self.state_vars]


def _state_box(model: AnyModel, x0: np.ndarray, horizon: int, dt: float,
               bounds: tuple[np.ndarray, np.ndarray]
               ) -> tuple[np.ndarray, np.ndarray]:
    """Finite bounds on every state entry over the horizon."""

    n = model.n
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    k = min(n, 2)
    lo[:k], hi[:k] = bounds[0][:k], bounds[1][:k]

    reach = horizon * dt * float(np.max(np.abs(
        np.concatenate([model.lower, model.upper])
    )))
    for i in range(k, n):
        lo[i] = x0[i] - reach
        hi[i] = x0[i] + reach
    return lo, hi


def _big_m(formula: StlFormula, lo: np.ndarray, hi: np.ndarray,
           bounds: tuple[np.ndarray, np.ndarray]) -> float:
    diameter = float(np.linalg.norm(bounds[1] - bounds[0]))
    max_b = 0.0
    needed = 0.0
    for node in walk(formula):
        if isinstance(node, Region):
            node = node.expand()
        for pred in walk(node):
            if isinstance(pred, Predicate):
                a = np.asarray(pred.a)
                k = len(a)
                span = np.maximum(np.abs(lo[:k]), np.abs(hi[:k]))
                max_b = max(max_b, abs(pred.b))
                needed = max(needed, float(np.abs(a) @ span) + abs(pred.b))
    return max(diameter + max_b, needed + EPSILON) + 1.0


class _Encoder:
    def __init__(self, builder: ProblemBuilder, state_vars: np.ndarray,
                 big_m: float) -> None:
        self.builder = builder
        self.state_vars = state_vars
        self.big_m = big_m
        self.z: dict[tuple[StlFormula, int], int] = {}

    def binary(self, node: StlFormula, t: int) -> int:
        key = (node, t)
        if key not in self.z:
            self.z[key] = self.encode(node, t)
        return self.z[key]

    def add(self, tag: str, t: int) -> int:
        """A fresh binary named after its operator, index and step."""

        return self.builder.add_binary(f'{tag}{self.builder.n_vars}_{t}')

    def conjunction(self, parts: Sequence[int], tag: str, t: int) -> int:
        b = self.builder
        z = self.add(tag, t)
        for zi in parts:
            b.add_constraint({z: 1.0, zi: -1.0}, Relation.LE, 0.0)
        row = {z: 1.0}
        for zi in parts:
            row[zi] = row.get(zi, 0.0) - 1.0
        b.add_constraint(row, Relation.GE, 1.0 - len(parts))
        return z

    def disjunction(self, parts: Sequence[int], tag: str, t: int) -> int:
        b = self.builder
        z = self.add(tag, t)
        for zi in parts:
            b.add_constraint({z: 1.0, zi: -1.0}, Relation.GE, 0.0)
        row = {z: 1.0}
        for zi in parts:
            row[zi] = row.get(zi, 0.0) - 1.0
        b.add_constraint(row, Relation.LE, 0.0)
        return z

    def encode(self, node: StlFormula, t: int) -> int:
        b = self.builder
        M = self.big_m
        match node:
            case Predicate(a, rhs):
                if len(a) > self.state_vars.shape[1]:
                    raise ContractError(
                        f'Predicate over {len(a)} entries, state has '
                        f'{self.state_vars.shape[1]}'
                    )
                z = self.add('p', t)
                row = {int(self.state_vars[t, i]): ai
                       for i, ai in enumerate(a)}
                # z = 1 -> a.x <= b - eps ; z = 0 -> a.x >= b + eps
                # so a decided predicate has margin eps on either side
                b.add_constraint({**row, z: M}, Relation.LE,
                                 rhs + M - EPSILON)
                b.add_constraint({**row, z: M}, Relation.GE, rhs + EPSILON)
                return z
            case Region():
                return self.binary(node.expand(), t)
            case Not(child):
                zc = self.binary(child, t)
                z = self.add('not', t)
                b.add_constraint({z: 1.0, zc: 1.0}, Relation.EQ, 1.0)
                return z
            case And(children):
                return self.conjunction(
                    [self.binary(c, t) for c in children], 'and', t
                )
            case Or(children):
                return self.disjunction(
                    [self.binary(c, t) for c in children], 'or', t
                )
            case Always(lo, hi, child):
                return self.conjunction(
                    [self.binary(child, t + k) for k in range(lo, hi + 1)],
                    'G', t
                )
            case Eventually(lo, hi, child):
                return self.disjunction(
                    [self.binary(child, t + k) for k in range(lo, hi + 1)],
                    'F', t
                )
            case Until(lo, hi, left, right):
                branches = []
                for tp in range(t + lo, t + hi + 1):
                    parts = [self.binary(right, tp)]
                    parts += [self.binary(left, k) for k in range(t, tp)]
                    branches.append(self.conjunction(parts, 'Ub', tp))
                return self.disjunction(branches, 'U', t)
        raise ContractError(f'Not a formula: {node!r}')


def _as_bounds(bounds) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(bounds, 'lo') and hasattr(bounds, 'hi'):
        return np.asarray(bounds.lo, float), np.asarray(bounds.hi, float)
    lo, hi = bounds
    return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)


def encode_stl_milp(formula: StlFormula, model: AnyModel, x0, horizon: int,
                    dt: float, bounds, big_m: float | None = None
                    ) -> MilpEncoding:
    """Encodes 'find controls whose rollout satisfies formula at step 0
    with minimum total absolute control effort' as a MILP.

    Arguments:
        formula: The formula to satisfy at step 0.
        model: A linear model (integrator chain or LinearSystem).
        x0: Initial state.
        horizon: Number of control steps H (the plan has H + 1 states).
        dt: Time step.
        bounds: Position bounds, a Workspace or a (lo, hi) pair.
        big_m: Override for the big-M constant (must be large enough).

    Raises:
        NonlinearModelError: For the unicycle and pendulum.
        HorizonTooLargeError: If horizon exceeds MAX_HORIZON.
        WindowOverflowError: If the formula looks past the horizon.
    """

    if not model.is_linear:
        raise NonlinearModelError(
            f'STL planning requires linear dynamics, got {model.kind}'
        )
    if not 1 <= horizon <= MAX_HORIZON:
        raise HorizonTooLargeError(
            f'Horizon {horizon} outside 1..{MAX_HORIZON}'
        )
    if formula_horizon(formula) > horizon:
        raise WindowOverflowError(
            f'Formula spans {formula_horizon(formula)} steps, plan has '
            f'{horizon}'
        )

    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (model.n,):
        raise ContractError(f'x0 must have dimension {model.n}')

    box = _as_bounds(bounds)
    lo, hi = _state_box(model, x0, horizon, dt, box)
    M = big_m if big_m is not None else _big_m(formula, lo, hi, box)
    if not (np.isfinite(M) and M > 0):
        raise ContractError(
            'Predicates reach unbounded states; pass big_m explicitly'
        )

    A, B = linearize(model, np.zeros(model.n), np.zeros(model.m), dt)
    builder = ProblemBuilder()
    n, m = model.n, model.m

    states = np.zeros((horizon + 1, n), dtype=int)
    for i in range(n):
        states[0, i] = builder.add_var(x0[i], x0[i], name=f'x0_{i}')
    for t in range(1, horizon + 1):
        for i in range(n):
            states[t, i] = builder.add_var(lo[i], hi[i], name=f'x{t}_{i}')

    controls = np.zeros((horizon, m), dtype=int)
    effort = np.zeros((horizon, m), dtype=int)
    for t in range(horizon):
        for j in range(m):
            controls[t, j] = builder.add_var(
                model.lower[j], model.upper[j], name=f'u{t}_{j}'
            )
            effort[t, j] = builder.add_var(0.0, np.inf, name=f's{t}_{j}')
            builder.set_cost(effort[t, j], 1.0)
            builder.add_constraint(
                {effort[t, j]: 1.0, controls[t, j]: -1.0}, Relation.GE, 0.0
            )
            builder.add_constraint(
                {effort[t, j]: 1.0, controls[t, j]: 1.0}, Relation.GE, 0.0
            )

    for t in range(horizon):
        for i in range(n):
            row = {states[t + 1, i]: 1.0}
            for k in range(n):
                if A[i, k] != 0.0:
                    row[states[t, k]] = row.get(states[t, k], 0.0) - A[i, k]
            for j in range(m):
                if B[i, j] != 0.0:
                    row[controls[t, j]] = -B[i, j]
            builder.add_constraint(row, Relation.EQ, 0.0)

    encoder = _Encoder(builder, states, M)
    root = encoder.binary(formula, 0)
    builder.add_constraint({root: 1.0}, Relation.EQ, 1.0)

    problem = builder.build()
    logger.debug('Encoded formula: %d variables (%d integer), %d rows',
                 problem.lp.n_vars, len(problem.integers), problem.lp.n_rows)

    return MilpEncoding(problem, states, controls, effort, encoder.z, root, M)


def solve_stl(formula: StlFormula, model: AnyModel, x0, horizon: int,
              dt: float, bounds, *, node_limit: int = 200_000,
              lp_method: str = 'highs', dive: bool = True) -> StlPlan:
    """Encodes, solves and decodes a formula planning problem.

    A node-limited search that holds an incumbent is accepted. The decoded
    controls are rolled out again and the result is checked with the
    robustness monitor.

    Raises:
        InfeasibleError: If no satisfying plan exists.
        NoConvergenceError: If the node limit is hit without any plan.
        StlViolatedError: If the rolled-out plan violates the formula.
    """

    encoding = encode_stl_milp(formula, model, x0, horizon, dt, bounds)
    solution = branch_and_bound(encoding.problem, node_limit, lp_method,
                                dive)

    match solution.status:
        case Status.INFEASIBLE:
            raise InfeasibleError('No trajectory satisfies the formula')
        case Status.UNBOUNDED:
            raise InfeasibleError('Formula program is unbounded')
        case Status.NODE_LIMIT if not solution.has_values:
            raise NoConvergenceError(
                f'Node limit {node_limit} reached without a satisfying plan'
            )
        case Status.NODE_LIMIT:
            logger.info('Accepting incumbent after node limit (%d nodes)',
                        solution.nodes)

    controls, _ = encoding.decode(solution.values)
    trajectory = rollout(model, x0, controls, dt)
    rho = robustness(formula, trajectory)
    if rho < -1e-6:
        raise StlViolatedError(
            f'Decoded plan has robustness {rho:.3g} below zero'
        )

    return StlPlan(model.clamp(controls), trajectory, rho, solution.status)


def plan_stl(formula: StlFormula, model: AnyModel, x0, horizon: int,
             dt: float, bounds, **kwargs) -> Trajectory:
    """Plans a trajectory satisfying formula; see solve_stl."""

    return solve_stl(formula, model, x0, horizon, dt, bounds,
                     **kwargs).trajectory
