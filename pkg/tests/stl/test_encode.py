import io
import unittest

import numpy as np

from pystrat.core.exceptions import (
    HorizonTooLargeError, InfeasibleError, NoConvergenceError,
    NonlinearModelError, WindowOverflowError
)
from pystrat.dynamics import DynamicsModel, rollout
from pystrat.env import Rect, ScenarioKind, Workspace, generate_scenario
from pystrat.milp import MilpProblem, Status, branch_and_bound, write_lp
from pystrat.stl import (
    EPSILON, Always, And, Eventually, Not, Or, Predicate, Region, Until,
    encode_stl_milp, formula_horizon, plan_stl, robustness, solve_stl, walk
)


WORKSPACE = Workspace.square(10.0)
DT = 0.1


def random_formula(rng, depth, budget):
    if depth == 0 or rng.uniform() < 0.3:
        center = rng.uniform(3.0, 7.0, 2)
        half = rng.uniform(0.3, 1.5, 2)
        return Region(tuple(center - half), tuple(center + half),
                      bool(rng.uniform() < 0.7))

    op = int(rng.integers(5))
    if op == 0:
        return Not(random_formula(rng, depth - 1, budget))
    if op in (1, 2):
        children = tuple(random_formula(rng, depth - 1, budget)
                         for _ in range(2))
        return And(children) if op == 1 else Or(children)

    b = int(rng.integers(0, budget + 1))
    a = int(rng.integers(0, b + 1))
    if op == 3:
        return Eventually(a, b, random_formula(rng, depth - 1, budget - b))
    return Until(a, b, random_formula(rng, depth - 1, budget - b),
                 random_formula(rng, depth - 1, budget - b))


def near_boundary(formula, states):
    """True if some predicate margin falls inside (-EPSILON, EPSILON); the
    encoding leaves that band out."""

    for node in walk(formula):
        if isinstance(node, Region):
            node = node.expand()
        for pred in walk(node):
            if isinstance(pred, Predicate):
                margin = pred.b - states[:, :2] @ np.asarray(pred.a)
                if np.any(np.abs(margin) < EPSILON):
                    return True
    return False


class EncodeStlMilpTestCase(unittest.TestCase):
    def setUp(self):
        self.model = DynamicsModel.build('single_integrator_2d')

    def test_reach_region(self):
        phi = Eventually(0, 10, Region((3.0, 3.0), (4.0, 4.0), name='goal'))
        plan = solve_stl(phi, self.model, [1.0, 1.0], 10, DT, WORKSPACE)

        self.assertIs(plan.status, Status.OPTIMAL)
        self.assertGreaterEqual(plan.robustness, -1e-6)
        self.assertEqual(plan.controls.shape, (10, 2))
        self.assertEqual(len(plan.trajectory), 11)
        inside = np.all((plan.trajectory.positions >= 3.0 - 1e-6)
                        & (plan.trajectory.positions <= 4.0 + 1e-6), axis=1)
        self.assertTrue(inside.any())

        # minimal L1 effort: the box corner is 2 m away along each axis
        self.assertAlmostEqual(np.abs(plan.controls).sum() * DT, 4.0,
                               delta=1e-3)

    def test_always_and_eventually(self):
        model = DynamicsModel.build('double_integrator_2d')
        phi = And((
            Always(0, 15, Region((0.5, 0.5), (9.5, 9.5))),
            Eventually(5, 15, Region((2.0, 1.0), (3.0, 2.0))),
        ))
        trajectory = plan_stl(phi, model, [1.0, 1.0, 0.0, 0.0], 15, DT,
                              WORKSPACE, lp_method='highs')
        self.assertEqual(trajectory.states.shape, (16, 4))
        self.assertGreaterEqual(robustness(phi, trajectory), -1e-6)

    def test_until(self):
        key = Region((1.0, 3.0), (2.0, 4.0), name='key')
        room = Region((3.0, 3.0), (5.0, 5.0), name='room')
        phi = And((
            Until(0, 12, room.negated(), key),
            Eventually(0, 12, room),
        ))
        plan = solve_stl(phi, self.model, [1.5, 1.5], 12, DT, WORKSPACE,
                         lp_method='highs', dive=True)
        self.assertGreaterEqual(plan.robustness, -1e-6)

        positions = plan.trajectory.positions
        key_box = Rect((1.0, 3.0), (2.0, 4.0))
        room_box = Rect((3.0, 3.0), (5.0, 5.0))
        in_key = np.flatnonzero(key_box.contains(positions, margin=1e-6))
        in_room = np.flatnonzero(room_box.contains(positions, margin=1e-6))
        self.assertGreater(len(in_key), 0)
        self.assertGreater(len(in_room), 0)
        self.assertLess(in_key[0], in_room[0])

    def test_unreachable(self):
        phi = Eventually(0, 3, Region((8.0, 8.0), (9.0, 9.0)))
        with self.assertRaises(InfeasibleError):
            solve_stl(phi, self.model, [1.0, 1.0], 3, DT, WORKSPACE)

    def test_contradiction(self):
        box = Region((3.0, 3.0), (4.0, 4.0))
        phi = And((Eventually(0, 5, box), Not(Eventually(0, 5, box))))
        with self.assertRaises(InfeasibleError):
            solve_stl(phi, self.model, [3.5, 3.5], 5, DT, WORKSPACE)

    def test_node_limit_without_plan(self):
        box = Region((3.0, 3.0), (4.0, 4.0))
        phi = And((Eventually(0, 5, box), Not(Eventually(0, 5, box))))
        encoding = encode_stl_milp(phi, self.model, [1.0, 1.0], 5, DT,
                                   WORKSPACE)
        solution = branch_and_bound(encoding.problem, node_limit=1)
        self.assertIn(solution.status, (Status.NODE_LIMIT, Status.INFEASIBLE))

        if solution.status is Status.NODE_LIMIT:
            with self.assertRaises(NoConvergenceError):
                solve_stl(phi, self.model, [1.0, 1.0], 5, DT, WORKSPACE,
                          node_limit=1)

    def test_contract(self):
        phi = Eventually(0, 5, Region((3.0, 3.0), (4.0, 4.0)))
        with self.assertRaises(NonlinearModelError):
            encode_stl_milp(phi, DynamicsModel.build('unicycle'),
                            [1.0, 1.0, 0.0], 5, DT, WORKSPACE)
        with self.assertRaises(HorizonTooLargeError):
            encode_stl_milp(phi, self.model, [1.0, 1.0], 41, DT, WORKSPACE)
        with self.assertRaises(WindowOverflowError):
            encode_stl_milp(phi, self.model, [1.0, 1.0], 4, DT, WORKSPACE)

    def test_encoding_layout(self):
        phi = Always(0, 4, Region((0.0, 0.0), (10.0, 10.0)))
        encoding = encode_stl_milp(phi, self.model, [1.0, 1.0], 4, DT,
                                   WORKSPACE)
        self.assertEqual(encoding.state_vars.shape, (5, 2))
        self.assertEqual(encoding.control_vars.shape, (4, 2))
        self.assertIn((phi, 0), encoding.z_vars)
        self.assertEqual(encoding.z_vars[phi, 0], encoding.root)
        self.assertIn(encoding.root, encoding.problem.integers)
        self.assertGreater(encoding.big_m, WORKSPACE.diameter)

    def test_variable_names(self):
        box1 = Region((2.0, 2.0), (3.0, 3.0), name='box1')
        box2 = Region((6.0, 6.0), (7.0, 7.0), name='box2')
        phi = And((Eventually(0, 3, box1), Eventually(0, 3, box2)))
        encoding = encode_stl_milp(phi, self.model, [1.0, 1.0], 3, DT,
                                   WORKSPACE)
        problem = encoding.problem
        names = problem.lp.names

        self.assertEqual(len(set(names)), len(names))

        stream = io.StringIO()
        write_lp(problem, stream)
        section = stream.getvalue().split('Binaries\n')[1]
        binaries = section.removesuffix('End\n').split()
        self.assertEqual(sorted(binaries),
                         sorted(names[j] for j in problem.integers))

    def test_decoded_plans_satisfy(self):
        rng = np.random.default_rng(2)
        solved = 0
        for _ in range(25):
            phi = random_formula(rng, 2, 8)
            try:
                plan = solve_stl(phi, self.model, [5.0, 5.0], 8, DT,
                                 WORKSPACE, lp_method='highs', dive=True,
                                 node_limit=2000)
            except (InfeasibleError, NoConvergenceError):
                continue
            solved += 1
            self.assertGreaterEqual(robustness(phi, plan.trajectory),
                                    EPSILON - 1e-6)
        self.assertGreater(solved, 5)

    def test_satisfying_trajectories_are_feasible(self):
        rng = np.random.default_rng(4)
        horizon = 8
        checked = 0
        for _ in range(400):
            if checked >= 15:
                break
            controls = rng.uniform(-4.0, 4.0, (horizon, 2))
            trajectory = rollout(self.model, [5.0, 5.0], controls, DT)
            phi = random_formula(rng, 2, horizon)
            if robustness(phi, trajectory) < EPSILON:
                continue
            if near_boundary(phi, trajectory.states):
                continue

            encoding = encode_stl_milp(phi, self.model, [5.0, 5.0], horizon,
                                       DT, WORKSPACE)
            lp = encoding.problem.lp
            lo, hi = lp.lo.copy(), lp.hi.copy()
            lo[encoding.state_vars] = trajectory.states
            hi[encoding.state_vars] = trajectory.states
            problem = MilpProblem(lp.with_bounds(lo, hi),
                                  encoding.problem.integers)

            solution = branch_and_bound(problem, lp_method='highs')
            self.assertIs(solution.status, Status.OPTIMAL,
                          msg=str(phi))
            checked += 1
        self.assertGreaterEqual(checked, 10)


class StlScenarioTestCase(unittest.TestCase):
    def test_key_before_door(self):
        spec = generate_scenario(ScenarioKind.STL_TASK, 1)
        self.assertLessEqual(formula_horizon(spec.stl_formula), spec.horizon)

        plan = solve_stl(spec.stl_formula, spec.model, spec.x0, spec.horizon,
                         spec.dt, spec.workspace, node_limit=500,
                         lp_method='highs', dive=True)
        self.assertGreaterEqual(plan.robustness, 0.0)

        positions = plan.trajectory.positions

        def first_visit(rect):
            inside = np.flatnonzero(rect.contains(positions, margin=1e-6))
            return inside[0] if inside.size else None

        key = first_visit(spec.stl_regions['key'])
        door = first_visit(spec.stl_regions['door'])
        self.assertIsNotNone(key)
        self.assertIsNotNone(door)
        self.assertLess(key, door)
