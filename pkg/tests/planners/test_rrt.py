import math
import unittest

import numpy as np

from pystrat.core.exceptions import (
    ContractError, InvalidStartError, NoPathError
)
from pystrat.env import (
    Circle, GoalDisc, Rect, Workspace, collides_segment
)
from pystrat.planners import RrtParams, RrtVariant, astar, rrt


WORKSPACE = Workspace.square()


def assert_valid(case, path, start, goal, obstacles, clearance=0.0):
    np.testing.assert_array_equal(path.start, start)
    case.assertTrue(goal.contains(path.end))
    case.assertTrue(np.all(WORKSPACE.contains(path.waypoints)))
    for a, b in zip(path.waypoints[:-1], path.waypoints[1:]):
        case.assertFalse(collides_segment(a, b, obstacles, clearance))
    segments = np.diff(path.waypoints, axis=0)
    case.assertAlmostEqual(
        path.total_cost, float(np.sum(np.linalg.norm(segments, axis=1)))
    )


class RrtTestCase(unittest.TestCase):
    def test_empty_world(self):
        start = np.array([1.0, 1.0])
        goal = GoalDisc([8, 8], 0.5)
        path = rrt(start, goal, [], WORKSPACE, RrtParams(max_iters=2000))
        assert_valid(self, path, start, goal, [])

    def test_wall_with_gap(self):
        obstacles = [Rect([4.5, 0], [5.5, 4]), Rect([4.5, 6], [5.5, 10])]
        start = np.array([1.0, 5.0])
        goal = GoalDisc([9, 5], 0.5)
        for seed in range(3):
            path = rrt(start, goal, obstacles, WORKSPACE,
                       RrtParams(rng_seed=seed, clearance=0.1))
            assert_valid(self, path, start, goal, obstacles, 0.1)

    def test_enclosed_goal(self):
        obstacles = [
            Rect([3.5, 3.5], [6.5, 4]), Rect([3.5, 6], [6.5, 6.5]),
            Rect([3.5, 3.5], [4, 6.5]), Rect([6, 3.5], [6.5, 6.5]),
        ]
        with self.assertRaises(NoPathError):
            rrt([1, 1], GoalDisc([5, 5], 0.5), obstacles, WORKSPACE,
                RrtParams(max_iters=300))

    def test_reproducible(self):
        obstacles = [Circle([5, 5], 1.5)]
        params = RrtParams(rng_seed=11, variant='rrt_star', max_iters=800)
        first = rrt([1, 1], GoalDisc([9, 9]), obstacles, WORKSPACE, params)
        second = rrt([1, 1], GoalDisc([9, 9]), obstacles, WORKSPACE, params)
        np.testing.assert_array_equal(first.waypoints, second.waypoints)

    def test_rrt_star_near_straight_line(self):
        start = np.array([1.0, 1.0])
        goal = GoalDisc([9, 9], 0.5)
        d = float(np.linalg.norm(goal.center - start))
        for seed in range(3):
            path = rrt(start, goal, [], WORKSPACE, RrtParams(
                variant=RrtVariant.RRT_STAR, max_iters=4000, rng_seed=seed
            ))
            assert_valid(self, path, start, goal, [])
            self.assertLessEqual(path.total_cost, 1.15 * d)

    def test_rrt_star_not_worse(self):
        obstacles = [Circle([5, 5], 1.0)]
        start, goal = [1, 1], GoalDisc([9, 9])
        plain, star = [], []
        for seed in range(6):
            plain.append(rrt(start, goal, obstacles, WORKSPACE, RrtParams(
                max_iters=1500, rng_seed=seed
            )).total_cost)
            star.append(rrt(start, goal, obstacles, WORKSPACE, RrtParams(
                max_iters=1500, rng_seed=seed, variant='rrt_star'
            )).total_cost)
        self.assertLessEqual(np.mean(star), np.mean(plain))

    def test_route_refinement(self):
        obstacles = [Rect([4.5, 0], [5.5, 6]), Circle([7.5, 7.5], 0.8)]
        start = np.array([1.0, 1.0])
        goal = GoalDisc([9, 2], 0.5)
        route = astar(start, goal.center, obstacles, WORKSPACE)
        path = rrt(start, goal, obstacles, WORKSPACE,
                   RrtParams(clearance=0.15), route=route)
        assert_valid(self, path, start, goal, obstacles, 0.15)
        self.assertGreater(path.total_cost, math.dist(start, goal.center))

    def test_start_in_goal(self):
        path = rrt([5, 5], GoalDisc([5.2, 5]), [], WORKSPACE)
        self.assertEqual(len(path), 1)

    def test_invalid_start(self):
        with self.assertRaises(InvalidStartError):
            rrt([5, 5], GoalDisc([9, 9]), [Circle([5, 5], 1)], WORKSPACE)

    def test_params(self):
        params = RrtParams.from_dict({'variant': 'rrt_star', 'max_iters': 10})
        self.assertIs(params.variant, RrtVariant.RRT_STAR)
        self.assertEqual(params.to_dict()['variant'], 'rrt_star')
        with self.assertRaises(ContractError):
            RrtParams(goal_bias=1.5)
        with self.assertRaises(ContractError):
            RrtParams(max_iters=0)
        with self.assertRaises(ContractError):
            RrtParams(variant='prm')
