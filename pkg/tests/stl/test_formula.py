import unittest

import numpy as np

from pystrat.core.exceptions import ContractError, WindowOverflowError
from pystrat.dynamics import Trajectory
from pystrat.stl import (
    Always, And, Eventually, Not, Or, Predicate, Region, StlSyntaxError,
    Until, format_formula, formula_horizon, parse_formula, robustness,
    robustness_signal
)


def brute_force(formula, states, t):
    """Recursive evaluator written directly from the semantics."""

    match formula:
        case Predicate(a, b):
            return b - sum(ai * states[t][i] for i, ai in enumerate(a))
        case Region():
            return brute_force(formula.expand(), states, t)
        case Not(child):
            return -brute_force(child, states, t)
        case And(children):
            return min(brute_force(c, states, t) for c in children)
        case Or(children):
            return max(brute_force(c, states, t) for c in children)
        case Always(a, b, child):
            return min(brute_force(child, states, t + k)
                       for k in range(a, b + 1))
        case Eventually(a, b, child):
            return max(brute_force(child, states, t + k)
                       for k in range(a, b + 1))
        case Until(a, b, left, right):
            best = -float('inf')
            for tp in range(t + a, t + b + 1):
                value = brute_force(right, states, tp)
                for k in range(t, tp):
                    value = min(value, brute_force(left, states, k))
                best = max(best, value)
            return best


def random_formula(rng, depth, budget):
    """Random formula of at most `depth` operator levels whose horizon stays
    within `budget` steps."""

    if depth == 0 or rng.uniform() < 0.25:
        if rng.uniform() < 0.3:
            lo = rng.uniform(-2.0, 1.0, 2)
            return Region(tuple(lo), tuple(lo + rng.uniform(0.5, 2.0, 2)),
                          bool(rng.integers(2)))
        return Predicate(tuple(rng.uniform(-1.0, 1.0, 2)),
                         float(rng.uniform(-1.0, 1.0)))

    op = int(rng.integers(6))
    if op == 0:
        return Not(random_formula(rng, depth - 1, budget))
    if op in (1, 2):
        children = tuple(random_formula(rng, depth - 1, budget)
                         for _ in range(int(rng.integers(1, 4))))
        return And(children) if op == 1 else Or(children)

    b = int(rng.integers(0, budget + 1))
    a = int(rng.integers(0, b + 1))
    rest = budget - b
    if op == 3:
        return Always(a, b, random_formula(rng, depth - 1, rest))
    if op == 4:
        return Eventually(a, b, random_formula(rng, depth - 1, rest))
    return Until(a, b, random_formula(rng, depth - 1, rest),
                 random_formula(rng, depth - 1, rest))


class RobustnessTestCase(unittest.TestCase):
    def test_predicate_margin(self):
        states = np.array([[1.0, 2.0], [3.0, 0.0]])
        phi = Predicate((1.0, 1.0), 4.0)
        self.assertAlmostEqual(robustness(phi, states, 0), 1.0)
        self.assertAlmostEqual(robustness(phi, states, 1), 1.0)
        self.assertAlmostEqual(robustness(Not(phi), states, 0), -1.0)

    def test_region(self):
        states = np.array([[1.5, 1.5], [3.0, 3.0]])
        box = Region((1.0, 1.0), (2.0, 2.0))
        self.assertAlmostEqual(robustness(box, states, 0), 0.5)
        self.assertAlmostEqual(robustness(box, states, 1), -1.0)
        self.assertAlmostEqual(robustness(box.negated(), states, 1), 1.0)

    def test_temporal(self):
        states = np.array([[0.0], [1.0], [2.0], [3.0]])
        below = Predicate((1.0,), 1.5)
        self.assertAlmostEqual(robustness(Always(0, 3, below), states), -1.5)
        self.assertAlmostEqual(robustness(Eventually(0, 3, below), states),
                               1.5)
        self.assertAlmostEqual(robustness(Eventually(2, 3, below), states),
                               -0.5)

        above = Predicate((-1.0,), -2.5)
        # below holds for steps 0..1, above from step 3
        self.assertAlmostEqual(
            robustness(Until(0, 3, below, above), states), -0.5
        )

    def test_trajectory_input(self):
        traj = Trajectory(np.array([[0.0, 0.0], [1.0, 1.0]]), 0.1)
        phi = Eventually(0, 1, Region((0.5, 0.5), (1.5, 1.5)))
        self.assertAlmostEqual(robustness(phi, traj), 0.5)

    def test_window_overflow(self):
        states = np.zeros((5, 2))
        phi = Always(0, 5, Predicate((1.0, 0.0), 1.0))
        with self.assertRaises(WindowOverflowError):
            robustness(phi, states)
        with self.assertRaises(WindowOverflowError):
            robustness(Always(0, 2, Predicate((1.0, 0.0), 1.0)), states, 3)

    def test_signal_length(self):
        phi = Eventually(1, 3, Predicate((1.0,), 0.0))
        self.assertEqual(len(robustness_signal(phi, np.zeros((10, 1)))), 7)
        self.assertEqual(len(robustness_signal(phi, np.zeros((3, 1)))), 0)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            phi = random_formula(rng, 3, 10)
            length = formula_horizon(phi) + int(rng.integers(1, 6))
            states = rng.uniform(-3.0, 3.0, (length, 2))
            for t in range(length - formula_horizon(phi)):
                self.assertAlmostEqual(
                    robustness(phi, states, t), brute_force(phi, states, t),
                    delta=1e-9
                )

    def test_negation_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            phi = random_formula(rng, 3, 8)
            states = rng.uniform(-3.0, 3.0, (formula_horizon(phi) + 1, 2))
            self.assertAlmostEqual(robustness(Not(phi), states),
                                   -robustness(phi, states), delta=1e-12)

    def test_window_monotonicity(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            child = random_formula(rng, 1, 0)
            states = rng.uniform(-3.0, 3.0, (15, 2))
            b = int(rng.integers(1, 10))
            a = int(rng.integers(0, b))
            wide = robustness(Eventually(a, b, child), states)
            narrow = robustness(Eventually(a + 1, b, child), states)
            self.assertLessEqual(narrow, wide + 1e-12)

            short = robustness(Always(a, b - 1, child), states)
            long = robustness(Always(a, b, child), states)
            self.assertLessEqual(long, short + 1e-12)


class FormulaTestCase(unittest.TestCase):
    def test_horizon(self):
        p = Predicate((1.0,), 0.0)
        self.assertEqual(formula_horizon(p), 0)
        self.assertEqual(formula_horizon(Always(2, 5, p)), 5)
        self.assertEqual(
            formula_horizon(Eventually(0, 3, Always(1, 4, p))), 7
        )
        self.assertEqual(
            formula_horizon(Until(0, 2, Always(0, 3, p), p)), 5
        )

    def test_invalid(self):
        p = Predicate((1.0,), 0.0)
        with self.assertRaises(ContractError):
            Always(3, 2, p)
        with self.assertRaises(ContractError):
            Eventually(-1, 2, p)
        with self.assertRaises(ContractError):
            And(())
        with self.assertRaises(ContractError):
            Predicate((), 1.0)
        with self.assertRaises(ContractError):
            Region((1.0, 1.0), (0.0, 2.0))

    def test_hashable(self):
        a = Eventually(0, 3, Region((0, 0), (1, 1), name='key'))
        b = Eventually(0, 3, Region((0, 0), (1, 1), name='key'))
        self.assertEqual(a, b)
        self.assertEqual(len({a, b}), 1)


class SyntaxTestCase(unittest.TestCase):
    def test_parse(self):
        phi = parse_formula(
            '(and (F 0 10 (in key 1 1 2 2)) (U 0 10 (out room 4 4 7 7) '
            '(in key 1 1 2 2)) (G 0 3 (le [1 -0.5] 2.5)))'
        )
        self.assertIsInstance(phi, And)
        first, second, third = phi.children
        self.assertEqual(first, Eventually(
            0, 10, Region((1, 1), (2, 2), True, 'key')
        ))
        self.assertIsInstance(second, Until)
        self.assertFalse(second.left.inside)
        self.assertEqual(third.child, Predicate((1.0, -0.5), 2.5))

    def test_round_trip(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            phi = random_formula(rng, 3, 10)
            self.assertEqual(parse_formula(format_formula(phi)), phi)
            self.assertEqual(str(phi), format_formula(phi))

    def test_errors(self):
        bad = [
            '', '(', '(and)', '(G 0 (le [1] 0))', '(G 3 1 (le [1] 0))',
            '(le [1] 0) trailing', '(xor (le [1] 0))', '(le [] 0)',
            '(in 1 1 0 0)', '(F 0.5 2 (le [1] 0))', '(le [a] 0)',
        ]
        for text in bad:
            with self.subTest(text=text):
                with self.assertRaises(StlSyntaxError):
                    parse_formula(text)
