import unittest

import numpy as np

from pystrat.core.exceptions import ContractError, NumericOverflowError
from pystrat.dynamics import (
    DynamicsModel, LinearSystem, ModelKind, eval_f, linearize,
    nominal_controls, rollout, step, step_jacobians, wrap_angle
)


def finite_difference_jacobians(model, x, u, dt, h=1e-5, method='euler'):
    """Central differences of one integration step."""

    n, m = model.n, model.m
    A = np.zeros((n, n))
    B = np.zeros((n, m))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        A[:, i] = (step(model, x + e, u, dt, method)
                   - step(model, x - e, u, dt, method)) / (2 * h)
    for j in range(m):
        e = np.zeros(m)
        e[j] = h
        B[:, j] = (step(model, x, u + e, dt, method)
                   - step(model, x, u - e, dt, method)) / (2 * h)
    return A, B


class EvalFTestCase(unittest.TestCase):
    def test_closed_forms(self):
        unicycle = DynamicsModel.build('unicycle')
        np.testing.assert_allclose(
            eval_f(unicycle, [0, 0, 0], [1, 0]), [1, 0, 0]
        )

        pendulum = DynamicsModel.build('pendulum')
        np.testing.assert_allclose(eval_f(pendulum, [0, 0], [0]), [0, 0])
        np.testing.assert_allclose(
            eval_f(pendulum, [np.pi / 2, 0], [0]), [0, -9.8]
        )

        di = DynamicsModel.build('double_integrator_2d')
        np.testing.assert_allclose(
            eval_f(di, [1, 2, 3, 4], [5, 6]), [3, 4, 5, 6]
        )

    def test_dimension_mismatch(self):
        model = DynamicsModel.build('unicycle')
        with self.assertRaises(ContractError):
            eval_f(model, [0, 0], [1, 0])
        with self.assertRaises(ContractError):
            eval_f(model, [0, 0, 0], [1])
        with self.assertRaises(ContractError):
            eval_f(model, [0, 0, np.inf], [1, 0])


class StepTestCase(unittest.TestCase):
    def test_examples(self):
        si = DynamicsModel.build('single_integrator_2d')
        np.testing.assert_allclose(
            step(si, [0, 0], [1, 0], 0.1, 'euler'), [0.1, 0]
        )
        np.testing.assert_allclose(
            step(si, [0, 0], [1, 0], 0.1, 'rk4'), [0.1, 0]
        )

        unicycle = DynamicsModel.build('unicycle')
        np.testing.assert_allclose(
            step(unicycle, [0, 0, 0], [1, 0], 0.1, 'euler'), [0.1, 0, 0]
        )

    def test_saturation(self):
        si = DynamicsModel.build('single_integrator_2d')
        np.testing.assert_allclose(
            step(si, [0, 0], [100, -100], 0.1), [0.4, -0.4]
        )

    def test_invalid_dt(self):
        si = DynamicsModel.build('single_integrator_2d')
        with self.assertRaises(ContractError):
            step(si, [0, 0], [1, 0], 0.0)

    def test_overflow(self):
        system = LinearSystem(np.array([[1e308]]), np.array([[1.0]]))
        with self.assertRaises(NumericOverflowError):
            step(system, [10.0], [0.0], 0.1)

    def test_linear_system(self):
        system = LinearSystem(2.0, 1.0, ((-1.0, 1.0),))
        np.testing.assert_allclose(step(system, [1.0], [3.0], 0.1), [3.0])

    def test_batched(self):
        unicycle = DynamicsModel.build('unicycle')
        x = np.zeros((5, 3))
        u = np.tile([1.0, 0.5], (5, 1))
        batched = step(unicycle, x, u, 0.1)
        single = step(unicycle, x[0], u[0], 0.1)
        for row in batched:
            np.testing.assert_allclose(row, single)


class LinearizeTestCase(unittest.TestCase):
    def test_examples(self):
        si = DynamicsModel.build('single_integrator_2d')
        A, B = linearize(si, [0, 0], [0, 0], 0.1)
        np.testing.assert_allclose(A, np.eye(2))
        np.testing.assert_allclose(B, 0.1 * np.eye(2))

        unicycle = DynamicsModel.build('unicycle')
        A, _ = linearize(unicycle, [0, 0, 0], [1, 0], 0.1)
        expected = np.eye(3)
        expected[1, 2] = 0.1
        np.testing.assert_allclose(A, expected, atol=1e-12)

        pendulum = DynamicsModel.build('pendulum')
        A, _ = linearize(pendulum, [0, 0], [0], 0.1)
        np.testing.assert_allclose(A, [[1, 0.1], [-0.98, 1]])

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(1234)
        for kind in ModelKind:
            model = DynamicsModel.build(kind)
            for _ in range(100):
                x = rng.uniform(-3, 3, model.n)
                u = rng.uniform(0.9 * model.lower, 0.9 * model.upper)
                dt = rng.uniform(1e-3, 0.05)
                A, B = linearize(model, x, u, dt)
                A_fd, B_fd = finite_difference_jacobians(model, x, u, dt)
                np.testing.assert_allclose(A, A_fd, rtol=1e-5, atol=1e-8)
                np.testing.assert_allclose(B, B_fd, rtol=1e-5, atol=1e-8)

    def test_step_jacobians(self):
        rng = np.random.default_rng(99)
        for kind in ModelKind:
            model = DynamicsModel.build(kind)
            for method in ('euler', 'rk4'):
                for _ in range(30):
                    x = rng.uniform(-3, 3, model.n)
                    u = rng.uniform(0.9 * model.lower, 0.9 * model.upper)
                    A, B = step_jacobians(model, x, u, 0.1, method)
                    A_fd, B_fd = finite_difference_jacobians(
                        model, x, u, 0.1, method=method
                    )
                    np.testing.assert_allclose(A, A_fd, rtol=1e-5, atol=1e-8)
                    np.testing.assert_allclose(B, B_fd, rtol=1e-5, atol=1e-8)

        system = LinearSystem([[1.0, 1.0], [0.0, 1.0]], [[0.0], [1.0]])
        A, B = step_jacobians(system, [0, 0], [0], 0.1)
        np.testing.assert_allclose(A, system.A)
        np.testing.assert_allclose(B, system.B)


class RolloutTestCase(unittest.TestCase):
    def test_examples(self):
        si = DynamicsModel.build('single_integrator_2d')
        traj = rollout(si, [0, 0], [[1, 0]] * 10, 0.1)
        self.assertEqual(len(traj), 11)
        np.testing.assert_allclose(traj.final, [1.0, 0.0])

        traj = rollout(si, [0, 0], [[1, 0]], 0.1)
        self.assertEqual(len(traj), 2)

        traj = rollout(si, [2, 3], np.zeros((5, 2)), 0.1)
        np.testing.assert_allclose(traj.states, np.tile([2, 3], (6, 1)))

    def test_empty(self):
        si = DynamicsModel.build('single_integrator_2d')
        with self.assertRaises(ContractError):
            rollout(si, [0, 0], np.zeros((0, 2)), 0.1)

    def test_euler_rk4_order(self):
        pendulum = DynamicsModel.build('pendulum')
        x0 = [1.0, 0.0]

        def gap(dt):
            steps = round(1.0 / dt)
            controls = np.zeros((steps, 1))
            euler = rollout(pendulum, x0, controls, dt, 'euler').final
            rk4 = rollout(pendulum, x0, controls, dt, 'rk4').final
            return np.linalg.norm(euler - rk4)

        self.assertGreaterEqual(gap(0.01) / gap(0.005), 1.9)

    def test_pendulum_energy(self):
        pendulum = DynamicsModel.build('pendulum')
        g, l, M = 9.8, 1.0, 1.0

        def energy(x):
            return 0.5 * M * l * l * x[1] ** 2 + M * g * l * (1 - np.cos(x[0]))

        traj = rollout(pendulum, [1.0, 0.0], np.zeros((100, 1)), 0.01, 'rk4')
        drift = abs(energy(traj.final) - energy(traj[0])) / energy(traj[0])
        self.assertLess(drift, 1e-3)


class NominalControlsTestCase(unittest.TestCase):
    def test_reproduces_reference(self):
        rng = np.random.default_rng(7)
        for kind in ModelKind:
            model = DynamicsModel.build(kind, method='euler')
            controls = rng.uniform(0.5 * model.lower, 0.5 * model.upper,
                                   (20, model.m))
            ref = rollout(model, np.zeros(model.n), controls, 0.1)
            np.testing.assert_allclose(
                nominal_controls(model, ref, 0.1), controls, atol=1e-9
            )

    def test_wrap_angle(self):
        self.assertAlmostEqual(float(wrap_angle(3 * np.pi / 2)), -np.pi / 2)
        self.assertAlmostEqual(float(wrap_angle(0.25)), 0.25)
