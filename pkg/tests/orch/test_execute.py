import unittest
from unittest import mock

import numpy as np
from scipy.optimize import OptimizeResult

from pystrat.core.exceptions import (
    ContractError, DeadlineExceeded, StageError
)
from pystrat.dynamics import DynamicsModel
from pystrat.env import ScenarioKind, check_outcome, generate_scenario
from pystrat.llm import GROUND_TRUTH
from pystrat.orch import (
    FIT_SHARE, Binding, PipelineConfig, StageConfig, execute_pipeline,
    path_to_reference
)
from pystrat.planners import Path


class PathToReferenceTestCase(unittest.TestCase):
    def setUp(self):
        self.line = Path([[0.0, 0.0], [1.0, 0.0]])

    def test_single_integrator(self):
        model = DynamicsModel.build('single_integrator_2d')
        ref = path_to_reference(self.line, model, 10, 0.1)

        self.assertEqual(ref.states.shape, (11, 2))
        np.testing.assert_allclose(ref.states[:, 0], np.linspace(0, 1, 11),
                                   atol=1e-12)
        np.testing.assert_allclose(ref.states[-1], [1.0, 0.0])

    def test_holds_end(self):
        model = DynamicsModel.build('single_integrator_2d')
        ref = path_to_reference(self.line, model, 20, 0.1)
        np.testing.assert_allclose(ref.states[10:], np.tile([1.0, 0.0],
                                                            (11, 1)))

    def test_double_integrator(self):
        model = DynamicsModel.build('double_integrator_2d')
        ref = path_to_reference(self.line, model, 10, 0.1, speed=0.5)

        self.assertEqual(ref.states.shape, (11, 4))
        np.testing.assert_allclose(ref.states[:-1, 2], 0.5)
        np.testing.assert_allclose(ref.states[:, 3], 0.0)
        np.testing.assert_allclose(ref.states[-1, 2:], 0.0)

    def test_unicycle(self):
        model = DynamicsModel.build('unicycle')
        path = Path([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        ref = path_to_reference(path, model, 30, 0.1)

        self.assertEqual(ref.states.shape, (31, 3))
        self.assertAlmostEqual(ref.states[0, 2], np.pi / 2)
        self.assertAlmostEqual(ref.states[15, 2], 0.0)
        # the heading is held after the end is reached
        self.assertAlmostEqual(ref.states[-1, 2], 0.0)

    def test_fit_horizon(self):
        model = DynamicsModel.build('single_integrator_2d')
        long = Path([[0.0, 0.0], [10.0, 0.0]])
        ref = path_to_reference(long, model, 10, 0.1, fit_horizon=True)

        end = int(np.ceil(FIT_SHARE * 10))
        np.testing.assert_allclose(ref.states[end:], [[10.0, 0.0]] * (11 - end))

        # never slows a conversion down
        fast = path_to_reference(self.line, model, 10, 0.1, speed=5.0,
                                 fit_horizon=True)
        np.testing.assert_allclose(fast.states[2], [1.0, 0.0])

    def test_invalid(self):
        with self.assertRaises(ContractError):
            path_to_reference(self.line, DynamicsModel.build('pendulum'), 10,
                              0.1)
        with self.assertRaises(ContractError):
            path_to_reference(self.line,
                              DynamicsModel.build('single_integrator_2d'),
                              10, 0.1, speed=0.0)


class ExecutePipelineTestCase(unittest.TestCase):
    def test_tracking(self):
        scenario = generate_scenario(ScenarioKind.TRACK_LINEAR, 0)
        _, config = GROUND_TRUTH[ScenarioKind.TRACK_LINEAR]

        traj, controls = execute_pipeline(config, scenario, 30.0)

        self.assertEqual(len(traj), scenario.horizon + 1)
        self.assertEqual(controls.shape, (scenario.horizon, scenario.model.m))
        np.testing.assert_allclose(traj.states[0], scenario.x0)
        self.assertTrue(check_outcome(scenario, traj, controls).success)

    def test_stage_error(self):
        scenario = generate_scenario(ScenarioKind.SIMPLE_PLAN, 0)
        config = PipelineConfig.build([
            StageConfig('rrt', 'path',
                        {'start': Binding('x0'), 'goal': Binding('goal'),
                         'obstacles': Binding('obstacles')},
                        {'max_iters': 1, 'goal_bias': 0.0}),
            StageConfig('pid', 'traj', {
                'x0': Binding('x0'),
                'reference': Binding('path', 'path_to_reference'),
            }),
        ])

        with self.assertRaises(StageError) as cm:
            execute_pipeline(config, scenario, 30.0)
        self.assertEqual(cm.exception.stage, 1)
        self.assertEqual(cm.exception.api, 'rrt')
        self.assertIn('NoPathError', str(cm.exception))

    def test_deadline(self):
        scenario = generate_scenario(ScenarioKind.TRACK_DUBINS, 0)
        _, config = GROUND_TRUTH[ScenarioKind.TRACK_DUBINS]

        with self.assertRaises(DeadlineExceeded):
            execute_pipeline(config, scenario, 1e-6)

    def test_params_default(self):
        scenario = generate_scenario(ScenarioKind.SIMPLE_PLAN, 1)
        config = PipelineConfig.build([
            StageConfig('grad', 'traj', {'x0': Binding('x0'),
                                         'target': Binding('goal')},
                        {'iterations': 0}),
        ])

        traj, controls = execute_pipeline(config, scenario, 30.0)
        np.testing.assert_array_equal(controls, 0.0)
        np.testing.assert_allclose(traj.states, np.tile(
            scenario.x0, (scenario.horizon + 1, 1)
        ))

    def test_lp_breakdown(self):
        scenario = generate_scenario(ScenarioKind.STL_TASK, 1)
        _, config = GROUND_TRUTH[ScenarioKind.STL_TASK]
        stalled = OptimizeResult(status=4, message='numerical difficulties')

        with mock.patch('pystrat.milp.highs.linprog', return_value=stalled):
            with self.assertRaises(StageError) as cm:
                execute_pipeline(config, scenario, 30.0)

        self.assertEqual(cm.exception.api, 'milp')
        self.assertIn('NumericError', str(cm.exception))
