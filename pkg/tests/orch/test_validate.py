import unittest

from pystrat.core.exceptions import PipelineValidationError
from pystrat.env import ScenarioKind, generate_scenario
from pystrat.llm import GROUND_TRUTH
from pystrat.orch import (
    ApiCatalog, Binding, PipelineConfig, PortType, StageConfig,
    StrategySelection, pipeline_violations, scenario_values,
    validate_pipeline
)


SCENE = {'start': Binding('x0'), 'goal': Binding('goal'),
         'obstacles': Binding('obstacles')}


def track(params=None, api='mpc'):
    return PipelineConfig.build([
        StageConfig(api, 'traj', {'x0': Binding('x0'),
                                  'reference': Binding('reference')},
                    params or {}),
    ])


class ScenarioValuesTestCase(unittest.TestCase):
    def test_fields(self):
        plan = generate_scenario(ScenarioKind.SIMPLE_PLAN, 0)
        stl = generate_scenario(ScenarioKind.STL_TASK, 0)
        tracking = generate_scenario(ScenarioKind.TRACK_LINEAR, 0)

        self.assertEqual(set(scenario_values(plan)),
                         {'x0', 'goal', 'obstacles'})
        self.assertEqual(set(scenario_values(stl)),
                         {'x0', 'obstacles', 'stl_formula'})
        self.assertIs(scenario_values(tracking)['reference'],
                      PortType.TRAJECTORY)


class ValidatePipelineTestCase(unittest.TestCase):
    def setUp(self):
        self.catalog = ApiCatalog.build()
        self.linear = generate_scenario(ScenarioKind.TRACK_LINEAR, 0)
        self.dubins = generate_scenario(ScenarioKind.TRACK_DUBINS, 0)
        self.plan = generate_scenario(ScenarioKind.SIMPLE_PLAN, 0)

    def violations(self, config, scenario, selection=None):
        return pipeline_violations(config, scenario, self.catalog, selection)

    def test_known_good(self):
        for kind, (selection, config) in GROUND_TRUTH.items():
            with self.subTest(kind=kind):
                scenario = generate_scenario(kind, 3)
                validate_pipeline(config, scenario, self.catalog, selection)

    def test_params(self):
        found = self.violations(track({'horizon': 500, 'gain': 1}),
                                self.linear)
        self.assertEqual(found, [
            'stage 1 (mpc): parameter horizon = 500 is outside the range '
            '[1, 100]',
            'stage 1 (mpc): unknown parameter gain',
        ])

    def test_model_rule(self):
        config = PipelineConfig.build([
            StageConfig('milp', 'traj', {'x0': Binding('x0'),
                                         'formula': Binding('stl_formula')}),
        ])
        found = self.violations(config, self.dubins)
        self.assertIn('stage 1 (milp): milp requires linear dynamics', found)
        self.assertIn("stage 1 (milp): input formula is bound to "
                      "'stl_formula', which this track_dubins scenario does "
                      "not have", found)

    def test_inputs(self):
        config = PipelineConfig.build([
            StageConfig('mpc', 'traj', {'x0': Binding('x0'),
                                        'speed': Binding('x0')}),
        ])
        found = self.violations(config, self.linear)
        self.assertIn('stage 1 (mpc): unknown input speed', found)
        self.assertIn('stage 1 (mpc): missing required input reference '
                      '(Trajectory)', found)

    def test_path_needs_conversion(self):
        config = PipelineConfig.build([
            StageConfig('rrt', 'path', SCENE),
            StageConfig('pid', 'traj', {'x0': Binding('x0'),
                                        'reference': Binding('path')}),
        ])
        [message] = self.violations(config, self.plan)
        self.assertIn('takes Trajectory, got Path', message)
        self.assertIn('path_to_reference', message)

        fixed = PipelineConfig.build([
            config.stages[0],
            StageConfig('pid', 'traj', {
                'x0': Binding('x0'),
                'reference': Binding('path', 'path_to_reference'),
            }),
        ])
        self.assertEqual(self.violations(fixed, self.plan), [])

    def test_conversion_rules(self):
        config = PipelineConfig.build([
            StageConfig('rrt', 'path', SCENE),
            StageConfig('pid', 'traj', {
                'x0': Binding('x0', 'path_to_reference'),
                'reference': Binding('path', 'path_to_reference', speed=0.0),
            }),
        ])
        found = self.violations(config, self.plan)
        self.assertIn("stage 2 (pid): input x0: path_to_reference needs a "
                      "Path, 'x0' is a State", found)
        self.assertIn('stage 2 (pid): input reference: conversion speed '
                      'must be positive', found)

    def test_ordering(self):
        config = PipelineConfig.build([
            StageConfig('pid', 'traj', {
                'x0': Binding('x0'),
                'reference': Binding('path', 'path_to_reference'),
            }),
            StageConfig('rrt', 'path', SCENE),
        ], final='traj')
        found = self.violations(config, self.plan)
        self.assertIn("stage 1 (pid): input reference uses 'path' before the "
                      "stage producing it", found)

    def test_outputs(self):
        config = PipelineConfig.build([
            StageConfig('rrt', 'goal', SCENE),
            StageConfig('astar', 'route', SCENE),
            StageConfig('astar', 'route', SCENE),
        ])
        found = self.violations(config, self.plan)
        self.assertIn("stage 1 (rrt): output name 'goal' shadows a scenario "
                      "field", found)
        self.assertIn("stage 3 (astar): output name 'route' is already used",
                      found)
        self.assertIn("final output 'route' is a Path, a Trajectory is "
                      "required", found)

    def test_final_missing(self):
        config = PipelineConfig.build([track().stages[0]], final='plan')
        self.assertEqual(self.violations(config, self.linear),
                         ["final output 'plan' is not produced by any stage"])

    def test_selection(self):
        selection = StrategySelection(('lqr',))
        self.assertEqual(
            self.violations(track(), self.linear, selection),
            ['stage 1 (mpc): API was not selected']
        )

    def test_unknown_api(self):
        config = PipelineConfig.build([
            StageConfig('warp_drive', 'path', SCENE),
            StageConfig('pid', 'traj', {
                'x0': Binding('x0'),
                'reference': Binding('path', 'path_to_reference'),
            }),
        ])
        self.assertEqual(self.violations(config, self.plan),
                         ["stage 1: unknown API id 'warp_drive'"])

    def test_raises_with_every_violation(self):
        with self.assertRaises(PipelineValidationError) as cm:
            validate_pipeline(track({'horizon': 0, 'q': -1.0}), self.linear,
                              self.catalog)
        self.assertEqual(len(cm.exception.violations), 2)
        self.assertIn('; ', str(cm.exception))
