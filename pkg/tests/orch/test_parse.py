import unittest

import numpy as np

from pystrat.core.exceptions import ParseError
from pystrat.orch import (
    ApiCatalog, Binding, PipelineConfig, StageConfig, StrategySelection,
    extract_block, parse_pipeline, parse_selection, parse_table
)


PIPELINE = '''Here is the pipeline.

```json
{
  "schema_version": 1,
  "stages": [
    {"api": "rrt", "params": {"clearance": 0.15},
     "inputs": {"start": "x0", "goal": "goal", "obstacles": "obstacles"},
     "output": "path"},
    {"api": "pid", "params": {"kff": 1.0},
     "inputs": {"x0": "x0",
                "reference": {"from": "path", "convert": "path_to_reference",
                              "speed": 1.5, "fit_horizon": true}},
     "output": "traj"}
  ],
  "final": "traj"
}
```
'''


class ExtractBlockTestCase(unittest.TestCase):
    def test_last_block(self):
        text = '```json\n[1]\n```\nthen\n```table\n1 2\n3 4\n```\n'
        self.assertEqual(extract_block(text), ('table', '1 2\n3 4'))

    def test_missing(self):
        with self.assertRaisesRegex(ParseError, 'missing'):
            extract_block('no block here')
        with self.assertRaisesRegex(ParseError, 'missing'):
            extract_block('')

    def test_unterminated(self):
        with self.assertRaisesRegex(ParseError, 'unterminated'):
            extract_block('```json\n{"apis": ["rrt"')


class ParseSelectionTestCase(unittest.TestCase):
    def setUp(self):
        self.catalog = ApiCatalog.build()

    def test_forms(self):
        items = [
            ('```json\n["astar", "rrt"]\n```',
             StrategySelection(('astar', 'rrt'))),
            ('I pick mpc.\n```json\n{"apis": ["mpc"], "rationale": "track"}'
             '\n```', StrategySelection(('mpc',), 'track')),
            ('```json\n["ASTAR", " rrt"]\n```',
             StrategySelection(('astar', 'rrt'))),
        ]

        for text, expected in items:
            with self.subTest(text=text):
                self.assertEqual(parse_selection(text, self.catalog),
                                 expected)

    def test_round_trip(self):
        selection = StrategySelection(('astar', 'rrt', 'pid'), 'maze')
        self.assertEqual(parse_selection(selection.to_block(), self.catalog),
                         selection)

    def test_invalid(self):
        items = [
            ('```json\n["warp_drive"]\n```', "unknown API id 'warp_drive'"),
            ('```json\n[]\n```', 'empty'),
            ('```json\n["rrt", "rrt"]\n```', 'duplicate'),
            ('```json\n{"apis": "rrt"}\n```', 'list of API ids'),
            ('```json\n["rrt",\n```', 'malformed selection block'),
            ('rrt please', 'missing'),
        ]

        for text, message in items:
            with self.subTest(text=text):
                with self.assertRaisesRegex(ParseError, message):
                    parse_selection(text, self.catalog)


class ParsePipelineTestCase(unittest.TestCase):
    def setUp(self):
        self.catalog = ApiCatalog.build()

    def test_parse(self):
        config = parse_pipeline(PIPELINE, self.catalog)

        self.assertEqual(config.apis, ('rrt', 'pid'))
        self.assertEqual(config.final, 'traj')
        self.assertEqual(config.stages[0].params, {'clearance': 0.15})
        self.assertEqual(config.stages[0].inputs['start'], Binding('x0'))
        self.assertEqual(config.stages[1].inputs['reference'],
                         Binding('path', 'path_to_reference', 1.5, True))

    def test_round_trip(self):
        config = PipelineConfig.build([
            StageConfig('mpc', 'traj', {'x0': Binding('x0'),
                                        'reference': Binding('reference')},
                        {'horizon': 10}),
        ])
        self.assertEqual(parse_pipeline(config.to_block(), self.catalog),
                         config)

    def test_final_defaults_to_last_output(self):
        text = ('```json\n{"stages": [{"api": "milp", "inputs": {"x0": "x0", '
                '"formula": "stl_formula"}, "output": "plan"}]}\n```')
        config = parse_pipeline(text, self.catalog)
        self.assertEqual(config.final, 'plan')
        self.assertEqual(config.schema_version, 1)

    def test_api_spelling(self):
        text = ('```json\n{"stages": [{"api": " MPC ", "output": "t"}]}'
                '\n```')
        self.assertEqual(parse_pipeline(text, self.catalog).apis, ('mpc',))

    def test_unknown_api_is_not_a_parse_error(self):
        text = ('```json\n{"stages": [{"api": "warp_drive", "output": "t"}]}'
                '\n```')
        self.assertEqual(parse_pipeline(text, self.catalog).apis,
                         ('warp_drive',))

    def test_invalid(self):
        items = [
            ('{"stages": []}', 'non-empty'),
            ('{"schema_version": 2, "stages": [{"api": "pid", "output": "t"}]}',
             'schema_version'),
            ('[1, 2]', 'must be an object'),
            ('{"stages": [{"api": "pid"}]}', 'output'),
            ('{"stages": [{"output": "t"}]}', 'api'),
            ('{"stages": [{"api": "pid", "output": "t", "when": 1}]}',
             'unknown keys when'),
            ('{"stages": [{"api": "pid", "output": "t", "inputs": '
             '{"reference": {"from": "p", "convert": "spline"}}}]}',
             'unknown conversion'),
            ('{"stages": [{"api": "pid", "output": "t", "inputs": '
             '{"reference": {"from": "p", "speed": "fast"}}}]}',
             'speed'),
            ('{"stages": [{"api": "pid", "output": "t", "inputs": '
             '{"reference": 3}}]}', 'must be a name'),
        ]

        for body, message in items:
            with self.subTest(body=body):
                with self.assertRaisesRegex(ParseError, message):
                    parse_pipeline(f'```json\n{body}\n```', self.catalog)

    def test_truncated(self):
        with self.assertRaises(ParseError):
            parse_pipeline(PIPELINE[:200], self.catalog)


class ParseTableTestCase(unittest.TestCase):
    def test_parse(self):
        table = parse_table('```table\n# x y\n1 2\n3.5, -4e-1\n\n```')
        np.testing.assert_array_equal(table, [[1.0, 2.0], [3.5, -0.4]])

    def test_invalid(self):
        items = [
            ('```table\n1 2\n3\n```', 'different lengths'),
            ('```table\n1 two\n```', 'row 1 is not numeric'),
            ('```table\n\n```', 'empty'),
            ('```table\n1 nan\n```', 'non-finite'),
        ]

        for text, message in items:
            with self.subTest(text=text):
                with self.assertRaisesRegex(ParseError, message):
                    parse_table(text)
