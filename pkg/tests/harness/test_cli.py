import contextlib
import io
import json
import os
import tempfile
import unittest
from pathlib import Path

from pystrat.harness import COMPARISON_FILE, EPISODES_FILE, REPORT_FILE
from pystrat.harness.cli import EXIT_OK, EXIT_USAGE, main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


class CliTestCase(unittest.TestCase):
    def test_usage_errors(self):
        for argv in (['bogus'], ['batch'], ['batch', 'run', '--kinds', 'x'],
                     ['batch', 'run', '--experiments', 'many']):
            with self.subTest(argv=argv):
                with self.assertRaises(SystemExit) as cm:
                    run(*argv)
                self.assertEqual(cm.exception.code, EXIT_USAGE)

    def test_invalid_values(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, _, err = run('batch', 'run', '--experiments', '0',
                               '--out-dir', tmp)

        self.assertEqual(code, EXIT_USAGE)
        self.assertIn('experiment count', err)

    def test_scenario(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'scenario.json')
            code, _, _ = run('scenario', 'gen', '--kind', 'maze_plan',
                             '--seed', '3', '--out', path)
            with open(path) as f:
                data = json.load(f)
            show_code, text, _ = run('scenario', 'show', '--scenario', path)

        self.assertEqual(code, EXIT_OK)
        self.assertEqual(data['kind'], 'maze_plan')
        self.assertEqual(data['seed'], 3)
        self.assertEqual(show_code, EXIT_OK)
        self.assertIn('Scenario-Kind: maze_plan', text)

        code, _, err = run('scenario', 'show')
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn('--kind', err)

    def test_episode(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'episode.json')
            code, text, _ = run('episode', 'run', '--kind', 'track_linear',
                                '--seed', '1', '--out', path)
            with open(path) as f:
                data = json.load(f)

        self.assertEqual(code, EXIT_OK)
        self.assertIn('track_linear-1: success after 1 round(s)', text)
        self.assertTrue(data['success'])

    def test_batch_and_render(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp, 'batch.toml')
            config.write_text('kinds = ["track_linear"]\n'
                              'experiments = 5\n')
            out = Path(tmp, 'out')

            code, text, _ = run('batch', 'run', '--config', str(config),
                                '--experiments', '2', '--out-dir', str(out),
                                '--no-panels')
            with open(out / REPORT_FILE) as f:
                report = json.load(f)
            rows = (out / EPISODES_FILE).read_text().splitlines()

            render_code, rendered, _ = run('report', 'render', str(out))
            with open(out / REPORT_FILE) as f:
                rerendered = json.load(f)

        self.assertEqual(code, EXIT_OK)
        self.assertIn('track_linear', text)
        self.assertEqual(report['episodes'], 2)
        self.assertEqual(len(rows), 3)
        self.assertEqual(render_code, EXIT_OK)
        self.assertEqual(rendered, text)
        self.assertEqual(rerendered, report)

    def test_ablate(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, _, _ = run('ablate', 'run', '--kinds', 'track_linear',
                             '--experiments', '1', '--out-dir', tmp,
                             '--docs-modes', 'on_demand', 'upfront')
            entries = sorted(os.listdir(tmp))
            table = Path(tmp, COMPARISON_FILE).read_text().splitlines()

            empty_code, _, err = run('ablate', 'run', '--experiments', '1',
                                     '--out-dir', tmp)

        self.assertEqual(code, EXIT_OK)
        self.assertEqual(entries, [
            '00-temperature=0.1_model=default_docs=on_demand',
            '01-temperature=0.1_model=default_docs=upfront',
            COMPARISON_FILE,
        ])
        self.assertEqual(len(table), 3)
        self.assertEqual(empty_code, EXIT_USAGE)
        self.assertIn('no settings', err)
