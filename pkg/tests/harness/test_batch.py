import json
import os
import random
import tempfile
import unittest

from pystrat.core.exceptions import BackendError, BackendErrorKind
from pystrat.core.sid import ScenarioId
from pystrat.env import ScenarioKind
from pystrat.harness import (
    AblationSpec, BackendSpec, BatchConfig, EpisodeRow, aggregate,
    comparison_table, run_ablation, run_batch
)
from pystrat.llm import ChatBackend
from pystrat.orch import DocsMode, ErrorKind


TRACKING = (ScenarioKind.TRACK_LINEAR,)


def block(data):
    return '```json\n' + json.dumps(data) + '\n```'


class FailingBackend(ChatBackend):
    def __init__(self, kind):
        self.kind = kind
        self.calls = 0

    async def complete(self, messages, options):
        self.calls += 1
        raise BackendError(self.kind, 'stub failure')


def row(kind, seed, rounds, success, **errors):
    return EpisodeRow(ScenarioId(kind, seed), success, rounds,
                      {ErrorKind(k): v for k, v in errors.items()})


class AggregateTestCase(unittest.TestCase):
    def setUp(self):
        self.rows = [
            row('track_linear', 0, 1, True),
            row('track_linear', 1, 3, True, Parse=1, TaskFailure=1),
            row('track_linear', 2, 6, False, Validation=4, Timeout=2),
            row('track_linear', 3, 2, True, Parse=1),
            row('stl_task', 0, 6, False, TaskFailure=6),
        ]

    def test_summary(self):
        summaries = aggregate(self.rows, 6)
        track = summaries[ScenarioKind.TRACK_LINEAR]

        self.assertEqual(list(summaries), [ScenarioKind.TRACK_LINEAR,
                                           ScenarioKind.STL_TASK])
        self.assertEqual(track.episodes, 4)
        self.assertEqual(track.successes, 3)
        self.assertEqual(track.success_rate, 0.75)
        self.assertEqual(track.avg_rounds, 2.0)
        self.assertEqual(track.cumulative,
                         (0.25, 0.5, 0.75, 0.75, 0.75, 0.75))
        self.assertEqual(track.errors, {
            ErrorKind.PARSE: 2, ErrorKind.VALIDATION: 4,
            ErrorKind.TIMEOUT: 2, ErrorKind.TASK_FAILURE: 1,
        })

        stl = summaries[ScenarioKind.STL_TASK]
        self.assertIsNone(stl.avg_rounds)
        self.assertEqual(stl.success_rate, 0.0)
        self.assertEqual(stl.cumulative, (0.0,) * 6)

    def test_order_independent(self):
        expected = {k: s.to_dict() for k, s in aggregate(self.rows, 6).items()}
        shuffled = list(self.rows)
        random.Random(4).shuffle(shuffled)

        self.assertEqual(
            {k: s.to_dict() for k, s in aggregate(shuffled, 6).items()},
            expected
        )

    def test_csv_row(self):
        original = EpisodeRow(ScenarioId('maze_plan', 9), False, 6,
                              {ErrorKind.TASK_FAILURE: 6}, 'Collision', 0.1)
        line = original.to_csv()

        self.assertEqual(line['kind'], 'maze_plan')
        self.assertEqual(line['seed'], '9')
        self.assertEqual(line['task_failure'], '6')
        self.assertEqual(line['parse'], '0')

        parsed = EpisodeRow.from_csv(line)
        self.assertEqual(parsed.errors, original.errors)
        self.assertEqual(parsed.metric, 0.1)
        self.assertEqual(parsed.reason, 'Collision')


class RunBatchTestCase(unittest.IsolatedAsyncioTestCase):
    async def test_rule_based(self):
        config = BatchConfig(kinds=TRACKING, experiments=3)
        report = await run_batch(config)
        summary = report.summaries[ScenarioKind.TRACK_LINEAR]

        self.assertTrue(report.complete)
        self.assertEqual([str(r.scenario_id) for r in report.rows],
                         ['track_linear-0', 'track_linear-1',
                          'track_linear-2'])
        self.assertEqual(summary.success_rate, 1.0)
        self.assertEqual(summary.avg_rounds, 1.0)
        self.assertEqual(summary.cumulative, (1.0,) * 6)
        self.assertEqual(sum(summary.errors.values()), 0)

    async def test_faults(self):
        config = BatchConfig(kinds=TRACKING, experiments=2,
                             backend=BackendSpec(fault_p=1.0))
        report = await run_batch(config)
        summary = report.summaries[ScenarioKind.TRACK_LINEAR]

        self.assertEqual(summary.success_rate, 0.0)
        self.assertEqual(sum(summary.errors.values()), 6 * 2)
        self.assertEqual(summary.errors[ErrorKind.PARSE], 12)
        self.assertTrue(all(r.rounds_used == 6 for r in report.rows))

    async def test_parallelism(self):
        config = BatchConfig(
            kinds=TRACKING, experiments=4,
            backend=BackendSpec(fault_p=0.3, fault_seed=5)
        )
        serial = await run_batch(config)
        parallel = await run_batch(config.updated(parallelism=3))

        self.assertEqual([r.to_csv() for r in serial.rows],
                         [r.to_csv() for r in parallel.rows])
        self.assertEqual(serial.to_dict(), parallel.to_dict())

    async def test_cumulative_curve(self):
        config = BatchConfig(kinds=TRACKING, experiments=4,
                             backend=BackendSpec(fault_p=0.5))
        report = await run_batch(config)

        for summary in report.summaries.values():
            curve = summary.cumulative
            self.assertEqual(len(curve), 6)
            self.assertTrue(all(a <= b for a, b in zip(curve, curve[1:])))
            self.assertAlmostEqual(curve[-1], summary.success_rate)

    async def test_abort(self):
        backend = FailingBackend(BackendErrorKind.AUTH)
        config = BatchConfig(kinds=TRACKING, experiments=3)

        with self.assertLogs('pystrat.harness.batch', 'ERROR'):
            report = await run_batch(config, backend=backend)

        self.assertFalse(report.complete)
        self.assertEqual(report.rows, ())
        self.assertEqual(backend.calls, 1)
        self.assertFalse(report.to_dict()['complete'])

    async def test_scripted_rerun(self):
        script = [
            block(['mpc']),
            block({'stages': [{'api': 'mpc', 'output': 'traj', 'inputs': {
                'x0': 'x0', 'reference': 'reference'
            }}]}),
        ]
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'transcript.json')
            with open(path, 'w') as f:
                json.dump({'responses': script}, f)
            config = BatchConfig(
                kinds=TRACKING, experiments=2,
                backend=BackendSpec('scripted', script=path)
            )

            first = await run_batch(config)
            second = await run_batch(config)

        self.assertEqual(first.to_dict(), second.to_dict())
        self.assertEqual([r.to_csv() for r in first.rows],
                         [r.to_csv() for r in second.rows])
        self.assertEqual(
            first.summaries[ScenarioKind.TRACK_LINEAR].success_rate, 1.0
        )

    async def test_baseline(self):
        config = BatchConfig(kinds=TRACKING, experiments=2, baseline=True)
        report = await run_batch(config)

        self.assertTrue(report.complete)
        self.assertEqual(
            report.summaries[ScenarioKind.TRACK_LINEAR].success_rate, 1.0
        )

    async def test_report_dict(self):
        report = await run_batch(BatchConfig(kinds=TRACKING, experiments=1))
        data = report.to_dict()

        self.assertEqual(data['schema_version'], 1)
        self.assertEqual(data['avg_rounds_over'], 'successful episodes')
        self.assertEqual(data['episodes'], 1)
        self.assertEqual(set(data['kinds']['track_linear']['errors']),
                         {'Parse', 'Validation', 'Timeout', 'TaskFailure'})


class RunAblationTestCase(unittest.IsolatedAsyncioTestCase):
    async def test_docs_modes(self):
        config = BatchConfig(
            kinds=TRACKING, experiments=2,
            ablation=AblationSpec(docs_modes=('on_demand', 'upfront'))
        )
        reports = await run_ablation(config)

        self.assertEqual([s.docs_mode for s, _ in reports],
                         [DocsMode.ON_DEMAND, DocsMode.UPFRONT])
        for setting, report in reports:
            self.assertIs(report.setting, setting)
            self.assertEqual(
                report.summaries[ScenarioKind.TRACK_LINEAR].success_rate, 1.0
            )

    async def test_temperatures(self):
        config = BatchConfig(
            kinds=TRACKING, experiments=1,
            ablation=AblationSpec(temperatures=(0.1, 0.7, 1.5))
        )
        reports = await run_ablation(config)
        table = comparison_table(reports)

        self.assertEqual([s.temperature for s, _ in reports], [0.1, 0.7, 1.5])
        self.assertEqual([r.to_dict()['setting']['temperature']
                          for _, r in reports], [0.1, 0.7, 1.5])
        self.assertEqual([t['temperature'] for t in table],
                         ['0.1', '0.7', '1.5'])
        self.assertTrue(all(t['success_rate'] == '1.0000' for t in table))

    async def test_empty(self):
        with self.assertRaises(ValueError):
            await run_ablation(BatchConfig(kinds=TRACKING, experiments=1))

    async def test_stops_when_incomplete(self):
        config = BatchConfig(
            kinds=TRACKING, experiments=1,
            ablation=AblationSpec(temperatures=(0.1, 0.7))
        )
        reports = await run_ablation(
            config, backend=FailingBackend(BackendErrorKind.AUTH)
        )

        self.assertEqual(len(reports), 1)
        self.assertFalse(reports[0][1].complete)
