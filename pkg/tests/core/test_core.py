import asyncio
import time
import unittest

from pystrat.core import (
    SID, ContractError, DeadlineExceeded, ScenarioId, checkpoint, deadline,
    remaining
)


class ScenarioIdTestCase(unittest.TestCase):
    def test__str__(self):
        self.assertEqual(str(ScenarioId('maze_plan', 7)), 'maze_plan-7')

    def test_from_str(self):
        items = [
            ('maze_plan-7', ScenarioId('maze_plan', 7)),
            ('stl_task-0', ScenarioId('stl_task', 0)),
            ('track_linear-18446744073709551615',
             ScenarioId('track_linear', 2 ** 64 - 1)),
        ]

        for test, expected in items:
            with self.subTest(test=test):
                self.assertEqual(SID.from_str(test), expected)

    def test_invalid(self):
        for test in ('maze_plan', 'maze_plan-', 'maze_plan-x', '-3',
                     'maze_plan--3'):
            with self.subTest(test=test):
                with self.assertRaises(ValueError):
                    SID.from_str(test)

        with self.assertRaises(ValueError):
            ScenarioId('maze_plan', -1)
        with self.assertRaises(ValueError):
            ScenarioId('maze_plan', 2 ** 64)

    def test_ordering(self):
        ids = [SID('b', 1), SID('a', 2), SID('a', 1)]
        self.assertEqual(sorted(ids), [SID('a', 1), SID('a', 2), SID('b', 1)])


class DeadlineTestCase(unittest.TestCase):
    def test_no_deadline(self):
        self.assertIsNone(remaining())
        checkpoint()

    def test_expired(self):
        with deadline(1e-6):
            time.sleep(1e-3)
            with self.assertRaises(DeadlineExceeded):
                checkpoint()
        self.assertIsNone(remaining())

    def test_is_timeout_error(self):
        self.assertTrue(issubclass(DeadlineExceeded, TimeoutError))
        self.assertTrue(issubclass(ContractError, ValueError))

    def test_nested_never_extends(self):
        with deadline(0.5):
            outer = remaining()
            with deadline(100.0):
                self.assertLessEqual(remaining(), outer)
            with deadline(0.1):
                self.assertLessEqual(remaining(), 0.1)

    def test_context_local(self):
        async def probe():
            return remaining()

        async def main():
            with deadline(10.0):
                inside = await asyncio.to_thread(remaining)
            outside = await probe()
            return inside, outside

        inside, outside = asyncio.run(main())
        self.assertIsNotNone(inside)
        self.assertIsNone(outside)
