import asyncio
import unittest

from pystrat.lib.aio import Flag, Scheduler, WorkerPool


class MockJob:
    """Records how far a coroutine got."""

    def __init__(self):
        self.entered = False
        self.exited = False

    async def quick(self):
        self.entered = True
        self.exited = True


class SchedulerTestCase(unittest.IsolatedAsyncioTestCase):
    async def test_build(self):
        scheduler = Scheduler.build()
        self.assertIs(scheduler.loop, asyncio.get_running_loop())
        self.assertEqual(scheduler.tasks, set())

    async def test_start_job(self):
        mj = MockJob()
        scheduler = Scheduler.build()

        job = scheduler.start_job(mj.quick(), name='quick')
        self.assertEqual(scheduler.tasks, {job})
        self.assertEqual(job.get_name(), 'quick')
        self.assertFalse(mj.entered)

        await asyncio.sleep(0)
        self.assertTrue(mj.exited)
        self.assertTrue(job.done())
        self.assertEqual(scheduler.tasks, set())


class FlagTestCase(unittest.TestCase):
    def test_set(self):
        flag = Flag()
        self.assertFalse(flag.is_set())
        flag.set()
        flag.set()
        self.assertTrue(flag.is_set())
        self.assertTrue(Flag(True).is_set())


class WorkerPoolTestCase(unittest.IsolatedAsyncioTestCase):
    async def test_invalid_size(self):
        with self.assertRaises(ValueError):
            WorkerPool(0, Scheduler.build())

    async def test_bounds_concurrency(self):
        pool = WorkerPool.build(2)
        running = 0
        peak = 0

        async def job(i):
            nonlocal running, peak
            running += 1
            peak = max(peak, running)
            await asyncio.sleep(0.001)
            running -= 1
            return i * i

        results = await pool.map([lambda i=i: job(i) for i in range(7)])
        self.assertEqual(results, [i * i for i in range(7)])
        self.assertEqual(peak, 2)

    async def test_abort_skips_pending(self):
        pool = WorkerPool.build(1)
        gate = asyncio.Event()
        started = []

        async def job(i):
            started.append(i)
            if i == 0:
                pool.abort.set()
                await gate.wait()
            return i

        tasks = [pool.submit(lambda i=i: job(i)) for i in range(4)]
        await asyncio.sleep(0)
        gate.set()
        results = await asyncio.gather(*tasks)

        self.assertEqual(started, [0])
        self.assertEqual(results, [0, None, None, None])

    async def test_shared_abort_flag(self):
        abort = Flag(True)
        pool = WorkerPool(3, Scheduler.build(), abort)
        mj = MockJob()

        self.assertIsNone(await pool.run(mj.quick))
        self.assertFalse(mj.entered)
