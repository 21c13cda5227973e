"""Support for various asynchronous operations and extensions"""


import asyncio
from collections.abc import Awaitable, Callable, Coroutine
from typing import Self, TypeVar


__all__ = ['Scheduler', 'Flag', 'WorkerPool']


T = TypeVar('T')


class Scheduler:
    """Class to manage scheduling (and running) asyncio tasks.

    Attributes:
        loop: The event loop.
        tasks: Set of running tasks.
    """

    loop: asyncio.AbstractEventLoop
    tasks: set[asyncio.Task]

    def __init__(self, loop: asyncio.AbstractEventLoop) -> None:
        self.loop = loop
        self.tasks = set()

    @classmethod
    def build(cls, loop: asyncio.AbstractEventLoop | None = None) -> Self:
        """Builds new scheduler instances.

        Arguments:
            loop: The event loop for running tasks. Defaults to the running
                loop.
        """

        if loop is None:
            loop = asyncio.get_running_loop()

        return cls(loop)

    def start_job(self, coro: Coroutine, *, name: str | None = None
                  ) -> asyncio.Task:
        """Schedules a job (coroutine) for running.

        Arguments:
            coro: The coroutine to schedule.
            name: Optional task name.

        Returns:
            An asyncio Task for the scheduled job.
        """

        task = self.loop.create_task(coro, name=name)
        self.tasks.add(task)
        task.add_done_callback(self.tasks.discard)

        return task


class Flag:
    """A boolean that stays set once set; the batch runner's abort signal.

    Attributes:
        value: Whether the flag is set.
    """

    value: bool

    def __init__(self, initial: bool = False) -> None:
        self.value = initial

    def set(self) -> None:
        self.value = True

    def is_set(self) -> bool:
        return self.value


class WorkerPool:
    """Bounds the number of coroutines running at once.

    Jobs are scheduled immediately on a Scheduler but each waits for one of
    `size` slots before doing any work. Once the abort flag is set, jobs that
    have not yet started are skipped and resolve to None.

    Attributes:
        size: Maximum number of concurrently running jobs.
        scheduler: The Scheduler used to create tasks.
        abort: Flag that stops jobs which have not started yet.
    """

    size: int
    scheduler: Scheduler
    abort: Flag
    _slots: asyncio.Semaphore

    def __init__(self, size: int, scheduler: Scheduler,
                 abort: Flag | None = None) -> None:
        if size < 1:
            raise ValueError(f'Invalid pool size {size}, must be >= 1')

        self.size = size
        self.scheduler = scheduler
        self.abort = abort if abort is not None else Flag()
        self._slots = asyncio.Semaphore(size)

    @classmethod
    def build(cls, size: int) -> Self:
        """Builds a pool on the running event loop."""

        return cls(size, Scheduler.build())

    async def run(self, job: Callable[[], Awaitable[T]]) -> T | None:
        """Runs job in a free slot, or returns None if aborted first."""

        async with self._slots:
            if self.abort.is_set():
                return None
            return await job()

    def submit(self, job: Callable[[], Awaitable[T]], *,
               name: str | None = None) -> asyncio.Task:
        """Schedules job to run in the pool.

        Returns:
            The task wrapping the job.
        """

        return self.scheduler.start_job(self.run(job), name=name)

    async def map(self, jobs: list[Callable[[], Awaitable[T]]]
                  ) -> list[T | None]:
        """Runs all jobs in the pool and returns their results in order."""

        tasks = [self.submit(job) for job in jobs]
        return list(await asyncio.gather(*tasks))
