from .aio import Scheduler, Flag, WorkerPool
