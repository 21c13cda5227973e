"""Cooperative wall-clock deadlines for long-running computations.

A deadline is installed for the current context with `deadline()`; the
algorithm loops call `checkpoint()`, which raises `DeadlineExceeded` once the
budget is spent. Outside a deadline context `checkpoint()` does nothing.
"""


import time
from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar

from .exceptions import DeadlineExceeded


__all__ = ['deadline', 'checkpoint', 'remaining']


_expires_at: ContextVar[float | None] = ContextVar('_expires_at', default=None)


@contextmanager
def deadline(timeout_s: float) -> Iterator[None]:
    """Installs a deadline timeout_s seconds from now.

    Nested deadlines never extend an enclosing one.
    """

    expires_at = time.monotonic() + timeout_s
    outer = _expires_at.get()
    if outer is not None:
        expires_at = min(expires_at, outer)

    token = _expires_at.set(expires_at)
    try:
        yield
    finally:
        _expires_at.reset(token)


def remaining() -> float | None:
    """Seconds left before the current deadline, None without one."""

    expires_at = _expires_at.get()
    if expires_at is None:
        return None
    return expires_at - time.monotonic()


def checkpoint() -> None:
    """Raises DeadlineExceeded if the current deadline has passed."""

    expires_at = _expires_at.get()
    if expires_at is not None and time.monotonic() >= expires_at:
        raise DeadlineExceeded('wall-clock budget exceeded')
