"""PyStrat Exceptions"""


from collections.abc import Sequence
from enum import StrEnum
from typing import Any


__all__ = [
    'PyStratException', 'PyStratError', 'ContractError',
    'NumericOverflowError', 'NumericError', 'AlgorithmError',
    'NoPathError', 'InvalidStartError', 'InvalidGoalError',
    'InfeasibleError', 'NoConvergenceError', 'DivergedError',
    'ObjectiveError', 'NonlinearModelError', 'HorizonTooLargeError',
    'StlViolatedError', 'WindowOverflowError', 'DeadlineExceeded',
    'BackendErrorKind', 'BackendError', 'UnknownScenarioError', 'ParseError',
    'PipelineValidationError', 'StageError', 'OutputError',
]


class PyStratException(Exception):
    """Base class for exceptions"""


class PyStratError(PyStratException):
    """Base class for errors."""


class ContractError(PyStratError, ValueError):
    """Raised when an input violates an operation's contract (dimensions,
    ranges, malformed values)."""


class NumericOverflowError(PyStratError, ArithmeticError):
    """Raised when a rollout produces a non-finite state."""


class NumericError(PyStratError, ArithmeticError):
    """Raised when an LP engine breaks down numerically."""


class AlgorithmError(PyStratError):
    """Base class for failures of the planning and control algorithms."""


class NoPathError(AlgorithmError):
    """No path exists (or none was found within the budget)."""


class InvalidStartError(AlgorithmError):
    """The start lies in blocked space."""


class InvalidGoalError(AlgorithmError):
    """The goal lies in blocked space."""


class InfeasibleError(AlgorithmError):
    """The optimization problem has no feasible point."""


class NoConvergenceError(AlgorithmError):
    """An iterative method hit its iteration cap.

    Attributes:
        result: The last iterate, when the algorithm has a usable one.
    """

    result: Any

    def __init__(self, message: str, result: Any = None) -> None:
        super().__init__(message)
        self.result = result


class DivergedError(AlgorithmError):
    """Optimization diverged (non-finite rollout)."""


class ObjectiveError(AlgorithmError):
    """An objective function returned a non-finite value."""


class NonlinearModelError(AlgorithmError):
    """A linear dynamics model was required."""


class HorizonTooLargeError(AlgorithmError):
    """The requested horizon exceeds the encoder's cap."""


class StlViolatedError(AlgorithmError):
    """A decoded plan does not satisfy its formula."""


class WindowOverflowError(PyStratError, ValueError):
    """A formula's temporal window runs past the end of the signal."""


class DeadlineExceeded(PyStratError, TimeoutError):
    """The wall-clock budget of a pipeline was exhausted."""


class BackendErrorKind(StrEnum):
    TRANSPORT = 'Transport'
    AUTH = 'Auth'
    RATE_LIMITED = 'RateLimited'
    TIMEOUT = 'Timeout'
    BAD_RESPONSE = 'BadResponse'

    @property
    def retryable(self) -> bool:
        return self in (BackendErrorKind.TRANSPORT,
                        BackendErrorKind.RATE_LIMITED)


class BackendError(PyStratError):
    """A chat backend could not produce a completion.

    Attributes:
        kind: What went wrong.
        retryable: Whether repeating the request may succeed.
        detail: Human-readable detail.
    """

    kind: BackendErrorKind
    retryable: bool
    detail: str

    def __init__(self, kind: BackendErrorKind, detail: str,
                 retryable: bool | None = None) -> None:
        super().__init__(f'{kind}: {detail}')
        self.kind = BackendErrorKind(kind)
        self.retryable = (self.kind.retryable if retryable is None
                          else retryable)
        self.detail = detail


class UnknownScenarioError(BackendError):
    """A rule-based backend found no scenario kind marker in the prompt."""

    def __init__(self, detail: str = 'no Scenario-Kind marker in prompt'
                 ) -> None:
        super().__init__(BackendErrorKind.BAD_RESPONSE, detail, False)


class ParseError(PyStratError):
    """A model response could not be read."""


class PipelineValidationError(PyStratError):
    """A pipeline configuration breaks one or more rules.

    Attributes:
        violations: Every violated rule, in check order.
    """

    violations: tuple[str, ...]

    def __init__(self, violations: Sequence[str]) -> None:
        self.violations = tuple(violations)
        super().__init__('; '.join(self.violations))


class StageError(PyStratError):
    """A pipeline stage failed while executing.

    Attributes:
        stage: Index of the failed stage.
        api: Its API id.
        message: The algorithm's message.
    """

    stage: int
    api: str
    message: str

    def __init__(self, stage: int, api: str, message: str) -> None:
        super().__init__(f'stage {stage} ({api}) failed: {message}')
        self.stage = stage
        self.api = api
        self.message = message


class OutputError(PyStratError, OSError):
    """Writing a result file failed.

    Attributes:
        path: The file that could not be written.
    """

    path: str

    def __init__(self, path: str, reason: str) -> None:
        super().__init__(f'{path}: {reason}')
        self.path = path
