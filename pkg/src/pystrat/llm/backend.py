"""The chat backend interface."""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass
from typing import Any, Self


__all__ = ['ROLES', 'DEFAULT_MODEL', 'ChatOptions', 'ChatBackend']


ROLES = ('system', 'user', 'assistant')
DEFAULT_MODEL = 'gpt-4o'


@dataclass(frozen=True)
class ChatOptions:
    """Per-request completion options.

    Attributes:
        model: Model name, None for the backend's default.
        temperature: Sampling temperature in [0, 2].
        max_tokens: Completion length limit.
        timeout_s: Per-request timeout in seconds.
    """

    model: str | None = None
    temperature: float = 0.1
    max_tokens: int = 2048
    timeout_s: float = 60.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(
                f'Invalid temperature {self.temperature}, must be in [0, 2]'
            )
        if self.max_tokens < 1:
            raise ValueError(f'Invalid max_tokens {self.max_tokens}')
        if not self.timeout_s > 0:
            raise ValueError(f'Invalid timeout {self.timeout_s}')

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Self:
        known = {k: data[k] for k in ('model', 'temperature', 'max_tokens',
                                      'timeout_s') if k in data}
        return cls(**known)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


class ChatBackend(ABC):
    """Produces a completion for a list of chat messages.

    Implementations raise only BackendError from `complete()` and never
    mutate the messages. Backends may be shared by concurrent episodes.
    """

    @abstractmethod
    async def complete(self, messages: Sequence[Mapping[str, str]],
                       options: ChatOptions) -> str:
        """Returns the completion text.

        Arguments:
            messages: {'role', 'content'} mappings, role one of ROLES.
            options: Completion options.

        Raises:
            BackendError: If no completion could be produced.
        """

    async def aclose(self) -> None:
        """Releases the backend's resources."""
