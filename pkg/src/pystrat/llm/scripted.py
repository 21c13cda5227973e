"""A backend replaying a fixed list of responses."""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from os import PathLike
from typing import Self

from ..core.exceptions import BackendError, BackendErrorKind
from .backend import ChatBackend, ChatOptions


__all__ = ['ScriptedBackend']


class ScriptedBackend(ChatBackend):
    """Returns scripted responses in order, whatever the messages say.

    Once the script is exhausted every request fails with BadResponse.

    Attributes:
        responses: The script.
        calls: Number of requests served so far.
    """

    responses: tuple[str, ...]
    calls: int

    def __init__(self, responses: Iterable[str]) -> None:
        self.responses = tuple(responses)
        self.calls = 0

    @classmethod
    def from_file(cls, path: str | PathLike) -> Self:
        """Loads a transcript: a JSON list of response strings, or an
        object whose "responses" key holds one."""

        with open(path, encoding='utf-8') as f:
            data = json.load(f)
        if isinstance(data, Mapping):
            data = data.get('responses')
        if not isinstance(data, list) or not all(
                isinstance(r, str) for r in data):
            raise ValueError(f'{path}: transcript must be a list of strings')
        return cls(data)

    @property
    def remaining(self) -> int:
        return max(len(self.responses) - self.calls, 0)

    async def complete(self, messages: Sequence[Mapping[str, str]],
                       options: ChatOptions) -> str:
        if self.calls >= len(self.responses):
            raise BackendError(BackendErrorKind.BAD_RESPONSE,
                               f'script exhausted after {self.calls} '
                               'responses')
        response = self.responses[self.calls]
        self.calls += 1
        return response
