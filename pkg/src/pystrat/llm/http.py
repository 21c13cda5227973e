"""Chat-completions client for real model endpoints."""

from __future__ import annotations

import logging
import os
from collections.abc import Mapping, Sequence
from typing import Any, Self

import backoff
import openai

from ..core.exceptions import BackendError, BackendErrorKind
from ..lib.aio import WorkerPool
from .backend import DEFAULT_MODEL, ChatBackend, ChatOptions


__all__ = [
    'DEFAULT_ENDPOINT', 'ENV_API_KEY', 'ENV_ENDPOINT', 'ENV_MODEL',
    'classify_error', 'HttpBackend',
]


logger = logging.getLogger(__name__)

DEFAULT_ENDPOINT = 'https://api.openai.com/v1'
ENV_API_KEY = 'PYSTRAT_LLM_API_KEY'
ENV_ENDPOINT = 'PYSTRAT_LLM_ENDPOINT'
ENV_MODEL = 'PYSTRAT_LLM_MODEL'


def classify_error(error: openai.OpenAIError) -> BackendError:
    """Maps an SDK exception onto the backend error taxonomy."""

    match error:
        case openai.APITimeoutError():
            kind = BackendErrorKind.TIMEOUT
        case openai.APIConnectionError():
            kind = BackendErrorKind.TRANSPORT
        case openai.AuthenticationError() | openai.PermissionDeniedError():
            kind = BackendErrorKind.AUTH
        case openai.RateLimitError():
            kind = BackendErrorKind.RATE_LIMITED
        case openai.APIStatusError(status_code=status) if status >= 500:
            kind = BackendErrorKind.TRANSPORT
        case _:
            kind = BackendErrorKind.BAD_RESPONSE

    status = getattr(error, 'status_code', None)
    detail = f'HTTP {status}: {error}' if status is not None else str(error)
    return BackendError(kind, detail)


class HttpBackend(ChatBackend):
    """Talks to a chat-completions endpoint.

    Retryable failures (Transport, RateLimited) are retried with
    exponential backoff and full jitter: waits of at most retry_base,
    2 * retry_base, ... seconds, max_tries attempts in all. At most `limit`
    requests are in flight at once.

    Attributes:
        endpoint: Base URL of the API, e.g. https://api.openai.com/v1.
        model: Default model name, used when the options name none.
        limit: Maximum number of requests in flight.
        max_tries: Attempts per request.
        retry_base: First backoff interval in seconds.
    """

    endpoint: str
    model: str
    limit: int
    max_tries: int
    retry_base: float

    def __init__(self, endpoint: str, api_key: str,
                 model: str = DEFAULT_MODEL, *, limit: int = 4,
                 max_tries: int = 3, retry_base: float = 1.0) -> None:
        if not api_key:
            raise BackendError(BackendErrorKind.AUTH, 'no API key given')
        if max_tries < 1:
            raise ValueError(f'Invalid max_tries {max_tries}')

        self.endpoint = endpoint.rstrip('/')
        self.model = model
        self.limit = limit
        self.max_tries = max_tries
        self.retry_base = retry_base
        self._client = openai.AsyncOpenAI(api_key=api_key,
                                          base_url=self.endpoint,
                                          max_retries=0)
        self._pool: WorkerPool | None = None

    @classmethod
    def from_env(cls, endpoint: str | None = None, model: str | None = None,
                 environ: Mapping[str, str] | None = None,
                 **kwargs: Any) -> Self:
        """Builds a backend from the environment.

        The key comes from PYSTRAT_LLM_API_KEY, falling back to
        OPENAI_API_KEY. Explicit endpoint and model arguments take
        precedence over PYSTRAT_LLM_ENDPOINT and PYSTRAT_LLM_MODEL.

        Raises:
            BackendError: Auth, when no key is set.
        """

        environ = os.environ if environ is None else environ
        api_key = environ.get(ENV_API_KEY) or environ.get('OPENAI_API_KEY')
        if not api_key:
            raise BackendError(
                BackendErrorKind.AUTH,
                f'no API key in {ENV_API_KEY} or OPENAI_API_KEY'
            )
        return cls(endpoint or environ.get(ENV_ENDPOINT, DEFAULT_ENDPOINT),
                   api_key,
                   model or environ.get(ENV_MODEL, DEFAULT_MODEL), **kwargs)

    async def _request(self, messages: Sequence[Mapping[str, str]],
                       options: ChatOptions) -> str:
        try:
            completion = await self._client.chat.completions.create(
                model=options.model or self.model,
                messages=[dict(m) for m in messages],
                temperature=options.temperature,
                max_tokens=options.max_tokens,
                timeout=options.timeout_s,
            )
        except openai.OpenAIError as e:
            raise classify_error(e) from e

        if not completion.choices:
            raise BackendError(BackendErrorKind.BAD_RESPONSE,
                               'response has no choices')
        content = completion.choices[0].message.content
        if content is None:
            raise BackendError(BackendErrorKind.BAD_RESPONSE,
                               'first choice has no content')
        return content

    @staticmethod
    def _on_backoff(details: Mapping[str, Any]) -> None:
        logger.warning('Chat request failed (%s), retry %d in %.2f s',
                       details['exception'], details['tries'],
                       details['wait'])

    async def complete(self, messages: Sequence[Mapping[str, str]],
                       options: ChatOptions) -> str:
        if self._pool is None:
            self._pool = WorkerPool.build(self.limit)

        send = backoff.on_exception(
            backoff.expo, BackendError,
            max_tries=self.max_tries,
            jitter=backoff.full_jitter,
            giveup=lambda e: not e.retryable,
            on_backoff=self._on_backoff,
            logger=None,
            factor=self.retry_base,
        )(self._request)

        result = await self._pool.run(lambda: send(messages, options))
        if result is None:
            raise BackendError(BackendErrorKind.TRANSPORT,
                               'request pool was shut down')
        return result

    async def aclose(self) -> None:
        if self._pool is not None:
            self._pool.abort.set()
        await self._client.close()
