import asyncio
import json
import unittest

from pystrat.core.exceptions import BackendError, BackendErrorKind
from pystrat.llm import ENV_API_KEY, ChatOptions, HttpBackend


MESSAGES = [{'role': 'system', 'content': 'be brief'},
            {'role': 'user', 'content': 'hello'}]


def completion(text):
    return {
        'id': 'stub-1', 'object': 'chat.completion', 'created': 0,
        'model': 'stub',
        'choices': [{'index': 0, 'finish_reason': 'stop',
                     'message': {'role': 'assistant', 'content': text}}],
    }


def failure(message):
    return {'error': {'message': message, 'type': 'stub'}}


class StubServer:
    """Loopback chat-completions endpoint replaying canned replies."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.requests = []
        self.server = None

    async def start(self):
        self.server = await asyncio.start_server(self.handle, '127.0.0.1', 0)
        return self

    async def stop(self):
        self.server.close()
        await self.server.wait_closed()

    @property
    def endpoint(self):
        port = self.server.sockets[0].getsockname()[1]
        return f'http://127.0.0.1:{port}/v1'

    async def handle(self, reader, writer):
        try:
            head = await reader.readuntil(b'\r\n\r\n')
            request, *lines = head.decode('latin-1').split('\r\n')
            headers = {}
            for line in lines:
                if ':' in line:
                    name, value = line.split(':', 1)
                    headers[name.strip().lower()] = value.strip()
            body = await reader.readexactly(
                int(headers.get('content-length', 0))
            )
            self.requests.append((request, headers, json.loads(body)))

            status, payload, delay = self.replies.pop(0)
            if delay:
                await asyncio.sleep(delay)
            data = json.dumps(payload).encode()
            writer.write(
                f'HTTP/1.1 {status} Stub\r\n'
                'Content-Type: application/json\r\n'
                f'Content-Length: {len(data)}\r\n'
                'Connection: close\r\n\r\n'.encode() + data
            )
            await writer.drain()
        except (asyncio.IncompleteReadError, ConnectionError):
            pass
        finally:
            writer.close()


class HttpBackendTestCase(unittest.IsolatedAsyncioTestCase):
    async def serve(self, *replies, **kwargs):
        self.stub = await StubServer(replies).start()
        self.addAsyncCleanup(self.stub.stop)
        backend = HttpBackend(self.stub.endpoint, 'test-key', 'stub-model',
                              retry_base=0.001, **kwargs)
        self.addAsyncCleanup(backend.aclose)
        return backend

    async def test_complete(self):
        backend = await self.serve((200, completion('pong'), 0))
        options = ChatOptions(temperature=0.3, max_tokens=64)

        self.assertEqual(await backend.complete(MESSAGES, options), 'pong')

        [(request, headers, body)] = self.stub.requests
        self.assertEqual(request, 'POST /v1/chat/completions HTTP/1.1')
        self.assertEqual(headers['authorization'], 'Bearer test-key')
        self.assertEqual(body['model'], 'stub-model')
        self.assertEqual(body['messages'], MESSAGES)
        self.assertEqual(body['temperature'], 0.3)
        self.assertEqual(body['max_tokens'], 64)

    async def test_model_override(self):
        backend = await self.serve((200, completion('pong'), 0))
        await backend.complete(MESSAGES, ChatOptions(model='other'))
        self.assertEqual(self.stub.requests[0][2]['model'], 'other')

    async def test_retry_rate_limit(self):
        backend = await self.serve((429, failure('slow down'), 0),
                                   (429, failure('slow down'), 0),
                                   (200, completion('finally'), 0))

        with self.assertLogs('pystrat.llm.http', 'WARNING') as logs:
            text = await backend.complete(MESSAGES, ChatOptions())
        self.assertEqual(text, 'finally')
        self.assertEqual(len(self.stub.requests), 3)
        self.assertEqual(len(logs.records), 2)

    async def test_auth(self):
        backend = await self.serve((401, failure('bad key'), 0))

        with self.assertRaises(BackendError) as cm:
            await backend.complete(MESSAGES, ChatOptions())
        self.assertIs(cm.exception.kind, BackendErrorKind.AUTH)
        self.assertFalse(cm.exception.retryable)
        self.assertEqual(len(self.stub.requests), 1)

    async def test_transport_exhausted(self):
        backend = await self.serve(*[(503, failure('down'), 0)] * 3)

        with self.assertRaises(BackendError) as cm:
            await backend.complete(MESSAGES, ChatOptions())
        self.assertIs(cm.exception.kind, BackendErrorKind.TRANSPORT)
        self.assertIn('503', cm.exception.detail)
        self.assertEqual(len(self.stub.requests), 3)

    async def test_bad_request(self):
        backend = await self.serve((400, failure('no'), 0))

        with self.assertRaises(BackendError) as cm:
            await backend.complete(MESSAGES, ChatOptions())
        self.assertIs(cm.exception.kind, BackendErrorKind.BAD_RESPONSE)
        self.assertEqual(len(self.stub.requests), 1)

    async def test_empty_choices(self):
        reply = completion('x')
        reply['choices'] = []
        backend = await self.serve((200, reply, 0))

        with self.assertRaises(BackendError) as cm:
            await backend.complete(MESSAGES, ChatOptions())
        self.assertIs(cm.exception.kind, BackendErrorKind.BAD_RESPONSE)

    async def test_timeout(self):
        backend = await self.serve((200, completion('late'), 0.5))

        with self.assertRaises(BackendError) as cm:
            await backend.complete(MESSAGES, ChatOptions(timeout_s=0.05))
        self.assertIs(cm.exception.kind, BackendErrorKind.TIMEOUT)
        self.assertEqual(len(self.stub.requests), 1)

    async def test_connection_refused(self):
        stub = await StubServer([]).start()
        endpoint = stub.endpoint
        await stub.stop()
        backend = HttpBackend(endpoint, 'test-key', max_tries=2,
                              retry_base=0.001)
        self.addAsyncCleanup(backend.aclose)

        with self.assertRaises(BackendError) as cm:
            await backend.complete(MESSAGES, ChatOptions())
        self.assertIs(cm.exception.kind, BackendErrorKind.TRANSPORT)


class FromEnvTestCase(unittest.IsolatedAsyncioTestCase):
    async def test_key_sources(self):
        backend = HttpBackend.from_env(environ={
            ENV_API_KEY: 'mine', 'OPENAI_API_KEY': 'theirs',
            'PYSTRAT_LLM_ENDPOINT': 'http://127.0.0.1:9/v1/',
            'PYSTRAT_LLM_MODEL': 'tiny',
        })
        self.addAsyncCleanup(backend.aclose)
        self.assertEqual(backend.endpoint, 'http://127.0.0.1:9/v1')
        self.assertEqual(backend.model, 'tiny')

        backend = HttpBackend.from_env('http://example.invalid/v1', 'big',
                                       environ={'OPENAI_API_KEY': 'theirs'})
        self.addAsyncCleanup(backend.aclose)
        self.assertEqual(backend.model, 'big')

    async def test_missing_key(self):
        with self.assertRaises(BackendError) as cm:
            HttpBackend.from_env(environ={})
        self.assertIs(cm.exception.kind, BackendErrorKind.AUTH)
