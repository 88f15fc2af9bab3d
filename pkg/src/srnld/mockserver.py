"""A local chat-completion endpoint for tests and offline demos.

``MockEndpoint`` serves ``POST /v1/chat/completions`` (any path works) on an
ephemeral port, records every call and the peak number of requests in flight,
and answers through a pluggable responder::

    with MockEndpoint(delay=0.05) as mock:
        run_batch(prompts, manifest_with(mock.url))
        assert mock.peak_in_flight <= 3

Run ``python -m srnld.mockserver --port 8808`` for a standalone echo server.
"""

from __future__ import annotations

import argparse
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Optional, Union

Reply = tuple[int, Union[dict, str]]
Responder = Callable[[str, int], Reply]


def chat_reply(content: str) -> dict:
    return {
        "id": "mock",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
    }


def echo(prompt: str, call: int) -> Reply:
    return 200, chat_reply(prompt)


def fail_first(n: int, status: int = 429, then: Responder = echo) -> Responder:
    """Answer ``status`` to the first ``n`` calls, then defer to ``then``."""

    def responder(prompt: str, call: int) -> Reply:
        if call < n:
            return status, {"error": {"message": f"mock failure {call}"}}
        return then(prompt, call)

    return responder


def fail_when(predicate: Callable[[str], bool], status: int = 500, then: Responder = echo) -> Responder:
    def responder(prompt: str, call: int) -> Reply:
        if predicate(prompt):
            return status, {"error": {"message": "mock failure"}}
        return then(prompt, call)

    return responder


class MockEndpoint:
    def __init__(self, responder: Responder = echo, delay: float = 0.0, host: str = "127.0.0.1", port: int = 0):
        self.responder = responder
        self.delay = delay
        self.calls = 0
        self.requests: list[dict] = []
        self.in_flight = 0
        self.peak_in_flight = 0
        self._lock = threading.Lock()
        self._server = ThreadingHTTPServer((host, port), self._handler_class())
        self._server.daemon_threads = True
        self._thread: Optional[threading.Thread] = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/v1/chat/completions"

    def _handler_class(self):
        mock = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                with mock._lock:
                    call = mock.calls
                    mock.calls += 1
                    mock.in_flight += 1
                    mock.peak_in_flight = max(mock.peak_in_flight, mock.in_flight)
                try:
                    try:
                        body = json.loads(raw)
                        prompt = body["messages"][-1]["content"]
                    except (ValueError, KeyError, IndexError, TypeError):
                        body, prompt = {}, ""
                    with mock._lock:
                        mock.requests.append({"body": body, "auth": self.headers.get("Authorization")})
                    if mock.delay:
                        time.sleep(mock.delay)
                    status, payload = mock.responder(prompt, call)
                finally:
                    with mock._lock:
                        mock.in_flight -= 1
                data = payload if isinstance(payload, str) else json.dumps(payload)
                encoded = data.encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(encoded)))
                self.end_headers()
                self.wfile.write(encoded)

        return Handler

    def start(self) -> "MockEndpoint":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "MockEndpoint":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description="Serve a local echo chat-completion endpoint.")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8808)
    parser.add_argument("--delay", type=float, default=0.0)
    args = parser.parse_args(argv)
    mock = MockEndpoint(delay=args.delay, host=args.host, port=args.port)
    print(f"mock endpoint listening on {mock.url}", flush=True)
    try:
        mock._server.serve_forever()
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
