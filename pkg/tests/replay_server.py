"""Minimal in-process HTTP server that replays the protocol conformance
fixtures, for exercising the remote oracle client without any shim build."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

FIXTURE_DIR = Path(__file__).parent.parent / "fixtures" / "oracle-protocol"


def load_fixtures(path=FIXTURE_DIR) -> list[dict]:
    return [json.loads(p.read_text(encoding="utf-8"))
            for p in sorted(Path(path).glob("*.json"))]


class _Handler(BaseHTTPRequestHandler):
    fixtures: list = []
    fail_first: dict = {}

    def log_message(self, *args):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            body = json.loads(raw)
        except json.JSONDecodeError:
            self._send(400, {"error": "invalid JSON"})
            return
        remaining = self.fail_first.get(self.path, 0)
        if remaining > 0:
            self.fail_first[self.path] = remaining - 1
            self._send(500, {"error": "transient"})
            return
        for fx in self.fixtures:
            if fx["endpoint"] == self.path and fx["request"] == body:
                self._send(200, fx["response"])
                return
        self._send(404, {"error": f"no fixture for {self.path} with this body"})

    def _send(self, status: int, payload: dict):
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class ReplayServer:
    def __init__(self, fixtures=None, fail_first=None):
        handler = type("Handler", (_Handler,), {
            "fixtures": fixtures if fixtures is not None else load_fixtures(),
            "fail_first": dict(fail_first or {}),
        })
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    def __enter__(self) -> str:
        self._thread.start()
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)
