"""HTTP server for the oracle wire protocol.

All three endpoints are POST with JSON bodies; errors come back as
non-200 with {"error": str}. Requests are logged to stderr with ids.
Handlers are stateless per request, so the threading server is safe; the
backend is initialized once and shared read-only.
"""

from __future__ import annotations

import itertools
import json
import sys
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .stub import ENDPOINTS


class ShimError(RuntimeError):
    pass


class _Handler(BaseHTTPRequestHandler):
    backend = None
    _rid = itertools.count(1)

    def log_message(self, *args):
        pass  # replaced by the structured line in do_POST

    def do_POST(self):
        rid = f"req-{next(self._rid)}"
        t0 = time.perf_counter()
        status, payload = self._dispatch()
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)
        ms = (time.perf_counter() - t0) * 1000.0
        print(f"[{rid}] POST {self.path} -> {status} ({ms:.1f} ms)",
              file=sys.stderr, flush=True)

    def _dispatch(self):
        if self.path not in ENDPOINTS:
            return 404, {"error": f"unknown endpoint {self.path}"}
        try:
            length = int(self.headers.get("Content-Length", 0))
            body = json.loads(self.rfile.read(length))
            if not isinstance(body, dict):
                raise ValueError("body must be a JSON object")
        except (ValueError, json.JSONDecodeError) as e:
            return 400, {"error": f"malformed request body: {e}"}
        try:
            return 200, self.backend.handle(self.path, body)
        except LookupError as e:
            return 404, {"error": str(e)}
        except (KeyError, ValueError) as e:
            return 400, {"error": f"bad request: {e}"}
        except Exception as e:  # model failures must not kill the server
            return 500, {"error": f"backend failure: {e}"}


def make_server(backend, port: int = 0, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    handler = type("Handler", (_Handler,), {"backend": backend})
    return ThreadingHTTPServer((host, port), handler)


def serve(backend, port: int, host: str = "127.0.0.1") -> None:
    """Run until interrupted."""
    try:
        server = make_server(backend, port=port, host=host)
    except OSError as e:
        raise ShimError(f"cannot bind {host}:{port}: {e}") from e
    host, bound = server.server_address
    print(f"eqa-shim listening on http://{host}:{bound}", file=sys.stderr,
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
