"""HTTP scoring service speaking the similarity wire protocol.

Hosts any SimilarityBackend behind POST /similarity and GET /health. The
package uses it as the mock server in integration tests; pointing it at a
real cross-encoder backend would make it a production scorer.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .similarity import SimilarityBackend


class _ScoringHandler(BaseHTTPRequestHandler):
    def log_message(self, format: str, *args) -> None:  # noqa: A002 - stdlib signature
        pass

    def _send_json(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:
        if self.path == "/health":
            self._send_json(200, {"model": self.server.model_name})
        else:
            self._send_json(404, {"error": "not found"})

    def do_POST(self) -> None:
        if self.path != "/similarity":
            self._send_json(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length", "0"))
        try:
            data = json.loads(self.rfile.read(length))
        except json.JSONDecodeError:
            self._send_json(400, {"error": "invalid JSON body"})
            return
        pairs = data.get("pairs") if isinstance(data, dict) else None
        if not isinstance(pairs, list) or not all(
            isinstance(p, list) and len(p) == 2 and all(isinstance(s, str) for s in p)
            for p in pairs
        ):
            self._send_json(400, {"error": "body must be {'pairs': [[ref, cand], ...]}"})
            return
        scores = self.server.backend.batch_score([(r, c) for r, c in pairs])
        self._send_json(200, {"scores": scores})


class SimilarityServer(ThreadingHTTPServer):
    """Threaded scoring server; use as a context manager or start()/shutdown()."""

    daemon_threads = True

    def __init__(self, backend: SimilarityBackend, host: str = "127.0.0.1", port: int = 0,
                 model_name: str | None = None):
        super().__init__((host, port), _ScoringHandler)
        self.backend = backend
        self.model_name = model_name or backend.name
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> None:
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "SimilarityServer":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.stop()
