"""Remote scoring client against a live in-process server."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from gestlabel.similarity import (
    BackendUnavailableError,
    JaccardBackend,
    ProtocolError,
    RemoteBackend,
    ScriptedBackend,
)
from gestlabel.simserver import SimilarityServer


class _MisbehavingHandler(BaseHTTPRequestHandler):
    """Configurable bad server: wrong cardinality, bad range, or 500s."""

    def log_message(self, format, *args):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0"))
        data = json.loads(self.rfile.read(length))
        mode = self.server.mode
        if mode == "flaky":
            self.server.requests += 1
            if self.server.requests <= self.server.failures:
                self.send_response(500)
                self.end_headers()
                return
            payload = {"scores": [0.5] * len(data["pairs"])}
        elif mode == "extra_score":
            payload = {"scores": [0.5] * (len(data["pairs"]) + 1)}
        elif mode == "negative_score":
            payload = {"scores": [-0.1] * len(data["pairs"])}
        else:
            payload = {"nonsense": True}
        body = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class _MisbehavingServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, mode: str, failures: int = 0):
        super().__init__(("127.0.0.1", 0), _MisbehavingHandler)
        self.mode = mode
        self.failures = failures
        self.requests = 0
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self):
        return f"http://127.0.0.1:{self.server_address[1]}"

    def stop(self):
        self.shutdown()
        self.server_close()
        self._thread.join(timeout=5)


def test_batch_scores_match_local_backend():
    with SimilarityServer(JaccardBackend()) as server:
        client = RemoteBackend(server.url)
        pairs = [("hello world", "hello"), ("a b c", "c d"), ("same", "same")]
        remote = client.batch_score(pairs)
        local = JaccardBackend().batch_score(pairs)
        assert remote == local


def test_health_reports_model():
    with SimilarityServer(JaccardBackend(), model_name="test-model") as server:
        assert RemoteBackend(server.url).health() == {"model": "test-model"}


def test_order_preserved_with_small_batches():
    table = {("r", f"c{i}"): i / 10 for i in range(10)}
    with SimilarityServer(ScriptedBackend(table)) as server:
        client = RemoteBackend(server.url, batch_size=3)
        pairs = [("r", f"c{i}") for i in range(10)]
        assert client.batch_score(pairs) == [i / 10 for i in range(10)]


def test_wrong_cardinality_is_protocol_error():
    server = _MisbehavingServer("extra_score")
    try:
        with pytest.raises(ProtocolError, match="2 scores for 1 pairs"):
            RemoteBackend(server.url).batch_score([("a", "b")])
    finally:
        server.stop()


def test_out_of_range_score_is_protocol_error():
    server = _MisbehavingServer("negative_score")
    try:
        with pytest.raises(ProtocolError, match="out-of-range"):
            RemoteBackend(server.url).score("a", "b")
    finally:
        server.stop()


def test_malformed_body_is_protocol_error():
    server = _MisbehavingServer("garbage")
    try:
        with pytest.raises(ProtocolError, match="scores"):
            RemoteBackend(server.url).score("a", "b")
    finally:
        server.stop()


def test_retries_recover_from_transient_failures():
    server = _MisbehavingServer("flaky", failures=2)
    try:
        client = RemoteBackend(server.url, max_retries=3, backoff=0.01)
        assert client.batch_score([("a", "b"), ("c", "d")]) == [0.5, 0.5]
        assert server.requests == 3
    finally:
        server.stop()


def test_gives_up_after_retry_budget():
    server = _MisbehavingServer("flaky", failures=100)
    try:
        client = RemoteBackend(server.url, max_retries=2, backoff=0.01)
        with pytest.raises(BackendUnavailableError):
            client.score("a", "b")
        assert server.requests == 3  # initial try plus two retries
    finally:
        server.stop()


def test_unreachable_endpoint():
    client = RemoteBackend("http://127.0.0.1:1", max_retries=1, backoff=0.01)
    with pytest.raises(BackendUnavailableError):
        client.score("a", "b")
