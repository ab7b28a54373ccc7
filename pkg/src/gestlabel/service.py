"""HTTP service backing the annotation UI and ground-truth collection.

Each annotator gets a seeded session of sentences sampled without
replacement, so assignments are reproducible and resuming is idempotent.
Labels must be submitted sequentially (each new span starts at or after the
end of the last committed span of that sentence); violations return 422 and
are never persisted. Accepted labels are appended to the ground-truth JSONL
file under a single writer lock, one submission at a time.
"""

from __future__ import annotations

import hashlib
import json
import mimetypes
import random
import re
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .core import LabelSpan, ReferenceSet, TokenizedSentence, ValidationError
from .io import label_to_dict


class SubmissionError(ValidationError):
    """Invalid annotation submission (HTTP 422)."""


class NotFoundError(ValidationError):
    """Unknown session or route (HTTP 404)."""


@dataclass
class Session:
    id: str
    annotator_id: str
    sentences: list[TokenizedSentence]
    committed: dict[str, list[LabelSpan]] = field(default_factory=dict)
    submitted: list[str] = field(default_factory=list)

    def sentence_payload(self) -> list[dict]:
        return [{"id": s.id, "text": s.text, "tokens": list(s.tokens)} for s in self.sentences]

    def to_payload(self) -> dict:
        return {
            "session_id": self.id,
            "annotator_id": self.annotator_id,
            "sentences": self.sentence_payload(),
            "total": len(self.sentences),
            "completed": len(self.submitted),
            "submitted": list(self.submitted),
            "labels": {
                sid: [
                    {"gesture_id": l.gesture_id, "start": l.start, "len": l.length}
                    for l in labels
                ]
                for sid, labels in self.committed.items()
            },
        }


class AnnotationState:
    """Session bookkeeping and submission validation, independent of HTTP."""

    def __init__(
        self,
        refs: ReferenceSet,
        corpus: list[TokenizedSentence],
        gt_out: str | Path,
        session_size: int = 30,
        seed: int = 0,
        w_max: int = 10,
    ):
        self.refs = refs
        self.corpus = list(corpus)
        self.by_id = {s.id: s for s in self.corpus}
        self.gt_out = Path(gt_out)
        self.session_size = session_size
        self.seed = seed
        self.w_max = w_max
        self.sessions: dict[str, Session] = {}
        self.by_annotator: dict[str, str] = {}
        self._lock = threading.Lock()
        self._known_gestures = set(refs.gesture_ids())

    def _session_id(self, annotator_id: str) -> str:
        digest = hashlib.sha256(f"{self.seed}|{annotator_id}".encode("utf-8"))
        return digest.hexdigest()[:16]

    def start_session(self, annotator_id: str) -> Session:
        """Create the annotator's session, or return the existing one."""
        if not annotator_id or not isinstance(annotator_id, str):
            raise SubmissionError("annotator_id must be a non-empty string")
        with self._lock:
            existing = self.by_annotator.get(annotator_id)
            if existing is not None:
                return self.sessions[existing]
            rng = random.Random(
                int.from_bytes(
                    hashlib.sha256(f"{self.seed}|{annotator_id}".encode("utf-8")).digest()[:8],
                    "big",
                )
            )
            size = min(self.session_size, len(self.corpus))
            picked = rng.sample(range(len(self.corpus)), size) if size else []
            session = Session(
                id=self._session_id(annotator_id),
                annotator_id=annotator_id,
                sentences=[self.corpus[i] for i in picked],
            )
            self.sessions[session.id] = session
            self.by_annotator[annotator_id] = session.id
            return session

    def get_session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise NotFoundError(f"unknown session {session_id!r}")
        return session

    def next_sentence(self, session_id: str) -> dict:
        session = self.get_session(session_id)
        with self._lock:
            done = set(session.submitted)
            for index, sentence in enumerate(session.sentences):
                if sentence.id not in done:
                    return {
                        "done": False,
                        "index": index,
                        "total": len(session.sentences),
                        "sentence": {
                            "id": sentence.id,
                            "text": sentence.text,
                            "tokens": list(sentence.tokens),
                        },
                    }
            return {
                "done": True,
                "index": len(session.sentences),
                "total": len(session.sentences),
                "sentence": None,
            }

    def submit_labels(self, session_id: str, sentence_id: str, labels: list[dict]) -> dict:
        """Validate and persist one submission; empty labels mean "no gesture"."""
        session = self.get_session(session_id)
        with self._lock:
            sentence = self.by_id.get(sentence_id)
            if sentence is None or all(s.id != sentence_id for s in session.sentences):
                raise SubmissionError(f"sentence {sentence_id!r} is not part of this session")
            committed = session.committed.get(sentence_id, [])
            cursor = committed[-1].end if committed else 0
            spans: list[LabelSpan] = []
            for i, raw in enumerate(labels):
                if not isinstance(raw, dict):
                    raise SubmissionError(f"labels[{i}] must be an object")
                gesture_id = raw.get("gesture_id")
                start = raw.get("start")
                length = raw.get("len")
                if gesture_id not in self._known_gestures:
                    raise SubmissionError(f"labels[{i}]: unknown gesture {gesture_id!r}")
                if not isinstance(start, int) or not isinstance(length, int):
                    raise SubmissionError(f"labels[{i}]: start and len must be integers")
                if length < 1 or length > self.w_max:
                    raise SubmissionError(
                        f"labels[{i}]: len must be in [1, {self.w_max}], got {length}"
                    )
                if start < 0 or start + length > sentence.n:
                    raise SubmissionError(
                        f"labels[{i}]: span [{start}, {start + length}) exceeds "
                        f"sentence of {sentence.n} tokens"
                    )
                if start < cursor:
                    raise SubmissionError(
                        f"labels[{i}]: span starts at {start} but labels must be "
                        f"sequential (next selectable token is {cursor})"
                    )
                cursor = start + length
                spans.append(
                    LabelSpan(
                        sentence_id=sentence_id,
                        gesture_id=gesture_id,
                        start=start,
                        length=length,
                        score=1.0,
                        source="ground_truth",
                        annotator_id=session.annotator_id,
                    )
                )
            self._append(spans)
            session.committed.setdefault(sentence_id, []).extend(spans)
            if sentence_id not in session.submitted:
                session.submitted.append(sentence_id)
            return {
                "accepted": len(spans),
                "sentence_id": sentence_id,
                "completed": len(session.submitted),
                "total": len(session.sentences),
            }

    def _append(self, spans: list[LabelSpan]) -> None:
        if not spans:
            return
        lines = "".join(
            json.dumps(label_to_dict(span), ensure_ascii=False, sort_keys=True) + "\n"
            for span in spans
        )
        with open(self.gt_out, "a", encoding="utf-8") as fh:
            fh.write(lines)
            fh.flush()

    def progress(self, annotator_id: str) -> dict:
        session_id = self.by_annotator.get(annotator_id)
        if session_id is None:
            raise NotFoundError(f"no session for annotator {annotator_id!r}")
        session = self.sessions[session_id]
        return {
            "annotator_id": annotator_id,
            "session_id": session_id,
            "completed": len(session.submitted),
            "total": len(session.sentences),
        }

    def gestures_payload(self) -> dict:
        return {
            "gestures": [
                {
                    "id": g.id,
                    "name": g.name,
                    "kind": g.kind,
                    "description": g.description,
                }
                for g in self.refs.gestures
            ],
            "w_max": self.w_max,
        }


_SESSION_NEXT = re.compile(r"^/sessions/([0-9a-f]+)/next$")
_SESSION_LABELS = re.compile(r"^/sessions/([0-9a-f]+)/labels$")
_SESSION_GET = re.compile(r"^/sessions/([0-9a-f]+)$")
_PROGRESS = re.compile(r"^/progress/(.+)$")


class _AnnotationHandler(BaseHTTPRequestHandler):
    def log_message(self, format: str, *args) -> None:  # noqa: A002 - stdlib signature
        pass

    def _send_json(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length)
        try:
            data = json.loads(raw) if raw else {}
        except json.JSONDecodeError:
            raise SubmissionError("request body must be valid JSON")
        if not isinstance(data, dict):
            raise SubmissionError("request body must be a JSON object")
        return data

    def _serve_static(self, path: str) -> None:
        ui_dir = self.server.ui_dir
        if ui_dir is None:
            self._send_json(404, {"error": "no UI bundle configured; API only"})
            return
        relative = path.lstrip("/") or "index.html"
        target = (ui_dir / relative).resolve()
        if not str(target).startswith(str(ui_dir.resolve())) or not target.is_file():
            self._send_json(404, {"error": "not found"})
            return
        content_type = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:
        state = self.server.state
        try:
            if self.path == "/gestures":
                self._send_json(200, state.gestures_payload())
                return
            match = _SESSION_NEXT.match(self.path)
            if match:
                self._send_json(200, state.next_sentence(match.group(1)))
                return
            match = _SESSION_GET.match(self.path)
            if match:
                self._send_json(200, state.get_session(match.group(1)).to_payload())
                return
            match = _PROGRESS.match(self.path)
            if match:
                self._send_json(200, state.progress(match.group(1)))
                return
            self._serve_static(self.path)
        except NotFoundError as exc:
            self._send_json(404, {"error": str(exc)})
        except SubmissionError as exc:
            self._send_json(422, {"error": str(exc)})

    def do_POST(self) -> None:
        state = self.server.state
        try:
            if self.path == "/sessions":
                body = self._read_body()
                session = state.start_session(body.get("annotator_id", ""))
                self._send_json(200, session.to_payload())
                return
            match = _SESSION_LABELS.match(self.path)
            if match:
                body = self._read_body()
                sentence_id = body.get("sentence_id")
                labels = body.get("labels")
                if not isinstance(sentence_id, str) or not isinstance(labels, list):
                    raise SubmissionError(
                        "body must be {'sentence_id': str, 'labels': [...]}"
                    )
                self._send_json(200, state.submit_labels(match.group(1), sentence_id, labels))
                return
            self._send_json(404, {"error": "not found"})
        except NotFoundError as exc:
            self._send_json(404, {"error": str(exc)})
        except SubmissionError as exc:
            self._send_json(422, {"error": str(exc)})


class AnnotationServer(ThreadingHTTPServer):
    """Threaded annotation service; use start()/stop() or serve_forever()."""

    daemon_threads = True

    def __init__(
        self,
        state: AnnotationState,
        host: str = "127.0.0.1",
        port: int = 0,
        ui_dir: str | Path | None = None,
    ):
        super().__init__((host, port), _AnnotationHandler)
        self.state = state
        self.ui_dir = Path(ui_dir) if ui_dir is not None else None
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

    def __enter__(self) -> "AnnotationServer":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.stop()
