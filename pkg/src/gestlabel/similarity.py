"""Pluggable semantic-similarity scoring: backends, memoization and accounting.

A backend maps an ordered (reference, candidate) string pair to a score in
[0, 1] and must be deterministic. Scores are memoized positionally, keyed by
(reference id, sentence id, start, window), so the cache's miss counter is a
hardware-independent measure of how much model work a labeling run required.
"""

from __future__ import annotations

import json
import string
import threading
import time
import urllib.error
import urllib.request
from pathlib import Path

from .core import BackendError, TokenizedSentence, ValidationError, span_text

# (reference id, sentence id, start, window size)
CacheKey = tuple


class BackendUnavailableError(BackendError):
    """The scoring service could not be reached after retrying."""


class ProtocolError(BackendError):
    """The scoring service answered with a malformed or invalid response."""


class SimilarityBackend:
    """Deterministic ordered-pair scorer; scores are always in [0, 1]."""

    name = "backend"

    def score(self, reference: str, candidate: str) -> float:
        raise NotImplementedError

    def batch_score(self, pairs: list[tuple[str, str]]) -> list[float]:
        """One score per pair, in order. Default loops over score()."""
        return [self.score(reference, candidate) for reference, candidate in pairs]


_STRIP_CHARS = string.punctuation + string.whitespace


def _normalized_token_set(text: str) -> frozenset[str]:
    tokens = (token.lower().strip(_STRIP_CHARS) for token in text.split())
    return frozenset(token for token in tokens if token)


def jaccard_score(reference: str, candidate: str) -> float:
    """Token-set Jaccard overlap after lowercasing and punctuation stripping.

    Both sides empty scores 1.0, exactly one side empty scores 0.0.
    """
    a = _normalized_token_set(reference)
    b = _normalized_token_set(candidate)
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


class JaccardBackend(SimilarityBackend):
    """Deterministic lexical stand-in used when no model service is available."""

    name = "jaccard"

    def score(self, reference: str, candidate: str) -> float:
        return jaccard_score(reference, candidate)


class ScriptedBackend(SimilarityBackend):
    """Exact lookup over a fixed (reference, candidate) -> score table.

    Pairs are ordered; a missing pair returns the configured default.
    """

    name = "scripted"

    def __init__(self, table: dict[tuple[str, str], float], default: float = 0.0):
        for (reference, candidate), value in table.items():
            if not 0.0 <= value <= 1.0:
                raise ValidationError(
                    f"scripted score for ({reference!r}, {candidate!r}) "
                    f"out of range: {value}"
                )
        if not 0.0 <= default <= 1.0:
            raise ValidationError(f"scripted default score out of range: {default}")
        self.table = dict(table)
        self.default = default

    @classmethod
    def from_json(cls, path: str | Path) -> "ScriptedBackend":
        """Load {"default": float, "pairs": [[ref, cand, score], ...]}."""
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ValidationError(f"file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})")
        pairs = data.get("pairs", [])
        table = {}
        for i, entry in enumerate(pairs):
            if not (isinstance(entry, list) and len(entry) == 3):
                raise ValidationError(f"{path}: pairs[{i}] must be [reference, candidate, score]")
            reference, candidate, value = entry
            table[(str(reference), str(candidate))] = float(value)
        try:
            return cls(table, default=float(data.get("default", 0.0)))
        except ValidationError as exc:
            raise ValidationError(f"{path}: {exc}")

    def score(self, reference: str, candidate: str) -> float:
        return self.table.get((reference, candidate), self.default)


class RemoteBackend(SimilarityBackend):
    """Client for a scoring service speaking the POST /similarity protocol.

    Requests are chunked to `batch_size` pairs and retried with exponential
    backoff on connection failures; responses are validated for cardinality
    and score range. A failure after all retries aborts the labeling run.
    """

    name = "remote"

    def __init__(
        self,
        url: str,
        batch_size: int = 64,
        max_retries: int = 4,
        backoff: float = 0.25,
        timeout: float = 30.0,
    ):
        if batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {batch_size}")
        self.url = url.rstrip("/")
        self.batch_size = batch_size
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self.name = f"remote:{self.url}"

    def _post(self, pairs: list[tuple[str, str]]) -> list[float]:
        body = json.dumps({"pairs": [[r, c] for r, c in pairs]}).encode("utf-8")
        request = urllib.request.Request(
            self.url + "/similarity",
            data=body,
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        attempt = 0
        while True:
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as response:
                    payload = response.read()
                break
            except urllib.error.HTTPError as exc:
                if exc.code < 500:
                    raise ProtocolError(f"scoring service rejected the request: HTTP {exc.code}")
                attempt += 1
                if attempt > self.max_retries:
                    raise BackendUnavailableError(
                        f"scoring service {self.url} failing after "
                        f"{self.max_retries} retries: HTTP {exc.code}"
                    )
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            except (urllib.error.URLError, OSError) as exc:
                attempt += 1
                if attempt > self.max_retries:
                    raise BackendUnavailableError(
                        f"scoring service {self.url} unreachable after "
                        f"{self.max_retries} retries: {exc}"
                    )
                time.sleep(self.backoff * (2 ** (attempt - 1)))
        try:
            data = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"scoring service returned invalid JSON: {exc}")
        scores = data.get("scores") if isinstance(data, dict) else None
        if not isinstance(scores, list):
            raise ProtocolError("scoring service response has no 'scores' list")
        if len(scores) != len(pairs):
            raise ProtocolError(
                f"scoring service returned {len(scores)} scores for {len(pairs)} pairs"
            )
        for value in scores:
            if not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
                raise ProtocolError(f"scoring service returned out-of-range score {value!r}")
        return [float(v) for v in scores]

    def score(self, reference: str, candidate: str) -> float:
        return self._post([(reference, candidate)])[0]

    def batch_score(self, pairs: list[tuple[str, str]]) -> list[float]:
        scores: list[float] = []
        for i in range(0, len(pairs), self.batch_size):
            scores.extend(self._post(pairs[i : i + self.batch_size]))
        return scores

    def health(self) -> dict:
        try:
            with urllib.request.urlopen(self.url + "/health", timeout=self.timeout) as response:
                return json.loads(response.read())
        except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
            raise BackendUnavailableError(f"scoring service {self.url} health check failed: {exc}")


class ScoreCache:
    """Positional score memo with hit/miss accounting.

    `misses` equals the number of distinct (reference, span) computations the
    backend performed, which serves as the portable computation-cost measure.
    """

    def __init__(self) -> None:
        self._scores: dict[CacheKey, float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._scores)

    @property
    def calls(self) -> int:
        """Backend invocations; equals misses by the at-most-once contract."""
        return self.misses

    @property
    def total_queries(self) -> int:
        return self.hits + self.misses

    def lookup(self, key: CacheKey) -> float | None:
        with self._lock:
            value = self._scores.get(key)
            if value is not None:
                self.hits += 1
            return value

    def store(self, key: CacheKey, value: float, count: bool = True) -> None:
        with self._lock:
            if key not in self._scores:
                self._scores[key] = value
                if count:
                    self.misses += 1


def cached_score(
    cache: ScoreCache,
    backend: SimilarityBackend,
    ref_id: tuple,
    ref_text: str,
    sentence: TokenizedSentence,
    start: int,
    win: int,
) -> float:
    """Backend score for (reference, span), computed at most once per key."""
    key = (ref_id, sentence.id, start, win)
    value = cache.lookup(key)
    if value is not None:
        return value
    value = backend.score(ref_text, span_text(sentence, start, win))
    cache.store(key, value)
    return value


def prefetch_scores(
    cache: ScoreCache,
    backend: SimilarityBackend,
    items: list[tuple[tuple, str, TokenizedSentence, int, int]],
) -> None:
    """Batch-score every (ref_id, ref_text, sentence, start, win) not yet cached."""
    missing = []
    for ref_id, ref_text, sentence, start, win in items:
        key = (ref_id, sentence.id, start, win)
        if cache.lookup(key) is None:
            missing.append((key, ref_text, sentence, start, win))
    if not missing:
        return
    pairs = [(ref_text, span_text(sentence, start, win)) for _, ref_text, sentence, start, win in missing]
    scores = backend.batch_score(pairs)
    for (key, *_), value in zip(missing, scores):
        cache.store(key, value)
