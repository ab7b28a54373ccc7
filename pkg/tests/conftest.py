from __future__ import annotations

import hashlib

import pytest

from gestlabel.core import Gesture, ReferenceSet, tokenize
from gestlabel.similarity import SimilarityBackend


def make_refs(spec: dict[str, list[str]], author: str = "test") -> ReferenceSet:
    """ReferenceSet from {gesture_id: [reference sentences]}, insertion order kept."""
    gestures = tuple(
        Gesture(id=gid, name=gid, kind="symbolic") for gid in spec
    )
    return ReferenceSet(gestures=gestures, sentences=dict(spec), author=author)


def make_sentence(text: str, sid: str = "s1"):
    return tokenize(text, sentence_id=sid)


class HashBackend(SimilarityBackend):
    """Deterministic arbitrary scores in [0, 1), derived from the text pair."""

    name = "hash"

    def __init__(self, salt: str = ""):
        self.salt = salt

    def score(self, reference: str, candidate: str) -> float:
        digest = hashlib.sha256(f"{self.salt}|{reference}|{candidate}".encode()).digest()
        return int.from_bytes(digest[:8], "big") / 2.0**64


class CountingBackend(SimilarityBackend):
    """Wrapper counting every scored pair, including batched ones."""

    def __init__(self, inner: SimilarityBackend):
        self.inner = inner
        self.name = inner.name
        self.pair_calls = 0

    def score(self, reference: str, candidate: str) -> float:
        self.pair_calls += 1
        return self.inner.score(reference, candidate)

    def batch_score(self, pairs):
        self.pair_calls += len(pairs)
        return self.inner.batch_score(pairs)


@pytest.fixture
def simple_refs() -> ReferenceSet:
    return make_refs({"A": ["alpha context"], "B": ["beta context"]})
