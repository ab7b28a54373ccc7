"""Domain model: gestures, reference sets, tokenized sentences and label spans.

Everything in this module is immutable after construction and free of I/O,
so all operations are safe to call concurrently. Tokenization is plain
whitespace splitting with punctuation kept attached to the word, which is
the granularity annotators see and select.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

# Bumped whenever tokenize() changes behaviour. Label files produced under
# different tokenizer versions are not comparable (token indices shift).
TOKENIZER_VERSION = "ws-1"

GESTURE_KINDS = ("symbolic", "deictic")
LABEL_SOURCES = ("predicted", "ground_truth")
CHECK1_MODES = ("drop", "paper_literal")


class GestureLabelError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GestureLabelError, ValueError):
    """Invalid input data or violated precondition (CLI exit code 2)."""


class BackendError(GestureLabelError):
    """Similarity backend failure (CLI exit code 3)."""


@dataclass(frozen=True)
class Gesture:
    """One gesture identity: a stable id, a display name and its kind."""

    id: str
    name: str
    kind: str
    description: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("gesture id must be non-empty")
        if self.kind not in GESTURE_KINDS:
            raise ValidationError(
                f"gesture {self.id!r}: kind must be one of {GESTURE_KINDS}, got {self.kind!r}"
            )


@dataclass(frozen=True)
class ReferenceSet:
    """Gestures plus the reference sentences that encode their contexts.

    Gesture order is significant: it is the tie-breaking order used by
    rank_candidates, so two runs with the same file always agree.
    """

    gestures: tuple[Gesture, ...]
    sentences: dict[str, tuple[str, ...]]
    author: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "gestures", tuple(self.gestures))
        object.__setattr__(
            self, "sentences", {gid: tuple(refs) for gid, refs in self.sentences.items()}
        )
        seen: set[str] = set()
        for g in self.gestures:
            if g.id in seen:
                raise ValidationError(f"duplicate gesture id {g.id!r}")
            seen.add(g.id)
        for g in self.gestures:
            refs = self.sentences.get(g.id, ())
            if not refs:
                raise ValidationError(f"gesture {g.id!r} has no reference sentences")
            if any(not s for s in refs):
                raise ValidationError(f"gesture {g.id!r} has an empty reference sentence")
        unknown = set(self.sentences) - seen
        if unknown:
            raise ValidationError(f"reference sentences for unknown gestures: {sorted(unknown)}")
        # Shared reference sentences break the distinct-contexts assumption,
        # but only weaken scoring; warn instead of rejecting.
        by_text: dict[str, str] = {}
        for g in self.gestures:
            for s in self.sentences[g.id]:
                if s in by_text and by_text[s] != g.id:
                    warnings.warn(
                        f"reference sentence {s!r} shared by gestures "
                        f"{by_text[s]!r} and {g.id!r}",
                        stacklevel=2,
                    )
                by_text.setdefault(s, g.id)

    @property
    def k(self) -> int:
        return len(self.gestures)

    def gesture_ids(self) -> list[str]:
        return [g.id for g in self.gestures]

    def refs_for(self, gesture_id: str) -> tuple[str, ...]:
        return self.sentences[gesture_id]

    def restricted_to(self, gesture_id: str) -> "ReferenceSet":
        """A copy containing a single gesture (used by window calibration)."""
        for g in self.gestures:
            if g.id == gesture_id:
                return ReferenceSet(
                    gestures=(g,),
                    sentences={g.id: self.sentences[g.id]},
                    author=self.author,
                )
        raise ValidationError(f"unknown gesture id {gesture_id!r}")


@dataclass(frozen=True)
class TokenizedSentence:
    """A sentence as an ordered word sequence."""

    id: str
    text: str
    tokens: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.tokens)


def tokenize(text: str, sentence_id: str = "") -> TokenizedSentence:
    """Split text into maximal runs of non-whitespace characters.

    Punctuation stays attached and casing is preserved, so "I'm" is a single
    token. Re-tokenizing the space-joined tokens is idempotent.
    """
    return TokenizedSentence(id=sentence_id, text=text, tokens=tuple(text.split()))


def span_text(sentence: TokenizedSentence, start: int, win: int) -> str:
    """The `win` consecutive tokens starting at `start`, joined by single spaces."""
    if win < 1:
        raise ValidationError(f"window must be >= 1, got {win}")
    if start < 0 or start + win > sentence.n:
        raise ValidationError(
            f"span [{start}, {start + win}) exceeds sentence {sentence.id!r} of {sentence.n} tokens"
        )
    return " ".join(sentence.tokens[start : start + win])


@dataclass(frozen=True)
class LabelSpan:
    """One label: a gesture assigned to `length` tokens starting at `start`."""

    sentence_id: str
    gesture_id: str
    start: int
    length: int
    score: float
    source: str = "predicted"
    ref_sentence_index: int | None = None
    annotator_id: str | None = None

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValidationError(f"span start must be >= 0, got {self.start}")
        if self.length < 1:
            raise ValidationError(f"span length must be >= 1, got {self.length}")
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"span score must be in [0, 1], got {self.score}")
        if self.source not in LABEL_SOURCES:
            raise ValidationError(f"span source must be one of {LABEL_SOURCES}")

    @property
    def end(self) -> int:
        return self.start + self.length

    def token_indices(self) -> range:
        return range(self.start, self.end)

    def overlaps(self, other: "LabelSpan") -> bool:
        return self.sentence_id == other.sentence_id and (
            self.start < other.end and other.start < self.end
        )


@dataclass(frozen=True)
class Candidate:
    """A scored (gesture, reference, window, position) combination."""

    score: float
    gesture_index: int
    ref_index: int
    win: int
    start: int = 0


def _rank_key(c: Candidate) -> tuple:
    # Total order: higher score wins; ties fall through gesture order, then
    # reference order, then smaller window. Start is a last resort so the
    # order stays total on arbitrary candidate lists.
    return (-c.score, c.gesture_index, c.ref_index, c.win, c.start)


def rank_candidates(candidates: list[Candidate]) -> Candidate:
    """The best candidate under the deterministic total order.

    Higher score first; ties broken by smaller gesture index, then smaller
    reference index, then smaller window. Independent of input order.
    """
    if not candidates:
        raise ValidationError("rank_candidates requires a non-empty candidate list")
    return min(candidates, key=_rank_key)


def better_candidate(a: Candidate, b: Candidate) -> bool:
    """True when `a` strictly precedes `b` under the rank_candidates order."""
    return _rank_key(a) < _rank_key(b)


@dataclass(frozen=True)
class EngineConfig:
    """Thresholds and knobs shared by the labeling algorithms.

    th0 is the minimum accepted score (strict), th1 the context-change
    rejection margin of the moving-window check, p its retry budget.
    check1_mode selects the direction of the context-change test: "drop"
    rejects when expanding the window makes the score fall by more than th1,
    "paper_literal" rejects when it rises by more than th1.
    """

    th0: float = 0.3
    th1: float = 0.3
    p: int = 3
    w_max: int = 10
    seed: int = 0
    check1_mode: str = "drop"
    iou_valid_min: float = 0.5
    score_min: float = 0.5
    prefetch: bool = True

    def __post_init__(self) -> None:
        for name in ("th0", "th1", "iou_valid_min", "score_min"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {value}")
        if self.p < 1:
            raise ValidationError(f"p must be >= 1, got {self.p}")
        if self.w_max < 1:
            raise ValidationError(f"w_max must be >= 1, got {self.w_max}")
        if self.check1_mode not in CHECK1_MODES:
            raise ValidationError(f"check1_mode must be one of {CHECK1_MODES}")

    def to_dict(self) -> dict:
        return {
            "th0": self.th0,
            "th1": self.th1,
            "p": self.p,
            "w_max": self.w_max,
            "seed": self.seed,
            "check1_mode": self.check1_mode,
            "iou_valid_min": self.iou_valid_min,
            "score_min": self.score_min,
            "prefetch": self.prefetch,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        known = set(cls().to_dict())
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def group_key(span: LabelSpan) -> tuple:
    """Spans sharing this key must be pairwise non-overlapping."""
    return (span.sentence_id, span.source, span.annotator_id)


def check_no_overlap(spans: list[LabelSpan]) -> None:
    """Raise if any two spans in the same (sentence, source, annotator) group overlap."""
    groups: dict[tuple, list[LabelSpan]] = {}
    for span in spans:
        groups.setdefault(group_key(span), []).append(span)
    for key, members in groups.items():
        ordered = sorted(members, key=lambda s: s.start)
        for prev, cur in zip(ordered, ordered[1:]):
            if cur.start < prev.end:
                raise ValidationError(
                    f"overlapping spans in sentence {key[0]!r} "
                    f"({key[1]}, annotator {key[2]!r}): "
                    f"[{prev.start}, {prev.end}) and [{cur.start}, {cur.end})"
                )
