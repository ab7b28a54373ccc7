"""Statistical baseline labeler: assigns gestures from a label distribution.

No similarity scores are computed. Gestures are drawn from the ground-truth
gesture frequencies, window sizes from a per-gesture Gaussian rounded to the
nearest integer, and label scores uniformly from (th0, 1]. A Bernoulli scan
with rate q (labels per token in the ground truth) decides where labels start,
which reproduces the target label density and can never overlap.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .core import EngineConfig, LabelSpan, TokenizedSentence, ValidationError


@dataclass(frozen=True)
class BaselineStats:
    """Label distribution extracted from ground truth (or supplied manually)."""

    gesture_probs: dict[str, float]
    window_mean: dict[str, float]
    window_std: dict[str, float]
    start_rate: float

    def __post_init__(self) -> None:
        total = sum(self.gesture_probs.values())
        if self.gesture_probs and abs(total - 1.0) > 1e-9:
            raise ValidationError(f"gesture probabilities sum to {total}, expected 1")
        for gid, prob in self.gesture_probs.items():
            if prob < 0:
                raise ValidationError(f"negative probability for gesture {gid!r}")
            if prob > 0 and gid not in self.window_mean:
                raise ValidationError(f"gesture {gid!r} has probability but no window mean")
        for gid, mean in self.window_mean.items():
            if mean < 1:
                raise ValidationError(f"window mean for {gid!r} must be >= 1, got {mean}")
        for gid, std in self.window_std.items():
            if std < 0:
                raise ValidationError(f"window std for {gid!r} must be >= 0, got {std}")
        if not 0.0 <= self.start_rate <= 1.0:
            raise ValidationError(f"start rate must be in [0, 1], got {self.start_rate}")

    def to_dict(self) -> dict:
        return {
            "gesture_probs": dict(self.gesture_probs),
            "window_mean": dict(self.window_mean),
            "window_std": dict(self.window_std),
            "start_rate": self.start_rate,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BaselineStats":
        try:
            return cls(
                gesture_probs=dict(data["gesture_probs"]),
                window_mean=dict(data["window_mean"]),
                window_std=dict(data["window_std"]),
                start_rate=float(data["start_rate"]),
            )
        except KeyError as exc:
            raise ValidationError(f"stats file missing key {exc}")


def load_stats(path: str | Path) -> BaselineStats:
    try:
        with open(path, encoding="utf-8") as fh:
            return BaselineStats.from_dict(json.load(fh))
    except FileNotFoundError:
        raise ValidationError(f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})")


def save_stats(stats: BaselineStats, path: str | Path, extra: dict | None = None) -> None:
    payload = stats.to_dict()
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def derive_stats(
    gt: list[LabelSpan], corpus: list[TokenizedSentence]
) -> BaselineStats:
    """Gesture frequencies, per-gesture window mean/std and label density from gt.

    Window std is the population standard deviation (a single sample has
    std 0); the start rate is total labels over total corpus tokens.
    """
    if not gt:
        raise ValidationError("cannot derive stats from empty ground truth")
    by_id = {s.id: s for s in corpus}
    for span in gt:
        if span.sentence_id not in by_id:
            raise ValidationError(
                f"ground-truth span references unknown sentence {span.sentence_id!r}"
            )
    windows: dict[str, list[int]] = {}
    for span in gt:
        windows.setdefault(span.gesture_id, []).append(span.length)
    total = len(gt)
    gesture_probs = {gid: len(ws) / total for gid, ws in sorted(windows.items())}
    window_mean = {}
    window_std = {}
    for gid, ws in sorted(windows.items()):
        mean = sum(ws) / len(ws)
        window_mean[gid] = mean
        window_std[gid] = math.sqrt(sum((w - mean) ** 2 for w in ws) / len(ws))
    total_tokens = sum(s.n for s in corpus)
    start_rate = total / total_tokens if total_tokens else 0.0
    return BaselineStats(
        gesture_probs=gesture_probs,
        window_mean=window_mean,
        window_std=window_std,
        start_rate=min(start_rate, 1.0),
    )


def fallback_stats(gesture_ids: list[str], start_rate: float = 0.05) -> BaselineStats:
    """Uniform gesture distribution with window mean 3 and std 1, for use
    when no ground truth exists."""
    if not gesture_ids:
        raise ValidationError("fallback stats require at least one gesture")
    prob = 1.0 / len(gesture_ids)
    return BaselineStats(
        gesture_probs={gid: prob for gid in gesture_ids},
        window_mean={gid: 3.0 for gid in gesture_ids},
        window_std={gid: 1.0 for gid in gesture_ids},
        start_rate=start_rate,
    )


def sentence_rng(seed: int, sentence_id: str) -> random.Random:
    """RNG derived from (seed, sentence id): output is independent of corpus
    order and stable across platforms (no salted hashing)."""
    digest = hashlib.sha256(f"{seed}|{sentence_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _round_half_away(value: float) -> int:
    if value >= 0:
        return math.floor(value + 0.5)
    return math.ceil(value - 0.5)


def label_baseline(
    sentence: TokenizedSentence,
    stats: BaselineStats,
    config: EngineConfig,
) -> list[LabelSpan]:
    """Scan the sentence, starting a label with probability q at each position.

    Gesture ~ Categorical(gesture_probs); window ~ round(Normal(mean, std))
    clamped to [1, min(w_max, remaining)]; score ~ Uniform over (th0, 1].
    Never calls a similarity backend.
    """
    rng = sentence_rng(config.seed, sentence.id)
    gestures = [(gid, prob) for gid, prob in stats.gesture_probs.items() if prob > 0]
    if not gestures:
        return []
    labels: list[LabelSpan] = []
    j = 0
    while j < sentence.n:
        if rng.random() >= stats.start_rate:
            j += 1
            continue
        pick = rng.random()
        cumulative = 0.0
        gesture_id = gestures[-1][0]
        for gid, prob in gestures:
            cumulative += prob
            if pick < cumulative:
                gesture_id = gid
                break
        mean = stats.window_mean[gesture_id]
        std = stats.window_std.get(gesture_id, 0.0)
        win = _round_half_away(rng.normalvariate(mean, std))
        win = max(1, min(win, config.w_max, sentence.n - j))
        score = config.th0 + (1.0 - config.th0) * (1.0 - rng.random())
        labels.append(
            LabelSpan(
                sentence_id=sentence.id,
                gesture_id=gesture_id,
                start=j,
                length=win,
                score=score,
                source="predicted",
            )
        )
        j += win
    return labels
