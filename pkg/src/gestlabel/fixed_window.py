"""Fixed-window labeling and the offline per-gesture window calibration.

Each gesture carries one precomputed window size. At every position the
labeler scores that single window per gesture, accepts the best candidate
when it clears th0, and otherwise advances one token. Calibration sweeps
every (gesture, window) pair over a corpus in isolation and keeps, per
gesture, the window maximizing mean(v*) - std(v*) over the accepted scores,
provided at least `min_count` scores were collected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    Candidate,
    EngineConfig,
    LabelSpan,
    ReferenceSet,
    TokenizedSentence,
    ValidationError,
    rank_candidates,
)
from .similarity import ScoreCache, SimilarityBackend, cached_score


@dataclass(frozen=True)
class WindowDiagnostic:
    """Outcome of one (gesture, window) calibration sweep."""

    count: int
    mean: float | None
    std: float | None
    score: float | None

    def to_dict(self) -> dict:
        return {"count": self.count, "mean": self.mean, "std": self.std, "score": self.score}


@dataclass(frozen=True)
class WindowTable:
    """Per-gesture window sizes; None marks gestures left uncalibrated."""

    windows: dict[str, int | None]
    diagnostics: dict[str, dict[int, WindowDiagnostic]] = field(default_factory=dict)
    uncalibrated: dict[str, str] = field(default_factory=dict)

    def window_for(self, gesture_id: str) -> int | None:
        return self.windows.get(gesture_id)

    def to_dict(self) -> dict:
        return {
            "windows": dict(self.windows),
            "diagnostics": {
                gid: {str(win): diag.to_dict() for win, diag in sorted(per_win.items())}
                for gid, per_win in self.diagnostics.items()
            },
            "uncalibrated": dict(self.uncalibrated),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WindowTable":
        windows = {}
        for gid, win in data.get("windows", {}).items():
            if win is not None and (not isinstance(win, int) or win < 1):
                raise ValidationError(f"window for {gid!r} must be a positive integer or null")
            windows[gid] = win
        diagnostics = {
            gid: {
                int(win): WindowDiagnostic(
                    count=diag["count"],
                    mean=diag.get("mean"),
                    std=diag.get("std"),
                    score=diag.get("score"),
                )
                for win, diag in per_win.items()
            }
            for gid, per_win in data.get("diagnostics", {}).items()
        }
        return cls(
            windows=windows,
            diagnostics=diagnostics,
            uncalibrated=dict(data.get("uncalibrated", {})),
        )


def load_window_table(path: str | Path) -> WindowTable:
    try:
        with open(path, encoding="utf-8") as fh:
            return WindowTable.from_dict(json.load(fh))
    except FileNotFoundError:
        raise ValidationError(f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})")


def save_window_table(table: WindowTable, path: str | Path, extra: dict | None = None) -> None:
    payload = table.to_dict()
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def label_fixed(
    sentence: TokenizedSentence,
    refs: ReferenceSet,
    table: WindowTable,
    config: EngineConfig,
    backend: SimilarityBackend,
    cache: ScoreCache | None = None,
) -> list[LabelSpan]:
    """Label one sentence with each gesture's fixed window size.

    Gestures without a calibrated window, or whose window does not fit at the
    current position, are skipped. A best score not strictly above th0
    advances the position by one token.
    """
    if cache is None:
        cache = ScoreCache()
    gestures = [
        (gi, g, table.window_for(g.id))
        for gi, g in enumerate(refs.gestures)
        if table.window_for(g.id) is not None
    ]
    labels: list[LabelSpan] = []
    j = 0
    while j < sentence.n:
        candidates: list[Candidate] = []
        for gi, gesture, win in gestures:
            if j + win > sentence.n:
                continue
            for ri, ref_text in enumerate(refs.sentences[gesture.id]):
                value = cached_score(
                    cache, backend, (gesture.id, ri), ref_text, sentence, j, win
                )
                candidates.append(
                    Candidate(score=value, gesture_index=gi, ref_index=ri, win=win, start=j)
                )
        if not candidates:
            j += 1
            continue
        best = rank_candidates(candidates)
        if best.score <= config.th0:
            j += 1
            continue
        gesture = refs.gestures[best.gesture_index]
        labels.append(
            LabelSpan(
                sentence_id=sentence.id,
                gesture_id=gesture.id,
                start=j,
                length=best.win,
                score=best.score,
                source="predicted",
                ref_sentence_index=best.ref_index,
            )
        )
        j += best.win
    return labels


def _population_std(values: list[float], mean: float) -> float:
    return math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))


def calibrate_windows(
    corpus: list[TokenizedSentence],
    refs: ReferenceSet,
    config: EngineConfig,
    backend: SimilarityBackend,
    cache: ScoreCache | None = None,
    min_count: int = 10,
) -> WindowTable:
    """Sweep every (gesture, window) pair over the corpus in isolation.

    For each pair the fixed-window labeler runs with only that gesture and
    that window; the accepted scores' mean minus population std ranks the
    windows. A window needs at least `min_count` accepted scores to be valid;
    ties prefer the smaller window. Deterministic for fixed inputs.
    """
    if not corpus:
        raise ValidationError("calibration requires a non-empty corpus")
    if cache is None:
        cache = ScoreCache()
    windows: dict[str, int | None] = {}
    diagnostics: dict[str, dict[int, WindowDiagnostic]] = {}
    uncalibrated: dict[str, str] = {}
    for gesture in refs.gestures:
        isolated = refs.restricted_to(gesture.id)
        per_win: dict[int, WindowDiagnostic] = {}
        best_win: int | None = None
        best_score: float | None = None
        for win in range(1, config.w_max + 1):
            forced = WindowTable(windows={gesture.id: win})
            accepted: list[float] = []
            for sentence in corpus:
                spans = label_fixed(sentence, isolated, forced, config, backend, cache)
                accepted.extend(span.score for span in spans)
            if accepted:
                mean = sum(accepted) / len(accepted)
                std = _population_std(accepted, mean)
                score = mean - std
                per_win[win] = WindowDiagnostic(
                    count=len(accepted), mean=mean, std=std, score=score
                )
            else:
                per_win[win] = WindowDiagnostic(count=0, mean=None, std=None, score=None)
                continue
            if len(accepted) < min_count:
                continue
            if best_score is None or score > best_score:
                best_win, best_score = win, score
        diagnostics[gesture.id] = per_win
        windows[gesture.id] = best_win
        if best_win is None:
            uncalibrated[gesture.id] = (
                f"no window size collected at least {min_count} accepted scores"
            )
    return WindowTable(windows=windows, diagnostics=diagnostics, uncalibrated=uncalibrated)
