"""Evaluation: token-level IOU, detection-style average precision, timings.

Predictions and ground truth are compared per gesture. IOU pools token
coverage over the whole corpus (micro); AP ranks predictions by score and
greedily matches each to the best unmatched ground-truth span in the same
sentence, counting a true positive when the span IOU clears the validity
threshold. Gestures with no ground truth have undefined AP; gestures with
no covered tokens on either side have undefined IOU. Means skip undefined
entries and the report says which were skipped.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .core import EngineConfig, LabelSpan, ValidationError


def span_iou(a: LabelSpan, b: LabelSpan) -> float:
    """Token-level intersection over union of two spans in the same sentence."""
    if a.sentence_id != b.sentence_id:
        raise ValidationError(
            f"span_iou across sentences: {a.sentence_id!r} vs {b.sentence_id!r}"
        )
    overlap = min(a.end, b.end) - max(a.start, b.start)
    if overlap <= 0:
        return 0.0
    union = max(a.end, b.end) - min(a.start, b.start)
    return overlap / union


def _covered_tokens(spans: list[LabelSpan], gesture_id: str, score_min: float | None) -> set:
    covered = set()
    for span in spans:
        if span.gesture_id != gesture_id:
            continue
        if score_min is not None and span.score < score_min:
            continue
        covered.update((span.sentence_id, t) for t in span.token_indices())
    return covered


def corpus_iou(
    pred: list[LabelSpan],
    gt: list[LabelSpan],
    gesture_id: str,
    score_min: float = 0.5,
) -> float | None:
    """Pooled token IOU for one gesture across the corpus.

    Predictions scoring below score_min are dropped (ground truth is not
    filtered). None when neither side covers any token.
    """
    p = _covered_tokens(pred, gesture_id, score_min)
    g = _covered_tokens(gt, gesture_id, None)
    union = p | g
    if not union:
        return None
    return len(p & g) / len(union)


def average_precision(
    pred: list[LabelSpan],
    gt: list[LabelSpan],
    gesture_id: str,
    iou_min: float = 0.5,
) -> float | None:
    """All-point average precision for one gesture.

    Predictions are ranked by score (ties by sentence id then start) and
    matched greedily to the unmatched same-sentence ground-truth span with
    the highest span IOU; a match below iou_min is a false positive and
    leaves the ground truth available. None when the gesture has no ground
    truth.
    """
    gt_spans = [s for s in gt if s.gesture_id == gesture_id]
    if not gt_spans:
        return None
    predictions = sorted(
        (s for s in pred if s.gesture_id == gesture_id),
        key=lambda s: (-s.score, s.sentence_id, s.start),
    )
    gt_by_sentence: dict[str, list[LabelSpan]] = {}
    for span in gt_spans:
        gt_by_sentence.setdefault(span.sentence_id, []).append(span)
    for spans in gt_by_sentence.values():
        spans.sort(key=lambda s: s.start)
    matched: set[int] = set()
    tp_flags: list[bool] = []
    for prediction in predictions:
        best_iou = 0.0
        best_id: int | None = None
        for candidate in gt_by_sentence.get(prediction.sentence_id, ()):
            if id(candidate) in matched:
                continue
            value = span_iou(prediction, candidate)
            if value > best_iou:
                best_iou = value
                best_id = id(candidate)
        if best_id is not None and best_iou >= iou_min:
            matched.add(best_id)
            tp_flags.append(True)
        else:
            tp_flags.append(False)
    n_gt = len(gt_spans)
    ap = 0.0
    tp_count = 0
    for rank, is_tp in enumerate(tp_flags, start=1):
        if is_tp:
            tp_count += 1
            ap += (1.0 / n_gt) * (tp_count / rank)
    return ap


@dataclass(frozen=True)
class GestureMetrics:
    ap: float | None
    iou: float | None
    n_gt: int
    n_pred: int

    def to_dict(self) -> dict:
        return {"ap": self.ap, "iou": self.iou, "n_gt": self.n_gt, "n_pred": self.n_pred}


@dataclass(frozen=True)
class EvaluationReport:
    """Per-gesture AP/IOU with means, timing and backend-call accounting."""

    per_gesture: dict[str, GestureMetrics]
    mean_ap: float | None
    mean_iou: float | None
    excluded_ap: tuple[str, ...]
    excluded_iou: tuple[str, ...]
    act_mean: float | None
    act_std: float | None
    backend_calls: dict = field(default_factory=dict)
    config_echo: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_gesture": {gid: m.to_dict() for gid, m in self.per_gesture.items()},
            "mean_ap": self.mean_ap,
            "mean_iou": self.mean_iou,
            "excluded_ap": list(self.excluded_ap),
            "excluded_iou": list(self.excluded_iou),
            "act_seconds": {"mean": self.act_mean, "std": self.act_std},
            "backend_calls": dict(self.backend_calls),
            "config": dict(self.config_echo),
        }

    def to_csv(self) -> str:
        """Tabular rendering with AP/IOU in percentages (0-100)."""
        buffer = _io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(["gesture", "ap_pct", "iou_pct", "n_gt", "n_pred"])

        def pct(value: float | None) -> str:
            return "" if value is None else f"{100.0 * value:.2f}"

        for gid, m in self.per_gesture.items():
            writer.writerow([gid, pct(m.ap), pct(m.iou), m.n_gt, m.n_pred])
        writer.writerow(["mean", pct(self.mean_ap), pct(self.mean_iou), "", ""])
        if self.act_mean is not None:
            writer.writerow(["act_seconds", f"{self.act_mean:.6f}", f"{self.act_std:.6f}", "", ""])
        return buffer.getvalue()


def _mean_or_none(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def evaluate(
    pred: list[LabelSpan],
    gt: list[LabelSpan],
    gesture_ids: list[str],
    timings: list[float] | None = None,
    config: EngineConfig | None = None,
    backend_calls: dict | None = None,
) -> EvaluationReport:
    """Assemble the full report over the given gesture inventory.

    Label files mentioning gestures outside the inventory are rejected,
    listing the offenders.
    """
    known = set(gesture_ids)
    offenders = sorted(
        {s.gesture_id for s in pred if s.gesture_id not in known}
        | {s.gesture_id for s in gt if s.gesture_id not in known}
    )
    if offenders:
        raise ValidationError(f"labels reference unknown gestures: {offenders}")
    cfg = config or EngineConfig()
    per_gesture: dict[str, GestureMetrics] = {}
    defined_ap: list[float] = []
    defined_iou: list[float] = []
    excluded_ap: list[str] = []
    excluded_iou: list[str] = []
    for gid in gesture_ids:
        ap = average_precision(pred, gt, gid, iou_min=cfg.iou_valid_min)
        iou = corpus_iou(pred, gt, gid, score_min=cfg.score_min)
        per_gesture[gid] = GestureMetrics(
            ap=ap,
            iou=iou,
            n_gt=sum(1 for s in gt if s.gesture_id == gid),
            n_pred=sum(1 for s in pred if s.gesture_id == gid),
        )
        if ap is None:
            excluded_ap.append(gid)
        else:
            defined_ap.append(ap)
        if iou is None:
            excluded_iou.append(gid)
        else:
            defined_iou.append(iou)
    act_mean = act_std = None
    if timings:
        act_mean = sum(timings) / len(timings)
        act_std = math.sqrt(sum((t - act_mean) ** 2 for t in timings) / len(timings))
    return EvaluationReport(
        per_gesture=per_gesture,
        mean_ap=_mean_or_none(defined_ap),
        mean_iou=_mean_or_none(defined_iou),
        excluded_ap=tuple(excluded_ap),
        excluded_iou=tuple(excluded_iou),
        act_mean=act_mean,
        act_std=act_std,
        backend_calls=backend_calls or {},
        config_echo={
            "iou_valid_min": cfg.iou_valid_min,
            "score_min": cfg.score_min,
        },
    )


def save_report(report: EvaluationReport, path: str | Path, extra: dict | None = None) -> None:
    payload = report.to_dict()
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
