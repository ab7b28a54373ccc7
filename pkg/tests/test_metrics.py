from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gestlabel.core import EngineConfig, LabelSpan, ValidationError
from gestlabel.metrics import (
    average_precision,
    corpus_iou,
    evaluate,
    span_iou,
)


def pred(sid, gid, start, length, score):
    return LabelSpan(sentence_id=sid, gesture_id=gid, start=start, length=length, score=score)


def gt(sid, gid, start, length):
    return LabelSpan(sentence_id=sid, gesture_id=gid, start=start, length=length,
                     score=1.0, source="ground_truth")


class TestSpanIou:
    def test_identical(self):
        assert span_iou(gt("s", "g", 2, 3), gt("s", "g", 2, 3)) == 1.0

    def test_partial_overlap(self):
        # overlap {3,4}, union {2..6}
        assert span_iou(gt("s", "g", 2, 3), gt("s", "g", 3, 4)) == pytest.approx(0.4, abs=1e-12)

    def test_disjoint(self):
        assert span_iou(gt("s", "g", 0, 2), gt("s", "g", 5, 1)) == 0.0

    def test_cross_sentence_rejected(self):
        with pytest.raises(ValidationError):
            span_iou(gt("s1", "g", 0, 1), gt("s2", "g", 0, 1))

    @given(
        st.integers(0, 10), st.integers(1, 5),
        st.integers(0, 10), st.integers(1, 5),
    )
    def test_symmetric_and_bounded(self, s1, l1, s2, l2):
        a, b = gt("s", "g", s1, l1), gt("s", "g", s2, l2)
        assert span_iou(a, b) == span_iou(b, a)
        assert 0.0 <= span_iou(a, b) <= 1.0


class TestCorpusIou:
    def test_identical_coverage(self):
        p = [pred("s1", "g", 0, 3, 0.9)]
        g = [gt("s1", "g", 0, 3)]
        assert corpus_iou(p, g, "g") == 1.0

    def test_hand_counted_thirds(self):
        # P covers tokens {2,3}; G covers {3,4}; intersection 1, union 3.
        p = [pred("s1", "g", 2, 2, 0.9)]
        g = [gt("s1", "g", 3, 2)]
        assert corpus_iou(p, g, "g") == pytest.approx(1 / 3, abs=1e-12)

    def test_low_scores_filtered_to_undefined(self):
        p = [pred("s1", "g", 0, 2, 0.4)]
        assert corpus_iou(p, [], "g", score_min=0.5) is None

    def test_score_filter_applies_to_predictions_only(self):
        p = [pred("s1", "g", 0, 2, 0.4)]
        g = [gt("s1", "g", 0, 2)]
        assert corpus_iou(p, g, "g", score_min=0.5) == 0.0

    def test_pools_across_sentences(self):
        p = [pred("s1", "g", 0, 2, 0.9), pred("s2", "g", 0, 2, 0.9)]
        g = [gt("s1", "g", 0, 2)]
        assert corpus_iou(p, g, "g") == pytest.approx(0.5)


class TestAveragePrecision:
    def test_perfect_detector(self):
        p = [pred("s1", "g", 0, 2, 0.9)]
        g = [gt("s1", "g", 0, 2)]
        assert average_precision(p, g, "g") == pytest.approx(1.0, abs=1e-12)

    def test_false_positive_before_true_positive(self):
        # Rank 1 misses, rank 2 hits the only gt: AP = 1/2.
        p = [pred("s1", "g", 5, 1, 0.9), pred("s1", "g", 0, 2, 0.8)]
        g = [gt("s1", "g", 0, 2)]
        assert average_precision(p, g, "g") == pytest.approx(0.5, abs=1e-12)

    def test_undefined_without_ground_truth(self):
        p = [pred("s1", "g", 0, 2, 0.9)]
        assert average_precision(p, [], "g") is None

    def test_each_gt_matched_at_most_once(self):
        p = [pred("s1", "g", 0, 2, 0.9), pred("s1", "g", 0, 2, 0.8)]
        g = [gt("s1", "g", 0, 2)]
        # Second prediction has no gt left: precision at recall step is 1/1.
        assert average_precision(p, g, "g") == pytest.approx(1.0)

    def test_iou_threshold_gates_matches(self):
        p = [pred("s1", "g", 0, 4, 0.9)]  # IOU vs gt = 2/4 = 0.5
        g = [gt("s1", "g", 0, 2)]
        assert average_precision(p, g, "g", iou_min=0.5) == pytest.approx(1.0)
        assert average_precision(p, g, "g", iou_min=0.6) == 0.0

    def test_invariant_under_monotone_score_transform(self):
        p = [
            pred("s1", "g", 0, 2, 0.9),
            pred("s1", "g", 4, 2, 0.7),
            pred("s2", "g", 1, 3, 0.5),
            pred("s2", "g", 6, 1, 0.2),
        ]
        g = [gt("s1", "g", 0, 2), gt("s2", "g", 1, 3), gt("s2", "g", 5, 2)]
        base = average_precision(p, g, "g")
        squashed = [
            LabelSpan(sentence_id=x.sentence_id, gesture_id=x.gesture_id, start=x.start,
                      length=x.length, score=x.score ** 3)
            for x in p
        ]
        assert average_precision(squashed, g, "g") == pytest.approx(base, abs=1e-12)


class TestEvaluate:
    def test_self_comparison_is_perfect(self):
        labels = [
            pred("s1", "a", 0, 2, 1.0),
            pred("s1", "b", 3, 1, 1.0),
            pred("s2", "a", 1, 2, 1.0),
        ]
        report = evaluate(labels, labels, ["a", "b", "c"])
        for gid in ("a", "b"):
            assert report.per_gesture[gid].ap == pytest.approx(1.0)
            assert report.per_gesture[gid].iou == pytest.approx(1.0)
        assert report.per_gesture["c"].ap is None
        assert report.per_gesture["c"].iou is None
        assert report.mean_ap == pytest.approx(1.0)
        assert report.mean_iou == pytest.approx(1.0)
        assert report.excluded_ap == ("c",)

    def test_empty_predictions_score_zero(self):
        g = [gt("s1", "a", 0, 2)]
        report = evaluate([], g, ["a"])
        assert report.per_gesture["a"].ap == 0.0
        assert report.per_gesture["a"].iou == 0.0

    def test_unknown_gesture_listed(self):
        p = [pred("s1", "mystery", 0, 1, 0.9)]
        with pytest.raises(ValidationError, match="mystery"):
            evaluate(p, [], ["a"])

    def test_act_mean_and_std(self):
        report = evaluate([], [gt("s1", "a", 0, 1)], ["a"], timings=[1.0, 3.0])
        assert report.act_mean == pytest.approx(2.0)
        assert report.act_std == pytest.approx(1.0)

    def test_csv_renders_percentages(self):
        labels = [pred("s1", "a", 0, 2, 1.0)]
        report = evaluate(labels, labels, ["a"])
        csv_text = report.to_csv()
        assert "100.00" in csv_text
        assert csv_text.splitlines()[0] == "gesture,ap_pct,iou_pct,n_gt,n_pred"

    def test_score_min_respected_through_config(self):
        p = [pred("s1", "a", 0, 2, 0.45)]
        g = [gt("s1", "a", 0, 2)]
        strict = evaluate(p, g, ["a"], config=EngineConfig(score_min=0.5))
        lenient = evaluate(p, g, ["a"], config=EngineConfig(score_min=0.4))
        assert strict.per_gesture["a"].iou == 0.0
        assert lenient.per_gesture["a"].iou == pytest.approx(1.0)
