from __future__ import annotations

import pytest

from gestlabel.baseline import (
    BaselineStats,
    derive_stats,
    fallback_stats,
    label_baseline,
    sentence_rng,
)
from gestlabel.core import EngineConfig, LabelSpan, ValidationError, check_no_overlap, tokenize

from conftest import make_sentence


def gt_span(sid, gid, start, length):
    return LabelSpan(sentence_id=sid, gesture_id=gid, start=start, length=length,
                     score=1.0, source="ground_truth")


class TestDeriveStats:
    def test_gesture_ratios(self):
        corpus = [tokenize("w " * 40, "s1")]
        gt = [gt_span("s1", "A", i * 2, 1) for i in range(6)]
        gt += [gt_span("s1", "B", 20 + i * 2, 1) for i in range(4)]
        stats = derive_stats(gt, corpus)
        assert stats.gesture_probs["A"] == pytest.approx(0.6)
        assert stats.gesture_probs["B"] == pytest.approx(0.4)

    def test_constant_windows_have_zero_std(self):
        corpus = [tokenize("w " * 30, "s1")]
        gt = [gt_span("s1", "A", i * 3, 2) for i in range(3)]
        stats = derive_stats(gt, corpus)
        assert stats.window_mean["A"] == pytest.approx(2.0)
        assert stats.window_std["A"] == 0.0

    def test_start_rate_is_label_density(self):
        corpus = [tokenize("w " * 100, "s1")]
        gt = [gt_span("s1", "A", i * 10, 1) for i in range(10)]
        stats = derive_stats(gt, corpus)
        assert stats.start_rate == pytest.approx(0.1)

    def test_empty_gt_rejected(self):
        with pytest.raises(ValidationError):
            derive_stats([], [tokenize("a b", "s1")])

    def test_unknown_sentence_rejected(self):
        with pytest.raises(ValidationError):
            derive_stats([gt_span("ghost", "A", 0, 1)], [tokenize("a b", "s1")])


class TestFallbackStats:
    def test_uniform_distribution(self):
        stats = fallback_stats(["A", "B", "C", "D"])
        assert all(p == pytest.approx(0.25) for p in stats.gesture_probs.values())
        assert all(m == 3.0 for m in stats.window_mean.values())
        assert all(s == 1.0 for s in stats.window_std.values())
        assert stats.start_rate == 0.05


class TestStatsValidation:
    def test_probs_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            BaselineStats(gesture_probs={"A": 0.7, "B": 0.7},
                          window_mean={"A": 2, "B": 2},
                          window_std={"A": 0, "B": 0},
                          start_rate=0.1)

    def test_window_mean_at_least_one(self):
        with pytest.raises(ValidationError):
            BaselineStats(gesture_probs={"A": 1.0}, window_mean={"A": 0.5},
                          window_std={"A": 0.0}, start_rate=0.1)


class TestLabelBaseline:
    def degenerate_stats(self):
        return BaselineStats(gesture_probs={"A": 1.0}, window_mean={"A": 2.0},
                             window_std={"A": 0.0}, start_rate=1.0)

    def test_empty_sentence(self):
        labels = label_baseline(make_sentence(""), self.degenerate_stats(), EngineConfig())
        assert labels == []

    def test_degenerate_distribution_hand_trace(self):
        # q=1, window always 2: spans (0,2), (2,2), then (4,1) clamped at the tail.
        cfg = EngineConfig(th0=0.3)
        labels = label_baseline(make_sentence("a b c d e"), self.degenerate_stats(), cfg)
        assert [(l.start, l.length, l.gesture_id) for l in labels] == [
            (0, 2, "A"), (2, 2, "A"), (4, 1, "A"),
        ]
        for label in labels:
            assert cfg.th0 < label.score <= 1.0

    def test_same_seed_reproduces_exactly(self):
        stats = fallback_stats(["A", "B"], start_rate=0.5)
        sentence = make_sentence("one two three four five six seven eight")
        cfg = EngineConfig(seed=7)
        assert label_baseline(sentence, stats, cfg) == label_baseline(sentence, stats, cfg)

    def test_output_independent_of_other_sentences(self):
        # Seed derives from (config seed, sentence id) only.
        stats = fallback_stats(["A"], start_rate=1.0)
        cfg = EngineConfig(seed=3)
        alone = label_baseline(make_sentence("a b c", "sX"), stats, cfg)
        again = label_baseline(make_sentence("a b c", "sX"), stats, cfg)
        assert alone == again

    def test_windows_respect_bounds_and_never_overlap(self):
        stats = BaselineStats(gesture_probs={"A": 0.5, "B": 0.5},
                              window_mean={"A": 4.0, "B": 9.0},
                              window_std={"A": 2.0, "B": 5.0},
                              start_rate=1.0)
        cfg = EngineConfig(seed=11, w_max=6)
        for sid in ("s1", "s2", "s3"):
            sentence = make_sentence("t " * 25, sid)
            labels = label_baseline(sentence, stats, cfg)
            check_no_overlap(labels)
            for label in labels:
                assert 1 <= label.length <= cfg.w_max
                assert label.end <= sentence.n

    def test_rng_stability_across_runs(self):
        # Frozen draw: documents that seeding is content-addressed, not salted.
        rng = sentence_rng(0, "s1")
        first = rng.random()
        rng2 = sentence_rng(0, "s1")
        assert rng2.random() == first
        assert sentence_rng(1, "s1").random() != first
