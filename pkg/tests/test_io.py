from __future__ import annotations

import json

import pytest

from gestlabel.core import LabelSpan, ValidationError
from gestlabel.io import (
    default_reference_set,
    label_to_dict,
    load_corpus,
    load_labels,
    load_reference_set,
    mini_corpus,
    mini_ground_truth,
    save_corpus,
    save_labels,
    save_reference_set,
)


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


class TestReferenceSetIO:
    def test_default_fixture_has_twelve_gestures(self):
        refs = default_reference_set()
        assert refs.k == 12
        kinds = [g.kind for g in refs.gestures]
        assert kinds.count("symbolic") == 11
        assert kinds.count("deictic") == 1
        assert len(set(refs.gesture_ids())) == 12

    def test_roundtrip(self, tmp_path):
        refs = default_reference_set()
        path = tmp_path / "refs.json"
        save_reference_set(refs, path)
        again = load_reference_set(path)
        assert again == refs

    def test_missing_kind_rejected(self, tmp_path):
        path = tmp_path / "refs.json"
        path.write_text(json.dumps({"gestures": [{"id": "g", "reference_sentences": ["x"]}]}))
        with pytest.raises(ValidationError, match="kind"):
            load_reference_set(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="not found"):
            load_reference_set(tmp_path / "nope.json")


class TestCorpusIO:
    def test_empty_text_accepted(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        write_jsonl(path, [{"id": "a", "text": ""}])
        sentences = load_corpus(path)
        assert sentences[0].n == 0

    def test_duplicate_id_rejected_with_line(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        write_jsonl(path, [{"id": "a", "text": "x"}, {"id": "a", "text": "y"}])
        with pytest.raises(ValidationError, match=":2"):
            load_corpus(path)

    def test_roundtrip(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        original = mini_corpus()
        save_corpus(original, path)
        assert load_corpus(path) == original


class TestLabelIO:
    def test_overlap_rejected_with_line_number(self, tmp_path):
        path = tmp_path / "labels.jsonl"
        write_jsonl(
            path,
            [
                {"sentence_id": "s1", "gesture_id": "g", "start": 0, "len": 3,
                 "score": 1.0, "source": "ground_truth"},
                {"sentence_id": "s1", "gesture_id": "g", "start": 2, "len": 2,
                 "score": 1.0, "source": "ground_truth"},
            ],
        )
        with pytest.raises(ValidationError, match=":2.*line 1"):
            load_labels(path)

    def test_unknown_gesture_rejected_when_inventory_given(self, tmp_path):
        path = tmp_path / "labels.jsonl"
        write_jsonl(path, [{"sentence_id": "s1", "gesture_id": "mystery", "start": 0,
                            "len": 1, "score": 0.5}])
        load_labels(path)  # fine without an inventory
        with pytest.raises(ValidationError, match="mystery"):
            load_labels(path, known_gestures={"g"})

    def test_span_must_fit_sentence_when_corpus_given(self, tmp_path):
        corpus_path = tmp_path / "corpus.jsonl"
        write_jsonl(corpus_path, [{"id": "s1", "text": "one two"}])
        corpus = load_corpus(corpus_path)
        path = tmp_path / "labels.jsonl"
        write_jsonl(path, [{"sentence_id": "s1", "gesture_id": "g", "start": 1,
                            "len": 2, "score": 0.5}])
        with pytest.raises(ValidationError, match="exceeds"):
            load_labels(path, corpus=corpus)

    def test_roundtrip_is_deterministic(self, tmp_path):
        spans = [
            LabelSpan(sentence_id="s1", gesture_id="g", start=0, length=2, score=0.75),
            LabelSpan(sentence_id="s2", gesture_id="h", start=3, length=1, score=0.5,
                      source="ground_truth", annotator_id="p1"),
        ]
        path_a = tmp_path / "a.jsonl"
        path_b = tmp_path / "b.jsonl"
        save_labels(spans, path_a)
        save_labels(load_labels(path_a), path_b)
        assert path_a.read_bytes() == path_b.read_bytes()

    def test_per_token_assignment_is_a_function(self):
        gt = mini_ground_truth()
        seen = {}
        for span in gt:
            for token in span.token_indices():
                key = (span.sentence_id, span.source, span.annotator_id, token)
                assert key not in seen, "token labeled twice"
                seen[key] = span.gesture_id

    def test_bundled_ground_truth_loads(self):
        gt = mini_ground_truth()
        assert len(gt) > 0
        assert all(s.source == "ground_truth" for s in gt)

    def test_label_dict_shape(self):
        span = LabelSpan(sentence_id="s", gesture_id="g", start=1, length=2, score=0.5)
        row = label_to_dict(span)
        assert set(row) == {
            "sentence_id", "gesture_id", "start", "len", "score", "source",
            "ref_sentence_index", "annotator_id",
        }
        assert row["len"] == 2
