"""Reading and writing the on-disk formats: refs.json, corpus.jsonl, labels.jsonl.

All files are UTF-8. Corpus and label files are JSONL, one object per line;
validation errors always name the offending line.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .core import (
    Gesture,
    LabelSpan,
    ReferenceSet,
    TokenizedSentence,
    ValidationError,
    group_key,
    tokenize,
)


def _read_json(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})")


def _iter_jsonl(path: str | Path):
    try:
        fh = open(path, encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError(f"file not found: {path}")
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON ({exc})")


def load_reference_set(path: str | Path) -> ReferenceSet:
    """Load and validate a refs.json file."""
    data = _read_json(path)
    if not isinstance(data, dict) or "gestures" not in data:
        raise ValidationError(f"{path}: expected an object with a 'gestures' list")
    gestures: list[Gesture] = []
    sentences: dict[str, tuple[str, ...]] = {}
    for i, entry in enumerate(data["gestures"]):
        if not isinstance(entry, dict):
            raise ValidationError(f"{path}: gestures[{i}] is not an object")
        try:
            gesture = Gesture(
                id=entry.get("id", ""),
                name=entry.get("name", entry.get("id", "")),
                kind=entry.get("kind", ""),
                description=entry.get("description", ""),
            )
        except ValidationError as exc:
            raise ValidationError(f"{path}: gestures[{i}]: {exc}")
        refs = entry.get("reference_sentences", [])
        if not isinstance(refs, list) or not all(isinstance(s, str) for s in refs):
            raise ValidationError(
                f"{path}: gestures[{i}]: reference_sentences must be a list of strings"
            )
        gestures.append(gesture)
        sentences[gesture.id] = tuple(refs)
    try:
        return ReferenceSet(
            gestures=tuple(gestures),
            sentences=sentences,
            author=str(data.get("author", "")),
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}")


def reference_set_to_dict(refs: ReferenceSet) -> dict:
    return {
        "author": refs.author,
        "gestures": [
            {
                "id": g.id,
                "name": g.name,
                "kind": g.kind,
                "description": g.description,
                "reference_sentences": list(refs.sentences[g.id]),
            }
            for g in refs.gestures
        ],
    }


def save_reference_set(refs: ReferenceSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(reference_set_to_dict(refs), fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def load_corpus(path: str | Path) -> list[TokenizedSentence]:
    """Load a corpus.jsonl file; duplicate sentence ids are rejected."""
    sentences: list[TokenizedSentence] = []
    seen: set[str] = set()
    for lineno, row in _iter_jsonl(path):
        if not isinstance(row, dict) or "id" not in row or "text" not in row:
            raise ValidationError(f"{path}:{lineno}: expected {{'id': str, 'text': str}}")
        sid, text = row["id"], row["text"]
        if not isinstance(sid, str) or not sid:
            raise ValidationError(f"{path}:{lineno}: sentence id must be a non-empty string")
        if not isinstance(text, str):
            raise ValidationError(f"{path}:{lineno}: text must be a string")
        if sid in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate sentence id {sid!r}")
        seen.add(sid)
        sentences.append(tokenize(text, sentence_id=sid))
    return sentences


def save_corpus(sentences: list[TokenizedSentence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            fh.write(json.dumps({"id": s.id, "text": s.text}, ensure_ascii=False) + "\n")


_LABEL_FIELDS = {
    "sentence_id",
    "gesture_id",
    "start",
    "len",
    "score",
    "source",
    "ref_sentence_index",
    "annotator_id",
}


def label_to_dict(span: LabelSpan) -> dict:
    return {
        "sentence_id": span.sentence_id,
        "gesture_id": span.gesture_id,
        "start": span.start,
        "len": span.length,
        "score": span.score,
        "source": span.source,
        "ref_sentence_index": span.ref_sentence_index,
        "annotator_id": span.annotator_id,
    }


def label_from_dict(row: dict) -> LabelSpan:
    return LabelSpan(
        sentence_id=row["sentence_id"],
        gesture_id=row["gesture_id"],
        start=row["start"],
        length=row["len"],
        score=row["score"],
        source=row.get("source", "predicted"),
        ref_sentence_index=row.get("ref_sentence_index"),
        annotator_id=row.get("annotator_id"),
    )


def load_labels(
    path: str | Path,
    known_gestures: set[str] | None = None,
    corpus: list[TokenizedSentence] | None = None,
) -> list[LabelSpan]:
    """Load a labels.jsonl file, rejecting overlapping spans with the line number.

    When `known_gestures` is given, unknown gesture ids are rejected; when
    `corpus` is given, spans must reference known sentences and fit inside them.
    """
    by_id = {s.id: s for s in corpus} if corpus is not None else None
    spans: list[LabelSpan] = []
    last_in_group: dict[tuple, tuple[int, LabelSpan]] = {}
    group_spans: dict[tuple, list[tuple[int, LabelSpan]]] = {}
    for lineno, row in _iter_jsonl(path):
        if not isinstance(row, dict):
            raise ValidationError(f"{path}:{lineno}: expected an object")
        missing = {"sentence_id", "gesture_id", "start", "len", "score"} - set(row)
        if missing:
            raise ValidationError(f"{path}:{lineno}: missing fields {sorted(missing)}")
        unknown = set(row) - _LABEL_FIELDS
        if unknown:
            raise ValidationError(f"{path}:{lineno}: unknown fields {sorted(unknown)}")
        try:
            span = label_from_dict(row)
        except (ValidationError, TypeError) as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}")
        if known_gestures is not None and span.gesture_id not in known_gestures:
            raise ValidationError(f"{path}:{lineno}: unknown gesture_id {span.gesture_id!r}")
        if by_id is not None:
            sentence = by_id.get(span.sentence_id)
            if sentence is None:
                raise ValidationError(f"{path}:{lineno}: unknown sentence_id {span.sentence_id!r}")
            if span.end > sentence.n:
                raise ValidationError(
                    f"{path}:{lineno}: span [{span.start}, {span.end}) exceeds "
                    f"sentence {span.sentence_id!r} of {sentence.n} tokens"
                )
        key = group_key(span)
        for other_lineno, other in group_spans.get(key, ()):
            if span.overlaps(other):
                raise ValidationError(
                    f"{path}:{lineno}: span [{span.start}, {span.end}) overlaps "
                    f"span [{other.start}, {other.end}) from line {other_lineno} "
                    f"(sentence {span.sentence_id!r})"
                )
        group_spans.setdefault(key, []).append((lineno, span))
        spans.append(span)
    return spans


def save_labels(spans: list[LabelSpan], path: str | Path) -> None:
    """Write labels.jsonl deterministically (stable key order, stable floats)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(labels_to_jsonl(spans))


def labels_to_jsonl(spans: list[LabelSpan]) -> str:
    lines = [
        json.dumps(label_to_dict(span), ensure_ascii=False, sort_keys=True) for span in spans
    ]
    return "".join(line + "\n" for line in lines)


def _fixture_path(name: str) -> Path:
    return Path(str(resources.files("gestlabel").joinpath("fixtures", name)))


def default_reference_set() -> ReferenceSet:
    """The bundled 12-gesture reference set (11 symbolic + 1 deictic)."""
    return load_reference_set(_fixture_path("gestures.json"))


def mini_corpus() -> list[TokenizedSentence]:
    """The bundled 50-sentence demo corpus."""
    return load_corpus(_fixture_path("mini_corpus.jsonl"))


def mini_ground_truth() -> list[LabelSpan]:
    """Hand-labeled ground truth for the bundled demo corpus."""
    refs = default_reference_set()
    return load_labels(
        _fixture_path("mini_gt.jsonl"),
        known_gestures=set(refs.gesture_ids()),
        corpus=mini_corpus(),
    )
