"""Moving-window labeling: variable window search with two consistency checks.

At each position every window size up to w_max is scored for every reference
sentence. The winning candidate must survive the context-change check: the
window is grown by one word and a large score change (direction set by
check1_mode) rejects the gesture, retrying with it excluded up to p times.
An accepted candidate is then challenged by the backtracking check, which
re-runs the selection from every interior position of the winning span and
replaces the result when a strictly better score appears.
"""

from __future__ import annotations

from .core import (
    Candidate,
    EngineConfig,
    LabelSpan,
    ReferenceSet,
    TokenizedSentence,
    better_candidate,
    rank_candidates,
)
from .similarity import ScoreCache, SimilarityBackend, cached_score, prefetch_scores


def select_candidate(
    sentence: TokenizedSentence,
    j: int,
    refs: ReferenceSet,
    config: EngineConfig,
    backend: SimilarityBackend,
    cache: ScoreCache,
    excluded: frozenset[str] = frozenset(),
    tries: int = 0,
) -> Candidate | None:
    """Best candidate at position j that survives the context-change check.

    Returns None when the retry budget p is exhausted, no candidate exists,
    or the best score is not strictly above th0. The context-change check
    only applies when the window can actually grow by one word (inside both
    the sentence and the w_max cap).
    """
    if tries >= config.p:
        return None
    n = sentence.n
    max_win = min(config.w_max, n - j)
    candidates: list[Candidate] = []
    for gi, gesture in enumerate(refs.gestures):
        if gesture.id in excluded:
            continue
        for ri, ref_text in enumerate(refs.sentences[gesture.id]):
            for win in range(1, max_win + 1):
                value = cached_score(
                    cache, backend, (gesture.id, ri), ref_text, sentence, j, win
                )
                candidates.append(
                    Candidate(score=value, gesture_index=gi, ref_index=ri, win=win, start=j)
                )
    if not candidates:
        return None
    best = rank_candidates(candidates)
    if best.score <= config.th0:
        return None
    gesture = refs.gestures[best.gesture_index]
    if best.win < config.w_max and j + best.win + 1 <= n:
        ref_text = refs.sentences[gesture.id][best.ref_index]
        check = cached_score(
            cache, backend, (gesture.id, best.ref_index), ref_text, sentence, j, best.win + 1
        )
        if config.check1_mode == "drop":
            rejected = (best.score - check) > config.th1
        else:
            rejected = (check - best.score) > config.th1
        if rejected:
            return select_candidate(
                sentence,
                j,
                refs,
                config,
                backend,
                cache,
                excluded | {gesture.id},
                tries + 1,
            )
    return best


def _span_from(candidate: Candidate, sentence: TokenizedSentence, refs: ReferenceSet) -> LabelSpan:
    return LabelSpan(
        sentence_id=sentence.id,
        gesture_id=refs.gestures[candidate.gesture_index].id,
        start=candidate.start,
        length=candidate.win,
        score=candidate.score,
        source="predicted",
        ref_sentence_index=candidate.ref_index,
    )


def prefetch_sentence(
    sentence: TokenizedSentence,
    refs: ReferenceSet,
    config: EngineConfig,
    backend: SimilarityBackend,
    cache: ScoreCache,
) -> None:
    """Batch-score every (reference, position, window) key of the sentence."""
    items = []
    for gesture in refs.gestures:
        for ri, ref_text in enumerate(refs.sentences[gesture.id]):
            for j in range(sentence.n):
                for win in range(1, min(config.w_max, sentence.n - j) + 1):
                    items.append(((gesture.id, ri), ref_text, sentence, j, win))
    prefetch_scores(cache, backend, items)


def label_moving(
    sentence: TokenizedSentence,
    refs: ReferenceSet,
    config: EngineConfig,
    backend: SimilarityBackend,
    cache: ScoreCache | None = None,
) -> list[LabelSpan]:
    """Label one sentence with the moving-window search.

    With config.prefetch all scores are computed up front in one batch; the
    output is identical either way. Tokens skipped when the backtracking
    check relocates a label stay unlabeled.
    """
    if cache is None:
        cache = ScoreCache()
    if config.prefetch:
        prefetch_sentence(sentence, refs, config, backend, cache)
    labels: list[LabelSpan] = []
    j = 0
    while j < sentence.n:
        picked = select_candidate(sentence, j, refs, config, backend, cache)
        if picked is None:
            j += 1
            continue
        # Backtracking check: interior starts of the winning span may hide a
        # strictly better candidate (which must pass its own checks).
        challenger: Candidate | None = None
        for j_check in range(j + 1, j + picked.win):
            contender = select_candidate(sentence, j_check, refs, config, backend, cache)
            if contender is None:
                continue
            if challenger is None or better_candidate(contender, challenger):
                challenger = contender
        if challenger is not None and challenger.score > picked.score:
            labels.append(_span_from(challenger, sentence, refs))
            j = challenger.start + challenger.win
        else:
            labels.append(_span_from(picked, sentence, refs))
            j = picked.start + picked.win
    return labels
