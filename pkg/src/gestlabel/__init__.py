"""Label word spans in sentences with symbolic and deictic gesture identifiers.

Three labelers (statistical baseline, fixed window, moving window) score
sub-sentences against gesture reference sentences through a pluggable
semantic-similarity backend, plus evaluation metrics (AP / IOU / ACT), a
command-line pipeline and an HTTP annotation service for collecting ground
truth.
"""

from .baseline import BaselineStats, derive_stats, fallback_stats, label_baseline
from .core import (
    Candidate,
    EngineConfig,
    Gesture,
    GestureLabelError,
    LabelSpan,
    ReferenceSet,
    TokenizedSentence,
    ValidationError,
    rank_candidates,
    span_text,
    tokenize,
)
from .fixed_window import WindowTable, calibrate_windows, label_fixed
from .io import (
    default_reference_set,
    load_corpus,
    load_labels,
    load_reference_set,
    mini_corpus,
    mini_ground_truth,
    save_labels,
)
from .metrics import EvaluationReport, average_precision, corpus_iou, evaluate, span_iou
from .moving_window import label_moving, select_candidate
from .similarity import (
    BackendError,
    BackendUnavailableError,
    JaccardBackend,
    ProtocolError,
    RemoteBackend,
    ScoreCache,
    ScriptedBackend,
    SimilarityBackend,
    cached_score,
    jaccard_score,
)

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "BackendUnavailableError",
    "BaselineStats",
    "Candidate",
    "EngineConfig",
    "EvaluationReport",
    "Gesture",
    "GestureLabelError",
    "JaccardBackend",
    "LabelSpan",
    "ProtocolError",
    "ReferenceSet",
    "RemoteBackend",
    "ScoreCache",
    "ScriptedBackend",
    "SimilarityBackend",
    "TokenizedSentence",
    "ValidationError",
    "WindowTable",
    "average_precision",
    "cached_score",
    "calibrate_windows",
    "corpus_iou",
    "default_reference_set",
    "derive_stats",
    "evaluate",
    "fallback_stats",
    "jaccard_score",
    "label_baseline",
    "label_fixed",
    "label_moving",
    "load_corpus",
    "load_labels",
    "load_reference_set",
    "mini_corpus",
    "mini_ground_truth",
    "rank_candidates",
    "save_labels",
    "select_candidate",
    "span_iou",
    "span_text",
    "tokenize",
]
