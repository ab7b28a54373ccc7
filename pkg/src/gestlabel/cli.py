"""Command-line pipeline: label, calibrate, evaluate, stats, serve, sim-server.

Exit codes: 0 success, 2 validation error, 3 backend failure. Labeling runs
write the label file atomically (no partial output) together with a run
manifest recording the config hash, backend identity, per-sentence timings
and backend-call counts, so runs on different machines stay comparable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from pathlib import Path

from .baseline import derive_stats, fallback_stats, label_baseline, load_stats, save_stats
from .core import (
    TOKENIZER_VERSION,
    BackendError,
    EngineConfig,
    LabelSpan,
    ValidationError,
)
from .fixed_window import (
    WindowTable,
    calibrate_windows,
    label_fixed,
    load_window_table,
    save_window_table,
)
from .io import (
    labels_to_jsonl,
    load_corpus,
    load_labels,
    load_reference_set,
)
from .metrics import evaluate, save_report
from .moving_window import label_moving
from .service import AnnotationServer, AnnotationState
from .similarity import JaccardBackend, RemoteBackend, ScoreCache, ScriptedBackend
from .simserver import SimilarityServer


def _resolve_backend(spec: str):
    if spec == "jaccard":
        return JaccardBackend()
    if spec.startswith("scripted:"):
        return ScriptedBackend.from_json(spec[len("scripted:"):])
    if spec.startswith("remote:"):
        return RemoteBackend(spec[len("remote:"):])
    raise ValidationError(
        f"unknown backend {spec!r}; expected jaccard, scripted:FILE or remote:URL"
    )


def _load_config(args: argparse.Namespace) -> EngineConfig:
    data: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ValidationError(f"file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{args.config}: invalid JSON ({exc})")
    for key in ("th0", "th1", "p", "w_max", "seed", "check1_mode"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if getattr(args, "no_prefetch", False):
        data["prefetch"] = False
    return EngineConfig.from_dict(data)


def _write_atomic(path: str | Path, content: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent) or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def manifest_path(labels_path: str | Path) -> Path:
    return Path(str(labels_path) + ".manifest.json")


def cmd_label(args: argparse.Namespace) -> int:
    config = _load_config(args)
    refs = load_reference_set(args.refs)
    corpus = load_corpus(args.corpus)
    backend = _resolve_backend(args.backend)
    cache = ScoreCache()

    if args.algo == "fixed":
        forced = _parse_forced_windows(args.force_window, refs)
        if args.windows:
            table = load_window_table(args.windows)
            if forced:
                merged = dict(table.windows)
                merged.update(forced)
                table = WindowTable(windows=merged, diagnostics=table.diagnostics,
                                    uncalibrated=table.uncalibrated)
        elif forced:
            table = WindowTable(windows=forced)
        else:
            raise ValidationError(
                "--algo fixed requires a window table (--windows windows.json "
                "from `gestlabel calibrate`, or --force-window GESTURE=WIN)"
            )
    elif args.algo == "baseline":
        if args.stats:
            stats = load_stats(args.stats)
        elif args.fallback_stats:
            stats = fallback_stats(refs.gesture_ids())
        else:
            raise ValidationError(
                "--algo baseline requires --stats stats.json or --fallback-stats"
            )

    labels: list[LabelSpan] = []
    timings: list[float] = []
    per_sentence: list[dict] = []
    for sentence in corpus:
        started = time.perf_counter()
        if args.algo == "baseline":
            spans = label_baseline(sentence, stats, config)
        elif args.algo == "fixed":
            spans = label_fixed(sentence, refs, table, config, backend, cache)
        else:
            spans = label_moving(sentence, refs, config, backend, cache)
        elapsed = time.perf_counter() - started
        labels.extend(spans)
        timings.append(elapsed)
        per_sentence.append({"id": sentence.id, "seconds": elapsed, "labels": len(spans)})

    _write_atomic(args.out, labels_to_jsonl(labels))
    act_mean = act_std = None
    if timings:
        act_mean = sum(timings) / len(timings)
        act_std = (sum((t - act_mean) ** 2 for t in timings) / len(timings)) ** 0.5
    manifest = {
        "artifact": "labels",
        "algo": args.algo,
        "backend": backend.name if args.algo != "baseline" else "none",
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "tokenizer_version": TOKENIZER_VERSION,
        "refs_author": refs.author,
        "sentences": len(corpus),
        "labels": len(labels),
        "backend_calls": {"total": cache.total_queries, "distinct": cache.misses},
        "act_seconds": {"mean": act_mean, "std": act_std},
        "per_sentence": per_sentence,
    }
    _write_atomic(manifest_path(args.out), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return 0


def _parse_forced_windows(entries: list[str] | None, refs) -> dict[str, int]:
    forced: dict[str, int] = {}
    known = set(refs.gesture_ids())
    for entry in entries or []:
        if "=" not in entry:
            raise ValidationError(f"--force-window expects GESTURE=WIN, got {entry!r}")
        gid, _, value = entry.partition("=")
        if gid not in known:
            raise ValidationError(f"--force-window: unknown gesture {gid!r}")
        try:
            win = int(value)
        except ValueError:
            raise ValidationError(f"--force-window: window must be an integer, got {value!r}")
        if win < 1:
            raise ValidationError(f"--force-window: window must be >= 1, got {win}")
        forced[gid] = win
    return forced


def cmd_calibrate(args: argparse.Namespace) -> int:
    if args.wmax < 1:
        raise ValidationError(f"--wmax must be >= 1, got {args.wmax}")
    if args.min_count < 1:
        raise ValidationError(f"--min-count must be >= 1, got {args.min_count}")
    config = EngineConfig(th0=args.th0, w_max=args.wmax)
    refs = load_reference_set(args.refs)
    corpus = load_corpus(args.corpus)
    backend = _resolve_backend(args.backend)
    table = calibrate_windows(corpus, refs, config, backend, min_count=args.min_count)
    save_window_table(
        table,
        args.out,
        extra={
            "config_hash": config.config_hash(),
            "tokenizer_version": TOKENIZER_VERSION,
            "min_count": args.min_count,
        },
    )
    return 0


def _check_tokenizer_compatibility(*label_paths: str) -> None:
    versions = {}
    for path in label_paths:
        mpath = manifest_path(path)
        if mpath.exists():
            try:
                with open(mpath, encoding="utf-8") as fh:
                    versions[path] = json.load(fh).get("tokenizer_version")
            except (OSError, json.JSONDecodeError):
                continue
    stated = {v for v in versions.values() if v is not None}
    if len(stated) > 1 or (stated and stated != {TOKENIZER_VERSION}):
        raise ValidationError(
            f"label files were produced under different tokenizer versions: "
            f"{versions} (current {TOKENIZER_VERSION!r}); refusing to compare"
        )


def cmd_evaluate(args: argparse.Namespace) -> int:
    _check_tokenizer_compatibility(args.pred, args.gt)
    refs = load_reference_set(args.refs)
    corpus = load_corpus(args.corpus)
    known = set(refs.gesture_ids())
    pred = load_labels(args.pred, known_gestures=known, corpus=corpus)
    gt = load_labels(args.gt, known_gestures=known, corpus=corpus)
    config = EngineConfig(iou_valid_min=args.iou_min, score_min=args.score_min)
    backend_calls = {}
    timings: list[float] = []
    pred_manifest = manifest_path(args.pred)
    if pred_manifest.exists():
        try:
            with open(pred_manifest, encoding="utf-8") as fh:
                manifest = json.load(fh)
            backend_calls = manifest.get("backend_calls", {})
            timings = [entry["seconds"] for entry in manifest.get("per_sentence", [])]
        except (OSError, json.JSONDecodeError, KeyError):
            pass
    report = evaluate(
        pred,
        gt,
        refs.gesture_ids(),
        timings=timings or None,
        config=config,
        backend_calls=backend_calls,
    )
    save_report(
        report,
        args.out,
        extra={"config_hash": config.config_hash(), "tokenizer_version": TOKENIZER_VERSION},
    )
    if args.csv:
        _write_atomic(args.csv, report.to_csv())
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    gt = load_labels(args.gt, corpus=corpus)
    if not gt:
        raise ValidationError(f"{args.gt}: no ground-truth labels; cannot derive stats")
    stats = derive_stats(gt, corpus)
    save_stats(stats, args.out, extra={"tokenizer_version": TOKENIZER_VERSION})
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    refs = load_reference_set(args.refs)
    corpus = load_corpus(args.corpus)
    state = AnnotationState(
        refs=refs,
        corpus=corpus,
        gt_out=args.gt_out,
        session_size=args.session_size,
        seed=args.seed,
        w_max=args.w_max,
    )
    try:
        server = AnnotationServer(state, host=args.host, port=args.port, ui_dir=args.ui_dir)
    except OSError as exc:
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 3
    print(f"annotation service listening on {server.url}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_sim_server(args: argparse.Namespace) -> int:
    backend = _resolve_backend(args.backend)
    try:
        server = SimilarityServer(
            backend, host=args.host, port=args.port, model_name=args.model_name
        )
    except OSError as exc:
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 3
    print(f"scoring service listening on {server.url}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with engine config keys")
    parser.add_argument("--th0", type=float, help="minimum accepted score (strict)")
    parser.add_argument("--th1", type=float, help="context-change rejection margin")
    parser.add_argument("--p", type=int, help="context-change retry budget")
    parser.add_argument("--w-max", dest="w_max", type=int, help="maximum window size")
    parser.add_argument("--seed", type=int, help="run seed")
    parser.add_argument("--check1-mode", dest="check1_mode", choices=["drop", "paper_literal"])
    parser.add_argument("--no-prefetch", action="store_true",
                        help="score lazily instead of batching per sentence")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gestlabel",
        description="Label word spans with symbolic and deictic gesture identifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_label = sub.add_parser("label", help="label a corpus with one of the algorithms")
    p_label.add_argument("--algo", required=True, choices=["baseline", "fixed", "moving"])
    p_label.add_argument("--refs", required=True, help="refs.json")
    p_label.add_argument("--corpus", required=True, help="corpus.jsonl")
    p_label.add_argument("--out", required=True, help="output labels.jsonl")
    p_label.add_argument("--backend", default="jaccard",
                         help="jaccard | scripted:FILE | remote:URL")
    p_label.add_argument("--windows", help="windows.json for --algo fixed")
    p_label.add_argument("--force-window", action="append", metavar="GESTURE=WIN",
                         help="override a gesture's window size (repeatable)")
    p_label.add_argument("--stats", help="stats.json for --algo baseline")
    p_label.add_argument("--fallback-stats", action="store_true",
                         help="use the uniform fallback distribution for --algo baseline")
    _add_config_flags(p_label)
    p_label.set_defaults(func=cmd_label)

    p_cal = sub.add_parser("calibrate", help="compute per-gesture window sizes offline")
    p_cal.add_argument("--refs", required=True)
    p_cal.add_argument("--corpus", required=True)
    p_cal.add_argument("--out", required=True, help="output windows.json")
    p_cal.add_argument("--backend", default="jaccard")
    p_cal.add_argument("--th0", type=float, default=0.3)
    p_cal.add_argument("--wmax", type=int, default=10)
    p_cal.add_argument("--min-count", dest="min_count", type=int, default=10,
                       help="minimum accepted scores for a window to be valid")
    p_cal.set_defaults(func=cmd_calibrate)

    p_eval = sub.add_parser("evaluate", help="compare predicted labels against ground truth")
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--gt", required=True)
    p_eval.add_argument("--corpus", required=True)
    p_eval.add_argument("--refs", required=True)
    p_eval.add_argument("--out", required=True, help="output report.json")
    p_eval.add_argument("--csv", help="optional CSV rendering (percent units)")
    p_eval.add_argument("--iou-min", dest="iou_min", type=float, default=0.5)
    p_eval.add_argument("--score-min", dest="score_min", type=float, default=0.5)
    p_eval.set_defaults(func=cmd_evaluate)

    p_stats = sub.add_parser("stats", help="derive baseline statistics from ground truth")
    p_stats.add_argument("--gt", required=True)
    p_stats.add_argument("--corpus", required=True)
    p_stats.add_argument("--out", required=True, help="output stats.json")
    p_stats.set_defaults(func=cmd_stats)

    p_serve = sub.add_parser("serve", help="run the annotation service")
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--refs", required=True)
    p_serve.add_argument("--corpus", required=True)
    p_serve.add_argument("--gt-out", dest="gt_out", required=True,
                         help="ground-truth labels.jsonl to append to")
    p_serve.add_argument("--session-size", dest="session_size", type=int, default=30)
    p_serve.add_argument("--seed", type=int, default=0)
    p_serve.add_argument("--w-max", dest="w_max", type=int, default=10)
    p_serve.add_argument("--ui-dir", dest="ui_dir",
                         help="directory with the built annotation UI (served at /)")
    p_serve.set_defaults(func=cmd_serve)

    p_sim = sub.add_parser("sim-server", help="host a similarity backend over HTTP")
    p_sim.add_argument("--port", type=int, default=8100)
    p_sim.add_argument("--host", default="127.0.0.1")
    p_sim.add_argument("--backend", default="jaccard", help="jaccard | scripted:FILE")
    p_sim.add_argument("--model-name", dest="model_name")
    p_sim.set_defaults(func=cmd_sim_server)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
