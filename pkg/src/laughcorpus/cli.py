"""Command-line entry point: one binary, one subcommand per pipeline stage.

Exit codes: 0 success, 1 runtime/data error, 2 usage error. Log level via
LAUGHCORPUS_LOG (error, warn, info, debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .agreement import (agreement_report, load_ratings_csv, report_to_csv,
                        report_to_text)
from .config import PipelineConfig, load_config, save_config
from .corpus import export_table, ingest, load_manifest, save_manifest
from .errors import LaughCorpusError
from .pipeline import (confusion_csv, detect_stage, eval_metrics_csv,
                       features_stage, mute_stage, run_pipeline,
                       run_report_csv, run_report_text)
from .rater import (build_examples, evaluate, load_model,
                    load_text_embeddings, save_model, train)
from .scoring import score_corpus

logger = logging.getLogger("laughcorpus")

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    level = os.environ.get("LAUGHCORPUS_LOG", "warn").lower()
    logging.basicConfig(
        level=_LOG_LEVELS.get(level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s")


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override it")


def _effective_config(args: argparse.Namespace, **overrides) -> PipelineConfig:
    base = load_config(args.config) if args.config else PipelineConfig()
    if getattr(args, "jobs", None) is not None:
        overrides["jobs"] = args.jobs
    return base.with_overrides(**overrides)


def _echo_config(config: PipelineConfig, target: Path) -> None:
    """Provenance: config next to every output (dir or file sibling)."""
    if target.is_dir():
        save_config(config, target / "config_used.json")
    else:
        save_config(config, target.with_name(target.name + ".config.json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laughcorpus",
        description="Laughter-driven humour-rating corpus pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a manifest from a WAV directory")
    p.add_argument("--audio-dir", required=True)
    p.add_argument("--transcripts")
    p.add_argument("--kind", choices=("standup", "nonfunny"), default="standup")
    p.add_argument("--out", required=True, help="manifest JSON path")
    p.add_argument("--strict", action="store_true",
                   help="exit 1 if any file fails to ingest")
    p.add_argument("--jobs", type=int)
    _add_config_arg(p)

    p = sub.add_parser("detect", help="laughter intervals and totals per clip")
    p.add_argument("--manifest", required=True)
    p.add_argument("--tracks", help="directory of <clip_id>.json prob tracks")
    p.add_argument("--heuristic", action="store_true",
                   help="derive probabilities from the audio itself")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--min-duration", type=float)
    p.add_argument("--jobs", type=int)
    _add_config_arg(p)

    p = sub.add_parser("score", help="quotients, corpus stats, 0-4 ratings")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--estimator", choices=("population", "sample"))
    _add_config_arg(p)

    p = sub.add_parser("mute", help="write laughter-muted WAVs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--intervals", required=True,
                   help="directory of <clip_id>.json interval files")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--fade-ms", type=float)
    p.add_argument("--jobs", type=int)
    _add_config_arg(p)

    p = sub.add_parser("features", help="extract per-clip feature files")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--muted-dir", help="use muted WAVs from this directory")
    p.add_argument("--sample-rate", type=int)
    p.add_argument("--frame-len", type=int)
    p.add_argument("--hop", type=int)
    p.add_argument("--max-frames", type=int)
    p.add_argument("--jobs", type=int)
    _add_config_arg(p)

    p = sub.add_parser("pipeline",
                       help="detect, score, mute, features, split in one go")
    p.add_argument("--manifest", required=True)
    p.add_argument("--tracks")
    p.add_argument("--heuristic", action="store_true")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-mute", action="store_true")
    p.add_argument("--no-split", action="store_true")
    p.add_argument("--threshold", type=float)
    p.add_argument("--min-duration", type=float)
    p.add_argument("--fade-ms", type=float)
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--seed", type=int, help="split seed")
    p.add_argument("--no-stratify", action="store_true")
    p.add_argument("--jobs", type=int)
    _add_config_arg(p)

    p = sub.add_parser("agree", help="inter-rater agreement report")
    p.add_argument("--ratings", required=True,
                   help="CSV with header item_id,rater_id,rating")
    p.add_argument("--alpha-metric", choices=("nominal", "ordinal", "interval"))
    p.add_argument("--categories", type=int, default=5)
    p.add_argument("--out-dir")
    _add_config_arg(p)

    p = sub.add_parser("train", help="train the baseline rater on split=train")
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", required=True, help="feature file directory")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--modality", choices=("audio", "text", "both"),
                   default="audio")
    p.add_argument("--embeddings", help="clip_id -> vector JSON map")
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--l2", type=float)
    p.add_argument("--train-seed", type=int)
    p.add_argument("--balanced", action="store_true")
    _add_config_arg(p)

    p = sub.add_parser("eval", help="evaluate a model on split=test")
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--modality", choices=("audio", "text", "both"))
    p.add_argument("--embeddings")
    p.add_argument("--out-dir")
    _add_config_arg(p)

    p = sub.add_parser("report", help="corpus report from a scored manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir")
    _add_config_arg(p)

    return parser


def cmd_ingest(args) -> int:
    config = _effective_config(args)
    result = ingest(args.audio_dir, transcript_dir=args.transcripts,
                    source_kind=args.kind,
                    jobs=config.jobs if config.jobs > 0 else None)
    out = Path(args.out)
    save_manifest(result.manifest, out)
    _echo_config(config, out)
    print(f"ingested {len(result.manifest.clips)} clips "
          f"({len(result.errors)} errors) -> {out}")
    for err in result.errors:
        print(f"  error: {err.path}: {err.message}", file=sys.stderr)
    if result.errors and args.strict:
        return 1
    return 0


def cmd_detect(args) -> int:
    config = _effective_config(args, threshold=args.threshold,
                               min_duration_s=args.min_duration)
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = detect_stage(manifest, config, out_dir / "intervals",
                            tracks_dir=args.tracks,
                            use_heuristic=args.heuristic)
    save_manifest(manifest, out_dir / "manifest.json")
    _echo_config(config, out_dir)
    print(f"detected laughter for {len(manifest.clips)} clips -> {out_dir}")
    return 0


def cmd_score(args) -> int:
    config = _effective_config(args, estimator=args.estimator)
    manifest = score_corpus(load_manifest(args.manifest),
                            estimator=config.estimator)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_manifest(manifest, out_dir / "manifest.json")
    export_table(manifest, out_dir / "scores.csv")
    (out_dir / "report.csv").write_text(run_report_csv(manifest), encoding="utf-8")
    (out_dir / "report.txt").write_text(run_report_text(manifest), encoding="utf-8")
    _echo_config(config, out_dir)
    print(run_report_text(manifest), end="")
    return 0


def cmd_mute(args) -> int:
    config = _effective_config(args, fade_ms=args.fade_ms)
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out_dir)
    paths = mute_stage(manifest, config, args.intervals, out_dir)
    _echo_config(config, out_dir)
    print(f"muted {len(paths)} clips -> {out_dir}")
    return 0


def cmd_features(args) -> int:
    config = _effective_config(args, sample_rate=args.sample_rate,
                               frame_len=args.frame_len, hop=args.hop,
                               max_frames=args.max_frames)
    manifest = load_manifest(args.manifest)
    overrides = None
    if args.muted_dir:
        overrides = {c.id: str(Path(args.muted_dir) / f"{c.id}.wav")
                     for c in manifest.clips}
    out_dir = Path(args.out_dir)
    paths = features_stage(manifest, config, out_dir, audio_overrides=overrides)
    _echo_config(config, out_dir)
    print(f"extracted features for {len(paths)} clips -> {out_dir}")
    return 0


def cmd_pipeline(args) -> int:
    config = _effective_config(
        args, threshold=args.threshold, min_duration_s=args.min_duration,
        fade_ms=args.fade_ms, train_fraction=args.train_fraction,
        split_seed=args.seed,
        stratified=False if args.no_stratify else None)
    manifest = load_manifest(args.manifest)
    manifest = run_pipeline(manifest, config, args.out_dir,
                            tracks_dir=args.tracks,
                            use_heuristic=args.heuristic,
                            mute=not args.no_mute,
                            split=not args.no_split)
    print(run_report_text(manifest), end="")
    print(f"artifacts -> {args.out_dir}")
    return 0


def cmd_agree(args) -> int:
    config = _effective_config(args, alpha_metric=args.alpha_metric)
    table = load_ratings_csv(args.ratings, n_categories=args.categories)
    report = agreement_report(table, alpha_metric=config.alpha_metric)
    print(report_to_text(report), end="")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "agreement.csv").write_text(report_to_csv(report),
                                               encoding="utf-8")
        (out_dir / "agreement.txt").write_text(report_to_text(report),
                                               encoding="utf-8")
        _echo_config(config, out_dir)
    return 0


def _load_embeddings_arg(args):
    if args.embeddings:
        return load_text_embeddings(args.embeddings)
    return None


def cmd_train(args) -> int:
    config = _effective_config(args, lr=args.lr, epochs=args.epochs,
                               l2=args.l2, train_seed=args.train_seed,
                               balanced=True if args.balanced else None)
    manifest = load_manifest(args.manifest)
    examples = build_examples(manifest, args.features, modality=args.modality,
                              embeddings=_load_embeddings_arg(args),
                              split="train")
    if not examples:
        raise LaughCorpusError("no clips with split=train; run assign_split")
    model = train(examples, config.train_config())
    model.feature_layout["modality"] = args.modality
    out = Path(args.out)
    save_model(model, out)
    _echo_config(config, out)
    print(f"trained on {len(examples)} examples -> {out}")
    return 0


def cmd_eval(args) -> int:
    config = _effective_config(args)
    manifest = load_manifest(args.manifest)
    model = load_model(args.model)
    modality = args.modality or model.feature_layout.get("modality", "audio")
    examples = build_examples(manifest, args.features, modality=modality,
                              embeddings=_load_embeddings_arg(args),
                              split="test")
    if not examples:
        raise LaughCorpusError("empty test split; run assign_split")
    result = evaluate(model, examples)
    print(f"qwk: {result.qwk:.6f}")
    print(f"accuracy: {result.accuracy:.6f}")
    print("confusion (rows = automatic rating, cols = predicted):")
    for row in result.confusion.counts:
        print("  " + " ".join(f"{int(v):4d}" for v in row))
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "metrics.csv").write_text(eval_metrics_csv(result),
                                             encoding="utf-8")
        (out_dir / "confusion.csv").write_text(confusion_csv(result.confusion),
                                               encoding="utf-8")
        _echo_config(config, out_dir)
    return 0


def cmd_report(args) -> int:
    config = _effective_config(args)
    manifest = load_manifest(args.manifest)
    print(run_report_text(manifest), end="")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.csv").write_text(run_report_csv(manifest),
                                            encoding="utf-8")
        (out_dir / "report.txt").write_text(run_report_text(manifest),
                                            encoding="utf-8")
        _echo_config(config, out_dir)
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "detect": cmd_detect,
    "score": cmd_score,
    "mute": cmd_mute,
    "features": cmd_features,
    "pipeline": cmd_pipeline,
    "agree": cmd_agree,
    "train": cmd_train,
    "eval": cmd_eval,
    "report": cmd_report,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except LaughCorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
