"""Per-clip pipeline stages and the end-to-end runner.

Stages are pure per clip, so they run in a worker pool (--jobs) and merge
in sorted clip-id order: outputs never depend on scheduling.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .audio_io import read_wav, resample, write_wav_pcm16
from .config import PipelineConfig, save_config
from .corpus import CorpusManifest, assign_split, export_table, save_manifest
from .errors import LaughCorpusError
from .features import extract_features, write_features
from .laughter import (LaughInterval, clamp_intervals, detect_intervals,
                       heuristic_probs, load_prob_track, mute_intervals,
                       total_laugh_duration)

logger = logging.getLogger(__name__)


def _worker_count(jobs: int) -> int:
    return jobs if jobs > 0 else (os.cpu_count() or 1)


def _pmap(fn, items, jobs: int):
    """Map preserving item order; processes when jobs allows."""
    if _worker_count(jobs) <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(_worker_count(jobs), len(items))) as pool:
        return list(pool.map(fn, items))


class _DetectTask:
    """Picklable per-clip laughter detection."""

    def __init__(self, tracks_dir, config: PipelineConfig):
        self.tracks_dir = tracks_dir
        self.config = config

    def __call__(self, clip_args):
        clip_id, audio_path, duration_s = clip_args
        if self.tracks_dir is not None:
            track = load_prob_track(Path(self.tracks_dir) / f"{clip_id}.json")
        else:
            wav = read_wav(audio_path)
            samples = resample(wav.samples, wav.sample_rate,
                               self.config.sample_rate)
            track = heuristic_probs(samples, self.config.sample_rate,
                                    self.config.frame_params())
        intervals = clamp_intervals(
            detect_intervals(track, threshold=self.config.threshold,
                             min_duration_s=self.config.min_duration_s),
            duration_s)
        return clip_id, [(iv.start_s, iv.end_s) for iv in intervals]


def detect_stage(manifest: CorpusManifest, config: PipelineConfig,
                 intervals_dir: str | Path, tracks_dir: str | Path | None = None,
                 use_heuristic: bool = False) -> CorpusManifest:
    """Fill laugh_total_s for every clip; write per-clip interval files.

    Raises:
        LaughCorpusError: neither tracks_dir nor use_heuristic given, or
            track files missing for some clips (ids listed).
    """
    if tracks_dir is None and not use_heuristic:
        raise LaughCorpusError("laughter detection needs a probability-track "
                               "directory or the heuristic fallback")
    # explicit detector output wins over the heuristic when both are given
    if tracks_dir is not None:
        missing = sorted(c.id for c in manifest.clips
                         if not (Path(tracks_dir) / f"{c.id}.json").is_file())
        if missing:
            raise LaughCorpusError(
                "missing probability tracks for clips: " + ", ".join(missing))

    intervals_dir = Path(intervals_dir)
    intervals_dir.mkdir(parents=True, exist_ok=True)
    task = _DetectTask(None if tracks_dir is None else str(tracks_dir), config)
    args = [(c.id, c.audio_path, c.duration_s)
            for c in sorted(manifest.clips, key=lambda c: c.id)]
    results = dict(_pmap(task, args, config.jobs))

    clips = []
    for clip in manifest.clips:
        pairs = results[clip.id]
        (intervals_dir / f"{clip.id}.json").write_text(
            json.dumps({"clip_id": clip.id, "intervals": pairs}) + "\n",
            encoding="utf-8")
        total = total_laugh_duration(
            [LaughInterval(start_s=s, end_s=e) for s, e in pairs])
        clips.append(replace(clip, laugh_total_s=total))
    return replace(manifest, clips=clips)


def load_intervals_file(path: str | Path) -> list[LaughInterval]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return [LaughInterval(start_s=s, end_s=e) for s, e in obj["intervals"]]


class _MuteTask:
    def __init__(self, intervals_dir, out_dir, fade_ms):
        self.intervals_dir = intervals_dir
        self.out_dir = out_dir
        self.fade_ms = fade_ms

    def __call__(self, clip_args):
        clip_id, audio_path = clip_args
        wav = read_wav(audio_path)
        intervals = load_intervals_file(
            Path(self.intervals_dir) / f"{clip_id}.json")
        muted = mute_intervals(wav.samples, wav.sample_rate, intervals,
                               fade_ms=self.fade_ms)
        out_path = Path(self.out_dir) / f"{clip_id}.wav"
        write_wav_pcm16(out_path, muted, wav.sample_rate)
        return clip_id, str(out_path)


def mute_stage(manifest: CorpusManifest, config: PipelineConfig,
               intervals_dir: str | Path, out_dir: str | Path) -> dict[str, str]:
    """Write laughter-muted PCM16 WAVs; returns clip_id -> path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    missing = sorted(c.id for c in manifest.clips
                     if not (Path(intervals_dir) / f"{c.id}.json").is_file())
    if missing:
        raise LaughCorpusError(
            "missing interval files for clips: " + ", ".join(missing))
    task = _MuteTask(str(intervals_dir), str(out_dir), config.fade_ms)
    args = [(c.id, c.audio_path) for c in sorted(manifest.clips, key=lambda c: c.id)]
    return dict(_pmap(task, args, config.jobs))


class _FeatureTask:
    def __init__(self, out_dir, config: PipelineConfig,
                 audio_overrides: dict[str, str] | None):
        self.out_dir = out_dir
        self.config = config
        self.audio_overrides = audio_overrides or {}

    def __call__(self, clip_args):
        clip_id, audio_path = clip_args
        path = self.audio_overrides.get(clip_id, audio_path)
        wav = read_wav(path)
        samples = resample(wav.samples, wav.sample_rate, self.config.sample_rate)
        matrix = extract_features(samples, self.config.frame_params())
        out_path = Path(self.out_dir) / f"{clip_id}.lfx"
        write_features(matrix, out_path)
        return clip_id, str(out_path)


def features_stage(manifest: CorpusManifest, config: PipelineConfig,
                   out_dir: str | Path,
                   audio_overrides: dict[str, str] | None = None) -> dict[str, str]:
    """Extract and write per-clip feature files; returns clip_id -> path.

    audio_overrides points clips at alternative audio (the muted WAVs).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    task = _FeatureTask(str(out_dir), config, audio_overrides)
    args = [(c.id, c.audio_path) for c in sorted(manifest.clips, key=lambda c: c.id)]
    return dict(_pmap(task, args, config.jobs))


def rating_histogram(manifest: CorpusManifest) -> list[int]:
    counts = [0] * 5
    for clip in manifest.clips:
        if clip.rating is not None:
            counts[clip.rating] += 1
    return counts


def run_report_csv(manifest: CorpusManifest) -> str:
    if manifest.stats is None:
        raise LaughCorpusError("manifest has no stats; score it first")
    lines = ["key,value"]
    lines.append(f"mu,{manifest.stats.mu!r}")
    lines.append(f"sigma,{manifest.stats.sigma!r}")
    lines.append(f"n_clips,{len(manifest.clips)}")
    for rating, count in enumerate(rating_histogram(manifest)):
        lines.append(f"rating_{rating}_count,{count}")
    return "\n".join(lines) + "\n"


def run_report_text(manifest: CorpusManifest) -> str:
    if manifest.stats is None:
        raise LaughCorpusError("manifest has no stats; score it first")
    hist = rating_histogram(manifest)
    lines = [
        f"clips: {len(manifest.clips)}",
        f"quotient mean: {manifest.stats.mu:.6f}",
        f"quotient standard deviation: {manifest.stats.sigma:.6f}",
        "rating histogram:",
    ]
    for rating, count in enumerate(hist):
        lines.append(f"  {rating}: {count}")
    return "\n".join(lines) + "\n"


def run_pipeline(manifest: CorpusManifest, config: PipelineConfig,
                 out_dir: str | Path, tracks_dir: str | Path | None = None,
                 use_heuristic: bool = False, mute: bool = True,
                 split: bool = True) -> CorpusManifest:
    """detect -> score -> (mute) -> features -> (split); write all artifacts."""
    from .scoring import score_corpus

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest = detect_stage(manifest, config, out_dir / "intervals",
                            tracks_dir=tracks_dir, use_heuristic=use_heuristic)
    logger.info("detected laughter for %d clips", len(manifest.clips))
    manifest = score_corpus(manifest, estimator=config.estimator)

    audio_overrides = None
    if mute:
        audio_overrides = mute_stage(manifest, config, out_dir / "intervals",
                                     out_dir / "muted")
        logger.info("muted %d clips", len(audio_overrides))
    features_stage(manifest, config, out_dir / "features",
                   audio_overrides=audio_overrides)

    if split:
        manifest = assign_split(manifest, train_fraction=config.train_fraction,
                                seed=config.split_seed,
                                stratified=config.stratified)

    save_manifest(manifest, out_dir / "manifest.json")
    export_table(manifest, out_dir / "scores.csv")
    (out_dir / "report.csv").write_text(run_report_csv(manifest), encoding="utf-8")
    (out_dir / "report.txt").write_text(run_report_text(manifest), encoding="utf-8")
    save_config(config, out_dir / "config_used.json")
    return manifest


def eval_metrics_csv(result) -> str:
    lines = ["metric,value",
             f"qwk,{result.qwk!r}",
             f"accuracy,{result.accuracy!r}"]
    return "\n".join(lines) + "\n"


def confusion_csv(cm) -> str:
    k = cm.n_categories
    rows = ["label," + ",".join(f"pred_{j}" for j in range(k))]
    for i in range(k):
        rows.append(f"label_{i}," + ",".join(str(int(v)) for v in cm.counts[i]))
    return "\n".join(rows) + "\n"
