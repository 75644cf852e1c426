"""Clip collection: data model, ingestion, persistence, train/test split."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .audio_io import read_wav
from .errors import AudioFormatError, ManifestError, SchemaVersionError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

SOURCE_KINDS = ("standup", "nonfunny")
SPLITS = ("train", "test", "unassigned")

RATINGS = (0, 1, 2, 3, 4)


@dataclass
class Clip:
    """One audio segment plus derived laughter/score metadata."""

    id: str
    audio_path: str
    duration_s: float
    source_kind: str = "standup"
    transcript_path: str | None = None
    split: str = "unassigned"
    laugh_total_s: float | None = None
    quotient: float | None = None
    rating: int | None = None

    def validate(self) -> None:
        if not self.id:
            raise ManifestError("clip id must be non-empty")
        if self.source_kind not in SOURCE_KINDS:
            raise ManifestError(
                f"clip {self.id}: source_kind {self.source_kind!r} not in {SOURCE_KINDS}")
        if self.split not in SPLITS:
            raise ManifestError(
                f"clip {self.id}: split {self.split!r} not in {SPLITS}")
        if not self.duration_s > 0:
            raise ManifestError(f"clip {self.id}: duration_s must be > 0")
        if self.laugh_total_s is not None:
            if not 0 <= self.laugh_total_s <= self.duration_s:
                raise ManifestError(
                    f"clip {self.id}: laugh_total_s {self.laugh_total_s} outside "
                    f"[0, {self.duration_s}]")
        if self.quotient is not None and self.quotient < 0:
            raise ManifestError(f"clip {self.id}: quotient must be >= 0")
        if self.rating is not None and self.rating not in RATINGS:
            raise ManifestError(
                f"clip {self.id}: rating {self.rating} not in {RATINGS}")


@dataclass
class CorpusStatsRecord:
    """Corpus-level quotient statistics stored on the manifest."""

    mu: float
    sigma: float

    def validate(self) -> None:
        if self.mu < 0 or self.sigma < 0:
            raise ManifestError("stats mu and sigma must be >= 0")


@dataclass
class CorpusManifest:
    clips: list[Clip] = field(default_factory=list)
    stats: CorpusStatsRecord | None = None
    split_seed: int = 0
    schema_version: int = SCHEMA_VERSION

    def validate(self) -> None:
        seen = set()
        for clip in self.clips:
            clip.validate()
            if clip.id in seen:
                raise ManifestError(f"duplicate clip id {clip.id!r}")
            seen.add(clip.id)
        if self.stats is not None:
            self.stats.validate()

    def clip_by_id(self, clip_id: str) -> Clip:
        for clip in self.clips:
            if clip.id == clip_id:
                return clip
        raise ManifestError(f"no clip with id {clip_id!r}")


@dataclass
class IngestError:
    path: str
    message: str


@dataclass
class IngestResult:
    """Manifest plus the per-file errors collected along the way."""

    manifest: CorpusManifest
    errors: list[IngestError]


def ingest(audio_dir: str | Path, transcript_dir: str | Path | None = None,
           source_kind: str = "standup", jobs: int | None = None) -> IngestResult:
    """Build a manifest from a directory of WAV files.

    One Clip per readable WAV, id = file basename without extension,
    duration from the decoded sample count and rate. Transcripts are
    matched by basename when transcript_dir is given. Unreadable files
    become IngestError records; ingestion continues past them.

    Raises:
        ManifestError: audio_dir missing or containing no WAV files.
    """
    audio_dir = Path(audio_dir)
    if source_kind not in SOURCE_KINDS:
        raise ManifestError(f"source_kind {source_kind!r} not in {SOURCE_KINDS}")
    if not audio_dir.is_dir():
        raise ManifestError(f"audio directory not found: {audio_dir}")
    wav_paths = sorted(p for p in audio_dir.iterdir()
                       if p.is_file() and p.suffix.lower() == ".wav")
    if not wav_paths:
        raise ManifestError(f"no .wav files in {audio_dir}")

    transcript_dir = Path(transcript_dir) if transcript_dir is not None else None

    def _one(path: Path) -> Clip | IngestError:
        try:
            wav = read_wav(path)
        except AudioFormatError as exc:
            return IngestError(path=str(path), message=str(exc))
        transcript = None
        if transcript_dir is not None:
            candidate = transcript_dir / (path.stem + ".txt")
            if candidate.is_file():
                transcript = str(candidate)
        return Clip(
            id=path.stem,
            audio_path=str(path),
            duration_s=wav.samples.shape[0] / wav.sample_rate,
            source_kind=source_kind,
            transcript_path=transcript,
        )

    if jobs is not None and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one, wav_paths))
    else:
        results = [_one(p) for p in wav_paths]

    clips = sorted((r for r in results if isinstance(r, Clip)), key=lambda c: c.id)
    errors = [r for r in results if isinstance(r, IngestError)]
    for err in errors:
        logger.warning("ingest: skipping %s: %s", err.path, err.message)
    manifest = CorpusManifest(clips=clips)
    manifest.validate()
    return IngestResult(manifest=manifest, errors=errors)


def _round_half_away(x: float) -> int:
    return int(np.floor(x + 0.5)) if x >= 0 else -int(np.floor(-x + 0.5))


def assign_split(manifest: CorpusManifest, train_fraction: float = 0.7,
                 seed: int = 0, stratified: bool = True) -> CorpusManifest:
    """Assign train/test splits; pure in (clip ids, ratings, fraction, seed).

    One seeded permutation of the sorted clip ids defines the order in
    which clips fill the train quota: round_half_away(fraction * N)
    overall, or round_half_away(fraction * N_rating) per rating class when
    stratified. Input clip order never affects the result.

    Raises:
        ManifestError: train_fraction outside (0,1), or stratified with
            unrated clips (their ids are listed).
    """
    if not 0 < train_fraction < 1:
        raise ManifestError(f"train_fraction must be in (0,1), got {train_fraction}")
    if stratified:
        unrated = [c.id for c in manifest.clips if c.rating is None]
        if unrated:
            raise ManifestError(
                "stratified split requires rated clips; unrated: " + ", ".join(sorted(unrated)))

    ordered_ids = sorted(c.id for c in manifest.clips)
    rng = np.random.default_rng(seed)
    permuted = [ordered_ids[i] for i in rng.permutation(len(ordered_ids))]

    train_ids: set[str] = set()
    if stratified:
        by_rating: dict[int, list[str]] = {}
        rating_of = {c.id: c.rating for c in manifest.clips}
        for cid in permuted:
            by_rating.setdefault(rating_of[cid], []).append(cid)
        for rating, ids in by_rating.items():
            quota = _round_half_away(train_fraction * len(ids))
            train_ids.update(ids[:quota])
    else:
        quota = _round_half_away(train_fraction * len(permuted))
        train_ids.update(permuted[:quota])

    clips = [replace(c, split="train" if c.id in train_ids else "test")
             for c in manifest.clips]
    out = replace(manifest, clips=clips, split_seed=seed)
    out.validate()
    return out


_CLIP_FIELDS = ("id", "audio_path", "duration_s", "source_kind",
                "transcript_path", "split", "laugh_total_s", "quotient", "rating")
_OPTIONAL_CLIP_FIELDS = ("transcript_path", "laugh_total_s", "quotient", "rating")


def _clip_to_obj(clip: Clip) -> dict:
    obj = {
        "id": clip.id,
        "audio_path": clip.audio_path,
        "duration_s": clip.duration_s,
        "source_kind": clip.source_kind,
        "split": clip.split,
    }
    for name in _OPTIONAL_CLIP_FIELDS:
        value = getattr(clip, name)
        if value is not None:
            obj[name] = value
    return obj


def save_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    """Write the manifest as UTF-8 JSON (schema in the README)."""
    manifest.validate()
    obj = {
        "schema_version": manifest.schema_version,
        "split_seed": manifest.split_seed,
        "stats": (None if manifest.stats is None
                  else {"mu": manifest.stats.mu, "sigma": manifest.stats.sigma}),
        "clips": [_clip_to_obj(c) for c in manifest.clips],
    }
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_manifest(path: str | Path) -> CorpusManifest:
    """Load a manifest written by save_manifest.

    Raises:
        SchemaVersionError: schema_version differs from the supported one.
        ManifestError: malformed JSON or invalid field values.
    """
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(
            f"{path}: malformed manifest at line {exc.lineno} column {exc.colno}: "
            f"{exc.msg}") from exc
    except OSError as exc:
        raise ManifestError(f"{path}: cannot read manifest: {exc}") from exc
    if not isinstance(obj, dict):
        raise ManifestError(f"{path}: manifest root must be an object")
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(found=version, supported=SCHEMA_VERSION)

    clips = []
    for entry in obj.get("clips", []):
        unknown = set(entry) - set(_CLIP_FIELDS)
        if unknown:
            raise ManifestError(
                f"{path}: clip {entry.get('id', '?')!r} has unknown fields "
                f"{sorted(unknown)}")
        try:
            clips.append(Clip(**entry))
        except TypeError as exc:
            raise ManifestError(f"{path}: bad clip entry: {exc}") from exc

    stats_obj = obj.get("stats")
    stats = None
    if stats_obj is not None:
        if set(stats_obj) != {"mu", "sigma"}:
            raise ManifestError(f"{path}: stats must have exactly mu and sigma")
        stats = CorpusStatsRecord(mu=stats_obj["mu"], sigma=stats_obj["sigma"])

    manifest = CorpusManifest(
        clips=clips, stats=stats,
        split_seed=obj.get("split_seed", 0),
        schema_version=version,
    )
    manifest.validate()
    return manifest


def export_table(manifest: CorpusManifest, path: str | Path) -> None:
    """Write the per-clip table as RFC-4180 CSV (UTF-8, \\n line endings).

    Absent optional values become empty fields, not zeros.

    Raises:
        ManifestError: empty manifest.
    """
    if not manifest.clips:
        raise ManifestError("cannot export an empty manifest")

    def cell(value) -> str:
        return "" if value is None else str(value)

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "duration_s", "laugh_total_s", "quotient",
                         "rating", "split"])
        for clip in manifest.clips:
            writer.writerow([
                clip.id, cell(clip.duration_s), cell(clip.laugh_total_s),
                cell(clip.quotient), cell(clip.rating), clip.split,
            ])
