"""Laughter probability tracks, interval detection, and muting."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import LaughCorpusError, ProbTrackError
from .features import FrameParams, pad_for_frames, stft_magnitude

DEFAULT_THRESHOLD = 0.7
DEFAULT_MIN_DURATION_S = 0.1
DEFAULT_FADE_MS = 10.0


@dataclass
class LaughProbTrack:
    """Per-frame laughter probabilities; frame k covers [k*hop, (k+1)*hop)."""

    frame_hop_s: float
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.frame_hop_s <= 0:
            raise ProbTrackError(f"frame_hop_s must be > 0, got {self.frame_hop_s}")
        if self.probs.ndim != 1 or self.probs.size == 0:
            raise ProbTrackError("empty track")
        bad = np.flatnonzero((self.probs < 0) | (self.probs > 1) |
                             ~np.isfinite(self.probs))
        if bad.size:
            raise ProbTrackError(
                f"probability {self.probs[bad[0]]} at frame {bad[0]} outside [0, 1]")


@dataclass(frozen=True)
class LaughInterval:
    """A detected [start_s, end_s) laughter span."""

    start_s: float
    end_s: float

    def __post_init__(self):
        if self.start_s < 0 or self.end_s <= self.start_s:
            raise LaughCorpusError(
                f"invalid interval [{self.start_s}, {self.end_s})")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


def load_prob_track(path: str | Path) -> LaughProbTrack:
    """Read a probability track file (JSON: frame_hop_s, probs).

    Raises:
        ProbTrackError: missing keys, malformed JSON, empty track, or a
            value outside [0, 1] (the frame index is reported).
    """
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ProbTrackError(f"{path}: cannot parse prob track: {exc}") from exc
    if not isinstance(obj, dict) or "frame_hop_s" not in obj or "probs" not in obj:
        raise ProbTrackError(f"{path}: prob track needs frame_hop_s and probs keys")
    try:
        return LaughProbTrack(frame_hop_s=float(obj["frame_hop_s"]),
                              probs=np.asarray(obj["probs"], dtype=np.float64))
    except (TypeError, ValueError) as exc:
        raise ProbTrackError(f"{path}: bad prob track values: {exc}") from exc


def save_prob_track(track: LaughProbTrack, path: str | Path) -> None:
    obj = {"frame_hop_s": track.frame_hop_s, "probs": track.probs.tolist()}
    Path(path).write_text(json.dumps(obj), encoding="utf-8")


# logistic on: w_rms * rms_zscore + w_flat * spectral_flatness + bias.
# bias < 0 keeps digital silence below 0.5; the flatness weight dominates
# the loudness term so broadband bursts outrank tonal content at equal
# level even against per-frame RMS jitter.
_HEUR_W_RMS = 0.5
_HEUR_W_FLAT = 6.0
_HEUR_BIAS = -3.5
_TINY = 1e-12


def heuristic_probs(audio: np.ndarray, sample_rate: int,
                    params: FrameParams | None = None) -> LaughProbTrack:
    """Crude laughter probability track straight from the audio.

    A stand-in for a real laughter detector when no track file is
    available; deterministic, framed exactly like the feature extractor.

    Raises:
        LaughCorpusError: empty audio.
    """
    audio = np.asarray(audio, dtype=np.float64)
    if audio.size == 0:
        raise LaughCorpusError("cannot compute heuristic probs of empty audio")
    if params is None:
        params = FrameParams(sample_rate=sample_rate)

    mag = stft_magnitude(audio, params)
    power = mag * mag
    mean_power = power.mean(axis=1)
    # geometric/arithmetic power ratio; zero-power frames pin to 0
    flatness = np.where(
        mean_power > _TINY,
        np.exp(np.mean(np.log(power + _TINY), axis=1)) / (mean_power + _TINY),
        0.0,
    )

    padded, n_frames = pad_for_frames(audio, params)
    rms = kernels.frame_rms(padded, n_frames, params.frame_len, params.hop)
    sd = rms.std()
    z = (rms - rms.mean()) / sd if sd > 0 else np.zeros_like(rms)

    logits = _HEUR_W_RMS * z + _HEUR_W_FLAT * flatness + _HEUR_BIAS
    probs = 1.0 / (1.0 + np.exp(-logits))
    return LaughProbTrack(frame_hop_s=params.hop / params.sample_rate, probs=probs)


def detect_intervals(track: LaughProbTrack,
                     threshold: float = DEFAULT_THRESHOLD,
                     min_duration_s: float = DEFAULT_MIN_DURATION_S) -> list[LaughInterval]:
    """Threshold the track into maximal runs and drop the short ones.

    A run of frames with prob >= threshold becomes
    [first_frame*hop, (last_frame+1)*hop); runs shorter than
    min_duration_s are discarded. Output is sorted and disjoint.
    """
    if not 0 < threshold <= 1:
        raise LaughCorpusError(f"threshold must be in (0, 1], got {threshold}")
    if min_duration_s < 0:
        raise LaughCorpusError(f"min_duration_s must be >= 0, got {min_duration_s}")
    hop = track.frame_hop_s
    runs = kernels.detect_runs(track.probs, threshold)
    intervals = []
    for first, last_plus1 in runs:
        length = (last_plus1 - first) * hop
        if length >= min_duration_s:
            intervals.append(LaughInterval(start_s=first * hop,
                                           end_s=last_plus1 * hop))
    return intervals


def total_laugh_duration(intervals: list[LaughInterval]) -> float:
    return float(sum(iv.duration_s for iv in intervals))


def clamp_intervals(intervals: list[LaughInterval],
                    duration_s: float) -> list[LaughInterval]:
    """Intersect intervals with [0, duration_s], dropping empty leftovers.

    Centered framing can push the last frame past the clip end; clamping
    keeps laugh totals within the clip duration.
    """
    out = []
    for iv in intervals:
        start = max(iv.start_s, 0.0)
        end = min(iv.end_s, duration_s)
        if end > start:
            out.append(LaughInterval(start_s=start, end_s=end))
    return out


def mute_intervals(audio: np.ndarray, sample_rate: int,
                   intervals: list[LaughInterval],
                   fade_ms: float = DEFAULT_FADE_MS) -> np.ndarray:
    """Zero the samples inside each interval, with declick ramps.

    Samples strictly inside an interval (beyond the fade ramps) become
    exactly 0; everything outside is returned bit-identical; the operation
    is exactly idempotent (ramps are line segments anchored at untouched
    neighbouring samples, not gain curves).

    Raises:
        LaughCorpusError: an interval extends past the audio, or fade_ms < 0.
    """
    audio = np.asarray(audio, dtype=np.float64)
    if fade_ms < 0:
        raise LaughCorpusError(f"fade_ms must be >= 0, got {fade_ms}")
    if not intervals:
        return audio.copy()

    n = audio.shape[0]
    duration = n / sample_rate
    spans = []
    for iv in intervals:
        if iv.end_s > duration + 0.5 / sample_rate:
            raise LaughCorpusError(
                f"interval [{iv.start_s}, {iv.end_s}) exceeds audio length {duration}")
        start = _sample_index(iv.start_s, sample_rate)
        end = min(_sample_index(iv.end_s, sample_rate), n)
        if end > start:
            spans.append((start, end))
    spans.sort()

    # merge touching/overlapping spans so ramp anchors stay untouched
    merged: list[list[int]] = []
    for start, end in spans:
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    if not merged:
        return audio.copy()

    starts = np.array([m[0] for m in merged], dtype=np.int64)
    ends = np.array([m[1] for m in merged], dtype=np.int64)
    fade_n = int(round(fade_ms * sample_rate / 1000.0))
    return kernels.mute_with_fades(audio, starts, ends, fade_n)


def _sample_index(t_s: float, sample_rate: int) -> int:
    return int(math.floor(t_s * sample_rate + 0.5))
