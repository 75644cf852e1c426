"""Shared fixtures: synthetic WAVs, prob tracks, and a fixture corpus."""

import json
import struct
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from laughcorpus.audio_io import write_wav_pcm16

FIXTURE_SR = 22050
FIXTURE_CLIP_S = 8.0
FIXTURE_HOP_S = 0.1


def make_tone(duration_s, freq=440.0, amp=0.3, sr=FIXTURE_SR):
    t = np.arange(int(round(duration_s * sr))) / sr
    return amp * np.sin(2 * np.pi * freq * t)


def write_tone_wav(path, duration_s, freq=440.0, amp=0.3, sr=FIXTURE_SR):
    write_wav_pcm16(path, make_tone(duration_s, freq=freq, amp=amp, sr=sr), sr)


def write_float32_wav(path, samples, sr=FIXTURE_SR):
    samples = np.asarray(samples, dtype="<f4")
    payload = samples.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, 3, 1, sr, sr * 4, 4, 32,
        b"data", len(payload),
    )
    Path(path).write_bytes(header + payload)


def write_prob_track(path, hot_frames, total_frames, hop_s=FIXTURE_HOP_S,
                     hot=0.95, cold=0.05):
    """Track with one hot run covering the first hot_frames frames."""
    probs = [hot if i < hot_frames else cold for i in range(total_frames)]
    Path(path).write_text(
        json.dumps({"frame_hop_s": hop_s, "probs": probs}), encoding="utf-8")


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory):
    """25-clip synthetic corpus: 20 standup tones with controlled laugh
    tracks (quotients k*0.05 for k=1..20) plus 5 zero-laughter clips.

    Returns a dict with audio dirs, track dir, and the designed laugh
    totals for oracle checks.
    """
    root = tmp_path_factory.mktemp("fixture_corpus")
    standup_dir = root / "standup"
    nonfunny_dir = root / "nonfunny"
    tracks_dir = root / "tracks"
    for d in (standup_dir, nonfunny_dir, tracks_dir):
        d.mkdir()

    total_frames = int(round(FIXTURE_CLIP_S / FIXTURE_HOP_S))
    laugh_totals = {}
    for k in range(1, 21):
        clip_id = f"standup_{k:02d}"
        write_tone_wav(standup_dir / f"{clip_id}.wav", FIXTURE_CLIP_S,
                       freq=200.0 + 40.0 * k)
        hot_frames = 4 * k  # quotient = k * 0.05
        write_prob_track(tracks_dir / f"{clip_id}.json", hot_frames,
                         total_frames)
        laugh_totals[clip_id] = hot_frames * FIXTURE_HOP_S
    for k in range(1, 6):
        clip_id = f"nonfunny_{k:02d}"
        write_tone_wav(nonfunny_dir / f"{clip_id}.wav", FIXTURE_CLIP_S,
                       freq=150.0 + 10.0 * k)
        write_prob_track(tracks_dir / f"{clip_id}.json", 0, total_frames)
        laugh_totals[clip_id] = 0.0

    return {
        "root": root,
        "standup_dir": standup_dir,
        "nonfunny_dir": nonfunny_dir,
        "tracks_dir": tracks_dir,
        "laugh_totals": laugh_totals,
        "duration_s": FIXTURE_CLIP_S,
    }


def fixture_manifest(fixture_corpus):
    """Ingest both fixture directories into one manifest."""
    from laughcorpus.corpus import CorpusManifest, ingest

    standup = ingest(fixture_corpus["standup_dir"], source_kind="standup")
    nonfunny = ingest(fixture_corpus["nonfunny_dir"], source_kind="nonfunny")
    assert not standup.errors and not nonfunny.errors
    clips = sorted(standup.manifest.clips + nonfunny.manifest.clips,
                   key=lambda c: c.id)
    manifest = CorpusManifest(clips=clips)
    manifest.validate()
    return manifest


def assert_wav_roundtrip_tolerance(a, b, bits=16):
    scale = 2 ** (bits - 1)
    assert np.max(np.abs(np.asarray(a) - np.asarray(b))) <= 1.0 / scale


def chirp(duration_s, sr=FIXTURE_SR, f0=100.0, f1=4000.0, amp=0.5):
    t = np.arange(int(round(duration_s * sr))) / sr
    phase = 2 * np.pi * (f0 * t + (f1 - f0) * t ** 2 / (2 * duration_s))
    return amp * np.sin(phase)
