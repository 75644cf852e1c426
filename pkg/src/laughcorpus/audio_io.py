"""WAV (RIFF) reading and writing.

Supports the two input encodings the pipeline accepts: 16-bit PCM and
32-bit IEEE float, mono or stereo (stereo is downmixed by averaging the
channels). Output is always PCM16: float samples are clipped to [-1, 1]
and quantized with round-half-away-from-zero at scale 32767. PCM16 reads
divide by 32768 (the usual decoder convention).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AudioFormatError

_FMT_PCM = 1
_FMT_FLOAT = 3
_FMT_EXTENSIBLE = 0xFFFE


@dataclass
class WavData:
    samples: np.ndarray  # float64 mono in [-1, 1] (nominal)
    sample_rate: int

    @property
    def duration_s(self) -> float:
        return self.samples.shape[0] / self.sample_rate


def read_wav(path: str | Path) -> WavData:
    """Decode a WAV file to a mono float64 buffer.

    Raises:
        AudioFormatError: not a RIFF/WAVE file, unsupported encoding, or
            truncated chunk data.
    """
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise AudioFormatError(f"{path}: cannot read file: {exc}") from exc
    if len(blob) < 12 or blob[0:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise AudioFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        chunk_id = blob[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", blob, pos + 4)
        body = blob[pos + 8:pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise AudioFormatError(f"{path}: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise AudioFormatError(
                    f"{path}: data chunk truncated "
                    f"({len(body)} of {chunk_size} bytes)")
            data = body
        pos += 8 + chunk_size + (chunk_size & 1)

    if fmt is None:
        raise AudioFormatError(f"{path}: missing fmt chunk")
    if data is None:
        raise AudioFormatError(f"{path}: missing data chunk")

    audio_format, n_channels, sample_rate, _, _, bits = fmt
    if audio_format == _FMT_EXTENSIBLE:
        # WAVE_FORMAT_EXTENSIBLE wraps the real format; PCM16/float32 only
        audio_format = _FMT_PCM if bits == 16 else _FMT_FLOAT
    if n_channels not in (1, 2):
        raise AudioFormatError(f"{path}: {n_channels} channels not supported")
    if sample_rate <= 0:
        raise AudioFormatError(f"{path}: invalid sample rate {sample_rate}")

    if audio_format == _FMT_PCM and bits == 16:
        raw = np.frombuffer(data[:len(data) - len(data) % 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif audio_format == _FMT_FLOAT and bits == 32:
        raw = np.frombuffer(data[:len(data) - len(data) % 4], dtype="<f4")
        samples = raw.astype(np.float64)
    else:
        raise AudioFormatError(
            f"{path}: unsupported encoding (format {audio_format}, {bits}-bit); "
            "expected PCM16 or float32")

    if n_channels == 2:
        usable = samples.shape[0] - samples.shape[0] % 2
        samples = samples[:usable].reshape(-1, 2).mean(axis=1)
    if samples.shape[0] == 0:
        raise AudioFormatError(f"{path}: no audio samples")
    return WavData(samples=samples, sample_rate=sample_rate)


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    """Clip to [-1, 1] and quantize with round-half-away-from-zero."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    scaled = clipped * 32767.0
    rounded = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    return rounded.astype(np.int16)


def write_wav_pcm16(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Write a mono PCM16 WAV file."""
    pcm = quantize_pcm16(samples)
    payload = pcm.astype("<i2").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, _FMT_PCM, 1, sample_rate,
        sample_rate * 2, 2, 16,
        b"data", len(payload),
    )
    Path(path).write_bytes(header + payload)


def resample(samples: np.ndarray, sr_from: int, sr_to: int) -> np.ndarray:
    """Polyphase resampling with a Kaiser windowed-sinc filter."""
    if sr_from == sr_to:
        return np.asarray(samples, dtype=np.float64)
    from math import gcd

    from scipy.signal import resample_poly

    g = gcd(sr_from, sr_to)
    return resample_poly(np.asarray(samples, dtype=np.float64),
                         sr_to // g, sr_from // g)
