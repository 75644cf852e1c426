"""Per-frame audio features: STFT magnitude, mel spectrogram, MFCC, RMS.

Every clip reduces to a fixed-size matrix: per-frame
[n_mfcc MFCCs | 1 RMS | n_mels_spec log-mel bands] rows (33 dims at the
defaults), truncated or zero-padded to max_frames rows.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import FeatureFileError, LaughCorpusError

FEATURE_MAGIC = b"LFX1"


@dataclass(frozen=True)
class FrameParams:
    """Framing and filterbank configuration.

    The MFCC/RMS/mel split is configurable, but the total per-frame width
    n_mfcc + 1 + n_mels_spec must stay 33.
    """

    sample_rate: int = 22050
    frame_len: int = 2048
    hop: int = 512
    n_mels_spec: int = 12
    n_mfcc: int = 20
    n_mels_internal: int = 40
    log_floor: float = 1e-10
    max_frames: int = 8000

    def __post_init__(self):
        if min(self.sample_rate, self.frame_len, self.hop, self.n_mels_spec,
               self.n_mfcc, self.n_mels_internal, self.max_frames) <= 0:
            raise LaughCorpusError("all frame parameters must be positive")
        if self.hop > self.frame_len:
            raise LaughCorpusError(
                f"hop {self.hop} must not exceed frame_len {self.frame_len}")
        if self.n_mfcc > self.n_mels_internal:
            raise LaughCorpusError(
                f"n_mfcc {self.n_mfcc} must not exceed n_mels_internal "
                f"{self.n_mels_internal}")
        if self.log_floor <= 0:
            raise LaughCorpusError("log_floor must be positive")
        if self.n_dims != 33:
            raise LaughCorpusError(
                f"feature width must be 33, got {self.n_mfcc} + 1 + "
                f"{self.n_mels_spec} = {self.n_dims}")

    @property
    def n_dims(self) -> int:
        return self.n_mfcc + 1 + self.n_mels_spec

    @property
    def n_bins(self) -> int:
        return self.frame_len // 2 + 1


@dataclass
class FeatureMatrix:
    """max_frames x 33 float32 matrix; rows past n_frames_real are zero."""

    n_frames_real: int
    data: np.ndarray

    def validate(self) -> None:
        if self.data.ndim != 2:
            raise LaughCorpusError("feature data must be 2-D")
        if not 0 < self.n_frames_real <= self.data.shape[0]:
            raise LaughCorpusError(
                f"n_frames_real {self.n_frames_real} outside "
                f"(0, {self.data.shape[0]}]")
        if not np.isfinite(self.data).all():
            raise LaughCorpusError("feature data contains NaN/Inf")
        if self.n_frames_real < self.data.shape[0] and \
                np.any(self.data[self.n_frames_real:]):
            raise LaughCorpusError("padding rows must be zero")


def pad_for_frames(audio: np.ndarray, params: FrameParams) -> tuple[np.ndarray, int]:
    """Center-pad audio for framing; returns (padded, n_frames).

    Frames are centered every hop samples: frame k of the padded signal
    starts at k*hop and covers frame_len samples. Audio shorter than one
    frame is zero-extended to frame_len first; then n_frames =
    1 + ceil(len/hop), with reflect padding of frame_len//2 on the left
    and enough on the right to complete the last frame.
    """
    audio = np.ascontiguousarray(audio, dtype=np.float64)
    if audio.ndim != 1 or audio.size == 0:
        raise LaughCorpusError("audio must be a non-empty 1-D buffer")
    if audio.size < params.frame_len:
        audio = np.concatenate(
            [audio, np.zeros(params.frame_len - audio.size)])
    n = audio.size
    n_frames = 1 + math.ceil(n / params.hop)
    pad_left = params.frame_len // 2
    required = (n_frames - 1) * params.hop + params.frame_len
    pad_right = required - pad_left - n
    padded = np.pad(audio, (pad_left, pad_right), mode="reflect")
    return padded, n_frames


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft_magnitude(audio: np.ndarray, params: FrameParams) -> np.ndarray:
    """Hann-windowed centered STFT magnitudes, (n_frames, frame_len//2+1)."""
    padded, n_frames = pad_for_frames(audio, params)
    window = hann_window(params.frame_len)
    return kernels.stft_magnitude(padded, n_frames, params.frame_len,
                                  params.hop, window)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, frame_len: int, sample_rate: int) -> np.ndarray:
    """Triangular peak-1 filters on the HTK mel scale, spanning 0..sr/2."""
    n_bins = frame_len // 2 + 1
    fft_freqs = np.arange(n_bins) * (sample_rate / frame_len)
    mel_pts = np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    fb = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        left, center, right = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        rise = (fft_freqs - left) / (center - left)
        fall = (right - fft_freqs) / (right - center)
        fb[m] = np.maximum(0.0, np.minimum(rise, fall))
    return fb


def mel_band_centers_hz(n_mels: int, sample_rate: int) -> np.ndarray:
    mel_pts = np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_mels + 2)
    return mel_to_hz(mel_pts[1:-1])


def mel_spectrogram(stft_mag: np.ndarray, params: FrameParams) -> np.ndarray:
    """Log mel-band power: power spectrum -> filterbank -> log(max(., floor))."""
    fb = mel_filterbank(params.n_mels_spec, params.frame_len, params.sample_rate)
    power = stft_mag * stft_mag
    return np.log(np.maximum(power @ fb.T, params.log_floor))


def dct_ortho_matrix(n_out: int, n_in: int) -> np.ndarray:
    """First n_out rows of the orthonormal DCT-II basis over n_in points."""
    k = np.arange(n_out)[:, None]
    n = np.arange(n_in)[None, :]
    basis = np.cos(np.pi * k * (2 * n + 1) / (2.0 * n_in))
    basis *= np.sqrt(2.0 / n_in)
    basis[0] *= np.sqrt(0.5)
    return basis


def mfcc(stft_mag: np.ndarray, params: FrameParams) -> np.ndarray:
    """MFCCs: orthonormal DCT-II of the internal log mel-power spectrum."""
    fb = mel_filterbank(params.n_mels_internal, params.frame_len,
                        params.sample_rate)
    power = stft_mag * stft_mag
    log_mel = np.log(np.maximum(power @ fb.T, params.log_floor))
    basis = dct_ortho_matrix(params.n_mfcc, params.n_mels_internal)
    return log_mel @ basis.T


def rms_energy(audio: np.ndarray, params: FrameParams) -> np.ndarray:
    """Per-frame RMS over the same centered frames as the STFT, (n, 1)."""
    padded, n_frames = pad_for_frames(audio, params)
    rms = kernels.frame_rms(padded, n_frames, params.frame_len, params.hop)
    return rms[:, None]


def extract_features(audio: np.ndarray,
                     params: FrameParams | None = None) -> FeatureMatrix:
    """Full feature matrix: [mfcc | rms | mel], padded/truncated to max_frames."""
    if params is None:
        params = FrameParams()
    mag = stft_magnitude(audio, params)
    rows = np.concatenate(
        [mfcc(mag, params), rms_energy(audio, params),
         mel_spectrogram(mag, params)], axis=1)
    n_real = min(rows.shape[0], params.max_frames)
    data = np.zeros((params.max_frames, params.n_dims), dtype=np.float32)
    data[:n_real] = rows[:n_real].astype(np.float32)
    matrix = FeatureMatrix(n_frames_real=n_real, data=data)
    matrix.validate()
    return matrix


def extract_features_from_wav(path: str | Path,
                              params: FrameParams | None = None) -> FeatureMatrix:
    """Decode (and resample if needed) a WAV file, then extract features."""
    from .audio_io import read_wav, resample

    if params is None:
        params = FrameParams()
    wav = read_wav(path)
    samples = resample(wav.samples, wav.sample_rate, params.sample_rate)
    return extract_features(samples, params)


def write_features(matrix: FeatureMatrix, path: str | Path) -> None:
    """Binary feature file: magic, u32 dims header, float32 row-major data."""
    matrix.validate()
    max_frames, n_dims = matrix.data.shape
    header = FEATURE_MAGIC + struct.pack(
        "<III", matrix.n_frames_real, max_frames, n_dims)
    payload = np.ascontiguousarray(matrix.data, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def read_features(path: str | Path) -> FeatureMatrix:
    """Read a feature file written by write_features.

    Raises:
        FeatureFileError: wrong magic, inconsistent header, or truncated
            payload.
    """
    blob = Path(path).read_bytes()
    if len(blob) < 16:
        raise FeatureFileError(f"{path}: too short for a feature file header")
    if blob[:4] != FEATURE_MAGIC:
        raise FeatureFileError(
            f"{path}: bad magic {blob[:4]!r}, expected {FEATURE_MAGIC!r}")
    n_real, max_frames, n_dims = struct.unpack_from("<III", blob, 4)
    expected = max_frames * n_dims * 4
    payload = blob[16:]
    if len(payload) < expected:
        raise FeatureFileError(
            f"{path}: truncated payload ({len(payload)} of {expected} bytes)")
    if len(payload) > expected:
        raise FeatureFileError(
            f"{path}: trailing bytes after payload ({len(payload) - expected})")
    data = np.frombuffer(payload, dtype="<f4").reshape(max_frames, n_dims).copy()
    matrix = FeatureMatrix(n_frames_real=n_real, data=data)
    matrix.validate()
    return matrix
