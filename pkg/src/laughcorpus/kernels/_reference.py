"""Pure numpy implementations of the hot kernels.

This module is the fallback backend and the behavioural reference for the
compiled core: both expose the same four functions with identical
signatures and (up to floating-point summation order) identical results.
Inputs arrive pre-padded/validated from the callers in ``features`` and
``laughter``; no argument checking happens here.
"""

import numpy as np

BACKEND_NAME = "python"


def stft_magnitude(padded: np.ndarray, n_frames: int, frame_len: int,
                   hop: int, window: np.ndarray) -> np.ndarray:
    """Magnitude spectra of windowed frames taken from a padded signal.

    Frame k covers padded[k*hop : k*hop + frame_len]. Returns an
    (n_frames, frame_len//2 + 1) float64 array.
    """
    stride = padded.strides[0]
    frames = np.lib.stride_tricks.as_strided(
        padded, shape=(n_frames, frame_len), strides=(hop * stride, stride))
    return np.abs(np.fft.rfft(frames * window, axis=1))


def frame_rms(padded: np.ndarray, n_frames: int, frame_len: int,
              hop: int) -> np.ndarray:
    """Per-frame root-mean-square over the same framing as stft_magnitude."""
    stride = padded.strides[0]
    frames = np.lib.stride_tricks.as_strided(
        padded, shape=(n_frames, frame_len), strides=(hop * stride, stride))
    return np.sqrt(np.mean(frames * frames, axis=1))


def detect_runs(probs: np.ndarray, threshold: float) -> np.ndarray:
    """Maximal runs of consecutive frames with probs >= threshold.

    Returns an (n_runs, 2) int64 array of [first_frame, last_frame + 1).
    """
    hot = probs >= threshold
    if not hot.any():
        return np.empty((0, 2), dtype=np.int64)
    edges = np.diff(hot.astype(np.int8))
    starts = np.flatnonzero(edges == 1) + 1
    ends = np.flatnonzero(edges == -1) + 1
    if hot[0]:
        starts = np.concatenate(([0], starts))
    if hot[-1]:
        ends = np.concatenate((ends, [hot.size]))
    return np.stack([starts, ends], axis=1).astype(np.int64)


def mute_with_fades(x: np.ndarray, starts: np.ndarray, ends: np.ndarray,
                    fade_n: int) -> np.ndarray:
    """Zero sample ranges [start, end), with linear declick ramps.

    Ramps are synthesized line segments anchored at the nearest sample
    outside the range (never touched by any mute), ramping to zero on the
    way in and back up on the way out. Because every written value is a
    function of untouched samples only, muting is exactly idempotent.
    Ranges must be sorted, disjoint and non-adjacent.
    """
    y = x.copy()
    n_total = x.shape[0]
    for s, e in zip(starts, ends):
        y[s:e] = 0.0
        f = min(fade_n, (e - s) // 2)
        if f <= 0:
            continue
        k = np.arange(1.0, f + 1.0)
        left = x[s - 1] if s > 0 else 0.0
        right = x[e] if e < n_total else 0.0
        y[s:s + f] = left * (1.0 - k / (f + 1.0))
        y[e - f:e] = right * (k / (f + 1.0))
    return y
