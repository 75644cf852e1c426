"""Kernel backend selection.

The hot inner loops (STFT magnitudes, frame RMS, run detection, fade
muting) exist twice: a compiled Cython core and a pure numpy reference.
The compiled core is used when it imported cleanly; set
``LAUGHCORPUS_BACKEND`` to ``python`` or ``cython`` to force a choice
(``auto`` is the default). ``cython`` raises if the extension is missing.
"""

import os

from . import _reference

try:
    from . import _core
except ImportError:
    _core = None


def available_backends():
    """Name -> module map of importable backends."""
    backends = {"python": _reference}
    if _core is not None:
        backends["cython"] = _core
    return backends


def _select():
    requested = os.environ.get("LAUGHCORPUS_BACKEND", "auto").lower()
    if requested not in ("auto", "cython", "python"):
        raise ValueError(
            f"LAUGHCORPUS_BACKEND must be auto, cython or python, got {requested!r}")
    if requested == "python":
        return _reference
    if requested == "cython":
        if _core is None:
            raise ImportError(
                "LAUGHCORPUS_BACKEND=cython but the compiled core is not available")
        return _core
    return _core if _core is not None else _reference


_active = _select()
BACKEND = _active.BACKEND_NAME


def stft_magnitude(padded, n_frames, frame_len, hop, window):
    # compiled FFT is radix-2 only; other frame lengths go through numpy
    if _active is not _reference and frame_len & (frame_len - 1):
        return _reference.stft_magnitude(padded, n_frames, frame_len, hop, window)
    return _active.stft_magnitude(padded, n_frames, frame_len, hop, window)


def frame_rms(padded, n_frames, frame_len, hop):
    return _active.frame_rms(padded, n_frames, frame_len, hop)


def detect_runs(probs, threshold):
    return _active.detect_runs(probs, threshold)


def mute_with_fades(x, starts, ends, fade_n):
    return _active.mute_with_fades(x, starts, ends, fade_n)
