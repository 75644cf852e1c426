"""Backend equivalence: every kernel agrees across python/cython."""

import os
import subprocess
import sys

import numpy as np
import pytest

from laughcorpus.kernels import available_backends

BACKENDS = list(available_backends().items())
PAIRED = pytest.mark.skipif(len(BACKENDS) < 2,
                            reason="compiled backend not built")


@pytest.fixture(params=[name for name, _ in BACKENDS])
def backend(request):
    return available_backends()[request.param]


def _random_padded(rng, n_frames, frame_len, hop):
    return rng.standard_normal((n_frames - 1) * hop + frame_len)


def test_stft_magnitude_matches_direct_dft(backend):
    rng = np.random.default_rng(7)
    frame_len, hop, n_frames = 64, 16, 5
    padded = _random_padded(rng, n_frames, frame_len, hop)
    window = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(frame_len) / frame_len)
    got = backend.stft_magnitude(padded, n_frames, frame_len, hop, window)
    for t in range(n_frames):
        frame = padded[t * hop:t * hop + frame_len] * window
        expected = np.abs(np.fft.rfft(frame))
        assert np.allclose(got[t], expected, atol=1e-12)


@PAIRED
def test_stft_cross_backend_agreement():
    py = available_backends()["python"]
    cy = available_backends()["cython"]
    rng = np.random.default_rng(11)
    for frame_len, hop in [(2048, 512), (256, 100), (16, 4)]:
        n_frames = 9
        padded = _random_padded(rng, n_frames, frame_len, hop)
        window = np.hamming(frame_len)
        a = py.stft_magnitude(padded, n_frames, frame_len, hop, window)
        b = cy.stft_magnitude(padded, n_frames, frame_len, hop, window)
        assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


@PAIRED
def test_rms_cross_backend_agreement():
    py = available_backends()["python"]
    cy = available_backends()["cython"]
    rng = np.random.default_rng(3)
    padded = _random_padded(rng, 20, 400, 160)
    a = py.frame_rms(padded, 20, 400, 160)
    b = cy.frame_rms(padded, 20, 400, 160)
    assert np.allclose(a, b, rtol=1e-12)


def test_frame_rms_constant_signal(backend):
    padded = np.full(1000, 0.5)
    rms = backend.frame_rms(padded, 4, 256, 128)
    assert np.allclose(rms, 0.5, rtol=0, atol=0)


def test_detect_runs_cases(backend):
    cases = [
        ([0.8, 0.9, 0.8], 0.7, [[0, 3]]),
        ([0.9, 0.5, 0.9], 0.7, [[0, 1], [2, 3]]),
        ([0.0, 0.0], 0.7, []),
        ([0.7, 0.7], 0.7, [[0, 2]]),  # inclusive threshold
        ([0.5, 0.9, 0.9, 0.5, 0.9], 0.7, [[1, 3], [4, 5]]),
    ]
    for probs, threshold, expected in cases:
        got = backend.detect_runs(np.array(probs, dtype=np.float64), threshold)
        assert got.tolist() == expected


@PAIRED
def test_detect_runs_cross_backend_identical():
    py = available_backends()["python"]
    cy = available_backends()["cython"]
    rng = np.random.default_rng(5)
    for _ in range(50):
        probs = rng.random(rng.integers(1, 400))
        threshold = rng.random()
        assert np.array_equal(py.detect_runs(probs, threshold),
                              cy.detect_runs(probs, threshold))


@PAIRED
def test_mute_cross_backend_bit_identical():
    py = available_backends()["python"]
    cy = available_backends()["cython"]
    rng = np.random.default_rng(9)
    x = rng.standard_normal(10_000)
    starts = np.array([0, 500, 7000], dtype=np.int64)
    ends = np.array([120, 2600, 10_000], dtype=np.int64)
    for fade in (0, 1, 37, 500):
        assert np.array_equal(py.mute_with_fades(x, starts, ends, fade),
                              cy.mute_with_fades(x, starts, ends, fade))


def test_mute_zeroes_and_identity(backend):
    rng = np.random.default_rng(2)
    x = rng.standard_normal(4000)
    starts = np.array([1000], dtype=np.int64)
    ends = np.array([2000], dtype=np.int64)
    fade = 100
    y = backend.mute_with_fades(x, starts, ends, fade)
    assert np.array_equal(y[:1000], x[:1000])
    assert np.array_equal(y[2000:], x[2000:])
    assert not y[1000 + fade:2000 - fade].any()


def test_mute_exact_idempotence(backend):
    rng = np.random.default_rng(4)
    x = rng.standard_normal(6000)
    starts = np.array([0, 2000], dtype=np.int64)
    ends = np.array([800, 4500], dtype=np.int64)
    once = backend.mute_with_fades(x, starts, ends, 220)
    twice = backend.mute_with_fades(once, starts, ends, 220)
    assert np.array_equal(once, twice)


def test_env_backend_selection():
    for name in available_backends():
        proc = subprocess.run(
            [sys.executable, "-c",
             "import laughcorpus; print(laughcorpus.KERNEL_BACKEND)"],
            env={**os.environ, "LAUGHCORPUS_BACKEND": name},
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.strip() == name


def test_bogus_backend_env_rejected():
    proc = subprocess.run(
        [sys.executable, "-c", "import laughcorpus"],
        env={**os.environ, "LAUGHCORPUS_BACKEND": "bogus"},
        capture_output=True, text=True)
    assert proc.returncode != 0
    assert "LAUGHCORPUS_BACKEND" in proc.stderr
