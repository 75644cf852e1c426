#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the numpy fallback.

Times the four hot kernels on a synthetic 2-minute clip at the default
framing, plus whole-clip feature extraction per backend. Run:

    python3 benchmarks/bench_kernels.py [--seconds 120] [--repeats 3]
"""

import argparse
import time

import numpy as np

from laughcorpus.kernels import available_backends
from laughcorpus.features import FrameParams, extract_features, hann_window, pad_for_frames


def best_of(repeats, fn, *args):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seconds", type=float, default=120.0)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")

    params = FrameParams()
    rng = np.random.default_rng(0)
    audio = rng.standard_normal(int(args.seconds * params.sample_rate)) * 0.3
    padded, n_frames = pad_for_frames(audio, params)
    window = hann_window(params.frame_len)
    probs = rng.random(n_frames)
    starts = np.sort(rng.choice(audio.size - 22050, size=20, replace=False)).astype(np.int64)
    ends = (starts + 11025).astype(np.int64)

    tasks = {
        "stft_magnitude": lambda b: b.stft_magnitude(
            padded, n_frames, params.frame_len, params.hop, window),
        "frame_rms": lambda b: b.frame_rms(
            padded, n_frames, params.frame_len, params.hop),
        "detect_runs": lambda b: b.detect_runs(probs, 0.7),
        "mute_with_fades": lambda b: b.mute_with_fades(audio, starts, ends, 220),
    }

    print(f"\n{args.seconds:.0f} s clip, {n_frames} frames, "
          f"frame_len {params.frame_len}, hop {params.hop}\n")
    header = f"{'kernel':<18}" + "".join(f"{name:>12}" for name in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name, task in tasks.items():
        times = {}
        outputs = {}
        for backend_name, module in backends.items():
            times[backend_name], outputs[backend_name] = \
                best_of(args.repeats, task, module)
        row = f"{name:<18}" + "".join(
            f"{times[b] * 1000:>10.1f}ms" for b in backends)
        if len(backends) == 2:
            py, cy = times["python"], times["cython"]
            row += f"{py / cy:>9.2f}x"
            values = list(outputs.values())
            assert np.allclose(values[0], values[1], rtol=1e-9, atol=1e-12)
        print(row)

    # end-to-end extraction per backend (set via env in a fresh process to
    # switch for real use; here we monkeypatch the dispatcher)
    import laughcorpus.kernels as kernels
    print()
    for backend_name, module in backends.items():
        original = kernels._active
        kernels._active = module
        try:
            elapsed, _ = best_of(args.repeats, extract_features, audio, params)
        finally:
            kernels._active = original
        print(f"extract_features [{backend_name:<7}] {elapsed * 1000:8.1f}ms")


if __name__ == "__main__":
    main()
