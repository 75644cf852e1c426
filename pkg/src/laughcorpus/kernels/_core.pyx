# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: fused STFT magnitude (radix-2 FFT), frame RMS,
threshold-run detection and fade muting.

Mirrors ``_reference`` function-for-function. The STFT here processes one
frame at a time through reusable scratch buffers, so no frames x frame_len
intermediate is ever materialized. frame_len must be a power of two; the
dispatcher routes other sizes to the numpy backend.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, cos, sin, sqrt
from libc.stdlib cimport free, malloc

BACKEND_NAME = "cython"


cdef void _fft_inplace(double* re, double* im, int n, int* rev,
                       double* wcos, double* wsin) noexcept nogil:
    """Iterative radix-2 decimation-in-time complex FFT."""
    cdef int i, j, size, half, stride, start, k, a, b
    cdef double tre, tim, c, s
    for i in range(n):
        j = rev[i]
        if j > i:
            tre = re[i]; re[i] = re[j]; re[j] = tre
            tim = im[i]; im[i] = im[j]; im[j] = tim
    size = 2
    while size <= n:
        half = size >> 1
        stride = n / size
        start = 0
        while start < n:
            for k in range(half):
                c = wcos[k * stride]
                s = wsin[k * stride]
                a = start + k
                b = a + half
                # twiddle exp(-i*theta) = c - i*s applied to (re[b], im[b])
                tre = c * re[b] + s * im[b]
                tim = c * im[b] - s * re[b]
                re[b] = re[a] - tre
                im[b] = im[a] - tim
                re[a] = re[a] + tre
                im[a] = im[a] + tim
            start += size
        size <<= 1


def stft_magnitude(double[::1] padded, int n_frames, int frame_len, int hop,
                   double[::1] window):
    cdef int n = frame_len
    cdef int n_bins = n // 2 + 1
    cdef int m = 0
    while (1 << m) < n:
        m += 1
    if (1 << m) != n:
        raise ValueError(f"compiled stft requires power-of-two frame_len, got {n}")

    out = np.empty((n_frames, n_bins), dtype=np.float64)
    cdef double[:, ::1] out_v = out

    cdef int* rev = <int*> malloc(n * sizeof(int))
    cdef double* wcos = <double*> malloc((n // 2) * sizeof(double))
    cdef double* wsin = <double*> malloc((n // 2) * sizeof(double))
    cdef double* re = <double*> malloc(n * sizeof(double))
    cdef double* im = <double*> malloc(n * sizeof(double))
    if rev == NULL or wcos == NULL or wsin == NULL or re == NULL or im == NULL:
        free(rev); free(wcos); free(wsin); free(re); free(im)
        raise MemoryError()

    cdef int i, k, t
    cdef Py_ssize_t base
    cdef double theta
    try:
        rev[0] = 0
        for i in range(1, n):
            rev[i] = (rev[i >> 1] >> 1) | ((i & 1) << (m - 1))
        for i in range(n // 2):
            theta = 2.0 * M_PI * i / n
            wcos[i] = cos(theta)
            wsin[i] = sin(theta)
        with nogil:
            for t in range(n_frames):
                base = <Py_ssize_t> t * hop
                for i in range(n):
                    re[i] = padded[base + i] * window[i]
                    im[i] = 0.0
                _fft_inplace(re, im, n, rev, wcos, wsin)
                for k in range(n_bins):
                    out_v[t, k] = sqrt(re[k] * re[k] + im[k] * im[k])
    finally:
        free(rev); free(wcos); free(wsin); free(re); free(im)
    return out


def frame_rms(double[::1] padded, int n_frames, int frame_len, int hop):
    out = np.empty(n_frames, dtype=np.float64)
    cdef double[::1] out_v = out
    cdef int t, i
    cdef Py_ssize_t base
    cdef double acc, v
    with nogil:
        for t in range(n_frames):
            base = <Py_ssize_t> t * hop
            acc = 0.0
            for i in range(frame_len):
                v = padded[base + i]
                acc += v * v
            out_v[t] = sqrt(acc / frame_len)
    return out


def detect_runs(double[::1] probs, double threshold):
    cdef Py_ssize_t n = probs.shape[0]
    cdef Py_ssize_t i, count = 0
    cdef bint inside = False
    for i in range(n):
        if probs[i] >= threshold:
            if not inside:
                count += 1
                inside = True
        else:
            inside = False

    out = np.empty((count, 2), dtype=np.int64)
    if count == 0:
        return out
    cdef cnp.int64_t[:, ::1] out_v = out
    cdef Py_ssize_t r = 0
    inside = False
    for i in range(n):
        if probs[i] >= threshold:
            if not inside:
                out_v[r, 0] = i
                inside = True
        else:
            if inside:
                out_v[r, 1] = i
                r += 1
                inside = False
    if inside:
        out_v[r, 1] = n
    return out


def mute_with_fades(double[::1] x, cnp.int64_t[::1] starts,
                    cnp.int64_t[::1] ends, int fade_n):
    y_arr = np.asarray(x).copy()
    cdef double[::1] y = y_arr
    cdef Py_ssize_t n_total = x.shape[0]
    cdef Py_ssize_t idx, s, e, f, j
    cdef double left, right
    for idx in range(starts.shape[0]):
        s = starts[idx]
        e = ends[idx]
        for j in range(s, e):
            y[j] = 0.0
        f = fade_n
        if f > (e - s) // 2:
            f = (e - s) // 2
        if f <= 0:
            continue
        left = x[s - 1] if s > 0 else 0.0
        right = x[e] if e < n_total else 0.0
        for j in range(f):
            y[s + j] = left * (1.0 - (j + 1.0) / (f + 1.0))
            y[e - f + j] = right * ((j + 1.0) / (f + 1.0))
    return y_arr
