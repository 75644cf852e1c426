"""STFT, mel, MFCC, RMS, feature assembly, and the binary file format."""

import math
import struct

import numpy as np
import pytest
import scipy.fft

from laughcorpus.errors import FeatureFileError, LaughCorpusError
from laughcorpus.features import (FrameParams, dct_ortho_matrix,
                                  extract_features, hann_window,
                                  mel_band_centers_hz, mel_filterbank,
                                  mel_spectrogram, mfcc, pad_for_frames,
                                  read_features, rms_energy, stft_magnitude,
                                  write_features)

from conftest import chirp, make_tone
from oracles import dct2_ortho_naive

SMALL = FrameParams(max_frames=64)


def test_frame_params_pin_width_33():
    with pytest.raises(LaughCorpusError, match="33"):
        FrameParams(n_mfcc=21)
    alt = FrameParams(n_mfcc=16, n_mels_spec=16)
    assert alt.n_dims == 33


class TestStft:
    def test_silence_is_zero(self):
        mag = stft_magnitude(np.zeros(22050), FrameParams())
        assert mag.shape[1] == 1025
        assert not mag.any()

    def test_tone_peaks_at_exact_bin(self):
        # 1378.125 Hz is exactly bin 128 of a 2048-point FFT at 22050 Hz
        params = FrameParams()
        freq = 128 * params.sample_rate / params.frame_len
        assert freq == 1378.125
        tone = make_tone(1.0, freq=freq, amp=1.0)
        mag = stft_magnitude(tone, params)
        interior = mag[4:-4]
        assert (interior.argmax(axis=1) == 128).all()

    def test_parseval_per_frame(self):
        params = FrameParams()
        audio = chirp(0.8)
        padded, n_frames = pad_for_frames(audio, params)
        window = hann_window(params.frame_len)
        mag = stft_magnitude(audio, params)
        for t in range(n_frames):
            frame = padded[t * params.hop:t * params.hop + params.frame_len]
            time_energy = np.sum((frame * window) ** 2)
            sq = mag[t] ** 2
            # full complex spectrum energy from the one-sided magnitudes
            freq_energy = (sq[0] + sq[-1] + 2 * sq[1:-1].sum()) / params.frame_len
            assert freq_energy == pytest.approx(time_energy, rel=1e-6, abs=1e-20)

    def test_empty_audio_rejected(self):
        with pytest.raises(LaughCorpusError):
            stft_magnitude(np.array([]), FrameParams())

    def test_frame_count_formula(self):
        params = FrameParams()
        audio = np.zeros(2_646_000)  # 120 s at 22050
        _, n_frames = pad_for_frames(audio, params)
        assert n_frames == math.ceil(2_646_000 / 512) + 1 == 5169


class TestMelSpectrogram:
    def test_silence_hits_log_floor(self):
        params = FrameParams()
        mag = stft_magnitude(np.zeros(30000), params)
        mel = mel_spectrogram(mag, params)
        assert np.allclose(mel, np.log(params.log_floor))

    def test_amplitude_doubling_adds_log4(self):
        params = FrameParams()
        audio = chirp(0.5, amp=0.25)
        m1 = mel_spectrogram(stft_magnitude(audio, params), params)
        m2 = mel_spectrogram(stft_magnitude(2 * audio, params), params)
        above = m1 > np.log(params.log_floor) + 2
        assert above.any()
        assert np.allclose((m2 - m1)[above], np.log(4.0), atol=1e-9)

    def test_tone_lands_in_nearest_band(self):
        params = FrameParams()
        centers = mel_band_centers_hz(params.n_mels_spec, params.sample_rate)
        for freq in (300.0, 800.0, 2500.0, 6000.0):
            tone = make_tone(0.5, freq=freq, amp=0.8)
            mel = mel_spectrogram(stft_magnitude(tone, params), params)
            band = int(np.argmax(mel[8]))
            assert band == int(np.argmin(np.abs(centers - freq)))

    def test_filterbank_shape_and_support(self):
        fb = mel_filterbank(12, 2048, 22050)
        assert fb.shape == (12, 1025)
        assert (fb >= 0).all()
        assert (fb.max(axis=1) > 0).all()


class TestMfcc:
    def test_identical_frames_identical_rows(self):
        params = FrameParams()
        # hop-periodic signal: interior frames are bit-identical
        block = 0.4 * np.sin(2 * np.pi * 5 * np.arange(params.hop) / params.hop)
        audio = np.tile(block, 40)
        out = mfcc(stft_magnitude(audio, params), params)
        assert out.shape[1] == 20
        assert np.array_equal(out[6], out[7])

    def test_scaling_shifts_only_coefficient_zero(self):
        params = FrameParams()
        rng = np.random.default_rng(51)
        audio = rng.standard_normal(30000) * 0.3  # broadband: no floored bands
        c = 3.0
        m1 = mfcc(stft_magnitude(audio, params), params)
        m2 = mfcc(stft_magnitude(c * audio, params), params)
        expected_shift = math.log(c ** 2) * math.sqrt(params.n_mels_internal)
        shift = m2[:, 0] - m1[:, 0]
        assert np.allclose(shift, expected_shift, atol=1e-8)
        assert np.allclose(m2[:, 1:], m1[:, 1:], atol=1e-8)

    def test_dct_matches_naive_oracle(self):
        rng = np.random.default_rng(52)
        basis = dct_ortho_matrix(40, 40)
        for _ in range(20):
            x = rng.standard_normal(40)
            naive = dct2_ortho_naive(x)
            assert np.allclose(basis @ x, naive, atol=1e-9)
            assert np.allclose(scipy.fft.dct(x, type=2, norm="ortho"), naive,
                               atol=1e-9)


class TestRms:
    def test_constant_signal(self):
        out = rms_energy(np.full(30000, 0.25), FrameParams())
        assert out.shape[1] == 1
        assert np.allclose(out[4:-4], 0.25, atol=0)

    def test_unit_sine_near_inv_sqrt2(self):
        out = rms_energy(make_tone(1.0, freq=441.0, amp=1.0), FrameParams())
        assert np.allclose(out[4:-4], 1 / math.sqrt(2), atol=1e-2)

    def test_silence_exactly_zero(self):
        out = rms_energy(np.zeros(30000), FrameParams())
        assert not out.any()


class TestExtractFeatures:
    def test_two_minute_clip_shape(self):
        audio = np.zeros(2_646_000)
        matrix = extract_features(audio, FrameParams())
        assert matrix.data.shape == (8000, 33)
        assert matrix.n_frames_real == 5169
        assert not matrix.data[5169:].any()

    def test_short_clip(self):
        matrix = extract_features(make_tone(0.05), FrameParams())
        assert matrix.n_frames_real >= 1
        assert matrix.data.shape == (8000, 33)
        assert not matrix.data[matrix.n_frames_real:].any()

    def test_long_clip_truncated(self):
        audio = np.zeros(300 * 22050)
        matrix = extract_features(audio, FrameParams())
        assert matrix.n_frames_real == 8000
        assert matrix.data.shape == (8000, 33)

    def test_deterministic(self):
        audio = chirp(1.0)
        a = extract_features(audio, SMALL)
        b = extract_features(audio, SMALL)
        assert np.array_equal(a.data, b.data)

    def test_silence_finite(self):
        matrix = extract_features(np.zeros(30000), SMALL)
        assert np.isfinite(matrix.data).all()

    def test_column_layout(self):
        params = FrameParams()
        audio = chirp(0.4)
        matrix = extract_features(audio, params)
        mag = stft_magnitude(audio, params)
        n = matrix.n_frames_real
        assert np.allclose(matrix.data[:n, :20],
                           mfcc(mag, params)[:n].astype(np.float32))
        assert np.allclose(matrix.data[:n, 20:21],
                           rms_energy(audio, params)[:n].astype(np.float32))
        assert np.allclose(matrix.data[:n, 21:],
                           mel_spectrogram(mag, params)[:n].astype(np.float32))

    def test_time_shift_covariance(self):
        params = FrameParams()
        rng = np.random.default_rng(53)
        audio = rng.standard_normal(40960) * 0.2
        k = 3
        delayed = np.concatenate([np.zeros(k * params.hop), audio])
        a = extract_features(audio, params)
        b = extract_features(delayed, params)
        interior = slice(8, 40960 // params.hop - 8)
        for row in range(interior.start, interior.stop):
            assert np.allclose(b.data[row + k], a.data[row], atol=1e-6)


class TestFromWav:
    def test_non_native_rate_resampled(self, tmp_path):
        from laughcorpus.features import extract_features_from_wav
        from conftest import write_tone_wav

        path = tmp_path / "hi.wav"
        write_tone_wav(path, 1.0, freq=1000.0, sr=44100)
        matrix = extract_features_from_wav(path, FrameParams())
        assert matrix.data.shape == (8000, 33)
        # one second of audio at the analysis rate, regardless of file rate
        assert abs(matrix.n_frames_real - (1 + 22050 // 512)) <= 2


class TestFeatureFile:
    def test_roundtrip_bit_identical(self, tmp_path):
        matrix = extract_features(chirp(0.5), SMALL)
        path = tmp_path / "m.lfx"
        write_features(matrix, path)
        loaded = read_features(path)
        assert loaded.n_frames_real == matrix.n_frames_real
        assert np.array_equal(loaded.data, matrix.data)
        assert loaded.data.dtype == matrix.data.dtype

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.lfx"
        path.write_bytes(b"NOPE" + struct.pack("<III", 1, 1, 33) + b"\0" * 132)
        with pytest.raises(FeatureFileError, match="magic"):
            read_features(path)

    def test_truncated_payload(self, tmp_path):
        matrix = extract_features(chirp(0.3), SMALL)
        path = tmp_path / "m.lfx"
        write_features(matrix, path)
        blob = path.read_bytes()
        bad = tmp_path / "trunc.lfx"
        bad.write_bytes(blob[:len(blob) - 100])
        with pytest.raises(FeatureFileError, match="truncated payload"):
            read_features(bad)
