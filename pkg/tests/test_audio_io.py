"""WAV decode/encode behaviour."""

import struct

import numpy as np
import pytest

from laughcorpus.audio_io import (WavData, quantize_pcm16, read_wav, resample,
                                  write_wav_pcm16)
from laughcorpus.errors import AudioFormatError

from conftest import make_tone, write_float32_wav


def test_pcm16_roundtrip(tmp_path):
    samples = make_tone(0.5)
    path = tmp_path / "tone.wav"
    write_wav_pcm16(path, samples, 22050)
    wav = read_wav(path)
    assert wav.sample_rate == 22050
    assert wav.samples.shape == samples.shape
    assert np.max(np.abs(wav.samples - samples)) < 1e-3


def test_duration_from_sample_count(tmp_path):
    path = tmp_path / "two_minutes.wav"
    write_wav_pcm16(path, np.zeros(2_646_000), 22050)
    assert read_wav(path).duration_s == 120.0


def test_float32_wav(tmp_path):
    samples = make_tone(0.25, amp=0.9)
    path = tmp_path / "f32.wav"
    write_float32_wav(path, samples)
    wav = read_wav(path)
    assert np.max(np.abs(wav.samples - samples)) < 1e-6


def test_stereo_downmix_averages_channels(tmp_path):
    left = make_tone(0.1, freq=300.0, amp=0.4)
    right = make_tone(0.1, freq=300.0, amp=0.2)
    interleaved = np.empty(left.size * 2, dtype=np.float32)
    interleaved[0::2] = left
    interleaved[1::2] = right
    payload = interleaved.astype("<f4").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, 3, 2, 22050, 22050 * 8, 8, 32,
        b"data", len(payload),
    )
    path = tmp_path / "stereo.wav"
    path.write_bytes(header + payload)
    wav = read_wav(path)
    assert wav.samples.shape == left.shape
    assert np.allclose(wav.samples, (left + right) / 2, atol=1e-6)


def test_truncated_data_chunk_rejected(tmp_path):
    good = tmp_path / "good.wav"
    write_wav_pcm16(good, make_tone(0.2), 22050)
    blob = good.read_bytes()
    bad = tmp_path / "bad.wav"
    bad.write_bytes(blob[:len(blob) // 2])
    with pytest.raises(AudioFormatError, match="truncated"):
        read_wav(bad)


def test_not_riff_rejected(tmp_path):
    path = tmp_path / "nope.wav"
    path.write_bytes(b"definitely not a wav file")
    with pytest.raises(AudioFormatError, match="RIFF"):
        read_wav(path)


def test_quantize_round_half_away_from_zero():
    # 0.5/32767 scales to exactly 0.5, which must round away from zero
    x = np.array([0.5 / 32767, -0.5 / 32767, 1.0, -1.0, 0.0, 2.0, -2.0])
    q = quantize_pcm16(x)
    assert q.tolist() == [1, -1, 32767, -32767, 0, 32767, -32767]


def test_resample_preserves_tone_frequency():
    sr_from, sr_to = 44100, 22050
    t = np.arange(sr_from) / sr_from
    tone = np.sin(2 * np.pi * 1000.0 * t)
    out = resample(tone, sr_from, sr_to)
    assert abs(out.size - sr_to) <= 2
    spectrum = np.abs(np.fft.rfft(out[:sr_to]))
    peak_hz = np.argmax(spectrum) * sr_to / sr_to
    assert abs(peak_hz - 1000.0) < 2.0


def test_resample_identity_when_rates_match():
    x = make_tone(0.1)
    assert np.array_equal(resample(x, 22050, 22050), x)


def test_wavdata_duration():
    wav = WavData(samples=np.zeros(11025), sample_rate=22050)
    assert wav.duration_s == 0.5
