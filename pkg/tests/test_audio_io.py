import wave

import numpy as np
import pytest

from impairlab.audio_io import (
    AudioClip,
    hard_clip,
    normalize_to_dbfs,
    read_wav,
    rms_dbfs,
    write_wav,
)
from impairlab.errors import (
    EmptyAudioError,
    NotWavError,
    SilentInputError,
    UnsupportedFormatError,
)


def test_clip_validates_shape_and_rate():
    with pytest.raises(EmptyAudioError):
        AudioClip(np.array([]))
    with pytest.raises(UnsupportedFormatError):
        AudioClip(np.zeros((4, 2)))
    with pytest.raises(UnsupportedFormatError):
        AudioClip(np.zeros(8), sample_rate_hz=0)
    clip = AudioClip(np.zeros(1600))
    assert len(clip) == 1600
    assert clip.duration_s == pytest.approx(0.1)


def test_wav_round_trip_within_quantization(tmp_path):
    rng = np.random.default_rng(11)
    original = AudioClip(0.7 * rng.standard_normal(4800).clip(-1, 1))
    path = tmp_path / "clip.wav"
    write_wav(original, path)
    loaded = read_wav(path)
    assert loaded.sample_rate_hz == 16000
    assert len(loaded) == len(original)
    # one PCM16 step is 1/32768; round-trip error is at most half a step
    assert np.max(np.abs(loaded.samples - original.samples)) <= 0.5 / 32768 + 1e-12


def test_read_rejects_non_wav(tmp_path):
    path = tmp_path / "not.wav"
    path.write_bytes(b"definitely not audio, long enough to have a header")
    with pytest.raises(NotWavError):
        read_wav(path)


def test_read_rejects_stereo_and_wide_samples(tmp_path):
    stereo = tmp_path / "stereo.wav"
    with wave.open(str(stereo), "wb") as wf:
        wf.setnchannels(2)
        wf.setsampwidth(2)
        wf.setframerate(16000)
        wf.writeframes(b"\x00\x00" * 32)
    with pytest.raises(UnsupportedFormatError):
        read_wav(stereo)

    wide = tmp_path / "wide.wav"
    with wave.open(str(wide), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(3)
        wf.setframerate(16000)
        wf.writeframes(b"\x00\x00\x00" * 16)
    with pytest.raises(UnsupportedFormatError):
        read_wav(wide)


def test_read_rejects_empty_file(tmp_path):
    path = tmp_path / "empty.wav"
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(16000)
    with pytest.raises(EmptyAudioError):
        read_wav(path)


def test_write_saturates_out_of_range(tmp_path):
    clip = AudioClip(np.array([2.0, -2.0, 0.0]))
    path = tmp_path / "hot.wav"
    write_wav(clip, path)
    loaded = read_wav(path)
    assert loaded.samples[0] == pytest.approx(32767 / 32768)
    assert loaded.samples[1] == pytest.approx(-1.0)


def test_rms_dbfs_known_values():
    full = AudioClip(np.ones(1000))
    assert rms_dbfs(full) == pytest.approx(0.0, abs=1e-12)
    half = AudioClip(0.5 * np.ones(1000))
    assert rms_dbfs(half) == pytest.approx(20 * np.log10(0.5), abs=1e-12)
    # sine RMS is peak / sqrt(2)
    t = np.arange(16000) / 16000
    sine = AudioClip(np.sin(2 * np.pi * 440 * t))
    assert rms_dbfs(sine) == pytest.approx(20 * np.log10(1 / np.sqrt(2)), abs=1e-3)
    assert rms_dbfs(AudioClip(np.zeros(10))) == float("-inf")


def test_normalize_hits_target_exactly():
    rng = np.random.default_rng(3)
    clip = AudioClip(0.3 * rng.standard_normal(16000))
    for target in (-25.0, -50.0, -35.0, -12.5):
        out = normalize_to_dbfs(clip, target)
        assert rms_dbfs(out) == pytest.approx(target, abs=1e-6)


def test_normalize_rejects_silence_and_positive_targets():
    with pytest.raises(SilentInputError):
        normalize_to_dbfs(AudioClip(np.zeros(100)), -25.0)
    with pytest.raises(ValueError):
        normalize_to_dbfs(AudioClip(np.ones(100)), 1.0)


def test_hard_clip_bounds():
    x = np.array([-3.0, -1.0, 0.2, 1.0, 5.0])
    assert np.array_equal(hard_clip(x), [-1.0, -1.0, 0.2, 1.0, 1.0])
