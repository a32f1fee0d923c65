"""Mono audio container, PCM16 WAV I/O and RMS level handling.

All level arithmetic is RMS-based dBFS with digital full scale at 1.0.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyAudioError,
    NotWavError,
    SilentInputError,
    UnsupportedFormatError,
)

SAMPLE_RATE = 16000
PCM16_SCALE = 32768.0


@dataclass
class AudioClip:
    """Mono sample buffer in [-1, 1] plus its sample rate."""

    samples: np.ndarray
    sample_rate_hz: int = SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise UnsupportedFormatError(f"expected mono 1-d samples, got shape {self.samples.shape}")
        if self.samples.size == 0:
            raise EmptyAudioError("clip has no samples")
        if self.sample_rate_hz <= 0:
            raise UnsupportedFormatError(f"bad sample rate {self.sample_rate_hz}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def hard_clip(samples: np.ndarray) -> np.ndarray:
    """Saturate to [-1, 1]; applied after every synthesis op."""
    return np.clip(samples, -1.0, 1.0)


def read_wav(path) -> AudioClip:
    """Read a mono PCM16 WAV file into an AudioClip.

    Raises NotWavError for non-RIFF files, UnsupportedFormatError for
    stereo / non-16-bit / non-PCM content, EmptyAudioError for zero frames.
    """
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            samp_width = wf.getsampwidth()
            rate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except wave.Error as exc:
        msg = str(exc)
        if "RIFF" in msg or "WAVE" in msg:
            raise NotWavError(f"{path}: {msg}") from exc
        raise UnsupportedFormatError(f"{path}: {msg}") from exc
    except EOFError as exc:
        raise NotWavError(f"{path}: truncated header") from exc

    if n_channels != 1:
        raise UnsupportedFormatError(f"{path}: {n_channels} channels, expected mono")
    if samp_width != 2:
        raise UnsupportedFormatError(f"{path}: {8 * samp_width}-bit, expected 16-bit PCM")
    if n_frames == 0 or len(raw) == 0:
        raise EmptyAudioError(f"{path}: no audio frames")

    ints = np.frombuffer(raw, dtype="<i2")
    return AudioClip(ints.astype(np.float64) / PCM16_SCALE, sample_rate_hz=rate)


def write_wav(clip: AudioClip, path) -> None:
    """Write an AudioClip as mono PCM16 WAV (values saturate at full scale)."""
    quantized = np.clip(np.round(clip.samples * PCM16_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate_hz)
        wf.writeframes(quantized.tobytes())


def rms_dbfs(clip: AudioClip) -> float:
    """RMS level in dBFS; -inf for an all-zero clip (silence sentinel)."""
    mean_sq = float(np.mean(np.square(clip.samples)))
    if mean_sq == 0.0:
        return float("-inf")
    return 10.0 * np.log10(mean_sq)


def normalize_to_dbfs(clip: AudioClip, target_dbfs: float) -> AudioClip:
    """Scale so the RMS level hits target_dbfs, then hard-clip to [-1, 1]."""
    if target_dbfs > 0:
        raise ValueError(f"target level {target_dbfs} dBFS above full scale")
    current = rms_dbfs(clip)
    if current == float("-inf"):
        raise SilentInputError("cannot normalize an all-zero clip")
    gain = 10.0 ** ((target_dbfs - current) / 20.0)
    return AudioClip(hard_clip(clip.samples * gain), sample_rate_hz=clip.sample_rate_hz)
