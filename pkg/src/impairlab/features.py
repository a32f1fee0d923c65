"""Feature extraction: framed spectral analysis, an 18-dimensional engineered
summary vector, log-mel spectrograms, raw waveform windows, and the small
binary/JSONL cache formats the training pipeline reads.

All analysis uses 20 ms frames with 10 ms hop at 16 kHz (320/160 samples),
a Hann window, and a 512-point FFT.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .audio_io import AudioClip
from .errors import ShapeMismatchError, TooManyBandsError, TooShortError, UnsupportedFormatError

_EPS = 1e-10


@dataclass(frozen=True)
class FrameParams:
    frame_len: int = 320
    hop: int = 160
    n_fft: int = 512

    def __post_init__(self):
        if self.frame_len < 1 or self.hop < 1:
            raise ValueError("frame_len and hop must be positive")
        if self.n_fft < self.frame_len:
            raise ValueError(f"n_fft {self.n_fft} smaller than frame {self.frame_len}")

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.frame_len:
            raise TooShortError(f"{n_samples} samples < one frame of {self.frame_len}")
        return 1 + (n_samples - self.frame_len) // self.hop


def frame_signal(samples: np.ndarray, params: FrameParams = FrameParams()) -> np.ndarray:
    """Slice into overlapping frames, shape (n_frames, frame_len). Unwindowed."""
    samples = np.asarray(samples, dtype=np.float64)
    n = params.n_frames(len(samples))
    view = np.lib.stride_tricks.sliding_window_view(samples, params.frame_len)
    return view[:: params.hop][:n]


def power_spectrum(frames: np.ndarray, params: FrameParams = FrameParams()) -> np.ndarray:
    """Hann-windowed one-sided power spectrum per frame, shape (n_frames, n_fft//2 + 1)."""
    if frames.ndim != 2 or frames.shape[1] != params.frame_len:
        raise ShapeMismatchError(f"expected (*, {params.frame_len}) frames, got {frames.shape}")
    window = np.hanning(params.frame_len)
    spec = np.fft.rfft(frames * window, n=params.n_fft, axis=1)
    return np.square(np.abs(spec))


# ---------------------------------------------------------------------------
# Per-frame descriptors feeding the engineered vector

def spectral_centroid(power: np.ndarray, sample_rate_hz: int, params: FrameParams) -> np.ndarray:
    freqs = np.fft.rfftfreq(params.n_fft, 1.0 / sample_rate_hz)
    return (power @ freqs) / (np.sum(power, axis=1) + _EPS)


def spectral_flux(power: np.ndarray) -> np.ndarray:
    """L2 distance between successive unit-norm magnitude spectra; first frame 0."""
    mag = np.sqrt(power)
    mag = mag / (np.linalg.norm(mag, axis=1, keepdims=True) + _EPS)
    flux = np.zeros(len(power))
    flux[1:] = np.linalg.norm(np.diff(mag, axis=0), axis=1)
    return flux


def spectral_flatness(power: np.ndarray) -> np.ndarray:
    logp = np.log(power + _EPS)
    return np.exp(np.mean(logp, axis=1)) / (np.mean(power, axis=1) + _EPS)


def spectral_rolloff(power: np.ndarray, sample_rate_hz: int, params: FrameParams,
                     fraction: float = 0.85) -> np.ndarray:
    """Frequency below which `fraction` of each frame's power lies, in Hz."""
    freqs = np.fft.rfftfreq(params.n_fft, 1.0 / sample_rate_hz)
    cum = np.cumsum(power, axis=1)
    target = fraction * cum[:, -1:]
    idx = np.argmax(cum >= target, axis=1)
    return freqs[idx]


def zero_crossing_rate(frames: np.ndarray) -> np.ndarray:
    signs = np.signbit(frames)
    return np.mean(signs[:, 1:] != signs[:, :-1], axis=1)


def frame_energy(frames: np.ndarray) -> np.ndarray:
    return np.mean(np.square(frames), axis=1)


def energy_entropy(frames: np.ndarray, n_sub: int = 10) -> np.ndarray:
    """Entropy of energy spread across `n_sub` sub-frames, normalized by log(n_sub)."""
    n_frames, frame_len = frames.shape
    usable = (frame_len // n_sub) * n_sub
    sub = np.square(frames[:, :usable]).reshape(n_frames, n_sub, -1).sum(axis=2)
    p = sub / (sub.sum(axis=1, keepdims=True) + _EPS)
    return -np.sum(p * np.log(p + _EPS), axis=1) / np.log(n_sub)


def dynamics(frames: np.ndarray) -> np.ndarray:
    """Squared jump in log frame power between successive frames; first frame 0."""
    logp = np.log(frame_energy(frames) + _EPS)
    out = np.zeros(len(frames))
    out[1:] = np.square(np.diff(logp))
    return out


def estimate_snr_db(frames: np.ndarray, threshold_ratio: float = 0.1,
                    cap_db: tuple[float, float] = (-10.0, 60.0)) -> float:
    """Crude global SNR: energy gate at threshold_ratio x mean frame energy
    separates active from background frames; ratio of their mean energies.
    """
    energy = frame_energy(frames)
    threshold = threshold_ratio * np.mean(energy)
    active = energy >= threshold
    lo, hi = cap_db
    if active.all() or not active.any():
        return hi if active.all() else lo
    snr = 10.0 * np.log10((np.mean(energy[active]) + _EPS) / (np.mean(energy[~active]) + _EPS))
    return float(np.clip(snr, lo, hi))


def clipping_probability(samples: np.ndarray, threshold: float = 0.99) -> float:
    return float(np.mean(np.abs(samples) >= threshold))


FEATURE_NAMES = (
    "centroid_mean", "centroid_var",
    "flux_mean", "flux_var",
    "flatness_mean", "flatness_var",
    "dynamics_mean", "dynamics_var",
    "rolloff_mean", "rolloff_var",
    "zcr_mean", "zcr_var",
    "energy_mean", "energy_var",
    "entropy_mean", "entropy_var",
    "snr_db", "clip_prob",
)


def engineered_vector(clip: AudioClip, params: FrameParams = FrameParams()) -> np.ndarray:
    """The 18-dimensional summary vector; order matches FEATURE_NAMES."""
    frames = frame_signal(clip.samples, params)
    power = power_spectrum(frames, params)
    fs = clip.sample_rate_hz
    tracks = (
        spectral_centroid(power, fs, params),
        spectral_flux(power),
        spectral_flatness(power),
        dynamics(frames),
        spectral_rolloff(power, fs, params),
        zero_crossing_rate(frames),
        frame_energy(frames),
        energy_entropy(frames),
    )
    out = np.empty(len(FEATURE_NAMES))
    for i, track in enumerate(tracks):
        out[2 * i] = np.mean(track)
        out[2 * i + 1] = np.var(track)
    out[16] = estimate_snr_db(frames)
    out[17] = clipping_probability(clip.samples)
    return out


# ---------------------------------------------------------------------------
# Log-mel spectrograms

N_MELS = 128
SEGMENT_SAMPLES = 30240   # yields exactly 188 frames at 320/160
SEGMENT_FRAMES = 188
RAW_WINDOW_SAMPLES = 32000


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int = N_MELS, params: FrameParams = FrameParams(),
                   sample_rate_hz: int = 16000, fmin_hz: float = 0.0,
                   fmax_hz: float | None = None) -> np.ndarray:
    """Triangular mel filters evaluated at FFT bin centers, shape (n_mels, n_bins).

    At 128 bands over a 512-point FFT the lowest triangles are narrower than
    one bin; any filter that would come out empty instead passes the single
    bin nearest its center frequency, so every row sums to something positive.
    """
    if n_mels < 1:
        raise ValueError(f"n_mels must be >= 1, got {n_mels}")
    if n_mels > params.n_fft // 2:
        raise TooManyBandsError(f"{n_mels} bands will not fit {params.n_fft // 2} usable bins")
    if fmax_hz is None:
        fmax_hz = sample_rate_hz / 2.0

    mel_pts = np.linspace(hz_to_mel(fmin_hz), hz_to_mel(fmax_hz), n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    bin_freqs = np.fft.rfftfreq(params.n_fft, 1.0 / sample_rate_hz)

    bank = np.zeros((n_mels, params.n_bins))
    for m in range(n_mels):
        left, center, right = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        up = (bin_freqs - left) / max(center - left, _EPS)
        down = (right - bin_freqs) / max(right - center, _EPS)
        row = np.maximum(0.0, np.minimum(up, down))
        if row.sum() <= 0.0:
            row[np.argmin(np.abs(bin_freqs - center))] = 1.0
        bank[m] = row
    return bank


def log_mel_spectrogram(clip: AudioClip, n_mels: int = N_MELS,
                        params: FrameParams = FrameParams()) -> np.ndarray:
    """Natural-log mel power, shape (n_mels, n_frames); 30240-sample segments
    come out (128, 188)."""
    frames = frame_signal(clip.samples, params)
    power = power_spectrum(frames, params)
    bank = mel_filterbank(n_mels, params, clip.sample_rate_hz)
    return np.log(power @ bank.T + _EPS).T


def raw_window(clip: AudioClip, start: int = 0, n_samples: int = RAW_WINDOW_SAMPLES) -> np.ndarray:
    """A fixed-length waveform slice for the 1-d models; clip must cover it."""
    if start < 0 or start + n_samples > len(clip):
        raise TooShortError(
            f"window [{start}, {start + n_samples}) outside clip of {len(clip)} samples")
    return clip.samples[start:start + n_samples].copy()


# ---------------------------------------------------------------------------
# Binary tensor files

_TENSOR_MAGIC = b"ILTN"
_DTYPE_F32 = 1


def save_tensor(path, array: np.ndarray) -> None:
    """Little-endian binary layout: magic, dtype code, ndim, dims, row-major f32."""
    array = np.ascontiguousarray(array, dtype="<f4")
    with open(path, "wb") as f:
        f.write(_TENSOR_MAGIC)
        f.write(struct.pack("<BB", _DTYPE_F32, array.ndim))
        f.write(struct.pack(f"<{array.ndim}q", *array.shape))
        f.write(array.tobytes())


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _TENSOR_MAGIC:
            raise UnsupportedFormatError(f"{path}: bad tensor magic {magic!r}")
        dtype_code, ndim = struct.unpack("<BB", f.read(2))
        if dtype_code != _DTYPE_F32:
            raise UnsupportedFormatError(f"{path}: unknown dtype code {dtype_code}")
        dims = struct.unpack(f"<{ndim}q", f.read(8 * ndim))
        data = np.frombuffer(f.read(), dtype="<f4")
    expected = int(np.prod(dims)) if ndim else 1
    if data.size != expected:
        raise UnsupportedFormatError(f"{path}: payload holds {data.size} values, dims say {expected}")
    return data.reshape(dims).copy()


# ---------------------------------------------------------------------------
# Engineered-feature cache

def save_features_jsonl(path, vectors: dict[str, np.ndarray]) -> None:
    with open(path, "w") as f:
        for clip_id, vec in vectors.items():
            f.write(json.dumps({"clip_id": clip_id,
                                "features": [float(v) for v in np.asarray(vec)]}) + "\n")


def load_features_jsonl(path) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            out[row["clip_id"]] = np.asarray(row["features"], dtype=np.float64)
    return out


# ---------------------------------------------------------------------------
# Standardization

@dataclass
class Standardizer:
    """Per-dimension z-scoring fit on training data and frozen thereafter."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray, floor: float = 1e-8) -> "Standardizer":
        x = np.asarray(x, dtype=np.float64)
        return cls(mean=x.mean(axis=0), std=np.maximum(x.std(axis=0), floor))

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x) - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(mean=np.asarray(d["mean"], dtype=np.float64),
                   std=np.asarray(d["std"], dtype=np.float64))
