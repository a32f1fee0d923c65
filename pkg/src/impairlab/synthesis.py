"""Synthesis of the five-class impaired-speech dataset from clean speech.

Covers noise mixing at target SNR, exponential-decay room impulse responses,
Gilbert-model packet-loss traces with concealment, low-volume scaling, a
seeded pseudo-speech generator, and the labeled-dataset container with its
JSONL manifest format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import IntEnum
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve, lfilter

from .audio_io import AudioClip, hard_clip, normalize_to_dbfs, read_wav, rms_dbfs, write_wav
from .errors import (
    EmptyCorpusError,
    EmptyTraceError,
    InvalidParamsError,
    InvalidRt60Error,
    OutOfRangeError,
    SampleRateMismatchError,
    SilentInputError,
    TooShortError,
)


class ImpairmentClass(IntEnum):
    """The four impairment classes plus clean speech; codes are stable."""

    BACKGROUND_NOISE = 0
    REVERB = 1
    SPEECH_DISTORTION = 2
    LOW_VOLUME = 3
    NO_IMPAIRMENT = 4


N_CLASSES = len(ImpairmentClass)

SAMPLE_RATE_DATASET = 16000
PLAYBACK_DBFS = -25.0
LOW_VOLUME_RANGE_DBFS = (-50.0, -35.0)
SNR_GRID_DB = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
RT60_GRID_MS = (300.0, 600.0, 900.0, 1200.0)


# ---------------------------------------------------------------------------
# Noise mixing

def mix_at_snr(speech: AudioClip, noise: AudioClip, snr_db: float) -> AudioClip:
    """Add noise to speech at an exact clip-wide speech-to-noise power ratio.

    Noise shorter than the speech is tiled seamlessly; longer noise is
    truncated. The sum is hard-clipped to [-1, 1].
    """
    if speech.sample_rate_hz != noise.sample_rate_hz:
        raise SampleRateMismatchError(
            f"speech at {speech.sample_rate_hz} Hz, noise at {noise.sample_rate_hz} Hz")
    if not np.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")

    n = len(speech)
    pad = noise.samples
    if len(pad) < n:
        pad = np.tile(pad, -(-n // len(pad)))
    pad = pad[:n]

    p_speech = float(np.mean(np.square(speech.samples)))
    p_noise = float(np.mean(np.square(pad)))
    if p_speech == 0.0 or p_noise == 0.0:
        raise SilentInputError("mix_at_snr needs non-silent speech and noise")

    scale = np.sqrt(p_speech / (p_noise * 10.0 ** (snr_db / 10.0)))
    return AudioClip(hard_clip(speech.samples + scale * pad), sample_rate_hz=speech.sample_rate_hz)


# ---------------------------------------------------------------------------
# Reverberation

def synth_rir(rt60_ms: float, sample_rate_hz: int = 16000, length_s: float | None = None,
              seed: int = 0) -> AudioClip:
    """Exponentially decaying Gaussian-noise impulse response for a given RT60.

    The envelope decays 60 dB over rt60_ms; the first sample is forced to the
    envelope peak as a direct path, and the result is normalized to unit
    energy. A Schroeder backward-integration fit recovers RT60 within ~10%.
    """
    if rt60_ms <= 0:
        raise InvalidRt60Error(f"rt60 must be positive, got {rt60_ms} ms")
    rt60_s = rt60_ms / 1000.0
    if length_s is None:
        length_s = 1.5 * rt60_s
    if length_s < rt60_s:
        raise TooShortError(f"length {length_s} s shorter than rt60 {rt60_s} s")

    n = int(round(length_s * sample_rate_hz))
    rng = np.random.default_rng(seed)
    t = np.arange(n) / sample_rate_hz
    envelope = np.exp(-(3.0 * np.log(10.0)) * t / rt60_s)
    h = rng.standard_normal(n) * envelope
    h[0] = envelope[0]
    h /= np.sqrt(np.sum(np.square(h)))
    return AudioClip(h, sample_rate_hz=sample_rate_hz)


def schroeder_rt60(rir: AudioClip, fit_range_db: tuple[float, float] = (-5.0, -35.0)) -> float:
    """Estimate RT60 in ms from backward-integrated energy decay.

    Fits a line to the decay curve between the two dB levels and
    extrapolates to -60 dB.
    """
    energy = np.square(rir.samples)
    edc = np.cumsum(energy[::-1])[::-1]
    edc_db = 10.0 * np.log10(np.maximum(edc / edc[0], 1e-30))
    hi, lo = fit_range_db
    mask = (edc_db <= hi) & (edc_db >= lo)
    if mask.sum() < 2:
        raise TooShortError("impulse response too short for a decay fit")
    t = np.arange(len(edc_db))[mask] / rir.sample_rate_hz
    slope, _ = np.polyfit(t, edc_db[mask], 1)
    if slope >= 0:
        raise TooShortError("energy decay is not decreasing")
    return float(-60.0 / slope) * 1000.0


def apply_reverb(clip: AudioClip, rir: AudioClip) -> AudioClip:
    """Convolve with an impulse response, keep the input length and RMS level."""
    if clip.sample_rate_hz != rir.sample_rate_hz:
        raise SampleRateMismatchError(
            f"clip at {clip.sample_rate_hz} Hz, rir at {rir.sample_rate_hz} Hz")
    level = rms_dbfs(clip)
    if level == float("-inf"):
        raise SilentInputError("cannot reverberate silence")
    wet = fftconvolve(clip.samples, rir.samples)[: len(clip)]
    wet_clip = AudioClip(wet, sample_rate_hz=clip.sample_rate_hz)
    if rms_dbfs(wet_clip) == float("-inf"):
        raise SilentInputError("impulse response produced silence")
    return normalize_to_dbfs(wet_clip, level)


# ---------------------------------------------------------------------------
# Packet loss

@dataclass(frozen=True)
class GilbertParams:
    """Two-state Markov loss model: healthy -> lost with p_loss, back with p_recover."""

    p_loss: float
    p_recover: float

    def __post_init__(self):
        for name, p in (("p_loss", self.p_loss), ("p_recover", self.p_recover)):
            if not 0.0 <= p <= 1.0:
                raise InvalidParamsError(f"{name} must be in [0, 1], got {p}")

    @property
    def stationary_loss_rate(self) -> float:
        total = self.p_loss + self.p_recover
        if total == 0.0:
            return 0.0
        return self.p_loss / total

    @classmethod
    def from_loss_rate(cls, rate: float, p_recover: float = 0.5) -> "GilbertParams":
        """Pick p_loss so the stationary loss probability equals `rate`."""
        if not 0.0 <= rate < 1.0:
            raise InvalidParamsError(f"loss rate must be in [0, 1), got {rate}")
        return cls(p_loss=rate * p_recover / (1.0 - rate), p_recover=p_recover)


@dataclass
class LossTrace:
    """Per-frame packet fate: True means the frame was lost."""

    events: np.ndarray
    frame_ms: int = 20

    def __post_init__(self):
        self.events = np.asarray(self.events, dtype=bool)
        if self.frame_ms <= 0:
            raise InvalidParamsError(f"frame_ms must be positive, got {self.frame_ms}")
        if self.events.size == 0:
            raise EmptyTraceError("trace has no events")

    @property
    def loss_fraction(self) -> float:
        return float(np.mean(self.events))


def gen_loss_trace(params: GilbertParams, n_frames: int, seed: int = 0) -> LossTrace:
    """Sample a Gilbert-model trace, starting from the stationary distribution."""
    if n_frames < 1:
        raise InvalidParamsError(f"n_frames must be >= 1, got {n_frames}")
    rng = np.random.default_rng(seed)
    u = rng.random(n_frames)
    events = np.empty(n_frames, dtype=bool)
    lost = u[0] < params.stationary_loss_rate
    events[0] = lost
    for i in range(1, n_frames):
        lost = (u[i] >= params.p_recover) if lost else (u[i] < params.p_loss)
        events[i] = lost
    return LossTrace(events=events)


@dataclass(frozen=True)
class ZeroFill:
    """Lost frames are replaced with silence."""


@dataclass(frozen=True)
class RepeatLastFrame:
    """Lost frames repeat the previous output frame, attenuated per repeat."""

    attenuation_db: float = 0.0


def apply_trace(clip: AudioClip, trace: LossTrace,
                concealment: ZeroFill | RepeatLastFrame = ZeroFill()) -> AudioClip:
    """Drop the frames marked lost and conceal them; received frames are untouched."""
    frame_len = int(round(trace.frame_ms * clip.sample_rate_hz / 1000.0))
    n_frames = -(-len(clip) // frame_len)
    if len(trace.events) < n_frames:
        raise EmptyTraceError(
            f"trace covers {len(trace.events)} frames but clip needs {n_frames}")

    out = clip.samples.copy()
    gain = 1.0
    if isinstance(concealment, RepeatLastFrame):
        gain = 10.0 ** (-concealment.attenuation_db / 20.0)
    for k in range(n_frames):
        if not trace.events[k]:
            continue
        lo, hi = k * frame_len, min((k + 1) * frame_len, len(out))
        if isinstance(concealment, ZeroFill) or k == 0:
            out[lo:hi] = 0.0
        else:
            prev = out[lo - frame_len:lo]
            out[lo:hi] = prev[: hi - lo] * gain
    return AudioClip(out, sample_rate_hz=clip.sample_rate_hz)


def save_trace(trace: LossTrace, path) -> None:
    """Text format: `frame_ms=<int>` then one char per frame, 0=received 1=lost."""
    with open(path, "w") as f:
        f.write(f"frame_ms={trace.frame_ms}\n")
        f.write("".join("1" if e else "0" for e in trace.events))
        f.write("\n")


def load_trace(path) -> LossTrace:
    with open(path) as f:
        header = f.readline().strip()
        body = f.readline().strip()
    if not header.startswith("frame_ms="):
        raise EmptyTraceError(f"{path}: missing frame_ms header")
    frame_ms = int(header.split("=", 1)[1])
    if not body or set(body) - {"0", "1"}:
        raise EmptyTraceError(f"{path}: bad event line")
    return LossTrace(events=np.array([c == "1" for c in body]), frame_ms=frame_ms)


# ---------------------------------------------------------------------------
# Low volume

def make_low_volume(clip: AudioClip, target_dbfs: float) -> AudioClip:
    """Scale a clip into the quiet band; target must lie in [-50, -35] dBFS."""
    lo, hi = LOW_VOLUME_RANGE_DBFS
    if not lo <= target_dbfs <= hi:
        raise OutOfRangeError(f"low-volume target {target_dbfs} dBFS outside [{lo}, {hi}]")
    return normalize_to_dbfs(clip, target_dbfs)


# ---------------------------------------------------------------------------
# Pseudo speech and shaped noise

def _resonator_coeffs(freq_hz: float, bandwidth_hz: float, fs: int):
    r = np.exp(-np.pi * bandwidth_hz / fs)
    theta = 2.0 * np.pi * freq_hz / fs
    b = np.array([1.0 - r])
    a = np.array([1.0, -2.0 * r * np.cos(theta), r * r])
    return b, a


def pseudo_speech(seed: int, duration_s: float, sample_rate_hz: int = 16000) -> AudioClip:
    """Deterministic speech-like signal: pitch-walked harmonic source through
    slowly moving formant resonators, with voiced/unvoiced/pause alternation.

    Stand-in for a clean speech corpus; output is normalized to -25 dBFS.
    """
    if duration_s < 0.5:
        raise TooShortError(f"duration {duration_s} s below 0.5 s minimum")
    fs = sample_rate_hz
    n = int(round(duration_s * fs))
    rng = np.random.default_rng(seed)
    hop = fs // 100  # 10 ms control frames
    n_ctrl = -(-n // hop)

    # Segment state machine: voiced / unvoiced / pause with speech-like dwells.
    seg_state = np.empty(n_ctrl, dtype=np.int8)
    i = 0
    while i < n_ctrl:
        u = rng.random()
        if u < 0.55:
            state, dwell_s = 0, rng.uniform(0.15, 0.40)
        elif u < 0.85:
            state, dwell_s = 1, rng.uniform(0.05, 0.15)
        else:
            state, dwell_s = 2, rng.uniform(0.05, 0.20)
        dwell = max(1, int(round(dwell_s * 100)))
        seg_state[i:i + dwell] = state
        i += dwell

    # Control contours: log-pitch random walk and three formant walks.
    f0 = np.empty(n_ctrl)
    f0[0] = rng.uniform(100.0, 220.0)
    for k in range(1, n_ctrl):
        f0[k] = np.clip(f0[k - 1] * np.exp(rng.normal(0.0, 0.02)), 80.0, 300.0)
    formants = np.empty((3, n_ctrl))
    bands = ((300.0, 900.0), (1000.0, 2400.0), (2500.0, 3600.0))
    bws = (90.0, 120.0, 170.0)
    for j, (flo, fhi) in enumerate(bands):
        formants[j, 0] = rng.uniform(flo, fhi)
        for k in range(1, n_ctrl):
            formants[j, k] = np.clip(formants[j, k - 1] + rng.normal(0.0, 18.0), flo, fhi)
    loudness = np.empty(n_ctrl)
    loudness[0] = rng.uniform(0.6, 1.0)
    for k in range(1, n_ctrl):
        loudness[k] = np.clip(loudness[k - 1] + rng.normal(0.0, 0.04), 0.35, 1.0)

    # Excitation, one control frame at a time; phase accumulates across frames.
    excitation = np.zeros(n_ctrl * hop)
    phase = rng.random()
    for k in range(n_ctrl):
        lo = k * hop
        if seg_state[k] == 2:
            continue
        if seg_state[k] == 0:
            steps = phase + np.cumsum(np.full(hop, f0[k] / fs))
            pulses = np.diff(np.floor(np.concatenate(([phase], steps)))) > 0
            frame = pulses.astype(np.float64) * 6.0
            frame += 0.05 * rng.standard_normal(hop)
            phase = steps[-1] % 1.0
        else:
            frame = rng.standard_normal(hop)
        excitation[lo:lo + hop] = frame * loudness[k]

    # Formant filtering with per-frame coefficient updates; filter state carries over.
    voice = np.zeros_like(excitation)
    zis = [np.zeros(2) for _ in range(3)]
    for k in range(n_ctrl):
        lo = k * hop
        seg = excitation[lo:lo + hop]
        for j in range(3):
            b, a = _resonator_coeffs(formants[j, k], bws[j], fs)
            seg, zis[j] = lfilter(b, a, seg, zi=zis[j])
        voice[lo:lo + hop] = seg

    # Short ramps at segment boundaries to avoid clicks from state jumps.
    ramp = fs // 200  # 5 ms
    edges = np.flatnonzero(np.diff(seg_state)) + 1
    env = np.ones(n_ctrl * hop)
    for e in edges:
        lo = e * hop
        env[max(0, lo - ramp):lo] *= np.linspace(1.0, 0.3, min(ramp, lo))
        env[lo:lo + ramp] *= np.linspace(0.3, 1.0, min(ramp, len(env) - lo))
    voice *= env

    voice = voice[:n]
    voice -= np.mean(voice)
    if not np.any(voice):
        # Degenerate all-pause draw; keep the contract total with a faint tone.
        voice = 1e-3 * np.sin(2 * np.pi * 150.0 * np.arange(n) / fs)
    peak = np.max(np.abs(voice))
    clip = AudioClip(0.5 * voice / peak, sample_rate_hz=fs)
    return normalize_to_dbfs(clip, PLAYBACK_DBFS)


def pseudo_corpus(n_clips: int, duration_s: float, seed: int,
                  sample_rate_hz: int = 16000) -> list[AudioClip]:
    """Seeded list of pseudo-speech clips; clip i depends only on (seed, i)."""
    return [pseudo_speech(np.random.SeedSequence((seed, i)).generate_state(1)[0],
                          duration_s, sample_rate_hz) for i in range(n_clips)]


NOISE_KINDS = ("white", "pink", "babble")


def make_noise(kind: str, n_samples: int, seed: int, sample_rate_hz: int = 16000) -> AudioClip:
    """Seeded shaped-noise generator: white, pink (1/f), or babble-like."""
    rng = np.random.default_rng(seed)
    fs = sample_rate_hz
    if kind == "white":
        x = rng.standard_normal(n_samples)
    elif kind == "pink":
        spec = np.fft.rfft(rng.standard_normal(n_samples))
        freqs = np.fft.rfftfreq(n_samples, 1.0 / fs)
        weights = np.ones_like(freqs)
        weights[1:] = 1.0 / np.sqrt(freqs[1:])
        x = np.fft.irfft(spec * weights, n=n_samples)
    elif kind == "babble":
        # A few modulated resonant noise streams summed: crude crowd murmur.
        x = np.zeros(n_samples)
        for _ in range(5):
            stream = rng.standard_normal(n_samples)
            b, a = _resonator_coeffs(rng.uniform(250.0, 2800.0), rng.uniform(150.0, 400.0), fs)
            stream = lfilter(b, a, stream)
            n_env = max(2, int(n_samples / fs * rng.uniform(2.0, 6.0)))
            env_pts = rng.uniform(0.2, 1.0, n_env)
            env = np.interp(np.linspace(0, n_env - 1, n_samples), np.arange(n_env), env_pts)
            x += stream * env
    else:
        raise ValueError(f"unknown noise kind {kind!r}")
    clip = AudioClip(0.5 * x / np.max(np.abs(x)), sample_rate_hz=fs)
    return normalize_to_dbfs(clip, PLAYBACK_DBFS)


# ---------------------------------------------------------------------------
# Labeled dataset

SPLITS = ("train", "val", "test", "unassigned")


@dataclass
class DatasetRecord:
    """One labeled clip: ground truth never changes, observed label may."""

    clip_id: str
    true_label: ImpairmentClass
    observed_label: ImpairmentClass
    params: dict = field(default_factory=dict)
    split: str = "unassigned"
    clip_path: str | None = None


@dataclass
class LabeledDataset:
    """Records plus the clip store backing them (in memory and/or on disk)."""

    records: list[DatasetRecord]
    clips: dict[str, AudioClip] = field(default_factory=dict)
    base_dir: Path | None = None

    def __len__(self) -> int:
        return len(self.records)

    def get_clip(self, record: DatasetRecord) -> AudioClip:
        if record.clip_id in self.clips:
            return self.clips[record.clip_id]
        if record.clip_path is None:
            raise KeyError(f"no clip stored for {record.clip_id}")
        path = Path(record.clip_path)
        if not path.is_absolute() and self.base_dir is not None:
            path = self.base_dir / path
        return read_wav(path)

    def subset(self, split: str) -> "LabeledDataset":
        recs = [r for r in self.records if r.split == split]
        return LabeledDataset(records=recs, clips=self.clips, base_dir=self.base_dir)

    def copy_records(self) -> "LabeledDataset":
        """New dataset with copied records sharing the same clip store."""
        return LabeledDataset(records=[replace(r) for r in self.records],
                              clips=self.clips, base_dir=self.base_dir)


@dataclass
class SynthConfig:
    """Knobs for build_dataset; defaults mirror the dataset recipe."""

    snr_grid_db: tuple = SNR_GRID_DB
    rt60_grid_ms: tuple = RT60_GRID_MS
    loss_rates: tuple = (0.05, 0.1, 0.2)
    gilbert_p_recover: float = 0.5
    low_volume_range_dbfs: tuple = LOW_VOLUME_RANGE_DBFS
    target_dbfs: float = PLAYBACK_DBFS
    concealment: ZeroFill | RepeatLastFrame = ZeroFill()
    noise_kinds: tuple = NOISE_KINDS


def _record_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng((seed, index))


def _synth_record(index: int, label: ImpairmentClass, clean: AudioClip,
                  noise_corpus: list[AudioClip] | None, cfg: SynthConfig,
                  rng: np.random.Generator) -> tuple[AudioClip, dict]:
    params: dict = {}
    if label == ImpairmentClass.BACKGROUND_NOISE:
        snr = float(rng.choice(cfg.snr_grid_db))
        if noise_corpus:
            noise = noise_corpus[int(rng.integers(len(noise_corpus)))]
        else:
            kind = str(rng.choice(cfg.noise_kinds))
            noise = make_noise(kind, len(clean), int(rng.integers(2**32)), clean.sample_rate_hz)
            params["noise_kind"] = kind
        if len(noise) > len(clean):
            offset = int(rng.integers(len(noise) - len(clean) + 1))
            noise = AudioClip(noise.samples[offset:offset + len(clean)],
                              sample_rate_hz=noise.sample_rate_hz)
        clip = normalize_to_dbfs(mix_at_snr(clean, noise, snr), cfg.target_dbfs)
        params["snr_db"] = snr
    elif label == ImpairmentClass.REVERB:
        rt60 = float(rng.choice(cfg.rt60_grid_ms))
        rir = synth_rir(rt60, clean.sample_rate_hz, seed=int(rng.integers(2**32)))
        clip = normalize_to_dbfs(apply_reverb(clean, rir), cfg.target_dbfs)
        params["rt60_ms"] = rt60
    elif label == ImpairmentClass.SPEECH_DISTORTION:
        rate = float(rng.choice(cfg.loss_rates))
        gp = GilbertParams.from_loss_rate(rate, cfg.gilbert_p_recover)
        frame_len = int(round(20 * clean.sample_rate_hz / 1000.0))
        trace = gen_loss_trace(gp, -(-len(clean) // frame_len), seed=int(rng.integers(2**32)))
        clip = normalize_to_dbfs(apply_trace(clean, trace, cfg.concealment), cfg.target_dbfs)
        params["loss_rate"] = rate
        params["realized_loss"] = trace.loss_fraction
    elif label == ImpairmentClass.LOW_VOLUME:
        target = float(rng.uniform(*cfg.low_volume_range_dbfs))
        clip = make_low_volume(clean, target)
        params["target_dbfs"] = target
    else:
        clip = normalize_to_dbfs(clean, cfg.target_dbfs)
    return clip, params


def build_dataset(clean_corpus: list[AudioClip], per_class: int,
                  config: SynthConfig | None = None, seed: int = 0,
                  noise_corpus: list[AudioClip] | None = None) -> LabeledDataset:
    """Synthesize 5 * per_class labeled clips, per_class of each class.

    Record r derives its RNG stream from (seed, r), so the build is
    deterministic and order-independent.
    """
    if not clean_corpus:
        raise EmptyCorpusError("clean corpus is empty")
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    for clip in clean_corpus:
        if clip.sample_rate_hz != SAMPLE_RATE_DATASET:
            raise SampleRateMismatchError(
                f"dataset clips must be {SAMPLE_RATE_DATASET} Hz, got {clip.sample_rate_hz}")

    if config is None:
        config = SynthConfig()
    records = []
    clips: dict[str, AudioClip] = {}
    for r in range(N_CLASSES * per_class):
        label = ImpairmentClass(r // per_class)
        rng = _record_rng(seed, r)
        clean = clean_corpus[int(rng.integers(len(clean_corpus)))]
        clip, params = _synth_record(r, label, clean, noise_corpus, config, rng)
        clip_id = f"{label.name.lower()}_{r % per_class:05d}"
        clips[clip_id] = clip
        records.append(DatasetRecord(clip_id=clip_id, true_label=label, observed_label=label,
                                     params=params | {"record_seed": [seed, r]}))
    return LabeledDataset(records=records, clips=clips)


# ---------------------------------------------------------------------------
# Manifest I/O

def save_manifest(dataset: LabeledDataset, manifest_path, clips_dir=None) -> None:
    """Write the JSONL manifest; optionally write in-memory clips as WAVs."""
    manifest_path = Path(manifest_path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    if clips_dir is not None:
        clips_dir = Path(clips_dir)
        clips_dir.mkdir(parents=True, exist_ok=True)
    written: set[str] = set()
    with open(manifest_path, "w") as f:
        for rec in dataset.records:
            path = rec.clip_path
            if clips_dir is not None and rec.clip_id in dataset.clips:
                path = str(clips_dir / f"{rec.clip_id}.wav")
                if rec.clip_id not in written:
                    write_wav(dataset.clips[rec.clip_id], path)
                    written.add(rec.clip_id)
            row = {
                "clip_id": rec.clip_id,
                "clip_path": path,
                "true_label": int(rec.true_label),
                "observed_label": int(rec.observed_label),
                "class_params": {k: v for k, v in rec.params.items() if k != "record_seed"},
                "split": rec.split,
                "seed": rec.params.get("record_seed"),
            }
            f.write(json.dumps(row) + "\n")


def load_manifest(manifest_path) -> LabeledDataset:
    manifest_path = Path(manifest_path)
    records = []
    with open(manifest_path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            params = dict(row.get("class_params", {}))
            if row.get("seed") is not None:
                params["record_seed"] = row["seed"]
            records.append(DatasetRecord(
                clip_id=row["clip_id"],
                true_label=ImpairmentClass(row["true_label"]),
                observed_label=ImpairmentClass(row["observed_label"]),
                params=params,
                split=row.get("split", "unassigned"),
                clip_path=row.get("clip_path"),
            ))
    return LabeledDataset(records=records, base_dir=manifest_path.parent)
