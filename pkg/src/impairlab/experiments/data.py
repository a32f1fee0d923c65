"""Bridges datasets to model-ready arrays.

A FeatureCache holds one array per clip (full-clip log-mel, raw waveform, or
the engineered vector); training examples are views into those arrays at
crop offsets, so a clip is featurized once no matter how many examples or
epochs draw from it. Example i of a roster derives its (record, offset) pair
from the stream (seed, i), independent of roster size.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import EmptySetError, TooShortError, UnsupportedFormatError
from ..features import (
    RAW_WINDOW_SAMPLES,
    SEGMENT_FRAMES,
    FrameParams,
    Standardizer,
    engineered_vector,
    load_tensor,
    log_mel_spectrogram,
    save_tensor,
)
from ..synthesis import DatasetRecord, LabeledDataset

_FEATURE_KINDS = ("engineered", "logmel", "raw")


class FeatureCache:
    """Per-clip feature arrays for one representation, keyed by clip_id."""

    def __init__(self, feature: str, arrays: dict[str, np.ndarray],
                 params: FrameParams = FrameParams()):
        if feature not in _FEATURE_KINDS:
            raise ValueError(f"feature must be one of {_FEATURE_KINDS}, got {feature!r}")
        self.feature = feature
        self.arrays = arrays
        self.params = params

    @classmethod
    def build(cls, dataset: LabeledDataset, feature: str,
              params: FrameParams = FrameParams()) -> "FeatureCache":
        arrays: dict[str, np.ndarray] = {}
        for rec in dataset.records:
            if rec.clip_id in arrays:
                continue
            clip = dataset.get_clip(rec)
            if feature == "engineered":
                arrays[rec.clip_id] = engineered_vector(clip, params).astype(np.float32)
            elif feature == "logmel":
                arrays[rec.clip_id] = log_mel_spectrogram(clip, params=params).astype(np.float32)
            else:
                arrays[rec.clip_id] = clip.samples.astype(np.float32)
        if not arrays:
            raise EmptySetError("dataset has no records to featurize")
        return cls(feature, arrays, params)

    @property
    def example_shape(self) -> tuple:
        if self.feature == "engineered":
            return (len(next(iter(self.arrays.values()))),)
        if self.feature == "logmel":
            return (1, next(iter(self.arrays.values())).shape[0], SEGMENT_FRAMES)
        return (1, RAW_WINDOW_SAMPLES)

    def n_offsets(self, clip_id: str) -> int:
        """How many distinct crop positions this clip supports."""
        arr = self.arrays[clip_id]
        if self.feature == "engineered":
            return 1
        if self.feature == "logmel":
            n = arr.shape[1] - SEGMENT_FRAMES + 1
        else:
            n = len(arr) - RAW_WINDOW_SAMPLES + 1
        if n < 1:
            raise TooShortError(f"{clip_id}: clip too short for one {self.feature} example")
        return n

    def example(self, clip_id: str, offset: int = 0) -> np.ndarray:
        """The example at a crop offset, shaped for the matching model."""
        arr = self.arrays[clip_id]
        if self.feature == "engineered":
            return arr
        if offset < 0 or offset >= self.n_offsets(clip_id):
            raise TooShortError(f"{clip_id}: offset {offset} out of range")
        if self.feature == "logmel":
            return arr[None, :, offset:offset + SEGMENT_FRAMES]
        return arr[None, offset:offset + RAW_WINDOW_SAMPLES]

    def center_offset(self, clip_id: str) -> int:
        return (self.n_offsets(clip_id) - 1) // 2

    # -- on-disk form -------------------------------------------------------

    def save_dir(self, out_dir) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        index = {"feature": self.feature, "clips": {}}
        for clip_id, arr in self.arrays.items():
            name = f"{clip_id}.bin"
            save_tensor(out_dir / name, arr)
            index["clips"][clip_id] = name
        (out_dir / "index.json").write_text(json.dumps(index, indent=2) + "\n")

    @classmethod
    def load_dir(cls, cache_dir, params: FrameParams = FrameParams()) -> "FeatureCache":
        cache_dir = Path(cache_dir)
        index = json.loads((cache_dir / "index.json").read_text())
        if index.get("feature") not in _FEATURE_KINDS:
            raise UnsupportedFormatError(f"{cache_dir}: bad cache index")
        arrays = {cid: load_tensor(cache_dir / name)
                  for cid, name in index["clips"].items()}
        return cls(index["feature"], arrays, params)


def fit_input_scaler(cache: FeatureCache, records: list[DatasetRecord],
                     max_sample: int = 64) -> Standardizer:
    """Input normalization constants from (a sample of) the given records.

    Engineered vectors get per-dimension statistics; log-mel and raw crops
    get a single global mean/std.
    """
    if not records:
        raise EmptySetError("no records to fit a scaler on")
    if cache.feature == "engineered":
        x = np.stack([cache.example(r.clip_id) for r in records])
        return Standardizer.fit(x)
    sample = records[:max_sample]
    flat = np.concatenate([
        cache.example(r.clip_id, cache.center_offset(r.clip_id)).ravel() for r in sample])
    return Standardizer(mean=np.asarray(float(flat.mean())),
                        std=np.asarray(max(float(flat.std()), 1e-8)))


class SampledExamples:
    """BatchSource of n deterministic crops over one split.

    With n_examples unset the roster is one example per record in order;
    otherwise records are drawn uniformly (with replacement), so the roster
    can be larger than the split. Labels are the records' observed labels.
    """

    def __init__(self, dataset: LabeledDataset, split: str, cache: FeatureCache,
                 n_examples: int | None = None, seed: int = 0,
                 scaler: Standardizer | None = None):
        records = [r for r in dataset.records if r.split == split]
        if not records:
            raise EmptySetError(f"no records in split {split!r}")
        n = len(records) if n_examples is None else int(n_examples)
        if n < 1:
            raise EmptySetError(f"roster of {n} examples")
        self.cache = cache
        self.clip_ids = []
        self.offsets = np.empty(n, dtype=np.int64)
        self.labels = np.empty(n, dtype=np.int64)
        for i in range(n):
            rng = np.random.default_rng((seed, i))
            rec = records[i] if n_examples is None else records[int(rng.integers(len(records)))]
            self.clip_ids.append(rec.clip_id)
            self.offsets[i] = rng.integers(cache.n_offsets(rec.clip_id))
            self.labels[i] = int(rec.observed_label)
        self._mu = np.float32(0.0) if scaler is None else scaler.mean.astype(np.float32)
        self._sd = np.float32(1.0) if scaler is None else scaler.std.astype(np.float32)

    def __len__(self) -> int:
        return len(self.clip_ids)

    def batch(self, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.empty((len(indices),) + self.cache.example_shape, dtype=np.float32)
        for k, i in enumerate(indices):
            x[k] = self.cache.example(self.clip_ids[i], int(self.offsets[i]))
        x -= self._mu
        x /= self._sd
        return x, self.labels[indices]


def center_examples(dataset: LabeledDataset, split: str, cache: FeatureCache,
                    scaler: Standardizer | None = None,
                    label_source: str = "true") -> tuple[np.ndarray, np.ndarray]:
    """One center-crop example per record; labels default to ground truth,
    which is what validation and test scoring use."""
    records = [r for r in dataset.records if r.split == split]
    if not records:
        raise EmptySetError(f"no records in split {split!r}")
    x = np.empty((len(records),) + cache.example_shape, dtype=np.float32)
    y = np.empty(len(records), dtype=np.int64)
    for k, rec in enumerate(records):
        x[k] = cache.example(rec.clip_id, cache.center_offset(rec.clip_id))
        y[k] = int(rec.true_label if label_source == "true" else rec.observed_label)
    if scaler is not None:
        x -= scaler.mean.astype(np.float32)
        x /= scaler.std.astype(np.float32)
    return x, y


def tile_offsets(cache: FeatureCache, clip_id: str) -> list[int]:
    """Crop offsets that together span the whole clip: evenly spaced from the
    first to the last valid position, one tile per window length (plus the
    endpoint). A clip shorter than two windows still gets both ends."""
    n = cache.n_offsets(clip_id)
    if cache.feature == "engineered" or n == 1:
        return [0]
    window = cache.example_shape[-1]
    k = int(np.ceil((n - 1) / window)) + 1
    return sorted({int(round(p)) for p in np.linspace(0, n - 1, k)})


def tiled_examples(dataset: LabeledDataset, split: str, cache: FeatureCache,
                   scaler: Standardizer | None = None,
                   label_source: str = "true") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Whole-clip evaluation set: every record contributes tiles covering its
    full duration, so clip-level scores do not depend on where one crop lands.

    Returns (x, y, groups): y has one label per record, groups maps each row
    of x back to its record's index in y.
    """
    records = [r for r in dataset.records if r.split == split]
    if not records:
        raise EmptySetError(f"no records in split {split!r}")
    rows, groups = [], []
    y = np.empty(len(records), dtype=np.int64)
    for k, rec in enumerate(records):
        y[k] = int(rec.true_label if label_source == "true" else rec.observed_label)
        for off in tile_offsets(cache, rec.clip_id):
            rows.append(cache.example(rec.clip_id, off))
            groups.append(k)
    x = np.stack(rows).astype(np.float32)
    if scaler is not None:
        x -= scaler.mean.astype(np.float32)
        x /= scaler.std.astype(np.float32)
    return x, y, np.asarray(groups, dtype=np.int64)
