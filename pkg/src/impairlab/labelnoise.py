"""Label corruption: uniform flips at an exact rate, noisy-copy augmentation,
and simulated human raters drawing from a per-class confusion matrix with
majority-vote or single-rater aggregation.

Corruption only ever touches observed labels; ground truth stays on the
record for scoring.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import BadConfusionError, OutOfRangeError
from .synthesis import N_CLASSES, ImpairmentClass, LabeledDataset


def flip_labels(labels: np.ndarray, rate: float, seed: int,
                n_classes: int = N_CLASSES) -> np.ndarray:
    """Flip exactly round(rate * N) labels, each to a uniformly random wrong
    class; which positions flip is a seeded draw without replacement."""
    if not 0.0 <= rate <= 1.0:
        raise OutOfRangeError(f"flip rate must be in [0, 1], got {rate}")
    labels = np.asarray(labels, dtype=np.int64)
    out = labels.copy()
    n_flip = int(round(rate * len(labels)))
    if n_flip == 0:
        return out
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(labels), size=n_flip, replace=False)
    offsets = rng.integers(1, n_classes, size=n_flip)
    out[picks] = (labels[picks] + offsets) % n_classes
    return out


def observed_labels(dataset: LabeledDataset, split: str | None = None) -> np.ndarray:
    recs = dataset.records if split is None else [r for r in dataset.records if r.split == split]
    return np.array([int(r.observed_label) for r in recs], dtype=np.int64)


def true_labels(dataset: LabeledDataset, split: str | None = None) -> np.ndarray:
    recs = dataset.records if split is None else [r for r in dataset.records if r.split == split]
    return np.array([int(r.true_label) for r in recs], dtype=np.int64)


# ---------------------------------------------------------------------------
# Noise processes as config values

@dataclass(frozen=True)
class NoNoise:
    """Observed labels equal ground truth."""


@dataclass(frozen=True)
class UniformFlip:
    """Flip a fixed fraction of the split's labels to random wrong classes."""

    rate: float

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise OutOfRangeError(f"flip rate must be in [0, 1], got {self.rate}")


@dataclass(frozen=True)
class NoisyCopies:
    """Keep the originals and append k copies per record, each copy's labels
    independently flipped at `rate`; the split grows to (k + 1) x its size."""

    k: int
    rate: float

    def __post_init__(self):
        if self.k < 1:
            raise OutOfRangeError(f"need at least one copy, got k={self.k}")
        if not 0.0 <= self.rate <= 1.0:
            raise OutOfRangeError(f"flip rate must be in [0, 1], got {self.rate}")


@dataclass(frozen=True)
class SimulatedRaters:
    """Each of n_raters labels every record through a confusion matrix; the
    observed label aggregates them ('majority' with ties to the lowest class
    code, or 'single' meaning rater 0 decides)."""

    n_raters: int
    aggregation: str = "majority"

    def __post_init__(self):
        if self.aggregation not in ("majority", "single"):
            raise ValueError(f"aggregation must be 'majority' or 'single', "
                             f"got {self.aggregation!r}")


NoiseSpec = NoNoise | UniformFlip | NoisyCopies | SimulatedRaters


def noise_spec_to_dict(spec: NoiseSpec) -> dict:
    if isinstance(spec, NoNoise):
        return {"kind": "none"}
    if isinstance(spec, UniformFlip):
        return {"kind": "uniform_flip", "rate": spec.rate}
    if isinstance(spec, NoisyCopies):
        return {"kind": "noisy_copies", "k": spec.k, "rate": spec.rate}
    if isinstance(spec, SimulatedRaters):
        return {"kind": "raters", "n_raters": spec.n_raters, "aggregation": spec.aggregation}
    raise TypeError(f"not a noise spec: {spec!r}")


def noise_spec_from_dict(d: dict) -> NoiseSpec:
    kind = d.get("kind", "none")
    if kind == "none":
        return NoNoise()
    if kind == "uniform_flip":
        return UniformFlip(rate=float(d["rate"]))
    if kind == "noisy_copies":
        return NoisyCopies(k=int(d["k"]), rate=float(d["rate"]))
    if kind == "raters":
        return SimulatedRaters(n_raters=int(d["n_raters"]),
                               aggregation=d.get("aggregation", "majority"))
    raise ValueError(f"unknown noise kind {kind!r}")


# ---------------------------------------------------------------------------
# Simulated raters

def default_rater_confusion(accuracy: float = 0.66) -> np.ndarray:
    """Row-stochastic rater error model with the given per-class accuracy.

    Quiet or noisy clips are the classic miss, so BackgroundNoise and
    LowVolume leak extra mass into NoImpairment; every other confusion is
    spread evenly.
    """
    if not 0.0 < accuracy <= 1.0:
        raise OutOfRangeError(f"accuracy must be in (0, 1], got {accuracy}")
    spread = (1.0 - accuracy) / (N_CLASSES - 1)
    m = np.full((N_CLASSES, N_CLASSES), spread)
    np.fill_diagonal(m, accuracy)
    bump = min(0.045, spread / 2.0) if accuracy < 1.0 else 0.0
    for cls in (ImpairmentClass.BACKGROUND_NOISE, ImpairmentClass.LOW_VOLUME):
        wrong = [c for c in range(N_CLASSES) if c != cls and c != ImpairmentClass.NO_IMPAIRMENT]
        m[cls, ImpairmentClass.NO_IMPAIRMENT] += bump * len(wrong)
        m[cls, wrong] -= bump
    return m


def check_confusion(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape != (N_CLASSES, N_CLASSES):
        raise BadConfusionError(f"expected {(N_CLASSES, N_CLASSES)} matrix, got {matrix.shape}")
    if np.any(matrix < 0.0):
        raise BadConfusionError("confusion entries must be non-negative")
    if not np.allclose(matrix.sum(axis=1), 1.0, atol=1e-9):
        raise BadConfusionError(f"rows must sum to 1, got {matrix.sum(axis=1)}")
    return matrix


def simulate_raters(labels: np.ndarray, n_raters: int, seed: int,
                    confusion: np.ndarray | None = None) -> np.ndarray:
    """Draw one label per (rater, example) from the confusion row of the true
    class; shape (n_raters, n_examples). Rater r uses stream (seed, r)."""
    if n_raters < 1:
        raise OutOfRangeError(f"need at least one rater, got {n_raters}")
    confusion = check_confusion(default_rater_confusion() if confusion is None else confusion)
    labels = np.asarray(labels, dtype=np.int64)
    cdf = np.cumsum(confusion, axis=1)
    out = np.empty((n_raters, len(labels)), dtype=np.int64)
    for r in range(n_raters):
        rng = np.random.default_rng((seed, r))
        u = rng.random(len(labels))
        out[r] = np.argmax(u[:, None] < cdf[labels], axis=1)
    return out


def majority_vote(rater_labels: np.ndarray) -> np.ndarray:
    """Most frequent label per column; ties resolve to the lowest class code."""
    counts = np.zeros((N_CLASSES, rater_labels.shape[1]), dtype=np.int64)
    for cls in range(N_CLASSES):
        counts[cls] = np.sum(rater_labels == cls, axis=0)
    return np.argmax(counts, axis=0)


def aggregate_raters(rater_labels: np.ndarray, aggregation: str = "majority") -> np.ndarray:
    if aggregation == "majority":
        return majority_vote(rater_labels)
    if aggregation == "single":
        return rater_labels[0].copy()
    raise ValueError(f"unknown aggregation {aggregation!r}")


def save_rater_table(path, clip_ids: list[str], truth: np.ndarray,
                     rater_labels: np.ndarray, aggregated: np.ndarray) -> None:
    with open(path, "w") as f:
        for i, clip_id in enumerate(clip_ids):
            f.write(json.dumps({
                "clip_id": clip_id,
                "true_label": int(truth[i]),
                "rater_labels": [int(v) for v in rater_labels[:, i]],
                "aggregated": int(aggregated[i]),
            }) + "\n")


# ---------------------------------------------------------------------------
# Applying a noise spec to a dataset split

def apply_noise(dataset: LabeledDataset, spec: NoiseSpec, seed: int,
                split: str = "train") -> LabeledDataset:
    """New dataset (clips shared) whose `split` records carry noisy observed
    labels; every other split keeps ground truth. NoisyCopies also multiplies
    the split's record count."""
    out = dataset.copy_records()
    idx = [i for i, r in enumerate(out.records) if r.split == split]
    truth = np.array([int(out.records[i].true_label) for i in idx], dtype=np.int64)

    if isinstance(spec, NoNoise) or not idx:
        return out
    if isinstance(spec, UniformFlip):
        noisy = flip_labels(truth, spec.rate, seed)
        for j, i in enumerate(idx):
            out.records[i].observed_label = ImpairmentClass(int(noisy[j]))
        return out
    if isinstance(spec, NoisyCopies):
        copies = []
        for copy in range(spec.k):
            noisy = flip_labels(truth, spec.rate, np.random.SeedSequence(
                (seed, copy)).generate_state(1)[0])
            for j, i in enumerate(idx):
                rec = out.records[i]
                copies.append(type(rec)(
                    clip_id=rec.clip_id,
                    true_label=rec.true_label,
                    observed_label=ImpairmentClass(int(noisy[j])),
                    params=dict(rec.params) | {"noisy_copy": copy},
                    split=rec.split,
                    clip_path=rec.clip_path,
                ))
        out.records.extend(copies)
        return out
    if isinstance(spec, SimulatedRaters):
        votes = simulate_raters(truth, spec.n_raters, seed)
        agg = aggregate_raters(votes, spec.aggregation)
        for j, i in enumerate(idx):
            out.records[i].observed_label = ImpairmentClass(int(agg[j]))
        return out
    raise TypeError(f"not a noise spec: {spec!r}")
