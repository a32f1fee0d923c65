"""Scoring: accuracy/confusion reports for trained models, plus a
training-free nearest-template baseline over log-mel band statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptySetError, ShapeMismatchError
from ..features import Standardizer
from ..nn.model import Model
from ..synthesis import N_CLASSES


def confusion_counts(y_true: np.ndarray, y_pred: np.ndarray,
                     n_classes: int = N_CLASSES) -> np.ndarray:
    """Count matrix with rows = true class, columns = predicted class."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ShapeMismatchError(f"{y_true.shape} truths vs {y_pred.shape} predictions")
    out = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(out, (y_true, y_pred), 1)
    return out


def column_normalized(confusion: np.ndarray) -> np.ndarray:
    """Each column scaled to sum to 1 (how a prediction splits over truths);
    all-zero columns stay zero."""
    confusion = np.asarray(confusion, dtype=np.float64)
    sums = confusion.sum(axis=0, keepdims=True)
    return np.divide(confusion, sums, out=np.zeros_like(confusion), where=sums > 0)


@dataclass
class EvalReport:
    accuracy: float
    per_class_accuracy: list[float]
    confusion: np.ndarray
    n_examples: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class_accuracy": self.per_class_accuracy,
            "confusion": self.confusion.tolist(),
            "n_examples": self.n_examples,
        }

    @classmethod
    def from_predictions(cls, y_true: np.ndarray, y_pred: np.ndarray) -> "EvalReport":
        if len(y_true) == 0:
            raise EmptySetError("nothing to score")
        conf = confusion_counts(y_true, y_pred)
        row_totals = conf.sum(axis=1)
        per_class = [float(conf[c, c] / row_totals[c]) if row_totals[c] else 0.0
                     for c in range(len(conf))]
        return cls(accuracy=float(np.mean(y_true == y_pred)),
                   per_class_accuracy=per_class,
                   confusion=conf,
                   n_examples=len(y_true))


def evaluate_model(model: Model, x: np.ndarray, y_true: np.ndarray,
                   batch_size: int = 256) -> EvalReport:
    return EvalReport.from_predictions(y_true, model.predict(x, batch_size))


def evaluate_model_grouped(model: Model, x: np.ndarray, y_true: np.ndarray,
                           groups: np.ndarray, batch_size: int = 256) -> EvalReport:
    """Clip-level scoring: rows of x belonging to the same group (clip) have
    their logits averaged before the argmax, so a model fed fixed-size crops
    is judged on whole clips, like the full-clip models."""
    groups = np.asarray(groups, dtype=np.int64)
    if len(groups) != len(x):
        raise ShapeMismatchError(f"{len(x)} rows vs {len(groups)} group tags")
    logits = np.concatenate([model.forward(x[lo:lo + batch_size])
                             for lo in range(0, len(x), batch_size)])
    summed = np.zeros((len(y_true), logits.shape[1]), dtype=np.float64)
    np.add.at(summed, groups, logits)
    return EvalReport.from_predictions(y_true, np.argmax(summed, axis=1))


# ---------------------------------------------------------------------------
# Nearest-template baseline

def mel_descriptor(logmel: np.ndarray) -> np.ndarray:
    """Per-band summary over time: mean, standard deviation, and mean absolute
    frame-to-frame change (reverberation smooths bands, packet loss jolts
    them), concatenated into one vector."""
    logmel = np.asarray(logmel)
    if logmel.ndim == 3:  # tolerate the (1, mels, frames) model layout
        logmel = logmel[0]
    if logmel.ndim != 2:
        raise ShapeMismatchError(f"expected (mels, frames), got {logmel.shape}")
    return np.concatenate([logmel.mean(axis=1), logmel.std(axis=1),
                           np.mean(np.abs(np.diff(logmel, axis=1)), axis=1)])


@dataclass
class NearestTemplate:
    """Classify by distance to per-class centroids of standardized descriptors."""

    standardizer: Standardizer
    centroids: np.ndarray

    @classmethod
    def fit(cls, descriptors: np.ndarray, labels: np.ndarray,
            n_classes: int = N_CLASSES) -> "NearestTemplate":
        descriptors = np.asarray(descriptors, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        std = Standardizer.fit(descriptors)
        z = std.transform(descriptors)
        centroids = np.empty((n_classes, descriptors.shape[1]))
        for c in range(n_classes):
            mask = labels == c
            if not mask.any():
                raise EmptySetError(f"no training descriptors labeled class {c}")
            centroids[c] = z[mask].mean(axis=0)
        return cls(standardizer=std, centroids=centroids)

    def predict(self, descriptors: np.ndarray) -> np.ndarray:
        z = self.standardizer.transform(np.asarray(descriptors, dtype=np.float64))
        d2 = np.sum(np.square(z[:, None, :] - self.centroids[None, :, :]), axis=2)
        return np.argmin(d2, axis=1)
