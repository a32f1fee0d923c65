"""Mini-batch training loop with SGD/momentum or Adam and early stopping on
validation loss. Batches come from a BatchSource so large inputs can be
materialized lazily; plain arrays wrap into ArraySource.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ..errors import EmptySetError
from .model import Model, cross_entropy


class BatchSource(Protocol):
    """Index-addressable example store the train loop can draw from."""

    def __len__(self) -> int: ...

    def batch(self, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


class ArraySource:
    """BatchSource over in-memory arrays."""

    def __init__(self, x: np.ndarray, labels: np.ndarray):
        if len(x) != len(labels):
            raise ValueError(f"{len(x)} examples vs {len(labels)} labels")
        if len(x) == 0:
            raise EmptySetError("no examples")
        self.x = x
        self.labels = np.asarray(labels, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.x)

    def batch(self, indices):
        return self.x[indices], self.labels[indices]


@dataclass
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    momentum: float = 0.9
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 64
    max_epochs: int = 30
    patience: int = 5
    min_delta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be positive")
        if self.patience < 0:
            raise ValueError(f"patience must be >= 0, got {self.patience}")


class SGD:
    def __init__(self, model: Model, lr: float, momentum: float = 0.0):
        self.model = model
        self.lr = lr
        self.momentum = momentum
        self.velocity = {name: np.zeros_like(arr) for name, arr in model.parameters()}

    def step(self) -> None:
        grads = dict(self.model.gradients())
        for name, arr in self.model.parameters():
            v = self.velocity[name]
            v *= self.momentum
            v -= self.lr * grads[name]
            arr += v


class Adam:
    def __init__(self, model: Model, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.model = model
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {name: np.zeros_like(arr) for name, arr in model.parameters()}
        self.v = {name: np.zeros_like(arr) for name, arr in model.parameters()}
        self.t = 0

    def step(self) -> None:
        self.t += 1
        grads = dict(self.model.gradients())
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for name, arr in self.model.parameters():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            arr -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def make_optimizer(model: Model, config: TrainConfig):
    if config.optimizer == "adam":
        return Adam(model, config.learning_rate, config.adam_beta1, config.adam_beta2,
                    config.adam_eps)
    return SGD(model, config.learning_rate, config.momentum)


@dataclass
class EarlyStopping:
    """Stop once the monitored loss has failed to improve for more than
    `patience` consecutive epochs; an improvement must beat the best value
    by at least `min_delta`."""

    patience: int = 5
    min_delta: float = 0.0
    best: float = field(default=float("inf"), init=False)
    counter: int = field(default=0, init=False)

    def update(self, value: float) -> bool:
        """Record an epoch's loss; returns True when training should stop."""
        if value < self.best - self.min_delta:
            self.best = value
            self.counter = 0
        else:
            self.counter += 1
        return self.counter > self.patience

    @property
    def improved(self) -> bool:
        return self.counter == 0


def evaluate_loss(model: Model, x: np.ndarray, labels: np.ndarray,
                  batch_size: int = 256) -> tuple[float, float]:
    """Mean loss and accuracy over a dataset, computed batch-wise in eval mode."""
    if len(x) == 0:
        raise EmptySetError("nothing to evaluate")
    labels = np.asarray(labels, dtype=np.int64)
    total_loss = 0.0
    correct = 0
    for lo in range(0, len(x), batch_size):
        xb, yb = x[lo:lo + batch_size], labels[lo:lo + batch_size]
        logits = model.forward(xb)
        loss, _ = cross_entropy(logits, yb)
        total_loss += loss * len(xb)
        correct += int(np.sum(np.argmax(logits, axis=1) == yb))
    return total_loss / len(x), correct / len(x)


def train(model: Model, source: BatchSource, val_x: np.ndarray, val_labels: np.ndarray,
          config: TrainConfig | None = None,
          log_fn=None) -> list[dict]:
    """Fit the model; returns the per-epoch history.

    The best-validation-loss weights are restored before returning. Epoch e
    draws its shuffle and dropout randomness from (config.seed, e), so a rerun
    with the same seed reproduces the run bit for bit.
    """
    if config is None:
        config = TrainConfig()
    n = len(source)
    if n == 0:
        raise EmptySetError("training source is empty")
    optimizer = make_optimizer(model, config)
    stopper = EarlyStopping(patience=config.patience, min_delta=config.min_delta)
    best_params = {name: arr.copy() for name, arr in model.parameters()}
    history: list[dict] = []

    for epoch in range(config.max_epochs):
        t0 = time.monotonic()
        rng = np.random.default_rng((config.seed, epoch))
        order = rng.permutation(n)
        running_loss = 0.0
        running_correct = 0
        for lo in range(0, n, config.batch_size):
            idx = order[lo:lo + config.batch_size]
            xb, yb = source.batch(idx)
            loss, logits = model.loss_and_grad(xb, yb, train=True, rng=rng)
            optimizer.step()
            running_loss += loss * len(idx)
            running_correct += int(np.sum(np.argmax(logits, axis=1) == yb))
        val_loss, val_acc = evaluate_loss(model, val_x, val_labels, config.batch_size)
        record = {
            "epoch": epoch,
            "train_loss": running_loss / n,
            "train_acc": running_correct / n,
            "val_loss": val_loss,
            "val_acc": val_acc,
            "seconds": time.monotonic() - t0,
        }
        history.append(record)
        if log_fn is not None:
            log_fn(record)
        stop = stopper.update(val_loss)
        if stopper.improved:
            best_params = {name: arr.copy() for name, arr in model.parameters()}
        if stop:
            break

    model.set_parameters(best_params)
    return history


def save_history(history: list[dict], path) -> None:
    with open(path, "w") as f:
        for record in history:
            f.write(json.dumps(record) + "\n")


def load_history(path) -> list[dict]:
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
