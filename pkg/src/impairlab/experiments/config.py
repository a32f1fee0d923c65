"""Experiment configuration: one dataclass covering data synthesis, feature
choice, model choice, label noise, and training, with JSON round-tripping so
runs can be launched from files.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from ..labelnoise import NoNoise, NoiseSpec, noise_spec_from_dict, noise_spec_to_dict
from ..nn.train import TrainConfig

FEATURES = ("engineered", "logmel", "raw")

DEFAULT_ARCHITECTURE = {
    "engineered": "dense18",
    "logmel": "mel_cnn2d",
    "raw": "raw_cnn1d",
}


@dataclass
class ExperimentConfig:
    name: str = "run"
    seed: int = 0
    # dataset
    per_class: int = 120
    clip_duration_s: float = 3.0
    corpus_clips: int = 48
    split_fractions: tuple = (0.70, 0.15, 0.15)
    noise: NoiseSpec = field(default_factory=NoNoise)
    # representation and model
    feature: str = "logmel"
    architecture: str | None = None   # None -> matched to the feature
    # training
    train_examples: int | None = None  # None -> one example per train record
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.feature not in FEATURES:
            raise ValueError(f"feature must be one of {FEATURES}, got {self.feature!r}")
        if self.architecture is None:
            self.architecture = DEFAULT_ARCHITECTURE[self.feature]
        fractions = tuple(float(f) for f in self.split_fractions)
        if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0:
            raise ValueError(f"split_fractions must be 3 non-negative numbers summing"
                             f" to 1, got {self.split_fractions}")
        self.split_fractions = fractions
        if self.per_class < 1:
            raise ValueError(f"per_class must be >= 1, got {self.per_class}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise"] = noise_spec_to_dict(self.noise)
        d["split_fractions"] = list(self.split_fractions)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "noise" in d:
            d["noise"] = noise_spec_from_dict(d["noise"])
        if "split_fractions" in d:
            d["split_fractions"] = tuple(d["split_fractions"])
        if "train" in d and isinstance(d["train"], dict):
            d["train"] = TrainConfig(**d["train"])
        return cls(**d)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)
