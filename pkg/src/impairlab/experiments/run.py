"""End-to-end experiment driver: synthesize a dataset, split it, corrupt the
training labels, featurize, train, and score on the clean-label test split.

Every stage draws from a tagged sub-stream of the experiment seed, so one
integer pins the whole run; repeating a config reproduces the artifacts byte
for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..features import Standardizer
from ..labelnoise import apply_noise
from ..nn.model import Model, build_architecture, save_model
from ..nn.train import save_history, train
from ..synthesis import LabeledDataset, build_dataset, pseudo_corpus, save_manifest
from .config import ExperimentConfig
from .data import (FeatureCache, SampledExamples, fit_input_scaler,
                   tiled_examples)
from .evaluate import (EvalReport, column_normalized, evaluate_model,
                       evaluate_model_grouped, mel_descriptor, NearestTemplate)
from .split import stratified_split

# Seed-stream tags; each pipeline stage mixes its tag with the experiment seed.
_CORPUS, _DATASET, _SPLIT, _NOISE, _ROSTER, _MODEL, _TRAIN = range(7)


def _subseed(seed: int, *tags: int) -> int:
    return int(np.random.SeedSequence((seed,) + tags).generate_state(1)[0])


@dataclass
class PreparedData:
    """The noise-free, featurizable part of a run, shareable across configs
    that differ only in label noise, roster size, or model."""

    dataset: LabeledDataset
    caches: dict[str, FeatureCache] = field(default_factory=dict)

    def cache_for(self, feature: str) -> FeatureCache:
        if feature not in self.caches:
            self.caches[feature] = FeatureCache.build(self.dataset, feature)
        return self.caches[feature]


def prepare_data(config: ExperimentConfig) -> PreparedData:
    """Synthesize the corpus and labeled dataset, then assign splits."""
    corpus = pseudo_corpus(config.corpus_clips, config.clip_duration_s,
                           _subseed(config.seed, _CORPUS))
    dataset = build_dataset(corpus, config.per_class, seed=_subseed(config.seed, _DATASET))
    dataset = stratified_split(dataset, config.split_fractions,
                               _subseed(config.seed, _SPLIT))
    return PreparedData(dataset=dataset)


@dataclass
class RunResult:
    config: ExperimentConfig
    model: Model
    scaler: Standardizer
    history: list[dict]
    val_report: EvalReport
    test_report: EvalReport
    baseline_report: EvalReport | None
    flops: int
    dataset: LabeledDataset

    def to_results_dict(self) -> dict:
        """Everything reportable and deterministic (wall times excluded)."""
        history = [{k: v for k, v in rec.items() if k != "seconds"}
                   for rec in self.history]
        return {
            "config": self.config.to_dict(),
            "flops": self.flops,
            "epochs_run": len(self.history),
            "history": history,
            "val": self.val_report.to_dict(),
            "test": self.test_report.to_dict(),
            "baseline": None if self.baseline_report is None
                        else self.baseline_report.to_dict(),
        }


def _template_baseline(noisy: LabeledDataset, cache: FeatureCache) -> EvalReport:
    """Nearest-class-template accuracy on the test split, trained on the same
    noisy train labels the model sees. Descriptors summarize the whole clip;
    unlike the network, the template has no fixed-size input to honor."""
    def descriptors(split, label_source):
        recs = [r for r in noisy.records if r.split == split]
        x = np.stack([mel_descriptor(cache.arrays[r.clip_id]) for r in recs])
        y = np.array([int(r.observed_label if label_source == "observed" else r.true_label)
                      for r in recs], dtype=np.int64)
        return x, y

    train_x, train_y = descriptors("train", "observed")
    test_x, test_y = descriptors("test", "true")
    template = NearestTemplate.fit(train_x, train_y)
    return EvalReport.from_predictions(test_y, template.predict(test_x))


def run_experiment(config: ExperimentConfig, prepared: PreparedData | None = None,
                   out_dir=None, write_clips: bool = False,
                   log_fn=None) -> RunResult:
    if prepared is None:
        prepared = prepare_data(config)
    cache = prepared.cache_for(config.feature)

    noisy = apply_noise(prepared.dataset, config.noise, _subseed(config.seed, _NOISE))
    train_records = [r for r in noisy.records if r.split == "train"]
    scaler = fit_input_scaler(cache, train_records)
    source = SampledExamples(noisy, "train", cache, config.train_examples,
                             seed=_subseed(config.seed, _ROSTER), scaler=scaler)
    vx, vy, vgroups = tiled_examples(noisy, "val", cache, scaler)

    model = build_architecture(config.architecture, seed=_subseed(config.seed, _MODEL))
    train_cfg = replace(config.train,
                        seed=_subseed(config.seed, _TRAIN, config.train.seed))
    history = train(model, source, vx, vy[vgroups], train_cfg, log_fn=log_fn)

    val_report = evaluate_model_grouped(model, vx, vy, vgroups)
    tx, ty, tgroups = tiled_examples(noisy, "test", cache, scaler)
    test_report = evaluate_model_grouped(model, tx, ty, tgroups)

    baseline = None
    if config.feature == "logmel":
        baseline = _template_baseline(noisy, prepared.cache_for("logmel"))

    result = RunResult(config=config, model=model, scaler=scaler, history=history,
                       val_report=val_report, test_report=test_report,
                       baseline_report=baseline, flops=model.count_flops(),
                       dataset=noisy)
    if out_dir is not None:
        write_run_artifacts(result, out_dir, write_clips=write_clips)
    return result


def write_run_artifacts(result: RunResult, out_dir, write_clips: bool = False) -> None:
    """config.json, manifest.jsonl, model.bin, history.jsonl, results.json,
    confusion.csv; optionally the synthesized clips as WAV files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result.config.save(out_dir / "config.json")
    save_manifest(result.dataset, out_dir / "manifest.jsonl",
                  clips_dir=out_dir / "clips" if write_clips else None)
    save_model(result.model, out_dir / "model.bin", extra={
        "feature": result.config.feature,
        "architecture": result.config.architecture,
        "scaler": result.scaler.to_dict(),
    })
    save_history(result.history, out_dir / "history.jsonl")
    (out_dir / "results.json").write_text(
        json.dumps(result.to_results_dict(), indent=2, sort_keys=True) + "\n")
    conf = result.test_report.confusion
    lines = ["true\\pred," + ",".join(str(c) for c in range(conf.shape[1]))]
    for r in range(conf.shape[0]):
        lines.append(f"{r}," + ",".join(str(int(v)) for v in conf[r]))
    (out_dir / "confusion.csv").write_text("\n".join(lines) + "\n")
    # companion view: each ground-truth column split over predictions
    norm = column_normalized(conf.T)
    lines = ["pred\\true," + ",".join(str(c) for c in range(norm.shape[1]))]
    for r in range(norm.shape[0]):
        lines.append(f"{r}," + ",".join(f"{v:.6f}" for v in norm[r]))
    (out_dir / "confusion_normalized.csv").write_text("\n".join(lines) + "\n")
