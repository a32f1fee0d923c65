"""Robustness sweeps: accuracy versus label-noise rate across architectures,
and the training-set size needed to reach a target accuracy as noise grows.

Each seed's dataset and feature caches are prepared once and reused across
every condition, so sweep cells differ only in the thing being swept.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import InvalidGridError, OutOfRangeError
from ..labelnoise import UniformFlip
from .config import DEFAULT_ARCHITECTURE, ExperimentConfig
from .report import svg_line_chart, write_results_json, write_table_csv
from .run import PreparedData, prepare_data, run_experiment

DEFAULT_RATES = (0.0, 0.2, 0.5, 0.8)
DEFAULT_SIZES = (500, 1000, 2000, 4000, 8000, 16000, 32000, 64000)


def _prepare_per_seed(base: ExperimentConfig, seeds: tuple) -> dict[int, PreparedData]:
    return {seed: prepare_data(base.with_(seed=seed)) for seed in seeds}


def noise_robustness_sweep(base: ExperimentConfig,
                           rates: tuple = DEFAULT_RATES,
                           features: tuple = ("logmel", "engineered"),
                           seeds: tuple = (0, 1, 2),
                           log_fn=None) -> dict:
    """Median-over-seeds clean-test accuracy for each (feature, flip rate).

    Every condition trains on the same clips with the same roster size; only
    the fraction of corrupted training labels moves.
    """
    prepared = _prepare_per_seed(base, seeds)
    models = {}
    for feature in features:
        arch = DEFAULT_ARCHITECTURE[feature]
        cells = {}
        for rate in rates:
            accs = []
            for seed in seeds:
                cfg = base.with_(seed=seed, feature=feature, architecture=arch,
                                 noise=UniformFlip(rate))
                result = run_experiment(cfg, prepared=prepared[seed])
                accs.append(result.test_report.accuracy)
                if log_fn is not None:
                    log_fn(f"{feature} rate={rate} seed={seed} "
                           f"acc={result.test_report.accuracy:.3f} "
                           f"epochs={len(result.history)}")
            cells[rate] = {"accuracies": accs, "median": float(np.median(accs))}
        models[feature] = {"architecture": arch, "by_rate": cells}
    return {
        "kind": "noise_robustness",
        "rates": list(rates),
        "seeds": list(seeds),
        "train_examples": base.train_examples,
        "models": models,
    }


def size_for_threshold_sweep(base: ExperimentConfig,
                             rates: tuple = (0.0, 0.5),
                             sizes: tuple = DEFAULT_SIZES,
                             threshold: float = 0.80,
                             seeds: tuple = (0, 1, 2),
                             log_fn=None) -> dict:
    """Walk a geometric grid of roster sizes per noise rate and record the
    smallest size whose median test accuracy clears the threshold.

    Larger sizes are skipped once a rate clears the bar; a rate that never
    clears it reports required_size None.
    """
    sizes = tuple(int(s) for s in sizes)
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InvalidGridError(f"size grid must be strictly increasing, got {sizes}")
    if not 0.0 < threshold < 1.0:
        raise OutOfRangeError(f"threshold must be in (0, 1), got {threshold}")
    prepared = _prepare_per_seed(base, seeds)
    curves = {}
    required = {}
    for rate in rates:
        by_size = {}
        required[rate] = None
        for size in sizes:
            accs = []
            for seed in seeds:
                cfg = base.with_(seed=seed, train_examples=int(size),
                                 noise=UniformFlip(rate))
                result = run_experiment(cfg, prepared=prepared[seed])
                accs.append(result.test_report.accuracy)
            median = float(np.median(accs))
            by_size[size] = {"accuracies": accs, "median": median}
            if log_fn is not None:
                log_fn(f"rate={rate} size={size} median_acc={median:.3f}")
            if median >= threshold:
                required[rate] = int(size)
                break
        curves[rate] = by_size
    return {
        "kind": "size_for_threshold",
        "threshold": threshold,
        "rates": list(rates),
        "sizes": list(sizes),
        "seeds": list(seeds),
        "curves": curves,
        "required_size": required,
    }


def write_sweep_report(sweep: dict, out_dir) -> None:
    """results.json, table.csv, and chart.svg for either sweep kind.

    An empty sweep (no cells) gets a warning in results.json and no chart.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if sweep["kind"] == "noise_robustness":
        rows = []
        series = []
        for feature, entry in sweep["models"].items():
            pts = []
            for rate, cell in entry["by_rate"].items():
                rows.append({"model": entry["architecture"], "feature": feature,
                             "noise_rate": float(rate), "median_accuracy": cell["median"],
                             "n_seeds": len(cell["accuracies"])})
                pts.append((float(rate), cell["median"]))
            series.append((f"{feature} ({entry['architecture']})", pts))
        columns = ["model", "feature", "noise_rate", "median_accuracy", "n_seeds"]
        chart_args = dict(xlabel="training-label flip rate",
                          ylabel="clean-test accuracy",
                          title="Accuracy vs label noise", y_range=(0.0, 1.0))
    else:
        rows = []
        series = []
        for rate, by_size in sweep["curves"].items():
            pts = []
            for size, cell in by_size.items():
                rows.append({"noise_rate": float(rate), "train_examples": int(size),
                             "median_accuracy": cell["median"],
                             "n_seeds": len(cell["accuracies"])})
                pts.append((np.log2(float(size)), cell["median"]))
            series.append((f"flip rate {rate}", pts))
        columns = ["noise_rate", "train_examples", "median_accuracy", "n_seeds"]
        chart_args = dict(xlabel="log2 training examples",
                          ylabel="clean-test accuracy",
                          title=f"Examples needed for accuracy {sweep['threshold']}",
                          y_range=(0.0, 1.0))

    if any(pts for _, pts in series):
        (out_dir / "chart.svg").write_text(svg_line_chart(series, **chart_args))
    else:
        sweep = {**sweep, "warning": "empty sweep: no cells to chart"}
    write_results_json(out_dir / "results.json", sweep)
    write_table_csv(out_dir / "table.csv", rows, columns)
