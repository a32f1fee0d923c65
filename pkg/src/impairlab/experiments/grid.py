"""Representation-by-model comparison: the three feature/architecture pairs
trained and scored on one shared dataset under one noise setting.
"""

from __future__ import annotations

from pathlib import Path

from .config import DEFAULT_ARCHITECTURE, ExperimentConfig
from .report import write_results_json, write_table_csv
from .run import prepare_data, run_experiment

GRID_PAIRS = tuple(DEFAULT_ARCHITECTURE.items())  # (feature, architecture)


def feature_grid(base: ExperimentConfig, pairs: tuple = GRID_PAIRS,
                 log_fn=None) -> dict:
    """Train each (feature, architecture) pair on the same clips and labels;
    returns per-pair test accuracy, per-class accuracy, and FLOPs."""
    prepared = prepare_data(base)
    rows = []
    for feature, arch in pairs:
        cfg = base.with_(feature=feature, architecture=arch)
        result = run_experiment(cfg, prepared=prepared)
        rows.append({
            "feature": feature,
            "architecture": arch,
            "test_accuracy": result.test_report.accuracy,
            "per_class_accuracy": result.test_report.per_class_accuracy,
            "flops_per_example": result.flops,
            "epochs_run": len(result.history),
            "baseline_accuracy": None if result.baseline_report is None
                                 else result.baseline_report.accuracy,
        })
        if log_fn is not None:
            log_fn(f"{feature}/{arch}: test_acc={result.test_report.accuracy:.3f} "
                   f"flops={result.flops}")
    return {"kind": "feature_grid", "noise": base.to_dict()["noise"],
            "seed": base.seed, "rows": rows}


def write_grid_report(grid: dict, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_results_json(out_dir / "results.json", grid)
    flat = []
    for row in grid["rows"]:
        flat.append({
            "feature": row["feature"],
            "architecture": row["architecture"],
            "test_accuracy": row["test_accuracy"],
            "flops_per_example": row["flops_per_example"],
            "epochs_run": row["epochs_run"],
        })
    write_table_csv(out_dir / "table.csv", flat,
                    ["feature", "architecture", "test_accuracy",
                     "flops_per_example", "epochs_run"])
