"""Experiment orchestration: configs, splits, feature caches, the run driver,
grids and sweeps, plain-file reports, and the command-line interface.
"""

from .config import DEFAULT_ARCHITECTURE, FEATURES, ExperimentConfig
from .data import FeatureCache, SampledExamples, center_examples, fit_input_scaler
from .evaluate import (
    EvalReport,
    NearestTemplate,
    column_normalized,
    confusion_counts,
    evaluate_model,
    mel_descriptor,
)
from .grid import GRID_PAIRS, feature_grid, write_grid_report
from .report import svg_line_chart, write_results_json, write_table_csv
from .run import (
    PreparedData,
    RunResult,
    prepare_data,
    run_experiment,
    write_run_artifacts,
)
from .split import largest_remainder_counts, stratified_split
from .sweep import (
    noise_robustness_sweep,
    size_for_threshold_sweep,
    write_sweep_report,
)

__all__ = [
    "DEFAULT_ARCHITECTURE", "EvalReport", "ExperimentConfig", "FEATURES",
    "FeatureCache", "GRID_PAIRS", "NearestTemplate", "PreparedData",
    "RunResult", "SampledExamples", "center_examples", "column_normalized",
    "confusion_counts", "evaluate_model", "feature_grid", "fit_input_scaler",
    "largest_remainder_counts", "mel_descriptor", "noise_robustness_sweep",
    "prepare_data", "run_experiment", "size_for_threshold_sweep",
    "stratified_split", "svg_line_chart", "write_grid_report",
    "write_results_json", "write_run_artifacts", "write_sweep_report",
    "write_table_csv",
]
