"""Command-line front end.

Subcommands: synth (build a labeled dataset on disk), features (precompute a
feature cache), train (run one experiment), eval (score a checkpoint), grid
(feature-by-architecture comparison), sweep (noise-robustness or
size-for-threshold curves).
"""

from __future__ import annotations

import argparse
import json
import sys

from ..errors import ImpairLabError
from ..features import Standardizer
from ..labelnoise import NoisyCopies, NoNoise, SimulatedRaters, UniformFlip
from ..nn.model import load_model
from ..nn.train import TrainConfig
from ..synthesis import load_manifest, save_manifest
from .config import FEATURES, ExperimentConfig
from .data import FeatureCache, tiled_examples
from .evaluate import evaluate_model_grouped
from .grid import feature_grid, write_grid_report
from .run import PreparedData, prepare_data, run_experiment
from .split import stratified_split
from .sweep import (
    DEFAULT_RATES,
    DEFAULT_SIZES,
    noise_robustness_sweep,
    size_for_threshold_sweep,
    write_sweep_report,
)


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--per-class", type=int, default=120,
                   help="clips synthesized per class (default 120)")
    p.add_argument("--corpus-clips", type=int, default=48,
                   help="clean pseudo-speech clips to draw from (default 48)")
    p.add_argument("--duration", type=float, default=3.0,
                   help="clip duration in seconds (default 3.0)")
    p.add_argument("--seed", type=int, default=0)


def _add_noise_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--noise", choices=("none", "uniform", "copies", "raters"),
                   default="none", help="training-label corruption (default none)")
    p.add_argument("--noise-rate", type=float, default=0.2,
                   help="flip rate for uniform/copies noise (default 0.2)")
    p.add_argument("--noise-k", type=int, default=2,
                   help="noisy copies per record for copies noise (default 2)")
    p.add_argument("--noise-raters", type=int, default=3,
                   help="simulated raters per record (default 3)")
    p.add_argument("--noise-agg", choices=("majority", "single"), default="majority")


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--examples", type=int, default=None,
                   help="training examples per epoch (default: one per record)")
    p.add_argument("--epochs", type=int, default=20, help="max epochs (default 20)")
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--optimizer", choices=("sgd", "adam"), default="adam")
    p.add_argument("--patience", type=int, default=3,
                   help="early-stop patience in epochs (default 3)")


def _noise_from_args(args):
    if args.noise == "uniform":
        return UniformFlip(args.noise_rate)
    if args.noise == "copies":
        return NoisyCopies(args.noise_k, args.noise_rate)
    if args.noise == "raters":
        return SimulatedRaters(args.noise_raters, args.noise_agg)
    return NoNoise()


def _config_from_args(args, feature: str, architecture: str | None = None) -> ExperimentConfig:
    return ExperimentConfig(
        name=getattr(args, "name", "run"),
        seed=args.seed,
        per_class=args.per_class,
        corpus_clips=args.corpus_clips,
        clip_duration_s=args.duration,
        noise=_noise_from_args(args) if hasattr(args, "noise") else NoNoise(),
        feature=feature,
        architecture=architecture,
        train_examples=getattr(args, "examples", None),
        train=TrainConfig(
            optimizer=getattr(args, "optimizer", "adam"),
            learning_rate=getattr(args, "lr", 1e-3),
            momentum=getattr(args, "momentum", 0.9),
            batch_size=getattr(args, "batch_size", 64),
            max_epochs=getattr(args, "epochs", 20),
            patience=getattr(args, "patience", 3),
        ),
    )


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _load_prepared(args, feature: str) -> PreparedData:
    """File-backed path: manifest (+ optional cache dir) instead of synthesis."""
    dataset = load_manifest(args.manifest)
    if any(r.split == "unassigned" for r in dataset.records):
        dataset = stratified_split(dataset, seed=args.seed)
    caches = {}
    if getattr(args, "cache", None):
        cache = FeatureCache.load_dir(args.cache)
        caches[cache.feature] = cache
    return PreparedData(dataset=dataset, caches=caches)


# ---------------------------------------------------------------------------
# Subcommand bodies

def cmd_synth(args) -> int:
    cfg = _config_from_args(args, feature="logmel")
    prepared = prepare_data(cfg)
    save_manifest(prepared.dataset, f"{args.out}/manifest.jsonl",
                  clips_dir=f"{args.out}/clips")
    _say(args, f"wrote {len(prepared.dataset)} clips and manifest under {args.out}")
    return 0


def cmd_features(args) -> int:
    dataset = load_manifest(args.manifest)
    cache = FeatureCache.build(dataset, args.feature)
    cache.save_dir(args.out)
    _say(args, f"cached {len(cache.arrays)} {args.feature} arrays under {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = (ExperimentConfig.load(args.config) if args.config
           else _config_from_args(args, feature=args.feature, architecture=args.arch))
    prepared = _load_prepared(args, cfg.feature) if args.manifest else None
    log = None if args.quiet else (lambda rec: print(
        f"epoch {rec['epoch']}: train_loss={rec['train_loss']:.4f} "
        f"val_loss={rec['val_loss']:.4f} val_acc={rec['val_acc']:.3f}"))
    result = run_experiment(cfg, prepared=prepared, out_dir=args.out,
                            write_clips=args.write_clips, log_fn=log)
    _say(args, f"test accuracy {result.test_report.accuracy:.3f} "
               f"({result.flops} FLOPs/example); artifacts under {args.out}")
    return 0


def cmd_eval(args) -> int:
    model, extra = load_model(args.model)
    scaler = Standardizer.from_dict(extra["scaler"])
    dataset = load_manifest(args.manifest)
    if getattr(args, "cache", None):
        cache = FeatureCache.load_dir(args.cache)
    else:
        cache = FeatureCache.build(dataset, extra["feature"])
    x, y, groups = tiled_examples(dataset, args.split, cache, scaler)
    report = evaluate_model_grouped(model, x, y, groups)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_grid(args) -> int:
    cfg = (ExperimentConfig.load(args.config) if args.config
           else _config_from_args(args, feature="logmel"))
    grid = feature_grid(cfg, log_fn=None if args.quiet else (lambda m: print(m)))
    write_grid_report(grid, args.out)
    _say(args, f"grid written under {args.out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = (ExperimentConfig.load(args.config) if args.config
           else _config_from_args(args, feature="logmel"))
    log = None if args.quiet else (lambda m: print(m))
    seeds = tuple(int(s) for s in args.seeds.split(","))
    if args.kind == "noise":
        rates = tuple(float(r) for r in args.rates.split(","))
        sweep = noise_robustness_sweep(cfg, rates=rates, seeds=seeds, log_fn=log)
    else:
        rates = tuple(float(r) for r in args.rates.split(","))
        sizes = tuple(int(s) for s in args.sizes.split(","))
        sweep = size_for_threshold_sweep(cfg, rates=rates, sizes=sizes,
                                         threshold=args.threshold, seeds=seeds,
                                         log_fn=log)
    write_sweep_report(sweep, args.out)
    _say(args, f"sweep written under {args.out}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="impairlab",
        description="Synthesize impaired-speech datasets and train classifiers "
                    "under label noise.")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a labeled dataset to disk")
    _add_data_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("features", help="precompute a per-clip feature cache")
    p.add_argument("--manifest", required=True)
    p.add_argument("--feature", choices=FEATURES, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_features)

    p = sub.add_parser("train", help="run one experiment end to end")
    _add_data_args(p)
    _add_noise_args(p)
    _add_train_args(p)
    p.add_argument("--config", default=None,
                   help="JSON experiment config; replaces the synthesis/noise/"
                        "training flags")
    p.add_argument("--feature", choices=FEATURES, default="logmel")
    p.add_argument("--arch", default=None,
                   help="architecture name (default: matched to the feature)")
    p.add_argument("--manifest", default=None,
                   help="train from an existing manifest instead of synthesizing")
    p.add_argument("--cache", default=None, help="feature cache directory to reuse")
    p.add_argument("--write-clips", action="store_true",
                   help="also write the synthesized clips as WAV files")
    p.add_argument("--name", default="run")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="score a saved model on a manifest split")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--cache", default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("grid", help="compare the feature/architecture pairs")
    _add_data_args(p)
    _add_noise_args(p)
    _add_train_args(p)
    p.add_argument("--config", default=None,
                   help="JSON experiment config; replaces the synthesis/noise/"
                        "training flags")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_grid)

    p = sub.add_parser("sweep", help="noise-robustness or size-for-threshold sweep")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--config", default=None,
                   help="JSON experiment config; replaces the synthesis/noise/"
                        "training flags")
    p.add_argument("--kind", choices=("noise", "size"), required=True)
    p.add_argument("--rates", "--noise-levels", dest="rates",
                   default=",".join(str(r) for r in DEFAULT_RATES),
                   help="comma-separated flip rates")
    p.add_argument("--sizes", default=",".join(str(s) for s in DEFAULT_SIZES),
                   help="comma-separated roster sizes (size sweep)")
    p.add_argument("--threshold", type=float, default=0.80,
                   help="target accuracy for the size sweep (default 0.80)")
    p.add_argument("--seeds", default="0,1,2", help="comma-separated seeds")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ImpairLabError as err:
        print(json.dumps({"error": type(err).__name__, "message": str(err)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
