"""Tests for configs, splits, feature caches, rosters, scoring, and the CLI."""

import json

import numpy as np
import pytest
from pytest import approx

from impairlab.errors import (EmptySetError, InvalidGridError, OutOfRangeError,
                              ShapeMismatchError, TooSmallError)
from impairlab.experiments import (
    EvalReport,
    ExperimentConfig,
    FeatureCache,
    NearestTemplate,
    PreparedData,
    SampledExamples,
    center_examples,
    column_normalized,
    confusion_counts,
    fit_input_scaler,
    largest_remainder_counts,
    mel_descriptor,
    prepare_data,
    run_experiment,
    stratified_split,
    svg_line_chart,
    write_results_json,
    write_table_csv,
)
from impairlab.experiments.cli import main
from impairlab.experiments.sweep import (noise_robustness_sweep,
                                         size_for_threshold_sweep,
                                         write_sweep_report)
from impairlab.labelnoise import NoisyCopies, UniformFlip
from impairlab.nn import TrainConfig, load_model
from impairlab.synthesis import build_dataset, pseudo_corpus

PER_CLASS = 4


@pytest.fixture(scope="module")
def tiny_dataset():
    corpus = pseudo_corpus(n_clips=6, duration_s=3.0, seed=0)
    ds = build_dataset(corpus, PER_CLASS, seed=0)
    return stratified_split(ds, fractions=(0.5, 0.25, 0.25), seed=0)


# ---------------------------------------------------------------------------
# Config


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(name="demo", seed=3, per_class=10,
                           noise=NoisyCopies(k=2, rate=0.1),
                           feature="engineered",
                           train=TrainConfig(optimizer="adam", max_epochs=4))
    path = tmp_path / "config.json"
    cfg.save(path)
    assert ExperimentConfig.load(path) == cfg


def test_config_defaults_architecture_by_feature():
    assert ExperimentConfig(feature="engineered").architecture == "dense18"
    assert ExperimentConfig(feature="logmel").architecture == "mel_cnn2d"
    assert ExperimentConfig(feature="raw").architecture == "raw_cnn1d"


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(feature="mfcc")
    with pytest.raises(ValueError):
        ExperimentConfig(split_fractions=(0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        ExperimentConfig(per_class=0)


def test_config_with_makes_independent_copy():
    base = ExperimentConfig(seed=0)
    other = base.with_(seed=5, noise=UniformFlip(0.2))
    assert base.seed == 0 and other.seed == 5
    assert base.noise != other.noise


# ---------------------------------------------------------------------------
# Splitting


def test_largest_remainder_counts_sum():
    for n in (7, 10, 99, 100):
        counts = largest_remainder_counts(n, (0.70, 0.15, 0.15))
        assert sum(counts) == n
    assert largest_remainder_counts(20, (0.70, 0.15, 0.15)) == [14, 3, 3]


def test_stratified_split_is_per_class_exact(tiny_dataset):
    for cls in range(5):
        recs = [r for r in tiny_dataset.records if int(r.true_label) == cls]
        by_split = {s: sum(r.split == s for r in recs) for s in ("train", "val", "test")}
        assert by_split == {"train": 2, "val": 1, "test": 1}


def test_stratified_split_deterministic(tiny_dataset):
    corpus = pseudo_corpus(n_clips=6, duration_s=3.0, seed=0)
    ds = build_dataset(corpus, PER_CLASS, seed=0)
    again = stratified_split(ds, fractions=(0.5, 0.25, 0.25), seed=0)
    assert [r.split for r in again.records] == [r.split for r in tiny_dataset.records]
    other = stratified_split(ds, fractions=(0.5, 0.25, 0.25), seed=1)
    assert [r.split for r in other.records] != [r.split for r in tiny_dataset.records]


def test_stratified_split_rejects_empty_allocation(tiny_dataset):
    with pytest.raises(TooSmallError):
        stratified_split(tiny_dataset, fractions=(0.90, 0.05, 0.05), seed=0)


# ---------------------------------------------------------------------------
# Feature caches and rosters


def test_cache_shapes(tiny_dataset):
    eng = FeatureCache.build(tiny_dataset, "engineered")
    mel = FeatureCache.build(tiny_dataset, "logmel")
    raw = FeatureCache.build(tiny_dataset, "raw")
    assert eng.example_shape == (18,)
    assert mel.example_shape == (1, 128, 188)
    assert raw.example_shape == (1, 32000)
    cid = tiny_dataset.records[0].clip_id
    # a 3 s clip leaves 112 mel crop positions and 16001 raw ones
    assert mel.n_offsets(cid) == 112
    assert raw.n_offsets(cid) == 16001
    assert eng.n_offsets(cid) == 1


def test_cache_example_slices_match_source(tiny_dataset):
    mel = FeatureCache.build(tiny_dataset, "logmel")
    cid = tiny_dataset.records[3].clip_id
    full = mel.arrays[cid]
    got = mel.example(cid, offset=17)
    assert got.shape == (1, 128, 188)
    assert np.array_equal(got[0], full[:, 17:205])
    center = mel.center_offset(cid)
    assert 0 <= center < mel.n_offsets(cid)


def test_cache_dir_round_trip(tiny_dataset, tmp_path):
    mel = FeatureCache.build(tiny_dataset, "logmel")
    mel.save_dir(tmp_path / "cache")
    loaded = FeatureCache.load_dir(tmp_path / "cache")
    assert loaded.feature == "logmel"
    assert set(loaded.arrays) == set(mel.arrays)
    for cid in mel.arrays:
        assert np.array_equal(loaded.arrays[cid], mel.arrays[cid])


def test_scaler_kinds(tiny_dataset):
    train = [r for r in tiny_dataset.records if r.split == "train"]
    eng = fit_input_scaler(FeatureCache.build(tiny_dataset, "engineered"), train)
    mel = fit_input_scaler(FeatureCache.build(tiny_dataset, "logmel"), train)
    assert eng.mean.shape == (18,)
    assert np.ndim(mel.mean) == 0  # spectrogram inputs use one global mean/std
    assert np.all(mel.std > 0)


def test_sampled_examples_deterministic_and_prefix_stable(tiny_dataset):
    mel = FeatureCache.build(tiny_dataset, "logmel")
    a = SampledExamples(tiny_dataset, "train", mel, n_examples=30, seed=5)
    b = SampledExamples(tiny_dataset, "train", mel, n_examples=30, seed=5)
    assert a.clip_ids == b.clip_ids
    assert np.array_equal(a.offsets, b.offsets)
    # growing the roster keeps the existing examples in place
    longer = SampledExamples(tiny_dataset, "train", mel, n_examples=60, seed=5)
    assert longer.clip_ids[:30] == a.clip_ids
    assert np.array_equal(longer.offsets[:30], a.offsets)


def test_sampled_examples_batch(tiny_dataset):
    mel = FeatureCache.build(tiny_dataset, "logmel")
    src = SampledExamples(tiny_dataset, "train", mel, n_examples=8, seed=1)
    assert len(src) == 8
    x, y = src.batch(np.array([0, 3, 5]))
    assert x.shape == (3, 1, 128, 188)
    assert x.dtype == np.float32
    assert y.shape == (3,)
    want = mel.example(src.clip_ids[3], src.offsets[3])
    assert np.array_equal(x[1], want)


def test_sampled_examples_uses_observed_labels(tiny_dataset):
    from impairlab.labelnoise import apply_noise

    noisy = apply_noise(tiny_dataset, UniformFlip(1.0), seed=0)
    mel = FeatureCache.build(tiny_dataset, "logmel")
    src = SampledExamples(noisy, "train", mel, seed=0)
    by_id = {r.clip_id: r for r in noisy.records}
    for cid, label in zip(src.clip_ids, src.labels):
        assert label == int(by_id[cid].observed_label)
        assert label != int(by_id[cid].true_label)


def test_center_examples_labels(tiny_dataset):
    mel = FeatureCache.build(tiny_dataset, "logmel")
    x, y = center_examples(tiny_dataset, "val", mel)
    n_val = sum(r.split == "val" for r in tiny_dataset.records)
    assert x.shape == (n_val, 1, 128, 188)
    truth = [int(r.true_label) for r in tiny_dataset.records if r.split == "val"]
    assert y.tolist() == truth
    with pytest.raises(EmptySetError):
        center_examples(tiny_dataset, "nope", mel)


# ---------------------------------------------------------------------------
# Scoring


def test_confusion_counts_and_normalization():
    y_true = np.array([0, 0, 1, 2, 2, 2])
    y_pred = np.array([0, 1, 1, 2, 2, 0])
    conf = confusion_counts(y_true, y_pred)
    assert conf[0, 0] == 1 and conf[0, 1] == 1 and conf[2, 2] == 2 and conf[2, 0] == 1
    assert conf.sum() == 6
    cols = column_normalized(conf)
    sums = cols.sum(axis=0)
    assert sums[sums > 0] == approx(1.0)
    with pytest.raises(ShapeMismatchError):
        confusion_counts(y_true, y_pred[:3])


def test_eval_report_values():
    report = EvalReport.from_predictions(np.array([0, 1, 1, 4]), np.array([0, 1, 0, 4]))
    assert report.accuracy == approx(0.75)
    assert report.per_class_accuracy[0] == approx(1.0)
    assert report.per_class_accuracy[1] == approx(0.5)
    assert report.n_examples == 4
    d = report.to_dict()
    assert json.dumps(d)  # serializable
    with pytest.raises(EmptySetError):
        EvalReport.from_predictions(np.array([]), np.array([]))


def test_mel_descriptor_layout():
    logmel = np.random.default_rng(0).standard_normal((128, 40))
    d = mel_descriptor(logmel)
    assert d.shape == (384,)
    assert d[:128] == approx(logmel.mean(axis=1))
    assert np.array_equal(mel_descriptor(logmel[None]), d)


def test_nearest_template_on_separable_blobs():
    rng = np.random.default_rng(0)
    labels = np.repeat(np.arange(5), 40)
    x = rng.standard_normal((200, 12)) * 0.1
    x[np.arange(200), labels * 2] += 5.0
    template = NearestTemplate.fit(x, labels)
    assert np.mean(template.predict(x) == labels) == 1.0
    with pytest.raises(EmptySetError):
        NearestTemplate.fit(x[labels < 4], labels[labels < 4])


# ---------------------------------------------------------------------------
# Reports


def test_write_table_csv(tmp_path):
    path = tmp_path / "table.csv"
    write_table_csv(path, [{"name": "a,b", "acc": 0.51}, {"name": "c", "acc": 1.0}],
                    columns=["name", "acc"])
    lines = path.read_text().splitlines()
    assert lines[0] == "name,acc"
    assert lines[1] == '"a,b",0.51'


def test_write_results_json_deterministic(tmp_path):
    payload = {"b": 1, "a": {"z": [1.5, 2], "y": "x"}}
    write_results_json(tmp_path / "one.json", payload)
    write_results_json(tmp_path / "two.json", payload)
    assert (tmp_path / "one.json").read_bytes() == (tmp_path / "two.json").read_bytes()
    assert json.loads((tmp_path / "one.json").read_text()) == payload


def test_svg_chart_contains_series():
    series = [("cnn", [(0.0, 0.9), (0.5, 0.6)]), ("dense", [(0.0, 0.8), (0.5, 0.4)])]
    svg = svg_line_chart(series, xlabel="rate", ylabel="accuracy")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert "cnn" in svg and "dense" in svg
    assert svg.count("<polyline") == 2
    assert svg == svg_line_chart(series, xlabel="rate", ylabel="accuracy")


# ---------------------------------------------------------------------------
# End-to-end (small engineered-feature run)


def _mini_config(**overrides):
    base = dict(
        name="mini", seed=0, per_class=10, corpus_clips=6,
        split_fractions=(0.6, 0.2, 0.2), feature="engineered",
        train_examples=120,
        train=TrainConfig(max_epochs=4, patience=4, learning_rate=0.05, seed=0),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_run_experiment_end_to_end(tmp_path):
    cfg = _mini_config()
    result = run_experiment(cfg, out_dir=tmp_path / "run")
    assert 0.0 <= result.test_report.accuracy <= 1.0
    assert result.flops == 11_269
    assert len(result.history) >= 1
    assert result.baseline_report is None  # engineered runs have no template baseline

    out = tmp_path / "run"
    for name in ("config.json", "manifest.jsonl", "model.bin", "history.jsonl",
                 "results.json", "confusion.csv", "confusion_normalized.csv"):
        assert (out / name).exists(), name
    norm_rows = (out / "confusion_normalized.csv").read_text().splitlines()[1:]
    cols = np.array([[float(v) for v in row.split(",")[1:]] for row in norm_rows])
    sums = cols.sum(axis=0)
    assert sums[sums > 0] == approx(1.0)
    results = json.loads((out / "results.json").read_text())
    assert results["test"]["accuracy"] == approx(result.test_report.accuracy)
    assert "seconds" not in json.dumps(results)

    model, extra = load_model(out / "model.bin")
    assert extra["feature"] == "engineered"
    assert model.count_flops() == 11_269


def test_run_experiment_reruns_bit_exact():
    cfg = _mini_config()
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert a.to_results_dict() == b.to_results_dict()
    pa, pb = dict(a.model.parameters()), dict(b.model.parameters())
    assert all(np.array_equal(pa[k], pb[k]) for k in pa)


def test_prepare_data_caches_are_shared():
    prep = prepare_data(_mini_config())
    assert prep.cache_for("engineered") is prep.cache_for("engineered")
    assert isinstance(prep, PreparedData)


# ---------------------------------------------------------------------------
# Sweeps


def test_size_sweep_validates_grid_and_threshold():
    cfg = _mini_config()
    with pytest.raises(InvalidGridError):
        size_for_threshold_sweep(cfg, rates=(0.0,), sizes=(100, 100), seeds=(0,))
    with pytest.raises(InvalidGridError):
        size_for_threshold_sweep(cfg, rates=(0.0,), sizes=(), seeds=(0,))
    with pytest.raises(OutOfRangeError):
        size_for_threshold_sweep(cfg, rates=(0.0,), sizes=(50, 100),
                                 threshold=1.5, seeds=(0,))


def test_size_sweep_unreachable_threshold_reports_none(tmp_path):
    cfg = _mini_config()
    sweep = size_for_threshold_sweep(cfg, rates=(0.8,), sizes=(40, 80),
                                     threshold=0.999, seeds=(0,))
    assert sweep["required_size"][0.8] is None
    assert list(sweep["curves"][0.8]) == [40, 80]  # grid exhausted, both tried
    write_sweep_report(sweep, tmp_path)
    assert (tmp_path / "chart.svg").exists()


def test_noise_sweep_medians_and_report(tmp_path):
    cfg = _mini_config(train_examples=60)
    sweep = noise_robustness_sweep(cfg, rates=(0.0, 0.8),
                                   features=("engineered",), seeds=(0, 1))
    cells = sweep["models"]["engineered"]["by_rate"]
    for rate in (0.0, 0.8):
        accs = cells[rate]["accuracies"]
        assert len(accs) == 2
        assert cells[rate]["median"] == approx(float(np.median(accs)))
    write_sweep_report(sweep, tmp_path)
    assert (tmp_path / "chart.svg").exists()
    table = (tmp_path / "table.csv").read_text().splitlines()
    assert len(table) == 1 + 2  # header + one row per rate


def test_write_sweep_report_empty_sweep_warns(tmp_path):
    sweep = {"kind": "noise_robustness", "rates": [], "seeds": [0],
             "train_examples": 64, "models": {}}
    write_sweep_report(sweep, tmp_path)
    assert not (tmp_path / "chart.svg").exists()
    assert "warning" in json.loads((tmp_path / "results.json").read_text())


# ---------------------------------------------------------------------------
# CLI


def test_cli_synth_features_train_eval(tmp_path):
    data = str(tmp_path / "data")
    assert main(["--quiet", "synth", "--per-class", "5", "--corpus-clips", "4",
                 "--out", data]) == 0
    manifest = f"{data}/manifest.jsonl"
    assert (tmp_path / "data" / "manifest.jsonl").exists()

    cache = str(tmp_path / "cache")
    assert main(["--quiet", "features", "--manifest", manifest,
                 "--feature", "engineered", "--out", cache]) == 0
    assert (tmp_path / "cache" / "index.json").exists()

    run = str(tmp_path / "run")
    assert main(["--quiet", "train", "--per-class", "5", "--corpus-clips", "4",
                 "--feature", "engineered", "--manifest", manifest,
                 "--cache", cache, "--epochs", "2", "--lr", "0.05",
                 "--out", run]) == 0
    assert (tmp_path / "run" / "model.bin").exists()

    assert main(["--quiet", "eval", "--model", f"{run}/model.bin",
                 "--manifest", manifest, "--cache", cache,
                 "--split", "test"]) == 0


def test_cli_rejects_unknown_command(capsys):
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_cli_train_from_config_file(tmp_path):
    cfg = _mini_config(name="from-file")
    path = tmp_path / "config.json"
    cfg.save(path)
    out = tmp_path / "run"
    assert main(["--quiet", "train", "--config", str(path), "--out", str(out)]) == 0
    assert ExperimentConfig.load(out / "config.json") == cfg


def test_cli_emits_machine_readable_errors(tmp_path, capsys):
    # one clip per class cannot be split 0.70/0.15/0.15
    code = main(["--quiet", "train", "--per-class", "1", "--corpus-clips", "2",
                 "--feature", "engineered", "--out", str(tmp_path / "run")])
    assert code != 0
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "TooSmallError"
    assert err["message"]
