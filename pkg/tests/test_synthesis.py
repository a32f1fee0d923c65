import numpy as np
import pytest

from impairlab.audio_io import AudioClip, rms_dbfs
from impairlab.errors import (
    EmptyCorpusError,
    EmptyTraceError,
    InvalidParamsError,
    InvalidRt60Error,
    OutOfRangeError,
    SampleRateMismatchError,
    SilentInputError,
)
from impairlab.synthesis import (
    GilbertParams,
    ImpairmentClass,
    LossTrace,
    RepeatLastFrame,
    ZeroFill,
    apply_reverb,
    apply_trace,
    build_dataset,
    gen_loss_trace,
    load_manifest,
    load_trace,
    make_low_volume,
    make_noise,
    mix_at_snr,
    pseudo_corpus,
    pseudo_speech,
    save_manifest,
    save_trace,
    schroeder_rt60,
    synth_rir,
)


def _noise_clip(seed, n=48000, scale=0.1):
    return AudioClip(scale * np.random.default_rng(seed).standard_normal(n))


# ---------------------------------------------------------------------------
# SNR mixing

def test_mix_at_snr_exact_over_grid():
    speech = _noise_clip(0)
    noise = _noise_clip(1)
    for snr in (0, 5, 10, 15, 20, 25, 30):
        mixed = mix_at_snr(speech, noise, snr)
        residual = mixed.samples - speech.samples
        realized = 10 * np.log10(np.mean(speech.samples**2) / np.mean(residual**2))
        assert realized == pytest.approx(snr, abs=1e-6)


def test_mix_tiles_short_noise():
    speech = _noise_clip(2, n=48000)
    noise = _noise_clip(3, n=7000)
    mixed = mix_at_snr(speech, noise, 10.0)
    residual = mixed.samples - speech.samples
    realized = 10 * np.log10(np.mean(speech.samples**2) / np.mean(residual**2))
    assert realized == pytest.approx(10.0, abs=1e-6)
    # the tiled residual repeats with the noise period
    assert np.allclose(residual[:7000], residual[7000:14000])


def test_mix_rejects_mismatched_rate_and_silence():
    speech = _noise_clip(4)
    with pytest.raises(SampleRateMismatchError):
        mix_at_snr(speech, AudioClip(np.ones(100), sample_rate_hz=8000), 10)
    with pytest.raises(SilentInputError):
        mix_at_snr(speech, AudioClip(np.zeros(100)), 10)
    with pytest.raises(ValueError):
        mix_at_snr(speech, _noise_clip(5), float("inf"))


# ---------------------------------------------------------------------------
# Reverb

def test_rir_rt60_recovered_within_ten_percent():
    for rt60 in (300, 600, 900, 1200):
        for seed in range(3):
            est = schroeder_rt60(synth_rir(rt60, seed=seed))
            assert abs(est - rt60) / rt60 < 0.10


def test_rir_unit_energy_and_validation():
    rir = synth_rir(600, seed=1)
    assert np.sum(rir.samples**2) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InvalidRt60Error):
        synth_rir(0)
    with pytest.raises(InvalidRt60Error):
        synth_rir(-100)


def test_apply_reverb_preserves_length_and_level():
    clip = pseudo_speech(7, 2.0)
    wet = apply_reverb(clip, synth_rir(900, seed=4))
    assert len(wet) == len(clip)
    assert rms_dbfs(wet) == pytest.approx(rms_dbfs(clip), abs=1e-6)
    assert not np.allclose(wet.samples, clip.samples)


def test_apply_reverb_rejects_rate_mismatch():
    clip = pseudo_speech(8, 1.0)
    rir = synth_rir(300, sample_rate_hz=8000, seed=0)
    with pytest.raises(SampleRateMismatchError):
        apply_reverb(clip, rir)


# ---------------------------------------------------------------------------
# Gilbert traces and concealment

def test_gilbert_params_validation_and_stationary_rate():
    with pytest.raises(InvalidParamsError):
        GilbertParams(p_loss=1.5, p_recover=0.5)
    with pytest.raises(InvalidParamsError):
        GilbertParams.from_loss_rate(1.0)
    for rate in (0.05, 0.1, 0.2):
        gp = GilbertParams.from_loss_rate(rate, p_recover=0.5)
        assert gp.stationary_loss_rate == pytest.approx(rate, abs=1e-12)


def test_trace_long_run_frequency_matches_stationary():
    gp = GilbertParams.from_loss_rate(0.2, p_recover=0.5)
    trace = gen_loss_trace(gp, 100_000, seed=12)
    assert trace.loss_fraction == pytest.approx(0.2, abs=0.01)


def test_trace_burstiness_exceeds_bernoulli():
    """Low p_recover should produce longer loss bursts than independent drops
    at the same rate would."""
    sticky = GilbertParams.from_loss_rate(0.2, p_recover=0.1)
    trace = gen_loss_trace(sticky, 100_000, seed=5)
    e = trace.events
    # P(lost | previous lost) should be near 1 - p_recover, far above 0.2
    cond = np.mean(e[1:][e[:-1]])
    assert cond > 0.8


def test_trace_round_trip_and_validation(tmp_path):
    trace = gen_loss_trace(GilbertParams.from_loss_rate(0.1), 200, seed=3)
    path = tmp_path / "trace.txt"
    save_trace(trace, path)
    loaded = load_trace(path)
    assert loaded.frame_ms == trace.frame_ms
    assert np.array_equal(loaded.events, trace.events)
    with pytest.raises(EmptyTraceError):
        LossTrace(events=np.array([], dtype=bool))
    bad = tmp_path / "bad.txt"
    bad.write_text("frame_ms=20\n01x10\n")
    with pytest.raises(EmptyTraceError):
        load_trace(bad)


def test_zero_fill_silences_exactly_the_lost_frames():
    clip = AudioClip(np.ones(320 * 10))
    events = np.zeros(10, dtype=bool)
    events[[2, 7]] = True
    out = apply_trace(clip, LossTrace(events=events), ZeroFill())
    for k in range(10):
        frame = out.samples[k * 320:(k + 1) * 320]
        if k in (2, 7):
            assert np.all(frame == 0.0)
        else:
            assert np.all(frame == 1.0)


def test_repeat_concealment_copies_previous_frame_with_attenuation():
    samples = np.concatenate([np.full(320, 0.5), np.full(320, 0.25), np.zeros(320)])
    clip = AudioClip(samples)
    events = np.array([False, True, True])
    out = apply_trace(clip, LossTrace(events=events), RepeatLastFrame(attenuation_db=6.0))
    gain = 10 ** (-6.0 / 20)
    assert np.allclose(out.samples[320:640], 0.5 * gain)
    # second lost frame repeats the already-attenuated frame
    assert np.allclose(out.samples[640:], 0.5 * gain * gain)


def test_apply_trace_needs_enough_events():
    clip = AudioClip(np.ones(320 * 5))
    with pytest.raises(EmptyTraceError):
        apply_trace(clip, LossTrace(events=np.array([True, False])))


# ---------------------------------------------------------------------------
# Low volume, pseudo speech, noise

def test_make_low_volume_range_enforced():
    clip = pseudo_speech(1, 1.0)
    quiet = make_low_volume(clip, -42.0)
    assert rms_dbfs(quiet) == pytest.approx(-42.0, abs=1e-6)
    with pytest.raises(OutOfRangeError):
        make_low_volume(clip, -30.0)
    with pytest.raises(OutOfRangeError):
        make_low_volume(clip, -60.0)


def test_pseudo_speech_deterministic_and_leveled():
    a = pseudo_speech(42, 3.0)
    b = pseudo_speech(42, 3.0)
    c = pseudo_speech(43, 3.0)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)
    assert len(a) == 48000
    assert rms_dbfs(a) == pytest.approx(-25.0, abs=1e-6)


def test_pseudo_speech_has_pauses():
    """Frame energies should span a wide dynamic range: speech-like signals
    alternate between activity and near silence."""
    clip = pseudo_speech(5, 3.0)
    frames = clip.samples[: len(clip) // 320 * 320].reshape(-1, 320)
    energy = np.mean(frames**2, axis=1)
    assert energy.max() / (np.percentile(energy, 5) + 1e-12) > 100


def test_make_noise_kinds_and_spectra():
    white = make_noise("white", 32000, seed=1)
    pink = make_noise("pink", 32000, seed=1)
    assert rms_dbfs(white) == pytest.approx(-25.0, abs=1e-6)
    # pink noise should tilt energy toward low frequencies relative to white
    def low_high_ratio(clip):
        spec = np.abs(np.fft.rfft(clip.samples)) ** 2
        half = len(spec) // 8
        return spec[1:half].sum() / spec[half:].sum()
    assert low_high_ratio(pink) > 4 * low_high_ratio(white)
    babble = make_noise("babble", 32000, seed=2)
    assert len(babble) == 32000
    with pytest.raises(ValueError):
        make_noise("brown", 1000, seed=0)


# ---------------------------------------------------------------------------
# Dataset assembly and manifest

@pytest.fixture(scope="module")
def small_dataset():
    corpus = pseudo_corpus(6, 3.0, seed=9)
    return build_dataset(corpus, per_class=4, seed=21)


def test_build_dataset_counts_and_labels(small_dataset):
    assert len(small_dataset) == 20
    for cls in ImpairmentClass:
        recs = [r for r in small_dataset.records if r.true_label == cls]
        assert len(recs) == 4
        for r in recs:
            assert r.observed_label == cls


def test_build_dataset_levels_and_params(small_dataset):
    for rec in small_dataset.records:
        clip = small_dataset.get_clip(rec)
        level = rms_dbfs(clip)
        if rec.true_label == ImpairmentClass.LOW_VOLUME:
            assert -50.0 - 1e-6 <= level <= -35.0 + 1e-6
            assert -50.0 <= rec.params["target_dbfs"] <= -35.0
        else:
            assert level == pytest.approx(-25.0, abs=1e-6)
        if rec.true_label == ImpairmentClass.BACKGROUND_NOISE:
            assert rec.params["snr_db"] in (0, 5, 10, 15, 20, 25, 30)
        if rec.true_label == ImpairmentClass.REVERB:
            assert rec.params["rt60_ms"] in (300, 600, 900, 1200)
        if rec.true_label == ImpairmentClass.SPEECH_DISTORTION:
            assert rec.params["loss_rate"] in (0.05, 0.1, 0.2)


def test_build_dataset_deterministic():
    corpus = pseudo_corpus(4, 2.0, seed=1)
    a = build_dataset(corpus, per_class=2, seed=5)
    b = build_dataset(corpus, per_class=2, seed=5)
    for ra, rb in zip(a.records, b.records):
        assert ra.clip_id == rb.clip_id
        assert np.array_equal(a.clips[ra.clip_id].samples, b.clips[rb.clip_id].samples)
    c = build_dataset(corpus, per_class=2, seed=6)
    changed = [not np.array_equal(a.clips[r.clip_id].samples, c.clips[r.clip_id].samples)
               for r in a.records]
    assert any(changed)


def test_build_dataset_rejects_empty_corpus():
    with pytest.raises(EmptyCorpusError):
        build_dataset([], per_class=2)


def test_manifest_round_trip(tmp_path, small_dataset):
    manifest = tmp_path / "data" / "manifest.jsonl"
    save_manifest(small_dataset, manifest, clips_dir=tmp_path / "data" / "clips")
    loaded = load_manifest(manifest)
    assert len(loaded) == len(small_dataset)
    for orig, back in zip(small_dataset.records, loaded.records):
        assert back.clip_id == orig.clip_id
        assert back.true_label == orig.true_label
        assert back.observed_label == orig.observed_label
        assert back.split == orig.split
        clip = loaded.get_clip(back)
        ref = small_dataset.get_clip(orig)
        # WAV round trip quantizes to PCM16
        assert np.max(np.abs(clip.samples - ref.samples)) <= 0.5 / 32768 + 1e-12
