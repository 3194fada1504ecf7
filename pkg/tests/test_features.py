import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semgkit.errors import SchemaMismatch, TooShort
from semgkit.features import (
    FEATURE_NAMES,
    FeatureMatrix,
    WindowSpec,
    apply_standardizer,
    extract,
    extract_session,
    feature_schema,
    fit_standardizer,
    freq_features,
    power_spectrum,
    slide_windows,
    spectral_weights,
    time_features,
)
from semgkit.session_io import LABEL_INDEX, AnnotationTrack, Interval, Label
from semgkit.signal_core import ARMBAND, SLEEVE, Recording
from .oracles import naive_freq_features, naive_time_features


def rel_close(a, b, rtol):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.all(np.abs(a - b) <= rtol * np.maximum(np.abs(b), 1e-300))


def _rec(n, profile=SLEEVE, seed=0):
    x = np.random.default_rng(seed).standard_normal((profile.channel_count, n))
    return Recording(profile, x)


def test_window_counts():
    ann = AnnotationTrack(())
    assert len(slide_windows(_rec(500), ann, WindowSpec(250, 10)).starts) == 26
    assert len(slide_windows(_rec(250), ann, WindowSpec(250, 10)).starts) == 1
    with pytest.raises(TooShort):
        slide_windows(_rec(249), ann, WindowSpec(250, 10))


def test_end_of_window_label():
    ann = AnnotationTrack((Interval(5, 10, Label.HAND_OPEN),))
    rec = _rec(3000)
    win = slide_windows(rec, ann, WindowSpec(251, 10))
    # window ending at sample 1800 -> t = 7.2 s
    i = np.flatnonzero(np.isclose(win.end_times, 7.2))[0]
    assert win.labels[i] == LABEL_INDEX[Label.HAND_OPEN]
    assert win.starts[i] + 250 == 1800
    # last window still in relax before the interval starts
    assert win.labels[np.flatnonzero(win.end_times < 5)[-1]] == LABEL_INDEX[Label.RELAX]


@settings(max_examples=200)
@given(st.integers(2, 400), st.integers(1, 400), st.integers(0, 2000))
def test_window_count_formula(length, offset, extra):
    offset = min(offset, length)
    n = length + extra
    spec = WindowSpec(length, offset)
    assert spec.count(n) == (n - length) // offset + 1
    starts = np.arange(spec.count(n)) * offset
    assert starts[-1] + length <= n < starts[-1] + length + offset


def test_time_features_examples():
    mav, rms, var, wl, zcr = time_features(np.array([1.0, -1, 2, -2]))
    assert mav == 1.5 and rms == pytest.approx(np.sqrt(2.5), rel=1e-15)
    assert wl == 9 and zcr == 3
    assert time_features(np.array([1.0, 2, 3]))[2] == pytest.approx(2 / 3, rel=1e-15)


def test_zero_crossings_pass_sign_through():
    assert time_features(np.array([1.0, 0, 0, -1, 0, 1]))[4] == 2
    assert time_features(np.array([0.0, 0, -1, 0, -2]))[4] == 0
    assert time_features(np.zeros(5))[4] == 0


def test_time_features_match_naive_oracle(rng):
    w = rng.standard_normal((300, 250)) * rng.uniform(0.1, 100, (300, 1))
    w[::7, ::5] = 0.0  # exercise zero-sample handling
    got = time_features(w)
    for k in range(len(w)):
        assert rel_close(got[k], naive_time_features(list(w[k])), 1e-12)


def test_freq_features_match_naive_oracle(rng):
    w = rng.standard_normal((60, 250)) + 3.0
    got = freq_features(w, 250.0)
    for k in range(len(w)):
        assert rel_close(got[k], naive_freq_features(list(w[k]), 250.0), 1e-9)
    odd = rng.standard_normal((10, 77))
    for kind in ("hann", "rectangular"):
        got = freq_features(odd, 200.0, kind)
        for k in range(len(odd)):
            assert rel_close(got[k], naive_freq_features(list(odd[k]), 200.0, kind), 1e-9)


def test_pure_sine_frequency():
    t = np.arange(250) / 250
    mnf, mdf, _ = freq_features(np.sin(2 * np.pi * 100 * t), 250.0)
    assert abs(mnf - 100) <= 1 and abs(mdf - 100) <= 1


def test_two_tone_frequency():
    t = np.arange(250) / 250
    x = np.sin(2 * np.pi * 60 * t) + np.sin(2 * np.pi * 100 * t)
    mnf, mdf, _ = freq_features(x, 250.0)
    assert abs(mnf - 80) <= 1
    assert min(abs(mdf - 60), abs(mdf - 100)) <= 1


def test_constant_window_flagged():
    out, flag = freq_features(np.full(250, 4.2), 250.0, return_flags=True)
    assert flag and np.array_equal(out, [0.0, 0.0, 0.0])
    out, flag = freq_features(np.random.default_rng(1).standard_normal(250), 250.0, return_flags=True)
    assert not flag and out[2] > 0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_amplitude_scaling(seed, c):
    x = np.random.default_rng(seed).standard_normal(250)
    a = np.concatenate([time_features(x), freq_features(x, 250.0)])
    b = np.concatenate([time_features(c * x), freq_features(c * x, 250.0)])
    power = np.array([1, 1, 2, 1, 0, 0, 0, 2])
    assert rel_close(b, a * c ** power, 1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 300))
def test_parseval(seed, n):
    x = np.random.default_rng(seed).standard_normal(n) + 5.0
    z = (x - x.mean()) * spectral_weights(n)
    z -= z.mean()
    _, p = power_spectrum(x, 250.0)
    assert rel_close(p.sum(), np.sum(z * z), 1e-9)
    assert rel_close(freq_features(x, 250.0)[2], np.sum(z * z), 1e-9)


def test_extract_shapes_and_determinism():
    ann = AnnotationTrack((Interval(0.5, 1.5, Label.HAND_CLOSE),))
    rec = _rec(500)
    fm = extract(rec, ann, WindowSpec(250, 10))
    assert fm.rows.shape == (26, 24)
    assert fm.schema[:8] == tuple(f"ch1.{f}" for f in FEATURE_NAMES)
    again = extract(rec, ann, WindowSpec(250, 10))
    assert np.array_equal(fm.rows, again.rows) and np.array_equal(fm.labels, again.labels)
    arm = extract(_rec(500, ARMBAND), ann, WindowSpec(250, 10))
    assert arm.rows.shape[1] == 64
    # columns line up with the per-window kernels
    w = rec.samples[1, 30:280]
    assert rel_close(fm.rows[3, 8:13], time_features(w), 1e-12)
    assert rel_close(fm.rows[3, 13:16], freq_features(w, 250.0), 1e-12)


def test_extract_session_filters_first(presets, cfg):
    from semgkit.synth import generate

    scen = presets["gesture_session"].replace(seed=4)
    session, _ = generate(scen)
    raw_cfg = {**cfg, "features": {**cfg["features"], "filter_before_features": False}}
    filtered = extract_session(session, cfg)
    raw = extract_session(session, raw_cfg)
    assert filtered.rows.shape == raw.rows.shape
    assert not np.array_equal(filtered.rows, raw.rows)


def test_feature_csv_roundtrip(tmp_path):
    ann = AnnotationTrack((Interval(0.5, 1.5, Label.HAND_CLOSE),))
    fm = extract(_rec(400), ann, WindowSpec(250, 10))
    fm.to_csv(tmp_path / "f.csv")
    back = FeatureMatrix.from_csv(tmp_path / "f.csv")
    assert back.schema == fm.schema
    assert np.array_equal(back.rows, fm.rows)
    assert np.array_equal(back.labels, fm.labels)
    assert np.array_equal(back.window_end_times, fm.window_end_times)


def _fm(rows):
    rows = np.asarray(rows, float)
    return FeatureMatrix(rows, tuple(f"f{i}" for i in range(rows.shape[1])), np.zeros(len(rows)), np.arange(len(rows)))


def test_standardizer_examples():
    s = fit_standardizer(_fm([[1.0, 5.0], [3.0, 5.0]]))
    assert s.mean.tolist() == [2.0, 5.0] and s.scale.tolist() == [1.0, 1.0]
    assert s.degenerate.tolist() == [False, True] and s.flagged
    out = apply_standardizer(s, _fm([[1.0, 5.0], [3.0, 5.0]]))
    assert out.rows.tolist() == [[-1.0, 0.0], [1.0, 0.0]]


def test_standardizer_unit_stats(rng):
    train = _fm(rng.normal(7, 3, (500, 6)))
    z = apply_standardizer(fit_standardizer(train), train).rows
    assert np.all(np.abs(z.mean(axis=0)) < 1e-9)
    assert np.all(np.abs(z.std(axis=0) - 1) < 1e-9)


def test_standardizer_not_idempotent(rng):
    train = _fm(rng.normal(7, 3, (50, 3)))
    s = fit_standardizer(train)
    once = apply_standardizer(s, train)
    twice = apply_standardizer(s, once)
    assert not np.allclose(once.rows, twice.rows)


def test_standardizer_ignores_test_rows(rng):
    train = _fm(rng.normal(0, 1, (100, 4)))
    test = _fm(rng.normal(0, 1, (40, 4)))
    s = fit_standardizer(train)
    before = apply_standardizer(s, test).rows.copy()
    # mutating the test set must not change anything fitted on train
    test.rows[:] = 1e6
    assert np.array_equal(fit_standardizer(train).mean, s.mean)
    assert np.array_equal(fit_standardizer(train).scale, s.scale)
    assert not np.array_equal(apply_standardizer(s, test).rows, before)
    with pytest.raises(SchemaMismatch):
        apply_standardizer(s, _fm(np.ones((3, 5))))


def test_feature_schema():
    assert feature_schema(["a", "b"])[8] == "b.MAV"
    assert len(feature_schema(["a", "b"])) == 16
