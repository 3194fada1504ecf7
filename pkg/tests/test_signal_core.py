import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semgkit.errors import DesignInfeasible, InvalidOrder, TooShort
from semgkit.signal_core import (
    ARMBAND,
    SLEEVE,
    BiquadCascade,
    DeviceProfile,
    Recording,
    apply_causal,
    apply_zero_phase,
    complex_response,
    design_bandpass,
    design_chain,
    design_lowpass,
    design_notch,
    envelope,
    frequency_response,
    gain_db,
    rectify,
)

from .oracles import df2t, dtft_db, impulse_response

RATE = 250


def rec(x, profile=SLEEVE):
    return Recording(profile, np.atleast_2d(x))


def all_designs():
    return [
        design_bandpass(50, 115, 4, RATE),
        design_bandpass(20, 90, 2, 200),
        design_lowpass(40, 4, RATE),
        design_lowpass(40, 4, 200),
        design_notch(50, 30, RATE),
        design_notch(60, 30, RATE),
        design_notch(50, 30, 200),
    ]


def test_profiles():
    assert (SLEEVE.sample_rate, SLEEVE.units.value, SLEEVE.channel_count) == (250, "microvolts", 3)
    assert (ARMBAND.sample_rate, ARMBAND.units.value, ARMBAND.channel_count) == (200, "arbitrary", 8)
    with pytest.raises(ValueError):
        DeviceProfile("x", 0)
    with pytest.raises(ValueError):
        DeviceProfile("x", 250, channel_count=0)


def test_recording_rejects_nonfinite():
    with pytest.raises(ValueError):
        rec([1.0, np.nan, 2.0])


# ------------------------------------------------------------------ design

def test_bandpass_corners_against_impulse_dft():
    bp = design_bandpass(50, 115, 4, RATE)
    assert bp.n_sections == 4 and bp.order == 8
    assert bp.design_descriptor == "butter4-bp-50-115@250"
    h = impulse_response(bp.sections)
    db = dtft_db(h, [50, 115, 76], RATE)
    # frozen from the impulse-response oracle
    assert db[0] == pytest.approx(-3.0103, abs=1e-3)
    assert db[1] == pytest.approx(-3.0103, abs=1e-3)
    assert db[2] == pytest.approx(-0.00151, abs=1e-4)
    assert abs(db[0] + 3) <= 0.3 and abs(db[1] + 3) <= 0.3 and db[2] >= -0.1


def test_bandpass_rejects_dc():
    bp = design_bandpass(50, 115, 4, RATE)
    y = apply_causal(bp, rec(np.ones(1000))).samples[0]
    assert np.max(np.abs(y[-100:])) < 1e-6


def test_bandpass_monotone_outside_passband():
    bp = design_bandpass(50, 115, 4, RATE)
    f, db = frequency_response(bp, RATE, 2001)
    below, above = db[(f > 0) & (f <= 50)], db[f >= 115]
    assert np.all(np.diff(below) > 0)
    assert np.all(np.diff(above[np.isfinite(above)]) < 0)


@pytest.mark.parametrize("args,exc", [
    ((50, 115, 4, 200), DesignInfeasible),
    ((50, 125, 4, 250), DesignInfeasible),
    ((0, 100, 4, 250), DesignInfeasible),
    ((80, 60, 4, 250), DesignInfeasible),
    ((50, 115, 3, 250), InvalidOrder),
    ((50, 115, 10, 250), InvalidOrder),
])
def test_bandpass_errors(args, exc):
    with pytest.raises(exc):
        design_bandpass(*args)


@pytest.mark.parametrize("center", [50, 60])
def test_notch_depth_and_width(center):
    n = design_notch(center, 30, RATE)
    assert n.n_sections == 1
    h = impulse_response(n.sections)
    assert dtft_db(h, [center], RATE)[0] < -30
    assert gain_db(n, center, RATE) < -30
    bw = center / 30
    f, db = frequency_response(n, RATE, 4001)
    assert np.all(db[np.abs(f - center) > 3 * bw] >= -1)
    if center == 50:
        assert dtft_db(h, [55], RATE)[0] > -1


def test_notch_errors():
    with pytest.raises(DesignInfeasible):
        design_notch(125, 30, RATE)
    with pytest.raises(ValueError):
        design_notch(50, 0, RATE)


def test_notch_removes_50hz_sine():
    t = np.arange(5 * RATE) / RATE
    x = np.sin(2 * np.pi * 50 * t)
    y = apply_causal(design_notch(50, 30, RATE), rec(x)).samples[0]
    steady = y[RATE:]
    assert np.sqrt(np.mean(steady**2)) < 0.035 * np.sqrt(np.mean(x[RATE:] ** 2))


def test_lowpass_gain_and_cutoff():
    lp = design_lowpass(40, 4, RATE)
    h = impulse_response(lp.sections)
    db = dtft_db(h, [0, 40, 100], RATE)
    assert db[0] == pytest.approx(0, abs=0.01)
    assert db[1] == pytest.approx(-3, abs=0.3)
    assert 10 ** (db[2] / 20) == pytest.approx(0.001018, rel=1e-3)  # frozen oracle value


def test_lowpass_dc_and_stopband_sine():
    lp = design_lowpass(40, 4, RATE)
    y = apply_causal(lp, rec(np.full(1000, 2.0))).samples[0]
    assert abs(y[-1] - 2.0) < 1e-6
    t = np.arange(5 * RATE) / RATE
    y = apply_causal(lp, rec(np.sin(2 * np.pi * 100 * t))).samples[0]
    assert np.max(np.abs(y[RATE:])) < 0.08


# ------------------------------------------------------------------ stability / oracles

@pytest.mark.parametrize("design", all_designs(), ids=lambda c: c.design_descriptor)
def test_designs_stable_and_decaying(design):
    assert design.is_stable()
    rate = float(design.design_descriptor.split("@")[1])
    desc = design.design_descriptor
    if desc.startswith("notch"):
        center, q = float(desc.split("-")[1]), float(desc.split("-q")[1].split("@")[0])
        corner = center / q  # notch decay is set by its bandwidth
    elif "-bp-" in desc:
        corner = float(desc.split("-")[2])
    else:
        corner = float(desc.split("-")[2].split("@")[0])
    n = int(10 * design.order * rate / corner)
    h = impulse_response(design.sections, n + 1)
    assert abs(h[n]) < 1e-6 * np.max(np.abs(h))


@pytest.mark.parametrize("design", all_designs(), ids=lambda c: c.design_descriptor)
def test_transfer_function_matches_impulse_dft(design):
    rate = float(design.design_descriptor.split("@")[1])
    f, db = frequency_response(design, rate, 257)
    h = impulse_response(design.sections)
    ref = dtft_db(h, f, rate)
    # skip notch nulls and transfer-function zeros where dB is meaningless
    ok = np.isfinite(db) & (db > -60)
    assert np.max(np.abs(db[ok] - ref[ok])) < 0.05


def test_frequency_response_trivial():
    f, db = frequency_response(BiquadCascade.identity(), RATE, 16)
    assert np.allclose(db, 0) and f[0] == 0 and f[-1] == RATE / 2
    half = BiquadCascade([[0.5, 0, 0, 0, 0]])
    _, db = frequency_response(half, RATE, 16)
    assert np.allclose(db, -6.0206, atol=1e-4)
    with pytest.raises(ValueError):
        frequency_response(half, RATE, 1)


# ------------------------------------------------------------------ application

def test_apply_causal_matches_reference_loop(rng):
    bp = design_bandpass(50, 115, 4, RATE)
    x = rng.standard_normal(600)
    assert np.allclose(apply_causal(bp, rec(x)).samples[0], df2t(bp.sections, x), rtol=0, atol=1e-12)


def test_apply_causal_trivial():
    bp = design_bandpass(50, 115, 4, RATE)
    assert not np.any(apply_causal(bp, rec(np.zeros(300))).samples)
    imp = np.zeros(50)
    imp[0] = 1
    assert np.array_equal(apply_causal(BiquadCascade.identity(), rec(imp)).samples[0], imp)
    with pytest.raises(TooShort):
        apply_causal(bp, Recording(SLEEVE, np.zeros((3, 0))))


def test_apply_causal_linearity(rng):
    bp = design_bandpass(50, 115, 4, RATE)
    x, y = rng.standard_normal((2, 1000))
    lhs = apply_causal(bp, rec(2 * x - 3 * y)).samples[0]
    rhs = 2 * apply_causal(bp, rec(x)).samples[0] - 3 * apply_causal(bp, rec(y)).samples[0]
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * max(1.0, np.max(np.abs(rhs)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 50))
def test_apply_causal_shift_invariance(seed, shift):
    x = np.random.default_rng(seed).standard_normal(300)
    lp = design_lowpass(40, 4, RATE)
    y = apply_causal(lp, rec(x)).samples[0]
    ys = apply_causal(lp, rec(np.concatenate([np.zeros(shift), x]))).samples[0]
    assert np.allclose(ys[shift:], y, rtol=0, atol=1e-9 * max(1, np.max(np.abs(y))))


def test_per_channel_filtering_matches_single_channel(rng):
    bp = design_bandpass(50, 115, 4, RATE)
    x = rng.standard_normal((3, 500))
    multi = apply_zero_phase(bp, rec(x)).samples
    for ch in range(3):
        assert np.array_equal(multi[ch], apply_zero_phase(bp, rec(x[ch])).samples[0])


def test_zero_phase_pulse_stays_put():
    bp = design_bandpass(50, 115, 4, RATE)
    n, k = 1001, 500
    t = (np.arange(n) - k) / RATE
    pulse = np.exp(-(t / 0.02) ** 2) * np.cos(2 * np.pi * 80 * t)
    y = apply_zero_phase(bp, rec(pulse)).samples[0]
    assert int(np.argmax(np.abs(y))) == k
    xc = np.correlate(y, pulse, mode="full")
    assert int(np.argmax(xc)) - (n - 1) == 0


def test_zero_phase_sine_amplitude_is_squared_response():
    bp = design_bandpass(50, 115, 4, RATE)
    t = np.arange(10 * RATE) / RATE
    y = apply_zero_phase(bp, rec(np.sin(2 * np.pi * 76 * t))).samples[0]
    expected = np.abs(complex_response(bp, [76], RATE)[0]) ** 2
    amp = np.max(np.abs(y[2 * RATE:-2 * RATE]))
    assert amp == pytest.approx(expected, rel=0.01)


def test_zero_phase_too_short_and_zero():
    bp = design_bandpass(50, 115, 4, RATE)
    with pytest.raises(TooShort):
        apply_zero_phase(bp, rec(np.ones(24)))
    assert not np.any(apply_zero_phase(bp, rec(np.zeros(100))).samples)


@pytest.mark.parametrize("design", all_designs(), ids=lambda c: c.design_descriptor)
def test_zero_phase_symmetric_input_gives_symmetric_output(design, rng):
    # quiet margins longer than the impulse-response decay, so nothing is truncated at the ends
    margin = np.zeros(4000)
    half = rng.standard_normal(800)
    x = np.concatenate([margin, half, half[::-1], margin])
    y = apply_zero_phase(design, rec(x)).samples[0]
    assert np.max(np.abs(y - y[::-1])) < 1e-6 * np.max(np.abs(y))


# ------------------------------------------------------------------ envelope

def test_rectify():
    assert rectify(rec([1.0, -2.0, 3.0])).samples[0].tolist() == [1, 2, 3]
    r = rec(np.random.default_rng(0).standard_normal(20))
    assert np.array_equal(rectify(rectify(r)).samples, rectify(r).samples)
    assert not np.any(rectify(rec(np.zeros(5))).samples)


def test_envelope_constant_and_zero():
    lp = design_lowpass(40, 4, RATE)
    env = envelope(rec(np.full(5 * RATE, 5.0)), lp)
    assert np.allclose(env.values[0, RATE:-RATE], 5.0, atol=1e-6)
    assert not np.any(envelope(rec(np.zeros(500)), lp).values)


def test_envelope_tracks_am_sine():
    lp = design_lowpass(40, 4, RATE)
    t = np.arange(8 * RATE) / RATE
    mod = 0.5 - 0.5 * np.cos(2 * np.pi * 0.5 * t)  # raised cosine, plateaus at t = 1, 3, 5, 7 s
    amp = 100.0
    env = envelope(rec(mod * amp * np.sin(2 * np.pi * 80 * t)), lp).values[0]
    for peak in (3.0, 5.0):
        sl = slice(int((peak - 0.1) * RATE), int((peak + 0.1) * RATE))
        expected = mod[sl] * 2 * amp / np.pi
        assert np.all(np.abs(env[sl] - expected) <= 0.10 * expected)


def test_envelope_nonnegative(rng):
    lp = design_lowpass(40, 4, RATE)
    x = np.zeros(2000)
    x[1000] = 1000.0  # impulse makes the low-pass ring below zero
    env = envelope(rec(x + 0.01 * rng.standard_normal(2000)), lp)
    assert env.values.min() >= 0


# ------------------------------------------------------------------ chain / serialization

def test_chain_per_profile(cfg):
    sleeve = design_chain(SLEEVE, cfg["filters"])
    assert sleeve.design_descriptor == "notch-50-q30@250+notch-60-q30@250+butter4-bp-50-115@250"
    armband = design_chain(ARMBAND, cfg["filters"])
    assert armband.design_descriptor == "notch-50-q30@200+notch-60-q30@200"


def test_cascade_document_roundtrip():
    for c in all_designs():
        doc = json.loads(json.dumps(c.to_document()))
        back = BiquadCascade.from_document(doc)
        assert np.array_equal(back.sections, c.sections)
        assert back.design_descriptor == c.design_descriptor
