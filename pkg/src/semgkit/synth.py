"""Synthetic sEMG sessions with known ground truth.

The signal model is deliberately simple: band-limited Gaussian noise whose RMS
follows a per-channel activation profile, plus the usual contaminants of a
surface recording (powerline hum, slow baseline drift and short biphasic
motion transients).  It is a surrogate for validating amplitude and feature
pipelines, not a physiological motor-unit model.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .session_io import (
    GESTURE_PROTOCOL,
    ISOLATED_PROTOCOL,
    LABELS,
    AnnotationTrack,
    Label,
    ProtocolSpec,
    Session,
    Task,
    expand_protocol,
)
from .signal_core import (
    SLEEVE,
    DeviceProfile,
    Recording,
    _zero_phase,
    complex_response,
    design_bandpass,
    design_lowpass,
)

TRANSITION_S = 0.1  # raised-cosine activation ramp
ARTIFACT_S = 0.05  # biphasic transient length
TRANSITION_JITTER_S = 0.25
SHAPING_LOW_HZ = 20.0
SHAPING_HIGH_FRACTION = 0.45


@dataclass(frozen=True)
class SynthScenario:
    """Everything needed to regenerate a session bit-for-bit.

    ``gains`` maps each label to one activation gain per channel; the
    plateau RMS of a phase is ``gain * rest_floor``.
    """

    name: str
    profile: DeviceProfile
    protocol: ProtocolSpec
    gains: Mapping[Label, tuple[float, ...]]
    rest_floor: float = 5.0
    powerline: tuple[tuple[float, float], ...] = ()
    drift: tuple[float, float] = (0.0, 0.5)
    artifact_rate: float = 0.0
    artifact_amplitude: float = 0.0
    artifacts_near_transitions: bool = True
    lead_in: float = 2.0
    tail: float = 2.0
    seed: int = 0

    def __post_init__(self):
        n = self.profile.channel_count
        gains = {}
        for lab, g in self.gains.items():
            g = (float(g),) * n if np.isscalar(g) else tuple(float(v) for v in g)
            if len(g) != n:
                raise ValueError(f"{Label(lab).value}: expected {n} channel gains, got {len(g)}")
            if not all(np.isfinite(v) and v >= 0 for v in g):
                raise ValueError(f"{Label(lab).value}: gains must be finite and nonnegative")
            gains[Label(lab)] = g
        if Label.RELAX not in gains:
            raise ValueError("scenario must define a relax gain for every channel")
        missing = set(self.protocol.gestures) - set(gains)
        if missing:
            raise ValueError("no gains for protocol gestures: " + ", ".join(sorted(m.value for m in missing)))
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "powerline", tuple((float(f), float(a)) for f, a in self.powerline))
        object.__setattr__(self, "drift", tuple(float(v) for v in self.drift))
        if self.rest_floor <= 0:
            raise ValueError("rest_floor must be positive")
        if self.artifact_rate < 0 or self.artifact_amplitude < 0 or self.lead_in < 0 or self.tail < 0:
            raise ValueError("rates, amplitudes and padding must be nonnegative")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be an unsigned integer")

    def replace(self, **kw) -> "SynthScenario":
        return dataclasses.replace(self, **kw)

    def programmed_rms(self) -> dict[tuple[int, Label], float]:
        return {(ch, lab): g[ch] * self.rest_floor for lab, g in self.gains.items() for ch in range(len(g))}

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "profile": self.profile.to_dict(),
            "protocol": self.protocol.to_dict(),
            "gains": {lab.value: list(g) for lab, g in self.gains.items()},
            "rest_floor": self.rest_floor,
            "powerline": [list(p) for p in self.powerline],
            "drift": list(self.drift),
            "artifact_rate": self.artifact_rate,
            "artifact_amplitude": self.artifact_amplitude,
            "artifacts_near_transitions": self.artifacts_near_transitions,
            "lead_in": self.lead_in,
            "tail": self.tail,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SynthScenario":
        base = preset_scenarios()[d["preset"]] if "preset" in d else None
        kw = {}
        if "profile" in d:
            kw["profile"] = DeviceProfile.from_dict(d["profile"])
        if "protocol" in d:
            kw["protocol"] = ProtocolSpec.from_dict(d["protocol"])
        if "gains" in d:
            kw["gains"] = {Label(k): tuple(v) if not np.isscalar(v) else v for k, v in d["gains"].items()}
        if "powerline" in d:
            kw["powerline"] = tuple(tuple(p) for p in d["powerline"])
        if "drift" in d:
            kw["drift"] = tuple(d["drift"])
        for k in ("name", "rest_floor", "artifact_rate", "artifact_amplitude",
                  "artifacts_near_transitions", "lead_in", "tail", "seed"):
            if k in d:
                kw[k] = d[k]
        if base is not None:
            return base.replace(**kw)
        return cls(**kw)


@dataclass(frozen=True)
class GroundTruth:
    annotations: AnnotationTrack
    programmed_rms: Mapping[tuple[int, Label], float]
    seed: int
    scenario: str = ""
    artifact_times: tuple[float, ...] = field(default=())

    def to_dict(self) -> dict:
        rms = {}
        for (ch, lab), v in sorted(self.programmed_rms.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
            rms.setdefault(f"ch{ch + 1}", {})[lab.value] = v
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "programmed_rms": rms,
            "artifact_times": list(self.artifact_times),
            "intervals": [[iv.start, iv.end, iv.label.value] for iv in self.annotations],
        }


def _unit_shaping_gain(cascade, rate: float, n: int = 1 << 16) -> float:
    """RMS gain of zero-phase ``cascade`` for unit-variance white noise."""
    f = (np.arange(n) + 0.5) * (rate / 2.0) / n
    return float(np.sqrt(np.mean(np.abs(complex_response(cascade, f, rate)) ** 4)))


def shaped_noise(rng: np.random.Generator, n: int, rate: float) -> np.ndarray:
    """Unit-RMS Gaussian noise band-limited to 20 Hz .. 0.45 * rate."""
    bp = design_bandpass(SHAPING_LOW_HZ, SHAPING_HIGH_FRACTION * rate, 4, rate)
    return _zero_phase(bp, rng.standard_normal(n)) / _unit_shaping_gain(bp, rate)


def activation_profile(levels: Sequence[float], boundaries: Sequence[int], n: int, ramp: int) -> np.ndarray:
    """Piecewise-constant gain with raised-cosine ramps centred on each boundary.

    ``levels[k]`` holds between ``boundaries[k-1]`` and ``boundaries[k]``.
    """
    g = np.empty(n)
    edges = [0, *boundaries, n]
    for k, lvl in enumerate(levels):
        g[edges[k]:edges[k + 1]] = lvl
    half = ramp // 2
    if half == 0:
        return g
    w = 0.5 - 0.5 * np.cos(np.pi * (np.arange(2 * half) + 0.5) / (2 * half))
    for k, b in enumerate(boundaries):
        lo, hi = max(b - half, 0), min(b + half, n)
        seg = w[lo - (b - half): hi - (b - half)]
        g[lo:hi] = levels[k] + (levels[k + 1] - levels[k]) * seg
    return g


def _biphasic(n: int) -> np.ndarray:
    return np.sin(2 * np.pi * (np.arange(n) + 0.5) / n)


def generate(scenario: SynthScenario) -> tuple[Session, GroundTruth]:
    prof = scenario.profile
    rate = prof.sample_rate
    n_ch = prof.channel_count
    total = scenario.lead_in + scenario.protocol.duration + scenario.tail
    n = int(round(total * rate))
    track = expand_protocol(scenario.protocol, start=scenario.lead_in)
    t = np.arange(n) / rate

    lab_idx = track.label_indices(t)
    merged_bounds = (np.flatnonzero(np.diff(lab_idx)) + 1).tolist()
    merged_labels = [LABELS[i] for i in lab_idx[[0, *merged_bounds]]]

    streams = np.random.SeedSequence([scenario.seed, 0x5E3]).spawn(n_ch + 1)
    ramp = int(round(TRANSITION_S * rate))
    x = np.empty((n_ch, n))
    for ch in range(n_ch):
        rng = np.random.default_rng(streams[ch])
        levels = [scenario.gains[lab][ch] for lab in merged_labels]
        gain = activation_profile(levels, merged_bounds, n, ramp)
        x[ch] = scenario.rest_floor * gain * shaped_noise(rng, n, rate)

    common = np.random.default_rng(streams[n_ch])
    for f, amp in scenario.powerline:
        if f < rate / 2:
            phase = common.uniform(0, 2 * np.pi, n_ch)
            x += amp * np.sin(2 * np.pi * f * t[np.newaxis, :] + phase[:, np.newaxis])

    drift_amp, drift_cut = scenario.drift
    if drift_amp > 0 and n > 12:
        lp = design_lowpass(drift_cut, 2, rate)
        w = _zero_phase(lp, common.standard_normal((n_ch, n)))
        rms = np.sqrt(np.mean(w**2, axis=1, keepdims=True))
        x += drift_amp * w / np.where(rms > 0, rms, 1.0)

    artifact_times = []
    if scenario.artifact_rate > 0 and scenario.artifact_amplitude > 0:
        k = common.poisson(scenario.artifact_rate * total)
        if scenario.artifacts_near_transitions and merged_bounds:
            anchors = common.choice(np.asarray(merged_bounds) / rate, size=k)
            times = anchors + common.uniform(-TRANSITION_JITTER_S, TRANSITION_JITTER_S, k)
        else:
            times = common.uniform(0, total, k)
        width = max(int(round(ARTIFACT_S * rate)), 2)
        pulse = _biphasic(width)
        for tc in np.sort(times):
            amp = scenario.artifact_amplitude * common.choice([-1.0, 1.0])
            scale = common.uniform(0.5, 1.0, n_ch)
            i0 = int(round(tc * rate)) - width // 2
            lo, hi = max(i0, 0), min(i0 + width, n)
            if lo < hi:
                x[:, lo:hi] += amp * scale[:, np.newaxis] * pulse[lo - i0: hi - i0]
                artifact_times.append(float(tc))

    rec = Recording(prof, x, 0.0, tuple(f"ch{i + 1}" for i in range(n_ch)))
    session = Session(
        rec,
        track,
        scenario.protocol,
        subject_id=f"{scenario.name}-s{scenario.seed}",
        metadata={"synthetic": True, "scenario": scenario.name, "seed": scenario.seed},
    )
    truth = GroundTruth(track, scenario.programmed_rms(), scenario.seed, scenario.name, tuple(artifact_times))
    return session, truth


def degrade_snr(scenario: SynthScenario, contrast: float) -> SynthScenario:
    """Shrink every activation gain toward the relax gain by ``contrast`` in (0, 1]."""
    relax = scenario.gains[Label.RELAX]
    gains = {
        lab: tuple(r + contrast * (v - r) for v, r in zip(g, relax)) for lab, g in scenario.gains.items()
    }
    return scenario.replace(name=f"{scenario.name}_snr{contrast:g}", gains=gains)


STROKE_ISOLATED_PROTOCOL = ProtocolSpec(Task.ISOLATED_MOVEMENT, 5.0, 5.0, 3, (Label.THUMB_ABDUCTION,))

_CONTAMINANTS = dict(
    powerline=((50.0, 20.0), (60.0, 10.0)),
    drift=(15.0, 0.5),
    artifact_rate=0.02,
    artifact_amplitude=40.0,
)


def preset_scenarios() -> dict[str, SynthScenario]:
    """Named scenarios whose gain patterns echo the healthy-average, weak,
    high-baseline and stroke responders, plus a hand open/close session."""
    sc = [
        SynthScenario(
            "healthy_strong", SLEEVE, ISOLATED_PROTOCOL,
            {Label.RELAX: 1.0,
             Label.THUMB_ABDUCTION: (17.4, 18.4, 19.4),
             Label.FINGER_EXTENSION: (1.5, 1.6, 1.7),
             Label.FINGER_FLEXION: (1.4, 1.5, 1.6)},
            rest_floor=5.0, **_CONTAMINANTS,
        ),
        SynthScenario(
            "healthy_weak", SLEEVE, ISOLATED_PROTOCOL,
            {Label.RELAX: 1.0,
             Label.THUMB_ABDUCTION: (2.0, 2.2, 2.4),
             Label.FINGER_EXTENSION: 1.0,
             Label.FINGER_FLEXION: (1.0, 1.1, 1.2)},
            rest_floor=5.0, **_CONTAMINANTS,
        ),
        SynthScenario(
            "high_baseline_outlier", SLEEVE, ISOLATED_PROTOCOL,
            {Label.RELAX: 1.0,
             Label.THUMB_ABDUCTION: (2.2, 2.4, 2.6),
             Label.FINGER_EXTENSION: 1.0,
             Label.FINGER_FLEXION: (1.4, 1.5, 1.6)},
            rest_floor=25.0, **_CONTAMINANTS,
        ),
        SynthScenario(
            "stroke_like", SLEEVE, STROKE_ISOLATED_PROTOCOL,
            {Label.RELAX: 1.0, Label.THUMB_ABDUCTION: (0.75, 0.8, 0.85)},
            rest_floor=5.0, **_CONTAMINANTS,
        ),
        SynthScenario(
            "gesture_session", SLEEVE, GESTURE_PROTOCOL,
            {Label.RELAX: 1.0,
             Label.HAND_OPEN: (6.0, 3.0, 1.5),
             Label.HAND_CLOSE: (2.0, 4.0, 7.0)},
            rest_floor=5.0, **_CONTAMINANTS,
        ),
        SynthScenario(
            "null", SLEEVE, ISOLATED_PROTOCOL,
            {Label.RELAX: 1.0, Label.THUMB_ABDUCTION: 1.0, Label.FINGER_EXTENSION: 1.0, Label.FINGER_FLEXION: 1.0},
            rest_floor=5.0,
        ),
    ]
    return {s.name: s for s in sc}
