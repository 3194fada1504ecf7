"""Filter design, filter application and envelope extraction.

Filters are represented as cascades of second-order sections (biquads).  Each
section stores ``(b0, b1, b2, a1, a2)`` with ``a0`` normalised to one, which is
the layout ``scipy.signal.sosfilt`` expects once the implicit ``a0`` column is
re-inserted.

Two application modes are provided:

* :func:`apply_causal` - direct-form II transposed, zero initial state.
* :func:`apply_zero_phase` - forward pass, time reversal, forward pass, time
  reversal.  No edge padding is applied, so the first and last few hundred
  milliseconds carry start-up transients.

The offline pipeline (:func:`preprocess`, :func:`envelope`) uses zero-phase
filtering so that envelopes stay aligned with the annotation track.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np
from scipy import signal

from .errors import DesignInfeasible, InvalidOrder, TooShort

log = logging.getLogger(__name__)

# poles must sit strictly inside this radius
STABILITY_MARGIN = 1e-9


class Units(str, Enum):
    MICROVOLTS = "microvolts"
    ARBITRARY = "arbitrary"


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    sample_rate: int
    units: Units = Units.MICROVOLTS
    channel_count: int = 1

    def __post_init__(self):
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        if int(self.channel_count) != self.channel_count or self.channel_count < 1:
            raise ValueError(f"channel_count must be >= 1, got {self.channel_count!r}")
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        object.__setattr__(self, "channel_count", int(self.channel_count))
        object.__setattr__(self, "units", Units(self.units))

    @property
    def nyquist(self) -> float:
        return self.sample_rate / 2.0

    def with_channels(self, n: int) -> "DeviceProfile":
        return DeviceProfile(self.name, self.sample_rate, self.units, n)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "sample_rate": self.sample_rate,
            "units": self.units.value,
            "channel_count": self.channel_count,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DeviceProfile":
        return cls(d["name"], d["sample_rate"], d.get("units", "microvolts"), d.get("channel_count", 1))


SLEEVE = DeviceProfile("sleeve", 250, Units.MICROVOLTS, 3)
ARMBAND = DeviceProfile("armband", 200, Units.ARBITRARY, 8)
PROFILES = {"sleeve": SLEEVE, "armband": ARMBAND}


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Recording:
    """Uniformly sampled multi-channel signal, channel-major ``(channels, samples)``."""

    profile: DeviceProfile
    samples: np.ndarray
    start_time: float = 0.0
    channel_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        if x.ndim == 1:
            x = x[np.newaxis, :]
        if x.ndim != 2:
            raise ValueError("samples must be a 2-D channel-major array")
        if not np.all(np.isfinite(x)):
            raise ValueError("recording contains NaN or infinite samples")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        if x.shape[0] != self.profile.channel_count:
            object.__setattr__(self, "profile", self.profile.with_channels(x.shape[0]))
        names = tuple(self.channel_names) or tuple(f"ch{i + 1}" for i in range(x.shape[0]))
        if len(names) != x.shape[0]:
            raise ValueError("channel_names length does not match channel count")
        object.__setattr__(self, "channel_names", names)

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def rate(self) -> int:
        return self.profile.sample_rate

    @property
    def duration(self) -> float:
        return self.n_samples / self.rate

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.n_samples) / self.rate

    def replace_samples(self, samples) -> "Recording":
        return Recording(self.profile, samples, self.start_time, self.channel_names)


@dataclass(frozen=True)
class Envelope:
    profile: DeviceProfile
    values: np.ndarray
    start_time: float = 0.0

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 2:
            raise ValueError("envelope values must be 2-D channel-major")
        if np.any(v < 0):
            raise ValueError("envelope values must be nonnegative")
        object.__setattr__(self, "values", v)

    @property
    def rate(self) -> int:
        return self.profile.sample_rate

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.values.shape[1]) / self.rate

    def scaled(self, c: float) -> "Envelope":
        return Envelope(self.profile, self.values * c, self.start_time)


@dataclass(frozen=True)
class BiquadCascade:
    """IIR filter as an ordered list of ``(b0, b1, b2, a1, a2)`` sections."""

    sections: np.ndarray
    design_descriptor: str = ""

    def __post_init__(self):
        s = np.array(self.sections, dtype=float).reshape(-1, 5)
        s.setflags(write=False)
        object.__setattr__(self, "sections", s)

    @classmethod
    def identity(cls) -> "BiquadCascade":
        return cls(np.empty((0, 5)), "identity")

    @classmethod
    def from_sos(cls, sos: np.ndarray, descriptor: str) -> "BiquadCascade":
        sos = np.atleast_2d(np.asarray(sos, dtype=float))
        sos = sos / sos[:, 3:4]
        return cls(np.column_stack([sos[:, 0:3], sos[:, 4:6]]), descriptor)

    @property
    def n_sections(self) -> int:
        return self.sections.shape[0]

    @property
    def order(self) -> int:
        """Total number of poles (two per section)."""
        return 2 * self.n_sections

    @property
    def sos(self) -> np.ndarray:
        s = self.sections
        return np.column_stack([s[:, 0:3], np.ones(len(s)), s[:, 3:5]])

    def poles(self) -> np.ndarray:
        out = [np.roots([1.0, a1, a2]) for a1, a2 in self.sections[:, 3:5]]
        return np.concatenate(out) if out else np.empty(0, dtype=complex)

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0 - STABILITY_MARGIN))

    def then(self, other: "BiquadCascade") -> "BiquadCascade":
        """Series connection: ``self`` followed by ``other``."""
        desc = "+".join(d for d in (self.design_descriptor, other.design_descriptor) if d and d != "identity")
        return BiquadCascade(np.vstack([self.sections, other.sections]), desc or "identity")

    def to_document(self) -> dict:
        # float repr is the shortest string that round-trips, never more than 17 digits
        return {
            "design_descriptor": self.design_descriptor,
            "sections": [
                {k: float(format(v, ".17g")) for k, v in zip(("b0", "b1", "b2", "a1", "a2"), row)}
                for row in self.sections
            ],
        }

    @classmethod
    def from_document(cls, doc: Mapping) -> "BiquadCascade":
        rows = [[sec[k] for k in ("b0", "b1", "b2", "a1", "a2")] for sec in doc["sections"]]
        return cls(np.array(rows, dtype=float).reshape(-1, 5), doc.get("design_descriptor", ""))


def _fmt(x: float) -> str:
    return format(x, "g")


def _check_band(freqs: Iterable[float], rate: float):
    nyq = rate / 2.0
    for f in freqs:
        if not 0 < f < nyq:
            raise DesignInfeasible(f"frequency {f} Hz must lie in (0, {nyq}) for a {rate} Hz rate")


def design_bandpass(low: float, high: float, order: int, rate: float) -> BiquadCascade:
    """Butterworth band-pass from an ``order``-pole low-pass prototype.

    The result has ``2 * order`` poles, i.e. ``order`` biquad sections.
    """
    if order not in (2, 4, 6, 8):
        raise InvalidOrder(f"band-pass order must be one of 2, 4, 6, 8; got {order!r}")
    _check_band((low, high), rate)
    if not low < high:
        raise DesignInfeasible(f"low corner {low} Hz must be below high corner {high} Hz")
    sos = signal.butter(order, [low, high], btype="bandpass", fs=rate, output="sos")
    return BiquadCascade.from_sos(sos, f"butter{order}-bp-{_fmt(low)}-{_fmt(high)}@{_fmt(rate)}")


def design_lowpass(cutoff: float, order: int, rate: float) -> BiquadCascade:
    if int(order) != order or order < 1:
        raise InvalidOrder(f"low-pass order must be a positive integer; got {order!r}")
    _check_band((cutoff,), rate)
    sos = signal.butter(int(order), cutoff, btype="lowpass", fs=rate, output="sos")
    return BiquadCascade.from_sos(sos, f"butter{order}-lp-{_fmt(cutoff)}@{_fmt(rate)}")


def design_notch(center: float, q: float, rate: float) -> BiquadCascade:
    """Second-order IIR notch with -3 dB bandwidth ``center / q``."""
    if not q > 0:
        raise ValueError(f"quality factor must be positive; got {q!r}")
    _check_band((center,), rate)
    b, a = signal.iirnotch(center, q, fs=rate)
    return BiquadCascade.from_sos(np.concatenate([b, a])[np.newaxis, :], f"notch-{_fmt(center)}-q{_fmt(q)}@{_fmt(rate)}")


def frequency_response(cascade: BiquadCascade, rate: float, n_points: int = 512):
    """Magnitude response in dB on ``n_points`` uniform frequencies in ``[0, rate/2]``.

    Evaluates the rational transfer function directly on the unit circle.
    Returns ``(freqs_hz, magnitude_db)``.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    freqs = np.linspace(0.0, rate / 2.0, n_points)
    h = complex_response(cascade, freqs, rate)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(np.abs(h))
    return freqs, db


def complex_response(cascade: BiquadCascade, freqs, rate: float) -> np.ndarray:
    z1 = np.exp(-2j * np.pi * np.asarray(freqs, dtype=float) / rate)
    z2 = z1 * z1
    h = np.ones_like(z1)
    for b0, b1, b2, a1, a2 in cascade.sections:
        h = h * (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2)
    return h


def gain_db(cascade: BiquadCascade, f: float, rate: float) -> float:
    return float(20.0 * np.log10(np.abs(complex_response(cascade, [f], rate)[0])))


def _filter(cascade: BiquadCascade, x: np.ndarray) -> np.ndarray:
    if cascade.n_sections == 0:
        return np.array(x, dtype=float, copy=True)
    return signal.sosfilt(cascade.sos, x, axis=-1)


def apply_causal(cascade: BiquadCascade, recording: Recording) -> Recording:
    if recording.n_samples == 0:
        raise TooShort("cannot filter an empty recording")
    return recording.replace_samples(_filter(cascade, recording.samples))


def _zero_phase(cascade: BiquadCascade, x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    if n <= 3 * cascade.order:
        raise TooShort(f"zero-phase filtering needs more than {3 * cascade.order} samples, got {n}")
    y = _filter(cascade, x)[..., ::-1]
    return _filter(cascade, y)[..., ::-1].copy()


def apply_zero_phase(cascade: BiquadCascade, recording: Recording) -> Recording:
    return recording.replace_samples(_zero_phase(cascade, recording.samples))


def rectify(recording: Recording) -> Recording:
    return recording.replace_samples(np.abs(recording.samples))


def envelope(recording: Recording, lp: BiquadCascade) -> Envelope:
    """Rectify, zero-phase low-pass, then clamp ringing below zero."""
    smoothed = _zero_phase(lp, np.abs(recording.samples))
    np.maximum(smoothed, 0.0, out=smoothed)
    return Envelope(recording.profile, smoothed, recording.start_time)


# ---------------------------------------------------------------------------
# pipeline composition driven by the "filters" section of the config

def design_chain(profile: DeviceProfile, cfg: Mapping) -> BiquadCascade:
    """Powerline notches followed by the band-pass, as one cascade.

    Stages that cannot be realised at the profile's rate (a notch or corner
    at or above Nyquist) are skipped, which is how the 200 Hz armband ends up
    without the 50-115 Hz band-pass.
    """
    rate = profile.sample_rate
    chain = BiquadCascade.identity()
    for center in cfg["notch"]["centers"]:
        try:
            chain = chain.then(design_notch(center, cfg["notch"]["q"], rate))
        except DesignInfeasible:
            log.info("skipping %s Hz notch at %s Hz", center, rate)
    bp = cfg["bandpass"]
    if bp.get("enabled", True):
        try:
            chain = chain.then(design_bandpass(bp["low"], bp["high"], bp["order"], rate))
        except DesignInfeasible:
            log.info("skipping %s-%s Hz band-pass at %s Hz", bp["low"], bp["high"], rate)
    return chain


def design_envelope_lowpass(profile: DeviceProfile, cfg: Mapping) -> BiquadCascade:
    lp = cfg["envelope_lowpass"]
    return design_lowpass(lp["cutoff"], lp["order"], profile.sample_rate)


def preprocess(recording: Recording, cfg: Mapping) -> Recording:
    chain = design_chain(recording.profile, cfg)
    if cfg.get("phase", "zero") == "causal":
        return apply_causal(chain, recording)
    return apply_zero_phase(chain, recording)


def envelope_pipeline(recording: Recording, cfg: Mapping) -> Envelope:
    """Notch/band-pass cleaning followed by envelope extraction."""
    return envelope(preprocess(recording, cfg), design_envelope_lowpass(recording.profile, cfg))
