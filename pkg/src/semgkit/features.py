"""Sliding-window segmentation and per-channel EMG features.

Each window yields eight values per channel, in this order:

====  =========================================================
MAV   mean absolute value
RMS   root mean square
VAR   population variance
WL    waveform length, sum of absolute first differences
ZCR   zero crossings (raw count per window)
MNF   mean frequency of the power spectrum
MDF   median frequency (first bin reaching half the power)
TTP   total power
====  =========================================================

The spectrum is taken from the mean-removed, Hann-weighted window with its DC
term excluded, one-sided and scaled so that ``TTP`` equals the time-domain
energy of that weighted window (Parseval).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import SchemaMismatch, TooShort
from .session_io import LABELS, AnnotationTrack, Label, Session
from .signal_core import Recording, preprocess

FEATURE_NAMES = ("MAV", "RMS", "VAR", "WL", "ZCR", "MNF", "MDF", "TTP")
N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class WindowSpec:
    length: int = 250
    offset: int = 10

    def __post_init__(self):
        if self.length < 2:
            raise ValueError("window length must be >= 2")
        if not 1 <= self.offset <= self.length:
            raise ValueError("window offset must be in [1, length]")

    def count(self, n: int) -> int:
        if n < self.length:
            return 0
        return (n - self.length) // self.offset + 1


@dataclass(frozen=True)
class FeatureMatrix:
    """Windowed feature rows with labels and provenance.

    ``labels`` holds indices into :data:`semgkit.session_io.LABELS`.
    ``source`` identifies the session the rows came from and is what the
    evaluation harness compares to refuse same-session train/test splits.
    """

    rows: np.ndarray
    schema: tuple[str, ...]
    labels: np.ndarray
    window_end_times: np.ndarray
    source: str = ""
    zero_power: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            rows = rows.reshape(len(self.labels), -1)
        labels = np.asarray(self.labels, dtype=np.int64)
        times = np.asarray(self.window_end_times, dtype=float)
        if not (len(rows) == len(labels) == len(times)):
            raise ValueError("rows, labels and window_end_times must have equal length")
        if rows.shape[1] != len(self.schema):
            raise ValueError(f"row width {rows.shape[1]} does not match schema width {len(self.schema)}")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "window_end_times", times)
        object.__setattr__(self, "schema", tuple(self.schema))

    def __len__(self):
        return len(self.rows)

    @property
    def label_values(self) -> list[Label]:
        return [LABELS[i] for i in self.labels]

    def with_rows(self, rows) -> "FeatureMatrix":
        return FeatureMatrix(rows, self.schema, self.labels, self.window_end_times, self.source, self.zero_power)

    def subset(self, mask) -> "FeatureMatrix":
        zp = None if self.zero_power is None else self.zero_power[mask]
        return FeatureMatrix(self.rows[mask], self.schema, self.labels[mask], self.window_end_times[mask],
                             self.source, zp)

    def to_csv(self, path) -> None:
        header = ",".join(self.schema) + ",label,window_end_time"
        lines = [header]
        for row, lab, t in zip(self.rows, self.labels, self.window_end_times):
            lines.append(",".join(format(v, ".17g") for v in row) + f",{LABELS[lab].value},{format(t, '.17g')}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

    @classmethod
    def from_csv(cls, path, source: str = "") -> "FeatureMatrix":
        text = Path(path).read_text(encoding="utf-8").splitlines()
        cols = text[0].split(",")
        if cols[-2:] != ["label", "window_end_time"]:
            raise SchemaMismatch(f"{path}: feature CSV must end with label,window_end_time columns")
        rows, labels, times = [], [], []
        for line in text[1:]:
            if not line.strip():
                continue
            f = line.split(",")
            rows.append([float(v) for v in f[:-2]])
            labels.append(LABELS.index(Label(f[-2])))
            times.append(float(f[-1]))
        width = len(cols) - 2
        return cls(np.asarray(rows, dtype=float).reshape(-1, width), tuple(cols[:-2]), labels, times,
                   source or str(path))


def feature_schema(channel_names: Sequence[str]) -> tuple[str, ...]:
    return tuple(f"{ch}.{f}" for ch in channel_names for f in FEATURE_NAMES)


@dataclass(frozen=True)
class Windows:
    """Window skeleton: start indices, end-of-window labels and times."""

    starts: np.ndarray
    labels: np.ndarray
    end_times: np.ndarray
    spec: WindowSpec


def slide_windows(recording: Recording, annotations: AnnotationTrack, spec: WindowSpec) -> Windows:
    n = recording.n_samples
    if n < spec.length:
        raise TooShort(f"recording has {n} samples, window needs {spec.length}")
    starts = np.arange(spec.count(n)) * spec.offset
    end_times = recording.times[starts + spec.length - 1]
    return Windows(starts, annotations.label_indices(end_times), end_times, spec)


# ---------------------------------------------------------------------------
# feature kernels; ``w`` is (n_windows, length)

def _zero_crossings(w: np.ndarray, threshold: float = 0.0) -> np.ndarray:
    s = np.sign(w)
    if threshold > 0:
        s[np.abs(w) <= threshold] = 0
    # zero samples inherit the last nonzero sign inside the window
    idx = np.where(s != 0, np.arange(w.shape[1]), 0)
    np.maximum.accumulate(idx, axis=1, out=idx)
    s = np.take_along_axis(s, idx, axis=1)
    return np.count_nonzero(s[:, 1:] * s[:, :-1] < 0, axis=1).astype(float)


def time_features(window, threshold: float = 0.0) -> np.ndarray:
    """``(MAV, RMS, VAR, WL, ZCR)`` for one window or a stack of windows."""
    w = np.atleast_2d(np.asarray(window, dtype=float))
    mav = np.mean(np.abs(w), axis=1)
    rms = np.sqrt(np.mean(w * w, axis=1))
    # variance is shift invariant; centring on the first sample keeps constant windows exactly at zero
    var = np.var(w - w[:, :1], axis=1)
    wl = np.sum(np.abs(np.diff(w, axis=1)), axis=1)
    zcr = _zero_crossings(w, threshold)
    out = np.column_stack([mav, rms, var, wl, zcr])
    return out[0] if np.ndim(window) == 1 else out


def spectral_weights(n: int, kind: str = "hann") -> np.ndarray:
    if kind == "hann":
        # periodic (DFT-even) form, so an integer-bin sine leaks into exactly three bins
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    if kind == "rectangular":
        return np.ones(n)
    raise ValueError(f"unknown spectral window {kind!r}")


def power_spectrum(window, rate: float, kind: str = "hann"):
    """One-sided power over bins ``(0, rate/2]``; returns ``(freqs, power)``."""
    w = np.atleast_2d(np.asarray(window, dtype=float))
    n = w.shape[1]
    z = (w - w.mean(axis=1, keepdims=True)) * spectral_weights(n, kind)
    z -= z.mean(axis=1, keepdims=True)
    spec = np.abs(np.fft.rfft(z, axis=1)) ** 2 / n
    spec[:, 1:(n + 1) // 2] *= 2.0  # fold negative frequencies; Nyquist bin (even n) is unpaired
    freqs = np.arange(spec.shape[1]) * rate / n
    return freqs[1:], spec[:, 1:]


def freq_features(window, rate: float, kind: str = "hann", return_flags: bool = False):
    """``(MNF, MDF, TTP)``; constant windows give zeros and a ``True`` flag."""
    w = np.atleast_2d(np.asarray(window, dtype=float))
    freqs, p = power_spectrum(w, rate, kind)
    total = p.sum(axis=1)
    flat = np.ptp(w, axis=1) == 0
    ok = ~flat & (total > 0)
    safe = np.where(ok, total, 1.0)
    mnf = np.where(ok, p @ freqs / safe, 0.0)
    cum = np.cumsum(p, axis=1)
    # relative slack so an exact half split (two equal lines) is not lost to rounding
    first = np.argmax(cum >= (total * (0.5 - 1e-12))[:, None], axis=1)
    mdf = np.where(ok, freqs[first], 0.0)
    out = np.column_stack([mnf, mdf, np.where(ok, total, 0.0)])
    flags = ~ok
    if np.ndim(window) == 1:
        out, flags = out[0], bool(flags[0])
    return (out, flags) if return_flags else out


def extract(recording: Recording, annotations: AnnotationTrack, spec: WindowSpec,
            spectral_window: str = "hann", zcr_threshold: float = 0.0, source: str = "") -> FeatureMatrix:
    win = slide_windows(recording, annotations, spec)
    n_win = len(win.starts)
    rows = np.empty((n_win, recording.n_channels * N_FEATURES))
    zero_power = np.zeros((n_win, recording.n_channels), dtype=bool)
    for ch in range(recording.n_channels):
        view = sliding_window_view(recording.samples[ch], spec.length)[:: spec.offset][:n_win]
        block = rows[:, ch * N_FEATURES:(ch + 1) * N_FEATURES]
        block[:, :5] = time_features(view, zcr_threshold)
        block[:, 5:], zero_power[:, ch] = freq_features(view, recording.rate, spectral_window, return_flags=True)
    return FeatureMatrix(rows, feature_schema(recording.channel_names), win.labels, win.end_times,
                         source, zero_power)


def extract_session(session: Session, cfg: Mapping, source: str = "") -> FeatureMatrix:
    """Feature matrix for a session using the ``filters`` and ``features`` config sections."""
    fc = cfg["features"]
    rec = session.recording
    if fc.get("filter_before_features", True):
        rec = preprocess(rec, cfg["filters"])
    return extract(rec, session.annotations, WindowSpec(fc["window_length"], fc["window_offset"]),
                   fc.get("spectral_window", "hann"), fc.get("zcr_threshold", 0.0),
                   source or session.subject_id)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray
    degenerate: np.ndarray

    @property
    def flagged(self) -> bool:
        return bool(np.any(self.degenerate))

    def transform(self, rows) -> np.ndarray:
        return (np.asarray(rows, dtype=float) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist(), "degenerate": self.degenerate.tolist()}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Standardizer":
        return cls(np.asarray(d["mean"], float), np.asarray(d["scale"], float), np.asarray(d["degenerate"], bool))


def fit_standardizer(train: FeatureMatrix | np.ndarray) -> Standardizer:
    """Column mean and population std from training rows only.

    Zero-variance columns get scale 1 and are flagged in ``degenerate``.
    """
    x = train.rows if isinstance(train, FeatureMatrix) else np.asarray(train, dtype=float)
    if len(x) < 2:
        raise ValueError("standardizer needs at least two training rows")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    degenerate = (np.ptp(x, axis=0) == 0) | ~(std > 0)
    return Standardizer(mean, np.where(degenerate, 1.0, std), degenerate)


def apply_standardizer(s: Standardizer, m: FeatureMatrix) -> FeatureMatrix:
    if m.rows.shape[1] != len(s.mean):
        raise SchemaMismatch(f"standardizer expects {len(s.mean)} columns, got {m.rows.shape[1]}")
    return m.with_rows(s.transform(m.rows))
