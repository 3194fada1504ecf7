"""Rest-to-active amplitude ratios from envelopes.

For each channel the mean envelope over every ``relax`` stretch and over
every stretch of a movement condition is computed after trimming a guard
margin from both ends of each stretch (onset/offset transients), and the
ratio ``active / rest`` is reported.  Per-condition aggregates are the mean of
the per-channel ratios.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyAfterTrim, MissingPhase, RestBelowFloor
from .session_io import LABEL_INDEX, LABELS, AnnotationTrack, Label, Session, Task
from .signal_core import Envelope, envelope_pipeline

REST_FLOOR = 1e-9

CONDITION_COLUMNS = {
    Label.THUMB_ABDUCTION: "Thumb",
    Label.FINGER_EXTENSION: "FE",
    Label.FINGER_FLEXION: "FF",
    Label.HAND_OPEN: "Open",
    Label.HAND_CLOSE: "Close",
}
TASK_COLUMNS = {
    Task.ISOLATED_MOVEMENT: "Isolated",
    Task.ISOMETRIC_CONTRACTION: "Isometric",
    Task.GESTURE_CLASSIFICATION: "Gesture",
}


@dataclass(frozen=True)
class PhaseAmplitudes:
    channel: int
    rest_mean: float
    active_mean: float
    condition: Label


@dataclass(frozen=True)
class RatioReport:
    subject_id: str
    task: Task
    aggregated: Mapping[Label, float]
    per_channel: Mapping[tuple[Label, int], float]
    method: str = "mean_of_ratios"
    amplitudes: tuple[PhaseAmplitudes, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "task": self.task.value,
            "method": self.method,
            "aggregated": {lab.value: r for lab, r in self.aggregated.items()},
            "per_channel": [
                {"condition": lab.value, "channel": ch, "ratio": r} for (lab, ch), r in self.per_channel.items()
            ],
            "amplitudes": [
                {"condition": pa.condition.value, "channel": pa.channel, "rest_mean": pa.rest_mean,
                 "active_mean": pa.active_mean}
                for pa in self.amplitudes
            ],
        }


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open ``[start, stop)`` index ranges where ``mask`` is True."""
    d = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)))


def phase_mask(times: np.ndarray, annotations: AnnotationTrack, label: Label, rate: float,
               guard_trim: float = 0.5, edge_discard: float = 0.0) -> np.ndarray:
    """Samples labelled ``label`` after trimming ``guard_trim`` seconds from each stretch.

    Raises :class:`EmptyAfterTrim` if the trim swallows a whole stretch.
    """
    lab = annotations.label_indices(times)
    mask = lab == LABEL_INDEX[label]
    g = int(round(guard_trim * rate))
    keep = np.zeros_like(mask)
    for a, b in _runs(mask):
        if b - a <= 2 * g:
            raise EmptyAfterTrim(
                f"guard trim of {guard_trim:g} s consumes the {label.value} stretch at {times[a]:g} s")
        keep[a + g:b - g] = True
    e = int(round(edge_discard * rate))
    if e:
        keep[:e] = False
        keep[len(keep) - e:] = False
    return keep


def phase_amplitude(envelope: Envelope, annotations: AnnotationTrack, condition: Label,
                    guard_trim: float = 0.5, edge_discard: float = 0.0) -> list[PhaseAmplitudes]:
    condition = Label(condition)
    times = envelope.times
    lab = annotations.label_indices(times)
    for phase in (Label.RELAX, condition):
        if not np.any(lab == LABEL_INDEX[phase]):
            raise MissingPhase(phase)
    rest = phase_mask(times, annotations, Label.RELAX, envelope.rate, guard_trim, edge_discard)
    act = phase_mask(times, annotations, condition, envelope.rate, guard_trim, edge_discard)
    for phase, m in ((Label.RELAX, rest), (condition, act)):
        if not m.any():
            raise EmptyAfterTrim(f"guard trim of {guard_trim:g} s leaves no {phase.value} samples")
    v = envelope.values
    return [
        PhaseAmplitudes(ch, float(np.mean(v[ch, rest])), float(np.mean(v[ch, act])), condition)
        for ch in range(v.shape[0])
    ]


def amplitude_ratio(pa: PhaseAmplitudes, floor: float = REST_FLOOR) -> float:
    if not pa.rest_mean > floor:
        raise RestBelowFloor(f"channel {pa.channel}: rest mean {pa.rest_mean:g} is not above the floor {floor:g}")
    return pa.active_mean / pa.rest_mean


def aggregate_report(per_condition: Mapping[Label, Sequence[PhaseAmplitudes]], subject_id: str = "",
                     task: Task = Task.ISOLATED_MOVEMENT, method: str = "mean_of_ratios",
                     floor: float = REST_FLOOR) -> RatioReport:
    """Per-channel ratios and their per-condition aggregate.

    ``method="ratio_of_means"`` divides channel-averaged amplitudes instead of
    averaging per-channel ratios.
    """
    aggregated, per_channel, amps = {}, {}, []
    for cond, pas in per_condition.items():
        cond = Label(cond)
        if not pas:
            raise MissingPhase(cond)
        ratios = []
        for pa in pas:
            r = amplitude_ratio(pa, floor)
            per_channel[(cond, pa.channel)] = r
            ratios.append(r)
            amps.append(pa)
        if method == "mean_of_ratios":
            aggregated[cond] = float(np.mean(ratios))
        elif method == "ratio_of_means":
            rest = float(np.mean([pa.rest_mean for pa in pas]))
            if not rest > floor:
                raise RestBelowFloor(f"{cond.value}: channel-averaged rest mean {rest:g} is not above the floor")
            aggregated[cond] = float(np.mean([pa.active_mean for pa in pas])) / rest
        else:
            raise ValueError(f"unknown aggregation method {method!r}")
    return RatioReport(subject_id, Task(task), aggregated, per_channel, method, tuple(amps))


def analyze_envelope(env: Envelope, annotations: AnnotationTrack, conditions: Iterable[Label], cfg: Mapping,
                     subject_id: str = "", task: Task = Task.ISOLATED_MOVEMENT) -> RatioReport:
    ac = cfg["activity"]
    edge = cfg["filters"].get("edge_discard_s", 0.0)
    per = {c: phase_amplitude(env, annotations, c, ac["guard_trim_s"], edge) for c in conditions}
    return aggregate_report(per, subject_id, task, ac["aggregate"], ac["rest_floor"])


def analyze_session(session: Session, cfg: Mapping) -> RatioReport:
    """Filter chain, envelope and ratios for every gesture of the session's protocol."""
    env = envelope_pipeline(session.recording, cfg["filters"])
    return analyze_envelope(env, session.annotations, session.protocol.gestures, cfg,
                            session.subject_id, session.protocol.task)


def grand_average(values: Iterable[float]) -> float:
    vals = list(values)
    return float(np.mean(vals))


def ratio_table(reports: Sequence[RatioReport], with_average: bool = True):
    """Subjects as rows, task x condition as columns; returns ``(csv_text, aligned_text)``."""
    cols = []
    for rep in reports:
        for cond in rep.aggregated:
            key = (rep.task, cond)
            if key not in cols:
                cols.append(key)
    cols.sort(key=lambda k: (list(Task).index(k[0]), LABELS.index(k[1])))
    header = ["subject"] + [f"{TASK_COLUMNS[t]}.{CONDITION_COLUMNS.get(c, c.value)}" for t, c in cols]
    subjects = list(dict.fromkeys(r.subject_id for r in reports))
    cell = {(r.subject_id, r.task, c): v for r in reports for c, v in r.aggregated.items()}
    rows = [[s] + [cell.get((s, t, c)) for t, c in cols] for s in subjects]
    if with_average and rows:
        avg = ["Avg"]
        for j in range(1, len(header)):
            vals = [r[j] for r in rows if r[j] is not None]
            avg.append(grand_average(vals) if vals else None)
        rows.append(avg)
    csv_lines = [",".join(header)] + [
        ",".join([r[0]] + ["" if v is None else format(v, ".6g") for v in r[1:]]) for r in rows
    ]
    text_rows = [header] + [[r[0]] + ["" if v is None else f"{v:.1f}" for v in r[1:]] for r in rows]
    widths = [max(len(r[i]) for r in text_rows) for i in range(len(header))]
    text = "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in text_rows)
    return "\n".join(csv_lines) + "\n", text + "\n"
