"""Recordings, annotation tracks, protocols and session directories on disk.

File formats
------------
Recording CSV::

    # optional comment lines
    time,ch1,ch2,ch3
    0,12.5,-3.25,0.5
    0.004,...

Annotation CSV::

    start,end,label
    0,5,hand_open

Timestamps are decimal seconds.  A session directory holds
``recording.csv``, ``annotations.csv`` and ``session.json`` (device profile,
protocol, subject id, free-form metadata).
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .config import dump_json
from .errors import (
    ChannelCountMismatch,
    EmptyInput,
    MalformedHeader,
    MalformedRow,
    NonFiniteValue,
    OverlappingIntervals,
    ParseError,
    UnknownLabel,
    UnsortedIntervals,
)
from .signal_core import PROFILES, DeviceProfile, Recording


class Label(str, Enum):
    RELAX = "relax"
    THUMB_ABDUCTION = "thumb_abduction"
    FINGER_EXTENSION = "finger_extension"
    FINGER_FLEXION = "finger_flexion"
    HAND_OPEN = "hand_open"
    HAND_CLOSE = "hand_close"

    @classmethod
    def parse(cls, text: str, line: int | None = None) -> "Label":
        try:
            return cls(text.strip())
        except ValueError:
            raise UnknownLabel(text.strip(), line) from None


LABELS = list(Label)
LABEL_INDEX = {lab: i for i, lab in enumerate(LABELS)}


class Task(str, Enum):
    ISOLATED_MOVEMENT = "isolated_movement"
    ISOMETRIC_CONTRACTION = "isometric_contraction"
    GESTURE_CLASSIFICATION = "gesture_classification"


@dataclass(frozen=True)
class Interval:
    start: float
    end: float
    label: Label


@dataclass(frozen=True)
class AnnotationTrack:
    """Sorted, non-overlapping labelled intervals; uncovered time is ``relax``."""

    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        ivs = tuple(Interval(float(s), float(e), Label(lab)) for s, e, lab in
                    ((iv.start, iv.end, iv.label) if isinstance(iv, Interval) else iv for iv in self.intervals))
        object.__setattr__(self, "intervals", ivs)
        _validate_intervals(ivs)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    @property
    def end(self) -> float:
        return self.intervals[-1].end if self.intervals else 0.0

    def label_at(self, t: float) -> Label:
        for iv in self.intervals:
            if iv.start <= t < iv.end:
                return iv.label
        return Label.RELAX

    def label_indices(self, times: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`label_at` returning indices into :data:`LABELS`."""
        times = np.asarray(times, dtype=float)
        out = np.full(times.shape, LABEL_INDEX[Label.RELAX], dtype=np.int64)
        for iv in self.intervals:
            out[(times >= iv.start) & (times < iv.end)] = LABEL_INDEX[iv.label]
        return out

    def labels(self) -> set[Label]:
        return {iv.label for iv in self.intervals}


def _validate_intervals(ivs: Sequence[Interval], lines: Sequence[int] | None = None):
    for k, iv in enumerate(ivs):
        line = lines[k] if lines else None
        if not (math.isfinite(iv.start) and math.isfinite(iv.end)):
            raise NonFiniteValue("interval bounds must be finite", line)
        if not iv.start < iv.end:
            raise MalformedRow(f"interval start {iv.start} is not before end {iv.end}", line)
        if k:
            prev = ivs[k - 1]
            if iv.start < prev.start:
                raise UnsortedIntervals(f"interval {k} starts before interval {k - 1}", line)
            if iv.start < prev.end:
                raise OverlappingIntervals(k - 1, k, line)


@dataclass(frozen=True)
class ProtocolSpec:
    task: Task
    movement_duration: float = 5.0
    rest_duration: float = 5.0
    repetitions: int = 8
    gestures: tuple[Label, ...] = (Label.HAND_OPEN, Label.HAND_CLOSE)

    def __post_init__(self):
        object.__setattr__(self, "task", Task(self.task))
        object.__setattr__(self, "gestures", tuple(Label(g) for g in self.gestures))
        if int(self.repetitions) != self.repetitions or self.repetitions < 1:
            raise ValueError("repetitions must be a positive integer")
        if not (self.movement_duration > 0 and self.rest_duration > 0):
            raise ValueError("durations must be positive")
        if not self.gestures:
            raise ValueError("protocol needs at least one gesture")
        if Label.RELAX in self.gestures:
            raise ValueError("relax is implicit and cannot be a protocol gesture")

    @property
    def duration(self) -> float:
        """Protocol-implied minimum recording length in seconds."""
        return self.repetitions * len(self.gestures) * (self.movement_duration + self.rest_duration)

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "movement_duration": self.movement_duration,
            "rest_duration": self.rest_duration,
            "repetitions": self.repetitions,
            "gestures": [g.value for g in self.gestures],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ProtocolSpec":
        return cls(d["task"], d["movement_duration"], d["rest_duration"], d["repetitions"], tuple(d["gestures"]))


GESTURE_PROTOCOL = ProtocolSpec(Task.GESTURE_CLASSIFICATION, 5.0, 5.0, 8, (Label.HAND_OPEN, Label.HAND_CLOSE))
STROKE_GESTURE_PROTOCOL = ProtocolSpec(Task.GESTURE_CLASSIFICATION, 5.0, 5.0, 3, (Label.HAND_OPEN, Label.HAND_CLOSE))
ISOLATED_PROTOCOL = ProtocolSpec(
    Task.ISOLATED_MOVEMENT, 5.0, 5.0, 3, (Label.THUMB_ABDUCTION, Label.FINGER_EXTENSION, Label.FINGER_FLEXION)
)
ISOMETRIC_PROTOCOL = ProtocolSpec(
    Task.ISOMETRIC_CONTRACTION, 5.0, 5.0, 3, (Label.THUMB_ABDUCTION, Label.FINGER_EXTENSION, Label.FINGER_FLEXION)
)


def expand_protocol(spec: ProtocolSpec, start: float = 0.0) -> AnnotationTrack:
    """Alternate each gesture with a rest, cycling through the gestures per repetition.

    Boundaries are computed as ``start + k * step`` rather than by accumulation
    so long protocols do not drift.
    """
    m, r = spec.movement_duration, spec.rest_duration
    ivs = []
    k = 0
    for _ in range(spec.repetitions):
        for g in spec.gestures:
            t0 = start + k * (m + r)
            ivs.append(Interval(t0, t0 + m, g))
            ivs.append(Interval(t0 + m, start + (k + 1) * (m + r), Label.RELAX))
            k += 1
    return AnnotationTrack(tuple(ivs))


@dataclass(frozen=True)
class Session:
    recording: Recording
    annotations: AnnotationTrack
    protocol: ProtocolSpec
    subject_id: str = "anon"
    metadata: Mapping[str, Any] = field(default_factory=dict)


def validate_session(session: Session) -> list[str]:
    """Every invariant violation as a message; empty means valid."""
    problems = []
    rec = session.recording
    duration = rec.duration
    if rec.n_samples == 0:
        problems.append("recording is empty")
    end = session.annotations.end
    rec_end = rec.start_time + duration
    if end > rec_end + 1e-9:
        problems.append(f"annotation exceeds recording: annotations end at {end:g} s, recording ends at {rec_end:g} s")
    if duration + 1e-9 < session.protocol.duration:
        problems.append(
            f"recording shorter than protocol: {duration:g} s recorded, protocol implies {session.protocol.duration:g} s"
        )
    missing = set(session.protocol.gestures) - session.annotations.labels()
    if session.annotations.intervals and missing:
        problems.append("protocol gestures absent from annotations: " + ", ".join(sorted(m.value for m in missing)))
    return problems


# ---------------------------------------------------------------------------
# CSV parsing

_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$", re.ASCII)
_NONFINITE = re.compile(r"^[+-]?(nan|inf|infinity)$", re.IGNORECASE)


def _number(text: str, line: int) -> float:
    t = text.strip()
    if _NUMBER.match(t):
        v = float(t)
        if not math.isfinite(v):
            raise NonFiniteValue(f"value {t!r} overflows", line)
        return v
    if _NONFINITE.match(t):
        raise NonFiniteValue(f"non-finite value {t!r}", line)
    raise MalformedRow(f"cannot parse {t!r} as a number", line)


def _content_lines(text: str):
    """Yield ``(line_number, stripped_line)`` skipping comments and blank lines."""
    for i, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield i, line


def _read_text(path) -> str:
    data = Path(path).read_bytes()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"file is not valid UTF-8: {exc.reason}") from None


def parse_recording_text(text: str, profile: DeviceProfile | None = None) -> Recording:
    lines = _content_lines(text)
    try:
        hline, header = next(lines)
    except StopIteration:
        raise EmptyInput("no header line") from None
    cols = [c.strip() for c in header.split(",")]
    if len(cols) < 2 or cols[0] != "time" or any(not c for c in cols[1:]):
        raise MalformedHeader("header must be 'time,<channel>,...'", hline)
    if len(set(cols[1:])) != len(cols) - 1:
        raise MalformedHeader("duplicate channel names", hline)
    n_ch = len(cols) - 1
    if profile is not None and profile.channel_count != n_ch:
        raise ChannelCountMismatch(f"header declares {n_ch} channels, profile {profile.name!r} has {profile.channel_count}", hline)

    times, rows = [], []
    for ln, line in lines:
        fields = line.split(",")
        if len(fields) != n_ch + 1:
            raise ChannelCountMismatch(f"expected {n_ch} channel values after timestamp, found {len(fields) - 1}", ln)
        times.append(_number(fields[0], ln))
        rows.append([_number(f, ln) for f in fields[1:]])
    if not rows:
        raise EmptyInput("recording has no data rows")

    t = np.asarray(times)
    if profile is None:
        if len(t) < 2:
            raise ParseError("cannot infer a sample rate from fewer than two rows")
        step = float(np.median(np.diff(t)))
        if not step > 0:
            raise ParseError("timestamps do not increase")
        rate = round(1.0 / step)
        if rate <= 0:
            raise ParseError(f"cannot infer a sample rate from a {step:g} s step")
        profile = DeviceProfile("inferred", rate, "microvolts", n_ch)
    expected = t[0] + np.arange(len(t)) / profile.sample_rate
    bad = np.flatnonzero(np.abs(t - expected) > 0.5 / profile.sample_rate)
    if bad.size:
        raise MalformedRow(f"timestamp {t[bad[0]]!r} is off the {profile.sample_rate} Hz grid (row {bad[0] + 1})")
    return Recording(profile.with_channels(n_ch), np.asarray(rows).T, float(t[0]), tuple(cols[1:]))


def parse_recording(path, profile: DeviceProfile | None = None) -> Recording:
    return parse_recording_text(_read_text(path), profile)


def parse_annotations_text(text: str) -> AnnotationTrack:
    lines = _content_lines(text)
    try:
        hline, header = next(lines)
    except StopIteration:
        raise EmptyInput("no header line") from None
    if [c.strip() for c in header.split(",")] != ["start", "end", "label"]:
        raise MalformedHeader("header must be 'start,end,label'", hline)
    ivs, line_nos = [], []
    for ln, line in lines:
        fields = line.split(",")
        if len(fields) != 3:
            raise MalformedRow(f"expected 3 fields, found {len(fields)}", ln)
        ivs.append(Interval(_number(fields[0], ln), _number(fields[1], ln), Label.parse(fields[2], ln)))
        line_nos.append(ln)
    _validate_intervals(ivs, line_nos)
    return AnnotationTrack(tuple(ivs))


def parse_annotations(path) -> AnnotationTrack:
    return parse_annotations_text(_read_text(path))


def _g(x: float) -> str:
    return format(float(x), ".17g")


def format_recording(rec: Recording) -> str:
    out = ["time," + ",".join(rec.channel_names)]
    for t, row in zip(rec.times, rec.samples.T):
        out.append(_g(t) + "," + ",".join(_g(v) for v in row))
    return "\n".join(out) + "\n"


def write_recording(rec: Recording, path) -> None:
    Path(path).write_text(format_recording(rec), encoding="utf-8", newline="\n")


def format_annotations(track: AnnotationTrack) -> str:
    out = ["start,end,label"] + [f"{_g(iv.start)},{_g(iv.end)},{iv.label.value}" for iv in track]
    return "\n".join(out) + "\n"


def write_annotations(track: AnnotationTrack, path) -> None:
    Path(path).write_text(format_annotations(track), encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# session directories

RECORDING_FILE = "recording.csv"
ANNOTATION_FILE = "annotations.csv"
SESSION_FILE = "session.json"


def write_session(session: Session, directory) -> dict[str, Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = {"recording": d / RECORDING_FILE, "annotations": d / ANNOTATION_FILE, "session": d / SESSION_FILE}
    write_recording(session.recording, paths["recording"])
    write_annotations(session.annotations, paths["annotations"])
    dump_json(
        {
            "profile": session.recording.profile.to_dict(),
            "protocol": session.protocol.to_dict(),
            "subject_id": session.subject_id,
            "metadata": dict(session.metadata),
        },
        paths["session"],
    )
    return paths


def read_session(directory, profile: DeviceProfile | str | None = None) -> Session:
    d = Path(directory)
    meta_path = d / SESSION_FILE
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.exists() else {}
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{meta_path}: {exc}") from None
    if isinstance(profile, str):
        profile = PROFILES[profile]
    try:
        if profile is None and "profile" in meta:
            profile = DeviceProfile.from_dict(meta["profile"])
        protocol = ProtocolSpec.from_dict(meta["protocol"]) if "protocol" in meta else GESTURE_PROTOCOL
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{meta_path}: invalid session document ({exc})") from None
    rec = parse_recording(d / RECORDING_FILE, profile)
    ann_path = d / ANNOTATION_FILE
    ann = parse_annotations(ann_path) if ann_path.exists() else AnnotationTrack()
    return Session(rec, ann, protocol, str(meta.get("subject_id", d.name)), meta.get("metadata", {}))


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def labels_from(values: Iterable[str]) -> list[Label]:
    return [Label(v) for v in values]
