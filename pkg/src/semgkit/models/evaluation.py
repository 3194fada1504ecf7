"""Held-out evaluation and the subject x model accuracy table."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..errors import SameSessionSplit
from ..features import FeatureMatrix
from ..session_io import LABELS, Label
from . import ModelKind, TrainedModel, apply_class_mode, check_schema, fit_model


@dataclass(frozen=True)
class EvalReport:
    classes: tuple[Label, ...]
    confusion: np.ndarray  # rows = true class, columns = predicted
    provenance: Mapping = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        total = self.confusion.sum()
        return float(np.trace(self.confusion) / total) if total else 0.0

    @property
    def precision(self) -> np.ndarray:
        col = self.confusion.sum(axis=0)
        return np.divide(np.diag(self.confusion), col, out=np.zeros(len(col)), where=col > 0)

    @property
    def recall(self) -> np.ndarray:
        row = self.confusion.sum(axis=1)
        return np.divide(np.diag(self.confusion), row, out=np.zeros(len(row)), where=row > 0)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "classes": [c.value for c in self.classes],
            "confusion": self.confusion.tolist(),
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "provenance": dict(self.provenance),
        }


def evaluate(model: TrainedModel, test: FeatureMatrix) -> EvalReport:
    check_schema(model, test)
    pred = model.predict(test)
    # classes seen in training or testing, in label order
    present = sorted(set(LABELS.index(c) for c in model.class_set) | set(test.labels.tolist()))
    pos = {lab: i for i, lab in enumerate(present)}
    conf = np.zeros((len(present), len(present)), dtype=np.int64)
    np.add.at(conf, ([pos[v] for v in test.labels.tolist()], [pos[v] for v in pred.tolist()]), 1)
    prov = {"kind": model.kind.value, "seed": model.seed, "hyperparameters": dict(model.hyperparameters),
            "test_source": test.source, "n_test": len(test)}
    return EvalReport(tuple(LABELS[i] for i in present), conf, prov)


def train_and_evaluate(train: FeatureMatrix, test: FeatureMatrix, kind: str | ModelKind, cfg: Mapping,
                       seed: int = 0) -> tuple[TrainedModel, EvalReport]:
    """Fit on one session's windows and score on another's.

    Refuses matrices that share a source: windows from one recording overlap
    in time and would leak into the test score.
    """
    if train.source and train.source == test.source:
        raise SameSessionSplit(f"train and test both come from session {train.source!r}")
    mode = cfg["models"].get("class_mode", "three_class")
    train, test = apply_class_mode(train, mode), apply_class_mode(test, mode)
    model = fit_model(kind, train, cfg, seed)
    report = evaluate(model, test)
    report.provenance["train_source"] = train.source
    report.provenance["class_mode"] = mode
    return model, report


MODEL_COLUMNS = tuple(k.value.upper() for k in ModelKind)


def accuracy_table(results: Mapping[tuple[str, str, str], float], devices: Sequence[str] = ("sleeve", "armband")):
    """Render ``{(subject, device, model): accuracy}`` as subject rows by device x model columns.

    Returns ``(csv_text, aligned_text)``.  The best model per subject and
    device is starred in the text rendering.
    """
    subjects = sorted({s for s, _, _ in results})
    devices = [d for d in devices if any(k[1] == d for k in results)]
    cols = [(d, m) for d in devices for m in MODEL_COLUMNS]
    header = ["subject"] + [f"{d}.{m}" for d, m in cols]
    csv_lines = [",".join(header)]
    text_rows = [header]
    for s in subjects:
        vals = [results.get((s, d, m.lower())) for d, m in cols]
        csv_lines.append(",".join([s] + ["" if v is None else format(v, ".6f") for v in vals]))
        cells = [s]
        for d in devices:
            dv = [results.get((s, d, m.lower())) for m in MODEL_COLUMNS]
            best = max((v for v in dv if v is not None), default=None)
            cells += ["" if v is None else f"{100 * v:.1f}%" + ("*" if v == best else "") for v in dv]
        text_rows.append(cells)
    widths = [max(len(r[i]) for r in text_rows) for i in range(len(header))]
    text = "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in text_rows)
    return "\n".join(csv_lines) + "\n", text + "\n"
