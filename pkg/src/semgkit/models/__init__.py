"""Intent classifiers fitted on standardised window features.

Every fit function takes a :class:`~semgkit.features.FeatureMatrix`, fits a
:class:`~semgkit.features.Standardizer` on those training rows only, and
returns an immutable :class:`TrainedModel` that applies the same
standardisation at prediction time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .. import __version__
from ..errors import SchemaMismatch
from ..features import FeatureMatrix, Standardizer, fit_standardizer
from ..session_io import LABELS, Label
from . import forest, lda, mlp

MODEL_FORMAT = "semgkit-model"
MODEL_FORMAT_VERSION = 1


class ModelKind(str, Enum):
    LDA = "lda"
    RF = "rf"
    MLP = "mlp"


@dataclass(frozen=True)
class TrainedModel:
    kind: ModelKind
    parameters: Mapping[str, Any]
    standardizer: Standardizer
    class_set: tuple[Label, ...]
    schema: tuple[str, ...]
    seed: int = 0
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)
    history: tuple[float, ...] = ()

    @property
    def n_classes(self) -> int:
        return len(self.class_set)

    def _positions(self, rows: np.ndarray) -> np.ndarray:
        x = self.standardizer.transform(rows)
        if self.kind is ModelKind.LDA:
            return lda.predict(self.parameters, x)
        if self.kind is ModelKind.RF:
            return forest.predict(self.parameters, x, self.n_classes)
        return mlp.predict(self.parameters, x)

    def predict(self, data: FeatureMatrix | np.ndarray) -> np.ndarray:
        """Predicted label indices (into ``LABELS``)."""
        if isinstance(data, FeatureMatrix):
            check_schema(self, data)
            rows = data.rows
        else:
            rows = np.atleast_2d(np.asarray(data, dtype=float))
            if rows.shape[1] != len(self.schema):
                raise SchemaMismatch(f"model expects {len(self.schema)} features, got {rows.shape[1]}")
        idx = np.array([LABELS.index(c) for c in self.class_set])
        return idx[self._positions(rows)]

    # ------------------------------------------------------------------ io
    def to_document(self) -> dict:
        if self.kind is ModelKind.RF:
            params = {"trees": [t.to_dict() for t in self.parameters["trees"]]}
        else:
            params = {k: np.asarray(v).tolist() for k, v in self.parameters.items()}
        return {
            "format": MODEL_FORMAT,
            "format_version": MODEL_FORMAT_VERSION,
            "tool_version": __version__,
            "kind": self.kind.value,
            "seed": self.seed,
            "hyperparameters": dict(self.hyperparameters),
            "class_set": [c.value for c in self.class_set],
            "schema": list(self.schema),
            "standardizer": self.standardizer.to_dict(),
            "parameters": params,
            "history": list(self.history),
        }

    @classmethod
    def from_document(cls, doc: Mapping) -> "TrainedModel":
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError("not a semgkit model document")
        if doc.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {doc.get('format_version')!r}")
        kind = ModelKind(doc["kind"])
        if kind is ModelKind.RF:
            params = {"trees": [forest.Tree.from_dict(t) for t in doc["parameters"]["trees"]]}
        else:
            params = {k: np.asarray(v, dtype=float) for k, v in doc["parameters"].items()}
        return cls(kind, params, Standardizer.from_dict(doc["standardizer"]),
                   tuple(Label(c) for c in doc["class_set"]), tuple(doc["schema"]), int(doc["seed"]),
                   doc.get("hyperparameters", {}), tuple(doc.get("history", ())))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_document(), indent=1, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TrainedModel":
        return cls.from_document(json.loads(Path(path).read_text(encoding="utf-8")))


def check_schema(model: TrainedModel, fm: FeatureMatrix) -> None:
    if tuple(fm.schema) != tuple(model.schema):
        raise SchemaMismatch(f"feature schema differs from the model's ({len(fm.schema)} vs {len(model.schema)} columns)")


def _prepare(train: FeatureMatrix):
    present = sorted(set(train.labels.tolist()))
    class_set = tuple(LABELS[i] for i in present)
    y = np.searchsorted(np.asarray(present), train.labels)
    std = fit_standardizer(train)
    return std, std.transform(train.rows), y, class_set


def fit_lda(train: FeatureMatrix, ridge: float = 1e-6) -> TrainedModel:
    std, x, y, classes = _prepare(train)
    params = lda.fit(x, y, len(classes), ridge)
    return TrainedModel(ModelKind.LDA, params, std, classes, train.schema, 0, {"ridge": ridge})


def fit_rf(train: FeatureMatrix, trees: int = 100, seed: int = 0, max_features="sqrt", min_leaf: int = 1,
           bootstrap: bool = True) -> TrainedModel:
    std, x, y, classes = _prepare(train)
    params = forest.fit(x, y, len(classes), trees, seed, max_features, min_leaf, bootstrap)
    hp = {"trees": trees, "max_features": max_features, "min_leaf": min_leaf, "bootstrap": bootstrap}
    return TrainedModel(ModelKind.RF, params, std, classes, train.schema, seed, hp)


def fit_mlp(train: FeatureMatrix, hidden: int = 64, epochs: int = 200, lr: float = 1e-3, seed: int = 0,
            batch_size: int = 32) -> TrainedModel:
    std, x, y, classes = _prepare(train)
    params, history = mlp.fit(x, y, len(classes), hidden, epochs, lr, batch_size, seed)
    hp = {"hidden": hidden, "epochs": epochs, "lr": lr, "batch_size": batch_size}
    return TrainedModel(ModelKind.MLP, params, std, classes, train.schema, seed, hp, tuple(history))


def fit_model(kind: str | ModelKind, train: FeatureMatrix, cfg: Mapping, seed: int = 0) -> TrainedModel:
    """Dispatch on ``kind`` using hyperparameters from the ``models`` config section."""
    kind = ModelKind(kind)
    mc = cfg["models"]
    if kind is ModelKind.LDA:
        return fit_lda(train, mc["lda"]["ridge"])
    if kind is ModelKind.RF:
        rc = mc["rf"]
        return fit_rf(train, rc["trees"], seed, rc["max_features"], rc["min_leaf"])
    c = mc["mlp"]
    return fit_mlp(train, c["hidden"], c["epochs"], c["lr"], seed, c["batch_size"])


def apply_class_mode(fm: FeatureMatrix, mode: str) -> FeatureMatrix:
    """``three_class`` keeps every window; ``binary`` drops windows labelled relax."""
    if mode == "three_class":
        return fm
    if mode == "binary":
        return fm.subset(fm.labels != LABELS.index(Label.RELAX))
    raise ValueError(f"unknown class mode {mode!r}")


from .evaluation import EvalReport, accuracy_table, evaluate, train_and_evaluate  # noqa: E402

__all__ = [
    "EvalReport",
    "ModelKind",
    "TrainedModel",
    "accuracy_table",
    "apply_class_mode",
    "evaluate",
    "fit_lda",
    "fit_mlp",
    "fit_model",
    "fit_rf",
    "train_and_evaluate",
]
