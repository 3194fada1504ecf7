"""Pipeline configuration.

One nested JSON document carries every tunable default.  ``load_config``
deep-merges a user file over :data:`DEFAULTS`, so a config file only needs
the keys it changes.
"""

from __future__ import annotations

import copy
import json
import os
from pathlib import Path
from typing import Any, Mapping

CONFIG_ENV_VAR = "SEMGKIT_CONFIG"

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "filters": {
        "phase": "zero",  # "zero" (forward-backward) or "causal"
        "notch": {"centers": [50.0, 60.0], "q": 30.0},
        "bandpass": {"enabled": True, "low": 50.0, "high": 115.0, "order": 4},
        "envelope_lowpass": {"cutoff": 40.0, "order": 4},
        "edge_discard_s": 1.0,
    },
    "activity": {
        "guard_trim_s": 0.5,
        "rest_floor": 1e-9,
        "aggregate": "mean_of_ratios",  # or "ratio_of_means"
    },
    "features": {
        "window_length": 250,
        "window_offset": 10,
        "spectral_window": "hann",  # or "rectangular"
        "zcr_threshold": 0.0,
        "filter_before_features": True,
    },
    "models": {
        "class_mode": "three_class",  # or "binary" (relax windows dropped)
        "lda": {"ridge": 1e-6},
        "rf": {"trees": 100, "max_features": "sqrt", "min_leaf": 1},
        "mlp": {"hidden": 64, "epochs": 200, "lr": 1e-3, "batch_size": 32},
    },
}


def deep_merge(base: Mapping, override: Mapping) -> dict:
    out = copy.deepcopy(dict(base))
    for k, v in override.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def default_config() -> dict:
    return copy.deepcopy(DEFAULTS)


def load_config(path: str | os.PathLike | None = None) -> dict:
    """Defaults overlaid with ``path``, or with ``$SEMGKIT_CONFIG`` when no path is given."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path is None:
        return default_config()
    with open(path, encoding="utf-8") as fh:
        user = json.load(fh)
    if not isinstance(user, Mapping):
        raise ValueError(f"{path}: config document must be a JSON object")
    return deep_merge(DEFAULTS, user)


def dump_json(obj: Any, path: str | os.PathLike) -> None:
    """Deterministic JSON writer used for every document the package emits."""
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
