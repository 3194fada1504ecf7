"""Linear discriminant analysis with a shared, ridge-regularised covariance."""

from __future__ import annotations

import numpy as np
from scipy import linalg

from ..errors import InsufficientClassRows, SingularCovariance


def fit(x: np.ndarray, y: np.ndarray, n_classes: int, ridge: float = 1e-6) -> dict:
    """Fit on standardised rows ``x`` with class positions ``y`` in ``[0, n_classes)``.

    The pooled within-class covariance gets ``ridge * trace / d`` added to its
    diagonal before it is inverted.
    """
    n, d = x.shape
    counts = np.bincount(y, minlength=n_classes)
    if n_classes < 2:
        raise InsufficientClassRows("LDA needs at least two classes")
    if np.any(counts < 2):
        raise InsufficientClassRows(f"every class needs >= 2 rows, got counts {counts.tolist()}")
    means = np.stack([x[y == k].mean(axis=0) for k in range(n_classes)])
    centred = x - means[y]
    cov = centred.T @ centred / max(n - n_classes, 1)
    lam = ridge * np.trace(cov) / d
    if not lam > 0:
        lam = ridge
    cov[np.diag_indices(d)] += lam
    try:
        factor = linalg.cho_factor(cov)
        coef = linalg.cho_solve(factor, means.T).T  # (K, d) rows = inv(cov) @ mean_k
    except (linalg.LinAlgError, ValueError) as exc:
        raise SingularCovariance(f"pooled covariance is singular even with ridge {lam:g}: {exc}") from None
    if not np.all(np.isfinite(coef)):
        raise SingularCovariance("non-finite discriminant coefficients")
    intercept = -0.5 * np.einsum("kd,kd->k", coef, means) + np.log(counts / n)
    return {"means": means, "coef": coef, "intercept": intercept, "priors": counts / n}


def decision_function(params: dict, x: np.ndarray) -> np.ndarray:
    return x @ params["coef"].T + params["intercept"]


def predict(params: dict, x: np.ndarray) -> np.ndarray:
    # argmax returns the first maximum, i.e. the lowest class index on ties
    return np.argmax(decision_function(params, x), axis=1)
