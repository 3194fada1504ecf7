"""Bagged CART trees with Gini impurity.

Trees are stored as flat arrays.  A node sends a row left when
``x[feature] <= threshold``; thresholds are always training values (the
largest value on the left side of the chosen cut) so predictions do not
depend on how the gap between two training values is bisected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientClassRows

LEAF = -1


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # predicted class position at leaves

    def predict(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(len(x), dtype=np.int64)
        rows = np.arange(len(x))
        while True:
            internal = self.feature[node] != LEAF
            if not internal.any():
                return self.value[node]
            r, nd = rows[internal], node[internal]
            go_left = x[r, self.feature[nd]] <= self.threshold[nd]
            node[internal] = np.where(go_left, self.left[nd], self.right[nd])

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        ints = {k: np.asarray(d[k], dtype=np.int64) for k in ("feature", "left", "right", "value")}
        return cls(threshold=np.asarray(d["threshold"], dtype=float), **ints)


def n_candidate_features(d: int, max_features="sqrt") -> int:
    if max_features == "sqrt":
        return max(1, math.isqrt(d))
    if max_features in (None, "all"):
        return d
    return max(1, min(d, int(max_features)))


def _best_split(xs: np.ndarray, y: np.ndarray, n_classes: int, min_leaf: int):
    """Best Gini cut on one feature column; returns ``(impurity, threshold)`` or None."""
    order = np.argsort(xs, kind="stable")
    v = xs[order]
    onehot = np.zeros((len(y), n_classes))
    onehot[np.arange(len(y)), y[order]] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    total = left[-1] + onehot[-1]
    right = total - left
    n_left = np.arange(1, len(y), dtype=float)
    n_right = len(y) - n_left
    valid = (v[:-1] < v[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    # weighted Gini: n_L - sum(c_L^2)/n_L + n_R - sum(c_R^2)/n_R
    imp = (n_left - (left**2).sum(axis=1) / n_left) + (n_right - (right**2).sum(axis=1) / n_right)
    imp = np.where(valid, imp, np.inf)
    i = int(np.argmin(imp))
    return float(imp[i]), float(v[i])


def grow_tree(x: np.ndarray, y: np.ndarray, n_classes: int, rng: np.random.Generator,
              max_features="sqrt", min_leaf: int = 1) -> Tree:
    d = x.shape[1]
    m = n_candidate_features(d, max_features)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        for arr, v in ((feature, LEAF), (threshold, 0.0), (left, LEAF), (right, LEAF), (value, 0)):
            arr.append(v)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(len(y)))]
    while stack:
        node, idx = stack.pop()
        yi = y[idx]
        counts = np.bincount(yi, minlength=n_classes)
        value[node] = int(np.argmax(counts))
        if np.count_nonzero(counts) <= 1 or len(idx) < 2 * min_leaf:
            continue
        perm = rng.permutation(d)
        best = None
        # sample m features; keep drawing if none of them can separate the node
        for start in range(0, d, m):
            for f in perm[start:start + m]:
                res = _best_split(x[idx, f], yi, n_classes, min_leaf)
                if res is not None and (best is None or res[0] < best[0]):
                    best = (res[0], res[1], int(f))
            if best is not None:
                break
        if best is None:
            continue
        _, thr, f = best
        mask = x[idx, f] <= thr
        feature[node], threshold[node] = f, thr
        l_node, r_node = new_node(), new_node()
        left[node], right[node] = l_node, r_node
        stack.append((r_node, idx[~mask]))
        stack.append((l_node, idx[mask]))

    return Tree(np.asarray(feature, np.int64), np.asarray(threshold, float), np.asarray(left, np.int64),
                np.asarray(right, np.int64), np.asarray(value, np.int64))


def fit(x: np.ndarray, y: np.ndarray, n_classes: int, trees: int = 100, seed: int = 0,
        max_features="sqrt", min_leaf: int = 1, bootstrap: bool = True) -> dict:
    counts = np.bincount(y, minlength=n_classes)
    if n_classes < 2 or np.count_nonzero(counts) < 2:
        raise InsufficientClassRows("random forest needs rows from at least two classes")
    forest = []
    n = len(y)
    for t in range(trees):
        # per-tree stream keyed on seed + index keeps results schedule-independent
        rng = np.random.default_rng(seed + t)
        rows = rng.integers(0, n, n) if bootstrap else np.arange(n)
        forest.append(grow_tree(x[rows], y[rows], n_classes, rng, max_features, min_leaf))
    return {"trees": forest}


def vote_counts(params: dict, x: np.ndarray, n_classes: int) -> np.ndarray:
    votes = np.zeros((len(x), n_classes), dtype=np.int64)
    for tree in params["trees"]:
        votes[np.arange(len(x)), tree.predict(x)] += 1
    return votes


def predict(params: dict, x: np.ndarray, n_classes: int) -> np.ndarray:
    return np.argmax(vote_counts(params, x, n_classes), axis=1)
