"""CART-style decision tree grown greedily on weighted Gini impurity."""

from __future__ import annotations

import numpy as np

from ..telemetry import N_CLASSES
from .base import TrainedModel, check_training
from .params import DTParams


def _best_split(X: np.ndarray, y: np.ndarray):
    """Lowest weighted-Gini threshold split, or None if every feature is constant.

    Ties go to the lowest feature index, then the lowest threshold.
    """
    m = len(y)
    onehot = np.eye(N_CLASSES)[y]
    total = onehot.sum(axis=0)
    best = None
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        valid = xs[:-1] < xs[1:]
        if not valid.any():
            continue
        left = np.cumsum(onehot[order], axis=0)[:-1]
        right = total - left
        n_left = np.arange(1, m, dtype=np.float64)
        n_right = m - n_left
        # n*gini(node) = n - sum(c^2)/n
        score = (n_left - (left**2).sum(axis=1) / n_left + n_right - (right**2).sum(axis=1) / n_right) / m
        score = np.where(valid, score, np.inf)
        pos = int(np.argmin(score))
        if best is None or score[pos] < best[0]:
            lo, hi = xs[pos], xs[pos + 1]
            thr = lo + (hi - lo) / 2.0
            if not lo <= thr < hi:
                thr = lo
            best = (float(score[pos]), j, float(thr))
    return best


class DecisionTree(TrainedModel):
    """Flat-array tree: ``feature[i] == -1`` marks a leaf; ``x <= threshold`` goes left."""

    def __init__(self, params: DTParams, n_features: int, feature, threshold, left, right, counts):
        self.params = params
        self.n_features = n_features
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.float64).reshape(-1, N_CLASSES)
        for arr in (self.feature, self.threshold, self.left, self.right, self.counts):
            arr.setflags(write=False)

    @classmethod
    def fit(cls, params: DTParams, X, y) -> DecisionTree:
        params.validate()
        X, y = check_training(X, y)
        feature, threshold, left, right, counts = [], [], [], [], []

        def grow(idx: np.ndarray, depth: int) -> int:
            node = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            counts.append(np.bincount(y[idx], minlength=N_CLASSES))
            if depth >= params.max_depth or len(idx) < 2 or np.count_nonzero(counts[node]) == 1:
                return node
            split = _best_split(X[idx], y[idx])
            if split is None:
                return node
            _, j, thr = split
            go_left = X[idx, j] <= thr
            feature[node] = j
            threshold[node] = thr
            left[node] = grow(idx[go_left], depth + 1)
            right[node] = grow(idx[~go_left], depth + 1)
            return node

        grow(np.arange(len(y)), 0)
        return cls(params, X.shape[1], feature, threshold, left, right, counts)

    @property
    def depth(self) -> int:
        def walk(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))

        return walk(0)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = self._check(X)
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            cur = node[rows]
            goes_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(goes_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        c = self.counts[self.apply(X)]
        return c / c.sum(axis=1, keepdims=True)

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, params: DTParams, data: dict) -> DecisionTree:
        return cls(params, data["n_features"], data["feature"], data["threshold"], data["left"], data["right"], data["counts"])
