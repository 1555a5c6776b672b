from __future__ import annotations

import numpy as np

from ..errors import DegenerateData, DimensionMismatch, EmptyInput
from ..telemetry import N_CLASSES


class TrainedModel:
    """Common surface of a fitted classifier. Subclasses never mutate after ``__init__``."""

    params = None
    n_features: int = 0

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"model expects {self.n_features} features, got shape {X.shape}")
        return X

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


def check_training(X, y, need_two_classes: bool = False):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) == 0:
        raise EmptyInput("training data must be a non-empty 2-D matrix")
    if y.shape != (len(X),):
        raise DimensionMismatch("labels do not match rows")
    if need_two_classes and np.unique(y).size < 2:
        raise DegenerateData("training data contains a single class")
    if y.min() < 0 or y.max() >= N_CLASSES:
        raise ValueError("labels must be canonical class indices")
    return X, y


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - np.max(z, axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)
