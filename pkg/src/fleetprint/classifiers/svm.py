"""One-vs-rest soft-margin SVM trained by SMO.

Each binary problem is solved in the dual with maximal-violating-pair
working-set selection using second-order information (the LIBSVM WSS2
rule). Training stops when the KKT gap ``m(a) - M(a)`` drops below ``tol``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..telemetry import N_CLASSES
from .base import TrainedModel, check_training, softmax
from .params import Kernel, SVMParams

log = logging.getLogger(__name__)

TAU = 1e-12


def kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: Kernel, gamma: float) -> np.ndarray:
    if kernel is Kernel.LINEAR:
        return A @ B.T
    sq = (A**2).sum(axis=1)[:, None] + (B**2).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True)
class BinarySolution:
    alpha: np.ndarray
    bias: float
    iterations: int
    converged: bool


def smo(K: np.ndarray, y: np.ndarray, c: float, tol: float = 1e-3, max_iter: int = 1_000_000) -> BinarySolution:
    """Solve ``min 1/2 a'Qa - e'a`` s.t. ``0 <= a <= c``, ``y'a = 0`` with ``Q = yy' * K``."""
    n = len(y)
    y = y.astype(np.float64)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.diag(K).copy()
    it = 0
    converged = False
    while it < max_iter:
        # I_up: can move alpha toward y*inf; I_low: the opposite.
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        score = -y * grad
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, score, -np.inf)))
        m_up = score[i]
        m_low = np.min(np.where(low, score, np.inf))
        if m_up - m_low < tol:
            converged = True
            break
        Ki = K[i]
        b = m_up - score
        a = diag[i] + diag - 2.0 * Ki
        a = np.where(a > 0, a, TAU)
        cand = low & (b > 0)
        j = int(np.argmin(np.where(cand, -(b * b) / a, np.inf)))
        Kj = K[j]
        yi, yj = y[i], y[j]
        quad = max(diag[i] + diag[j] - 2.0 * K[i, j], TAU)
        old_i, old_j = alpha[i], alpha[j]
        # Step along the feasible direction (yi*e_i - yj*e_j), clipped to the box.
        step = (m_up - score[j]) / quad
        step_max_i = (c - old_i) if yi > 0 else old_i
        step_max_j = old_j if yj > 0 else (c - old_j)
        step = min(step, step_max_i, step_max_j)
        alpha[i] = old_i + yi * step
        alpha[j] = old_j - yj * step
        alpha[i] = min(max(alpha[i], 0.0), c)
        alpha[j] = min(max(alpha[j], 0.0), c)
        di, dj = alpha[i] - old_i, alpha[j] - old_j
        grad += y * (yi * di * Ki + yj * dj * Kj)
        it += 1
    if not converged:
        log.warning("SMO stopped at max_iter=%d before reaching tol=%g", max_iter, tol)
    score = -y * grad
    free = (alpha > 0) & (alpha < c)
    if free.any():
        bias = float(np.mean(score[free]))
    else:
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        hi = np.max(score[up]) if up.any() else np.min(score[low])
        lo = np.min(score[low]) if low.any() else hi
        bias = float((hi + lo) / 2.0)
    return BinarySolution(alpha, bias, it, converged)


class SVMClassifier(TrainedModel):
    """Per class: support vectors, dual coefficients ``alpha_i * y_i`` and bias.

    A class absent from training gets an empty machine whose decision value is
    ``-inf``, so it is never predicted and receives zero probability.
    """

    def __init__(self, params: SVMParams, n_features: int, machines):
        self.params = params
        self.n_features = n_features
        self.machines = []
        for m in machines:
            if m is None:
                self.machines.append(None)
                continue
            sv, coef, bias = m
            sv = np.array(sv, dtype=np.float64).reshape(-1, n_features)
            coef = np.array(coef, dtype=np.float64)
            sv.setflags(write=False)
            coef.setflags(write=False)
            self.machines.append((sv, coef, float(bias)))

    @classmethod
    def fit(cls, params: SVMParams, X, y) -> SVMClassifier:
        params.validate()
        X, y = check_training(X, y, need_two_classes=True)
        K = kernel_matrix(X, X, params.kernel, params.gamma)
        machines = []
        for cls_idx in range(N_CLASSES):
            if not np.any(y == cls_idx):
                machines.append(None)
                continue
            target = np.where(y == cls_idx, 1.0, -1.0)
            sol = smo(K, target, params.c, params.tol, params.max_iter)
            keep = sol.alpha > 0
            machines.append((X[keep], sol.alpha[keep] * target[keep], sol.bias))
        return cls(params, X.shape[1], machines)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = self._check(X)
        out = np.full((len(X), N_CLASSES), -np.inf)
        for c, m in enumerate(self.machines):
            if m is None:
                continue
            sv, coef, bias = m
            if len(sv):
                out[:, c] = kernel_matrix(X, sv, self.params.kernel, self.params.gamma) @ coef + bias
            else:
                out[:, c] = bias
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.decision_function(X))

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "machines": [
                None if m is None else {"sv": m[0].tolist(), "coef": m[1].tolist(), "bias": m[2]} for m in self.machines
            ],
        }

    @classmethod
    def from_dict(cls, params: SVMParams, data: dict) -> SVMClassifier:
        machines = [None if m is None else (m["sv"], m["coef"], m["bias"]) for m in data["machines"]]
        return cls(params, data["n_features"], machines)
