"""Feed-forward network: sigmoid, sigmoid, identity hidden layers and a softmax output.

Trained with plain minibatch SGD on mean cross-entropy. A stratified slice of
the training rows is held out and the weights with the lowest held-out loss
are kept.
"""

from __future__ import annotations

import numpy as np

from ..telemetry import N_CLASSES
from .base import TrainedModel, check_training, softmax
from .params import MLPParams

HIDDEN_ACTIVATIONS = ("sigmoid", "sigmoid", "identity")


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def layer_sizes(n_features: int, hidden=(16, 8, 4)) -> list[int]:
    return [n_features, *hidden, N_CLASSES]


def init_params(sizes: list[int], rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    """Glorot-uniform weights, zero biases."""
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.append((rng.uniform(-limit, limit, size=(fan_in, fan_out)), np.zeros(fan_out)))
    return params


def forward(params, X: np.ndarray):
    """Return the list of layer outputs, input first and softmax probabilities last."""
    acts = [X]
    h = X
    for li, (W, b) in enumerate(params):
        z = h @ W + b
        if li == len(params) - 1:
            h = softmax(z)
        elif HIDDEN_ACTIVATIONS[li] == "sigmoid":
            h = _sigmoid(z)
        else:
            h = z
        acts.append(h)
    return acts


def loss_and_grads(params, X: np.ndarray, Y: np.ndarray):
    """Mean cross-entropy against one-hot ``Y`` and its gradient for every (W, b)."""
    acts = forward(params, X)
    P = acts[-1]
    n = len(X)
    loss = -np.sum(Y * np.log(np.clip(P, 1e-300, None))) / n
    grads = [None] * len(params)
    delta = (P - Y) / n
    for li in range(len(params) - 1, -1, -1):
        W, _ = params[li]
        grads[li] = (acts[li].T @ delta, delta.sum(axis=0))
        if li == 0:
            break
        delta = delta @ W.T
        if HIDDEN_ACTIVATIONS[li - 1] == "sigmoid":
            a = acts[li]
            delta = delta * a * (1.0 - a)
    return loss, grads


def _holdout_split(y: np.ndarray, fraction: float, rng: np.random.Generator):
    if fraction <= 0:
        return np.arange(len(y)), np.arange(0)
    hold = []
    for c in range(N_CLASSES):
        idx = np.nonzero(y == c)[0]
        n_hold = int(round(fraction * len(idx)))
        if len(idx) - n_hold < 1:
            n_hold = 0
        hold.extend(rng.permutation(idx)[:n_hold].tolist())
    hold = np.sort(np.array(hold, dtype=np.int64))
    train = np.setdiff1d(np.arange(len(y)), hold)
    return train, hold


class MLPClassifier(TrainedModel):
    def __init__(self, params: MLPParams, weights):
        self.params = params
        self.weights = []
        for W, b in weights:
            W = np.array(W, dtype=np.float64)
            b = np.array(b, dtype=np.float64)
            W.setflags(write=False)
            b.setflags(write=False)
            self.weights.append((W, b))
        self.n_features = self.weights[0][0].shape[0]
        self.history: list[float] = []

    @property
    def weight_shapes(self) -> list[tuple[int, int]]:
        return [W.shape for W, _ in self.weights]

    @classmethod
    def fit(cls, params: MLPParams, X, y, seed: int = 0) -> MLPClassifier:
        params.validate()
        X, y = check_training(X, y, need_two_classes=True)
        rng = np.random.default_rng(seed)
        weights = init_params(layer_sizes(X.shape[1], params.hidden), rng)
        Y = np.eye(N_CLASSES)[y]
        tr, hold = _holdout_split(y, params.validation_fraction, rng)
        monitor = hold if len(hold) else tr
        best_loss = np.inf
        best = [(W.copy(), b.copy()) for W, b in weights]
        history = []
        lr, bs = params.learning_rate, params.batch_size
        for _ in range(params.epochs):
            order = rng.permutation(tr)
            for start in range(0, len(order), bs):
                batch = order[start : start + bs]
                _, grads = loss_and_grads(weights, X[batch], Y[batch])
                weights = [(W - lr * gW, b - lr * gb) for (W, b), (gW, gb) in zip(weights, grads)]
            P = forward(weights, X[monitor])[-1]
            loss = float(-np.mean(np.log(np.clip(P[np.arange(len(monitor)), y[monitor]], 1e-300, None))))
            history.append(loss)
            if loss < best_loss:
                best_loss = loss
                best = [(W.copy(), b.copy()) for W, b in weights]
        model = cls(params, best)
        model.history = history
        return model

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return forward(self.weights, self._check(X))[-1]

    def to_dict(self) -> dict:
        return {"weights": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.weights]}

    @classmethod
    def from_dict(cls, params: MLPParams, data: dict) -> MLPClassifier:
        return cls(params, [(w["W"], w["b"]) for w in data["weights"]])
