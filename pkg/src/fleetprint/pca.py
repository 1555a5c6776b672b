"""Principal component analysis on the sample covariance matrix.

The eigendecomposition is a cyclic Jacobi sweep, which is deterministic and
plenty fast for the ~20x20 covariance matrices seen here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InsufficientRows, NComponentsTooLarge
from .telemetry import Dataset

DEFAULT_COMPONENTS = 3
DEFAULT_AUGMENT = 2


def jacobi_eigh(A: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and column eigenvectors of symmetric ``A`` by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm is at most ``tol`` times
    the Frobenius norm of ``A`` (absolute ``tol`` for a zero matrix).
    """
    A = np.array(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch("jacobi_eigh needs a square matrix")
    A = (A + A.T) / 2.0
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.linalg.norm(A), 1.0)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                h = A[q, q] - A[p, p]
                if abs(apq) < 1e-150 * abs(h):
                    # theta**2 would overflow; t -> 1/(2 theta) = apq/h
                    t = apq / h
                else:
                    theta = h / (2.0 * apq)
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J on rows/cols p, q
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V


def _fix_sign(v: np.ndarray) -> np.ndarray:
    """Flip so the largest-magnitude coordinate is positive (first one on ties)."""
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (n_components, n_features), rows orthonormal
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray
    total_variance: float

    def __post_init__(self):
        for attr in ("mean", "components", "explained_variance", "explained_variance_ratio"):
            arr = np.array(getattr(self, attr), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        if self.components.ndim != 2 or self.components.shape[1] != self.mean.shape[0]:
            raise DimensionMismatch("component length must match the feature count")

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.mean.shape[0]

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "total_variance": self.total_variance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> PcaModel:
        n = len(data["mean"])
        return cls(
            np.array(data["mean"]),
            np.array(data["components"], dtype=np.float64).reshape(-1, n),
            np.array(data["explained_variance"]),
            np.array(data["explained_variance_ratio"]),
            float(data["total_variance"]),
        )


def _matrix(data) -> np.ndarray:
    return data.X if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)


def pca_fit(dataset, n_components: int = DEFAULT_COMPONENTS) -> PcaModel:
    X = _matrix(dataset)
    n, d = X.shape
    if n < 2:
        raise InsufficientRows(f"PCA needs at least 2 rows, got {n}")
    if n_components < 0 or n_components > min(n - 1, d):
        raise NComponentsTooLarge(f"n_components={n_components} exceeds min(rows-1, features)={min(n - 1, d)}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (n - 1)
    evals, evecs = jacobi_eigh(cov)
    evals = np.maximum(evals, 0.0)
    # stable descending sort keeps lower original index first on equal eigenvalues
    order = np.argsort(-evals, kind="stable")[:n_components]
    comps = np.array([_fix_sign(evecs[:, i]) for i in order]).reshape(n_components, d)
    total = float(np.trace(cov))
    ratio = evals[order] / total if total > 0 else np.zeros(n_components)
    return PcaModel(mean, comps, evals[order], ratio, total)


def pca_transform(model: PcaModel, dataset) -> np.ndarray:
    X = _matrix(dataset)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(f"PCA fit on {model.n_features} features, got shape {X.shape}")
    return (X - model.mean) @ model.components.T


def pca_inverse(model: PcaModel, scores: np.ndarray) -> np.ndarray:
    return model.mean + np.asarray(scores) @ model.components


def augment(model: PcaModel, dataset: Dataset, n_augment: int = DEFAULT_AUGMENT) -> Dataset:
    """Append the first ``n_augment`` component scores as columns ``pca.1``, ``pca.2``, ..."""
    if n_augment < 0 or n_augment > model.n_components:
        raise ValueError(f"n_augment={n_augment} exceeds the {model.n_components} retained components")
    if n_augment == 0:
        return dataset
    scores = pca_transform(model, dataset)[:, :n_augment]
    names = dataset.feature_names + tuple(f"pca.{i + 1}" for i in range(n_augment))
    return dataset.with_features(np.hstack([dataset.X, scores]), names)
