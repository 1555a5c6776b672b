"""k-nearest-neighbour classifier with brute-force, k-d tree and ball tree indexes.

All three indexes return the same neighbours: the ``k`` smallest squared
Euclidean distances, ties broken by lower training index. Distances are
always computed by :func:`sq_distances` so the float results agree
bit-for-bit between indexes.
"""

from __future__ import annotations

import heapq

import numpy as np

from ..telemetry import N_CLASSES
from .base import TrainedModel, check_training
from .params import IndexKind, KNNParams, Weights

LEAF_SIZE = 16


def sq_distances(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    return ((points - q) ** 2).sum(axis=1)


def _k_smallest(d2: np.ndarray, idx: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    if k < len(d2):
        kth = np.partition(d2, k - 1)[k - 1]
        keep = d2 <= kth
        d2, idx = d2[keep], idx[keep]
    order = np.lexsort((idx, d2))[:k]
    return idx[order], d2[order]


class BruteIndex:
    def __init__(self, X: np.ndarray):
        self.X = X

    def query(self, q: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        return _k_smallest(sq_distances(self.X, q), np.arange(len(self.X)), k)


class _Heap:
    """Bounded max-heap on (d2, idx) keeping the k lexicographically smallest."""

    def __init__(self, k: int):
        self.k = k
        self.items: list[tuple[float, int]] = []

    def worst(self) -> float:
        return -self.items[0][0] if len(self.items) == self.k else np.inf

    def push_block(self, d2: np.ndarray, idx: np.ndarray):
        bound = self.worst()
        cand = np.nonzero(d2 <= bound)[0]
        for c in cand[np.lexsort((idx[cand], d2[cand]))]:
            item = (-float(d2[c]), -int(idx[c]))
            if len(self.items) < self.k:
                heapq.heappush(self.items, item)
            elif item > self.items[0]:
                heapq.heapreplace(self.items, item)
            else:
                break

    def result(self) -> tuple[np.ndarray, np.ndarray]:
        pairs = sorted((-d, -i) for d, i in self.items)
        return np.array([i for _, i in pairs], dtype=np.int64), np.array([d for d, _ in pairs])


class KdTreeIndex:
    """Median split on the dimension of widest spread; left holds values <= split, right >= split."""

    def __init__(self, X: np.ndarray, leaf_size: int = LEAF_SIZE):
        self.X = X
        self.leaf_size = leaf_size
        # node: (split_dim, split_value, left, right) or (-1, indices)
        self.nodes: list[tuple] = []
        self._build(np.arange(len(X)))

    def _build(self, idx: np.ndarray) -> int:
        node = len(self.nodes)
        self.nodes.append(None)
        pts = self.X[idx]
        spread = pts.max(axis=0) - pts.min(axis=0) if len(idx) else np.zeros(1)
        if len(idx) <= self.leaf_size or spread.max() == 0:
            self.nodes[node] = (-1, idx)
            return node
        dim = int(np.argmax(spread))
        order = idx[np.argsort(self.X[idx, dim], kind="stable")]
        mid = len(order) // 2
        split = float(self.X[order[mid], dim])
        left = self._build(order[:mid])
        right = self._build(order[mid:])
        self.nodes[node] = (dim, split, left, right)
        return node

    def query(self, q: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        heap = _Heap(k)
        stack = [(0.0, 0)]
        while stack:
            bound, node = stack.pop()
            # <= keeps exact ties reachable
            if bound > heap.worst():
                continue
            entry = self.nodes[node]
            if entry[0] < 0:
                idx = entry[1]
                heap.push_block(sq_distances(self.X[idx], q), idx)
                continue
            dim, split, left, right = entry
            diff = q[dim] - split
            near, far = (left, right) if diff <= 0 else (right, left)
            # Far-side points are at least |diff| away along dim.
            stack.append((max(bound, diff * diff), far))
            stack.append((bound, near))
        return heap.result()


class BallTreeIndex:
    """Balls of (centroid, radius), split at the median of the widest dimension."""

    def __init__(self, X: np.ndarray, leaf_size: int = LEAF_SIZE):
        self.X = X
        self.leaf_size = leaf_size
        centroids, radii = [], []
        # node: (children or None, indices or None)
        self.nodes: list[tuple] = []
        self._build(np.arange(len(X)), centroids, radii)
        self.centroids = np.array(centroids).reshape(len(self.nodes), X.shape[1])
        self.radii = np.array(radii)

    def _build(self, idx: np.ndarray, centroids: list, radii: list) -> int:
        node = len(self.nodes)
        self.nodes.append(None)
        pts = self.X[idx]
        centroid = pts.mean(axis=0) if len(idx) else np.zeros(self.X.shape[1])
        centroids.append(centroid)
        radii.append(float(np.sqrt(sq_distances(pts, centroid).max())) if len(idx) else 0.0)
        spread = pts.max(axis=0) - pts.min(axis=0) if len(idx) else np.zeros(1)
        if len(idx) <= self.leaf_size or spread.max() == 0:
            self.nodes[node] = (None, idx)
            return node
        dim = int(np.argmax(spread))
        order = idx[np.argsort(self.X[idx, dim], kind="stable")]
        mid = len(order) // 2
        children = (self._build(order[:mid], centroids, radii), self._build(order[mid:], centroids, radii))
        self.nodes[node] = (children, None)
        return node

    def _lower_bounds(self, q: np.ndarray) -> list[float]:
        """Squared lower bound on the distance from ``q`` to any point in each ball."""
        gap = np.sqrt(sq_distances(self.centroids, q)) - self.radii
        # Pad against rounding in the triangle-inequality bound.
        gap -= 1e-9 * (1.0 + self.radii)
        return np.where(gap > 0, gap * gap, 0.0).tolist()

    def query(self, q: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        heap = _Heap(k)
        bounds = self._lower_bounds(q)
        stack = [0]
        while stack:
            node = stack.pop()
            if bounds[node] > heap.worst():
                continue
            children, idx = self.nodes[node]
            if children is None:
                heap.push_block(sq_distances(self.X[idx], q), idx)
                continue
            a, b = children
            # Visit the closer ball first.
            if bounds[a] <= bounds[b]:
                stack.extend((b, a))
            else:
                stack.extend((a, b))
        return heap.result()


_INDEXES = {IndexKind.BRUTE: BruteIndex, IndexKind.KD_TREE: KdTreeIndex, IndexKind.BALL_TREE: BallTreeIndex}


def build_index(kind: IndexKind, X: np.ndarray):
    return _INDEXES[IndexKind(kind)](X)


def vote(neighbor_labels: np.ndarray, d2: np.ndarray, weights: Weights) -> np.ndarray:
    """Class vote shares for one query from its neighbours' labels and squared distances."""
    if weights is Weights.DISTANCE:
        exact = d2 == 0.0
        if exact.any():
            w = exact.astype(np.float64)
        else:
            w = 1.0 / np.sqrt(d2)
    else:
        w = np.ones(len(d2))
    shares = np.bincount(neighbor_labels, weights=w, minlength=N_CLASSES)
    return shares / shares.sum()


class KNNClassifier(TrainedModel):
    def __init__(self, params: KNNParams, X, y):
        self.params = params
        self.X = np.array(X, dtype=np.float64)
        self.y = np.array(y, dtype=np.int64)
        self.X.setflags(write=False)
        self.y.setflags(write=False)
        self.n_features = self.X.shape[1]
        self.index = build_index(params.index, self.X)

    @classmethod
    def fit(cls, params: KNNParams, X, y) -> KNNClassifier:
        params.validate()
        X, y = check_training(X, y)
        return cls(params, X, y)

    @property
    def k(self) -> int:
        return min(self.params.n_neighbors, len(self.X))

    def kneighbors(self, X: np.ndarray, k: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Neighbour indices and squared distances, each of shape (n_queries, k)."""
        X = self._check(X)
        k = self.k if k is None else k
        idx = np.empty((len(X), k), dtype=np.int64)
        d2 = np.empty((len(X), k))
        for r, q in enumerate(X):
            idx[r], d2[r] = self.index.query(q, k)
        return idx, d2

    def proba_from_neighbors(self, idx: np.ndarray, d2: np.ndarray, k: int, weights: Weights) -> np.ndarray:
        return np.array([vote(self.y[i[:k]], d[:k], weights) for i, d in zip(idx, d2)]).reshape(-1, N_CLASSES)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        idx, d2 = self.kneighbors(X)
        return self.proba_from_neighbors(idx, d2, self.k, self.params.weights)

    def to_dict(self) -> dict:
        return {"X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_dict(cls, params: KNNParams, data: dict) -> KNNClassifier:
        return cls(params, np.array(data["X"], dtype=np.float64).reshape(len(data["y"]), -1), data["y"])


def knn_query_bruteforce(model: KNNClassifier, row, k: int) -> list[tuple[int, float]]:
    """Exact ``k`` nearest training rows as (index, euclidean distance), ties to lower index."""
    q = np.asarray(row, dtype=np.float64)
    idx, d2 = BruteIndex(model.X).query(q, k)
    return [(int(i), float(np.sqrt(d))) for i, d in zip(idx, d2)]
