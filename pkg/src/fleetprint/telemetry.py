"""Domain types for metered telemetry and the per-timestep featurization.

A run is a bag of ``MeterSample`` readings taken on every node of a small
cluster. Readings are grouped into sample-period buckets; every bucket that
holds all ten meters on all nodes becomes one feature row laid out
node-major (master first) and meter-minor in canonical order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyInput, EmptyRun, InvalidRun, InvalidSample

DEFAULT_SAMPLE_PERIOD = 5.0


class MeterCategory(Enum):
    CUMULATIVE = "cumulative"
    DELTA = "delta"
    GAUGE = "gauge"


class MeterId(str, Enum):
    CPU_UTIL = "cpu_util"
    DISK_READ_BYTES = "disk_read_bytes"
    DISK_READ_REQUESTS = "disk_read_requests"
    DISK_WRITE_BYTES = "disk_write_bytes"
    DISK_WRITE_REQUESTS = "disk_write_requests"
    NET_IN_BYTES = "net_in_bytes"
    NET_IN_PACKETS = "net_in_packets"
    NET_OUT_BYTES = "net_out_bytes"
    NET_OUT_PACKETS = "net_out_packets"
    MEMORY_USAGE = "memory_usage"

    @property
    def unit(self) -> str:
        return _UNITS[self]

    @property
    def category(self) -> MeterCategory:
        return MeterCategory.GAUGE

    @property
    def max_value(self) -> float:
        return 100.0 if self is MeterId.CPU_UTIL else math.inf

    @property
    def position(self) -> int:
        return _METER_POSITION[self]

    def __str__(self) -> str:
        return self.value


_UNITS = {
    MeterId.CPU_UTIL: "percent",
    MeterId.DISK_READ_BYTES: "B/s",
    MeterId.DISK_READ_REQUESTS: "requests/s",
    MeterId.DISK_WRITE_BYTES: "B/s",
    MeterId.DISK_WRITE_REQUESTS: "requests/s",
    MeterId.NET_IN_BYTES: "B/s",
    MeterId.NET_IN_PACKETS: "packets/s",
    MeterId.NET_OUT_BYTES: "B/s",
    MeterId.NET_OUT_PACKETS: "packets/s",
    MeterId.MEMORY_USAGE: "MB",
}

METERS: tuple[MeterId, ...] = tuple(MeterId)
_METER_POSITION = {m: i for i, m in enumerate(METERS)}


class AppLabel(str, Enum):
    CADO_NFS = "CADO_NFS"
    MCNP6 = "MCNP6"
    OPENFOAM = "OPENFOAM"

    @property
    def index(self) -> int:
        return _LABEL_INDEX[self]

    def __str__(self) -> str:
        return self.value


CLASS_ORDER: tuple[AppLabel, ...] = tuple(AppLabel)
_LABEL_INDEX = {label: i for i, label in enumerate(CLASS_ORDER)}
N_CLASSES = len(CLASS_ORDER)


class Role(str, Enum):
    MASTER = "master"
    SLAVE = "slave"


@dataclass(frozen=True)
class NodeId:
    name: str
    role: Role = Role.SLAVE


DEFAULT_NODES: tuple[NodeId, ...] = (NodeId("digi-a", Role.MASTER), NodeId("digi-b", Role.SLAVE))


@dataclass(frozen=True, slots=True)
class MeterSample:
    """One reading. ``node`` is the node name; roles live on the run's node list."""

    timestamp: float
    node: str
    meter: MeterId
    value: float

    def __post_init__(self):
        if not (self.timestamp >= 0.0) or math.isinf(self.timestamp):
            raise InvalidSample(f"timestamp must be finite and non-negative, got {self.timestamp!r}")
        if not (self.value >= 0.0) or math.isinf(self.value):
            raise InvalidSample(f"{self.meter.value} value must be finite and non-negative, got {self.value!r}")
        if self.value > self.meter.max_value:
            raise InvalidSample(f"{self.meter.value} value {self.value!r} exceeds {self.meter.max_value}")


@dataclass(frozen=True)
class TelemetryRun:
    label: AppLabel
    nodes: tuple[NodeId, ...]
    samples: tuple[MeterSample, ...]
    sample_period: float = DEFAULT_SAMPLE_PERIOD
    run_id: str = ""
    # Not part of the serialized form, so excluded from equality.
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.nodes:
            raise InvalidRun("a run needs at least one node")
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise InvalidRun(f"duplicate node names in {names}")
        n_master = sum(n.role is Role.MASTER for n in self.nodes)
        if n_master != 1:
            raise InvalidRun(f"exactly one master node required, found {n_master}")
        if not (self.sample_period > 0) or math.isinf(self.sample_period):
            raise InvalidRun(f"sample_period must be positive, got {self.sample_period!r}")
        known = set(names)
        for s in self.samples:
            if s.node not in known:
                raise InvalidRun(f"sample references unknown node {s.node!r}")

    @property
    def master(self) -> NodeId:
        return next(n for n in self.nodes if n.role is Role.MASTER)

    @property
    def feature_nodes(self) -> tuple[str, ...]:
        """Node names in feature-block order: master first, then the rest as listed."""
        return ordered_node_names(self.nodes)


def ordered_node_names(nodes: Sequence[NodeId]) -> tuple[str, ...]:
    master = [n.name for n in nodes if n.role is Role.MASTER]
    return tuple(master + [n.name for n in nodes if n.role is not Role.MASTER])


def feature_names_for(node_names: Sequence[str]) -> tuple[str, ...]:
    return tuple(f"{node}.{meter.value}" for node in node_names for meter in METERS)


def bucket_index(timestamp: float, sample_period: float) -> int:
    return math.floor(timestamp / sample_period)


@dataclass(frozen=True)
class FeatureRow:
    values: tuple[float, ...]
    label: AppLabel | None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix ``X`` (rows x features) with integer class indices ``y``.

    ``y`` is ``None`` for unlabeled data (streaming inference). ``buckets``
    optionally carries the source bucket index of each row.
    """

    X: np.ndarray
    y: np.ndarray | None
    feature_names: tuple[str, ...]
    buckets: np.ndarray | None = None

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, copy=True)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, len(self.feature_names))
        if X.ndim != 2:
            raise DimensionMismatch(f"feature matrix must be 2-D, got shape {X.shape}")
        names = tuple(self.feature_names)
        if X.shape[1] != len(names):
            raise DimensionMismatch(f"{X.shape[1]} columns but {len(names)} feature names")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "feature_names", names)
        for attr in ("y", "buckets"):
            arr = getattr(self, attr)
            if arr is None:
                continue
            arr = np.array(arr, dtype=np.int64, copy=True)
            if arr.shape != (X.shape[0],):
                raise DimensionMismatch(f"{attr} has shape {arr.shape}, expected ({X.shape[0]},)")
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        if self.y is not None and self.y.size and (self.y.min() < 0 or self.y.max() >= N_CLASSES):
            raise ValueError("labels must be class indices in canonical order")

    class_order = CLASS_ORDER

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def width(self) -> int:
        return self.X.shape[1]

    @property
    def labels(self) -> list[AppLabel] | None:
        if self.y is None:
            return None
        return [CLASS_ORDER[i] for i in self.y]

    @property
    def rows(self) -> list[FeatureRow]:
        labels = self.labels or [None] * len(self)
        return [FeatureRow(tuple(x.tolist()), lab) for x, lab in zip(self.X, labels)]

    def subset(self, idx) -> Dataset:
        idx = np.asarray(idx)
        return Dataset(
            self.X[idx],
            None if self.y is None else self.y[idx],
            self.feature_names,
            None if self.buckets is None else self.buckets[idx],
        )

    def with_features(self, X: np.ndarray, feature_names: Sequence[str]) -> Dataset:
        return Dataset(X, self.y, tuple(feature_names), self.buckets)

    def equals(self, other: Dataset) -> bool:
        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return a.shape == b.shape and bool(np.array_equal(a, b))

        return (
            self.feature_names == other.feature_names
            and same(self.X, other.X)
            and same(self.y, other.y)
            and same(self.buckets, other.buckets)
        )

    @classmethod
    def concat(cls, datasets: Iterable[Dataset]) -> Dataset:
        parts = list(datasets)
        if not parts:
            raise EmptyInput("nothing to concatenate")
        names = parts[0].feature_names
        for p in parts[1:]:
            if p.feature_names != names:
                raise DimensionMismatch("datasets disagree on feature names")
        labeled = all(p.y is not None for p in parts)
        with_buckets = all(p.buckets is not None for p in parts)
        return cls(
            np.vstack([p.X for p in parts]),
            np.concatenate([p.y for p in parts]) if labeled else None,
            names,
            np.concatenate([p.buckets for p in parts]) if with_buckets else None,
        )


class Alignment(NamedTuple):
    """Complete buckets in increasing index order plus the number dropped as incomplete."""

    buckets: list[tuple[int, dict[str, dict[MeterId, float]]]]
    dropped: int

    def __len__(self) -> int:
        return len(self.buckets)

    def __iter__(self) -> Iterator[tuple[int, dict[str, dict[MeterId, float]]]]:
        return iter(self.buckets)

    def __getitem__(self, i):
        return self.buckets[i]


def is_complete(bucket: Mapping[str, Mapping[MeterId, float]], node_names: Iterable[str]) -> bool:
    return all(len(bucket.get(name, ())) == len(METERS) for name in node_names)


def align_timesteps(run: TelemetryRun) -> Alignment:
    # Stable sort keeps file order among equal timestamps, so the later record wins.
    ordered = sorted(run.samples, key=lambda s: s.timestamp)
    assembly: dict[int, dict[str, dict[MeterId, float]]] = {}
    for s in ordered:
        b = bucket_index(s.timestamp, run.sample_period)
        assembly.setdefault(b, {}).setdefault(s.node, {})[s.meter] = s.value
    names = [n.name for n in run.nodes]
    complete = []
    dropped = 0
    for b in sorted(assembly):
        if is_complete(assembly[b], names):
            complete.append((b, assembly[b]))
        else:
            dropped += 1
    return Alignment(complete, dropped)


def bucket_vector(bucket: Mapping[str, Mapping[MeterId, float]], node_names: Sequence[str]) -> list[float]:
    return [bucket[name][meter] for name in node_names for meter in METERS]


def featurize(run: TelemetryRun) -> Dataset:
    aligned = align_timesteps(run)
    if not aligned.buckets:
        raise EmptyRun(f"run {run.run_id!r} has no complete bucket ({aligned.dropped} incomplete)")
    order = run.feature_nodes
    X = np.array([bucket_vector(values, order) for _, values in aligned.buckets], dtype=np.float64)
    y = np.full(len(X), run.label.index, dtype=np.int64)
    buckets = np.array([b for b, _ in aligned.buckets], dtype=np.int64)
    return Dataset(X, y, feature_names_for(order), buckets)


def featurize_corpus(runs: Iterable[TelemetryRun]) -> Dataset:
    return Dataset.concat(featurize(run) for run in runs)


@dataclass(frozen=True, eq=False)
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        for attr in ("mean", "std"):
            arr = np.array(getattr(self, attr), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise DimensionMismatch("scaler mean/std shapes disagree")
        if np.any(self.std < 0):
            raise ValueError("standard deviations must be non-negative")

    @property
    def width(self) -> int:
        return self.mean.shape[0]

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.width:
            raise DimensionMismatch(f"scaler fit on {self.width} features, got shape {X.shape}")
        safe = np.where(self.std > 0, self.std, 1.0)
        return np.where(self.std > 0, (X - self.mean) / safe, 0.0)


def fit_scaler(dataset: Dataset) -> Scaler:
    if len(dataset) == 0:
        raise EmptyInput("cannot fit a scaler on an empty dataset")
    mean = dataset.X.mean(axis=0)
    std = dataset.X.std(axis=0)
    # A constant column can pick up rounding-level spread from the mean.
    std = np.where(std <= 1e-12 * np.maximum(1.0, np.abs(mean)), 0.0, std)
    return Scaler(mean, std)


def apply_scaler(scaler: Scaler, dataset: Dataset) -> Dataset:
    if dataset.width != scaler.width:
        raise DimensionMismatch(f"scaler fit on {scaler.width} features, dataset has {dataset.width}")
    return dataset.with_features(scaler.transform(dataset.X), dataset.feature_names)
