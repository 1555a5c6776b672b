"""Hyperparameter records for the four classifier variants."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Union

from ..errors import InvalidParams


class Variant(str, Enum):
    DT = "dt"
    KNN = "knn"
    SVM = "svm"
    MLP = "mlp"


class Weights(str, Enum):
    UNIFORM = "uniform"
    DISTANCE = "distance"


class IndexKind(str, Enum):
    BRUTE = "brute"
    KD_TREE = "kd_tree"
    BALL_TREE = "ball_tree"


class Kernel(str, Enum):
    LINEAR = "linear"
    RBF = "rbf"


MAX_DEPTH_RANGE = range(1, 21)
NEIGHBORS_RANGE = range(1, 21)
GAMMAS = (1e-3, 1e-4)
CS = (1.0, 10.0, 100.0, 1000.0)
MLP_HIDDEN = (16, 8, 4)


@dataclass(frozen=True)
class DTParams:
    max_depth: int = 10

    variant = Variant.DT

    def validate(self):
        if not isinstance(self.max_depth, int) or self.max_depth < 0:
            raise InvalidParams(f"max_depth must be a non-negative integer, got {self.max_depth!r}")
        return self


@dataclass(frozen=True)
class KNNParams:
    n_neighbors: int = 5
    weights: Weights = Weights.UNIFORM
    index: IndexKind = IndexKind.BALL_TREE

    variant = Variant.KNN

    def __post_init__(self):
        object.__setattr__(self, "weights", Weights(self.weights))
        object.__setattr__(self, "index", IndexKind(self.index))

    def validate(self):
        if not isinstance(self.n_neighbors, int) or self.n_neighbors < 1:
            raise InvalidParams(f"n_neighbors must be a positive integer, got {self.n_neighbors!r}")
        return self


@dataclass(frozen=True)
class SVMParams:
    kernel: Kernel = Kernel.LINEAR
    gamma: float = 1e-3  # ignored by the linear kernel
    c: float = 1000.0
    tol: float = 1e-3
    max_iter: int = 1_000_000

    variant = Variant.SVM

    def __post_init__(self):
        object.__setattr__(self, "kernel", Kernel(self.kernel))

    def validate(self):
        if not self.c > 0:
            raise InvalidParams(f"C must be positive, got {self.c!r}")
        if not self.gamma > 0:
            raise InvalidParams(f"gamma must be positive, got {self.gamma!r}")
        if not self.tol > 0:
            raise InvalidParams("tol must be positive")
        return self


@dataclass(frozen=True)
class MLPParams:
    hidden: tuple[int, ...] = MLP_HIDDEN
    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 8
    validation_fraction: float = 0.1

    variant = Variant.MLP

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(self.hidden))

    def validate(self):
        if self.hidden != MLP_HIDDEN:
            raise InvalidParams(f"hidden layer sizes are fixed at {MLP_HIDDEN}, got {self.hidden}")
        if not self.learning_rate > 0:
            raise InvalidParams("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidParams("epochs and batch_size must be positive")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise InvalidParams("validation_fraction must lie in [0, 1)")
        return self


HyperParams = Union[DTParams, KNNParams, SVMParams, MLPParams]

_BY_VARIANT = {Variant.DT: DTParams, Variant.KNN: KNNParams, Variant.SVM: SVMParams, Variant.MLP: MLPParams}


def default_params(variant: Variant | str) -> HyperParams:
    """Defaults are the grid-search winners reported for the physical cluster."""
    return _BY_VARIANT[Variant(variant)]()


def params_to_dict(params: HyperParams) -> dict:
    out = {"variant": params.variant.value}
    for key, value in asdict(params).items():
        out[key] = value.value if isinstance(value, Enum) else (list(value) if isinstance(value, tuple) else value)
    return out


def params_from_dict(data: dict) -> HyperParams:
    data = dict(data)
    cls = _BY_VARIANT[Variant(data.pop("variant"))]
    return cls(**data)


def in_table_space(params: HyperParams) -> bool:
    """Whether ``params`` lies inside the standard grid-search space."""
    if isinstance(params, DTParams):
        return params.max_depth in MAX_DEPTH_RANGE
    if isinstance(params, KNNParams):
        return params.n_neighbors in NEIGHBORS_RANGE and params.index is not IndexKind.BRUTE
    if isinstance(params, SVMParams):
        return params.gamma in GAMMAS and params.c in CS
    return params.hidden == MLP_HIDDEN
