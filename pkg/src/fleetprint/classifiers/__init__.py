"""Four classifiers behind one fit / predict / predict_proba contract.

Inputs are :class:`~fleetprint.telemetry.Dataset` objects whose features
are already standardized; outputs are canonical class indices (or
probability triples in canonical class order).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import DimensionMismatch, ModelFormatError
from ..telemetry import Dataset
from .base import TrainedModel
from .knn import KNNClassifier, knn_query_bruteforce
from .mlp import MLPClassifier
from .params import (
    DTParams,
    HyperParams,
    IndexKind,
    Kernel,
    KNNParams,
    MLPParams,
    SVMParams,
    Variant,
    Weights,
    default_params,
    in_table_space,
    params_from_dict,
    params_to_dict,
)
from .svm import SVMClassifier
from .tree import DecisionTree

__all__ = [
    "DTParams",
    "DecisionTree",
    "HyperParams",
    "IndexKind",
    "KNNClassifier",
    "KNNParams",
    "Kernel",
    "MLPClassifier",
    "MLPParams",
    "SVMClassifier",
    "SVMParams",
    "TrainedModel",
    "Variant",
    "Weights",
    "default_params",
    "fit",
    "in_table_space",
    "knn_query_bruteforce",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "predict_proba",
    "save_model",
]

_MODEL_CLASSES = {Variant.DT: DecisionTree, Variant.KNN: KNNClassifier, Variant.SVM: SVMClassifier, Variant.MLP: MLPClassifier}

MODEL_FORMAT = "fleetprint-model"
MODEL_FORMAT_VERSION = 1


def _xy(data):
    if isinstance(data, Dataset):
        return data.X, data.y
    return np.asarray(data, dtype=np.float64), None


def fit(params: HyperParams, train: Dataset, seed: int = 0) -> TrainedModel:
    X, y = train.X, train.y
    if y is None:
        raise ValueError("training data must be labeled")
    if isinstance(params, MLPParams):
        return MLPClassifier.fit(params, X, y, seed=seed)
    return _MODEL_CLASSES[params.variant].fit(params, X, y)


def predict(model: TrainedModel, rows) -> np.ndarray:
    X, _ = _xy(rows)
    return model.predict(X)


def predict_proba(model: TrainedModel, rows) -> np.ndarray:
    X, _ = _xy(rows)
    return model.predict_proba(X)


def model_to_dict(model: TrainedModel) -> dict:
    return {"params": params_to_dict(model.params), "state": model.to_dict()}


def model_from_dict(data: dict) -> TrainedModel:
    params = params_from_dict(data["params"])
    return _MODEL_CLASSES[params.variant].from_dict(params, data["state"])


def save_model(model: TrainedModel, path: str | Path) -> None:
    """Header line ``fleetprint-model <version>`` followed by a JSON body.

    JSON floats are written with ``repr`` so every weight round-trips exactly.
    """
    body = json.dumps(model_to_dict(model), sort_keys=True)
    Path(path).write_text(f"{MODEL_FORMAT} {MODEL_FORMAT_VERSION}\n{body}\n", encoding="utf-8")


def read_versioned(text: str, expected_format: str, version: int) -> dict:
    header, _, body = text.partition("\n")
    parts = header.split()
    if len(parts) != 2 or parts[0] != expected_format:
        raise ModelFormatError(f"not a {expected_format} file")
    if parts[1] != str(version):
        raise ModelFormatError(f"unsupported {expected_format} version {parts[1]}")
    return json.loads(body)


def load_model(path: str | Path) -> TrainedModel:
    return model_from_dict(read_versioned(Path(path).read_text(encoding="utf-8"), MODEL_FORMAT, MODEL_FORMAT_VERSION))


def check_width(model: TrainedModel, rows: Dataset) -> None:
    if rows.width != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} features, got {rows.width}")
