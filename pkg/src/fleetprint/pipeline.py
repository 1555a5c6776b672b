"""Train/evaluate plumbing shared by the CLI and the experiment scripts.

A :class:`ModelBundle` carries everything inference needs: the scaler fit
on training rows, the optional PCA used for augmentation, the classifier,
and the raw feature layout it expects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import classifiers as clf
from .classifiers.params import HyperParams, Variant, default_params, params_to_dict
from .errors import PipelineMismatch
from .eval import EvalReport, GridResult, GridSpec, evaluate, grid_search
from .pca import DEFAULT_AUGMENT, DEFAULT_COMPONENTS, PcaModel, augment, pca_fit
from .telemetry import DEFAULT_SAMPLE_PERIOD, Dataset, NodeId, Role, Scaler, apply_scaler, fit_scaler

BUNDLE_FORMAT = "fleetprint-bundle"
BUNDLE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelBundle:
    model: clf.TrainedModel
    scaler: Scaler
    pca: PcaModel | None
    n_augment: int
    raw_feature_names: tuple[str, ...]
    sample_period: float = DEFAULT_SAMPLE_PERIOD
    grid: GridResult | None = None

    @property
    def pca_augment(self) -> bool:
        return self.pca is not None and self.n_augment > 0

    @property
    def params(self) -> HyperParams:
        return self.model.params

    @property
    def nodes(self) -> tuple[NodeId, ...]:
        """Node layout recovered from feature names; the first block is the master."""
        names = []
        for f in self.raw_feature_names:
            node = f.rsplit(".", 1)[0]
            if node not in names:
                names.append(node)
        return tuple(NodeId(n, Role.MASTER if i == 0 else Role.SLAVE) for i, n in enumerate(names))

    def prepare(self, raw: Dataset) -> Dataset:
        if raw.feature_names != self.raw_feature_names:
            raise PipelineMismatch(f"model trained on features {self.raw_feature_names[:3]}..., got {raw.feature_names[:3]}...")
        scaled = apply_scaler(self.scaler, raw)
        if self.pca_augment:
            scaled = augment(self.pca, scaled, self.n_augment)
        return scaled

    def predict(self, raw: Dataset) -> np.ndarray:
        return clf.predict(self.model, self.prepare(raw))

    def predict_proba(self, raw: Dataset) -> np.ndarray:
        return clf.predict_proba(self.model, self.prepare(raw))

    def evaluate(self, raw: Dataset) -> EvalReport:
        return evaluate(self.model, self.prepare(raw))

    def to_dict(self) -> dict:
        return {
            "model": clf.model_to_dict(self.model),
            "scaler": {"mean": self.scaler.mean.tolist(), "std": self.scaler.std.tolist()},
            "pca": None if self.pca is None else self.pca.to_dict(),
            "n_augment": self.n_augment,
            "raw_feature_names": list(self.raw_feature_names),
            "sample_period": self.sample_period,
            "grid": None
            if self.grid is None
            else {
                "best": params_to_dict(self.grid.best),
                "table": [{"params": params_to_dict(p), "macro_f1": m, "folds": list(f)} for p, m, f in self.grid.table],
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> ModelBundle:
        return cls(
            clf.model_from_dict(data["model"]),
            Scaler(np.array(data["scaler"]["mean"]), np.array(data["scaler"]["std"])),
            None if data["pca"] is None else PcaModel.from_dict(data["pca"]),
            int(data["n_augment"]),
            tuple(data["raw_feature_names"]),
            float(data["sample_period"]),
            None,
        )

    def save(self, path: str | Path) -> None:
        body = json.dumps(self.to_dict(), sort_keys=True)
        Path(path).write_text(f"{BUNDLE_FORMAT} {BUNDLE_FORMAT_VERSION}\n{body}\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> ModelBundle:
        text = Path(path).read_text(encoding="utf-8")
        return cls.from_dict(clf.read_versioned(text, BUNDLE_FORMAT, BUNDLE_FORMAT_VERSION))


def train_bundle(
    train_raw: Dataset,
    variant: Variant | str,
    params: HyperParams | None = None,
    pca_augment: bool = False,
    gridsearch: bool = False,
    folds: int = 5,
    seed: int = 0,
    sample_period: float = DEFAULT_SAMPLE_PERIOD,
    n_components: int = DEFAULT_COMPONENTS,
    n_augment: int = DEFAULT_AUGMENT,
) -> ModelBundle:
    """Fit scaler (and PCA) on the training rows, optionally grid-search, then fit the classifier."""
    variant = Variant(variant)
    scaler = fit_scaler(train_raw)
    train = apply_scaler(scaler, train_raw)
    pca = None
    if pca_augment:
        pca = pca_fit(train, n_components)
        train = augment(pca, train, n_augment)
    result = None
    if gridsearch:
        result = grid_search(variant, GridSpec.table(variant), train, folds=folds, seed=seed)
        params = result.best
    elif params is None:
        params = default_params(variant)
    model = clf.fit(params, train, seed=seed)
    return ModelBundle(model, scaler, pca, n_augment if pca_augment else 0, train_raw.feature_names, sample_period, result)


def run_suite(
    train_raw: Dataset,
    validation_raw: Dataset,
    variants: Sequence[Variant | str] = tuple(Variant),
    pca_augment: bool = False,
    seed: int = 0,
    params: dict | None = None,
) -> dict[str, EvalReport]:
    """Fit each classifier with its default (or given) parameters and evaluate on validation rows."""
    params = params or {}
    out = {}
    for v in variants:
        v = Variant(v)
        bundle = train_bundle(train_raw, v, params.get(v.value), pca_augment=pca_augment, seed=seed)
        out[v.value] = bundle.evaluate(validation_raw)
    return out
