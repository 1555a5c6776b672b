"""Confusion matrices, per-class scores, cross-validated grid search and reports."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import classifiers as clf
from .classifiers.knn import KNNClassifier
from .classifiers.params import (
    CS,
    GAMMAS,
    MAX_DEPTH_RANGE,
    NEIGHBORS_RANGE,
    DTParams,
    HyperParams,
    IndexKind,
    Kernel,
    KNNParams,
    MLPParams,
    SVMParams,
    Variant,
    Weights,
    params_to_dict,
)
from .errors import DimensionMismatch, EmptyInput, InsufficientData, KeyMismatch, LengthMismatch
from .telemetry import CLASS_ORDER, N_CLASSES, AppLabel, Dataset

log = logging.getLogger(__name__)

REPORT_SCHEMA = "fleetprint-eval-report"
REPORT_SCHEMA_VERSION = 1


def _as_indices(labels) -> np.ndarray:
    out = []
    for lab in labels:
        if isinstance(lab, AppLabel):
            out.append(lab.index)
        elif isinstance(lab, str):
            out.append(AppLabel(lab).index)
        else:
            out.append(int(lab))
    arr = np.array(out, dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= N_CLASSES):
        raise ValueError("labels must be canonical class indices")
    return arr


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are true labels, columns predictions, both in canonical class order."""

    counts: np.ndarray
    normalized: np.ndarray
    empty_rows: tuple[bool, ...]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total)

    @classmethod
    def from_counts(cls, counts) -> ConfusionMatrix:
        counts = np.array(counts, dtype=np.int64).reshape(N_CLASSES, N_CLASSES)
        rows = counts.sum(axis=1)
        empty = tuple(bool(r == 0) for r in rows)
        normalized = np.zeros((N_CLASSES, N_CLASSES))
        nz = rows > 0
        normalized[nz] = counts[nz] / rows[nz, None]
        counts.setflags(write=False)
        normalized.setflags(write=False)
        return cls(counts, normalized, empty)


def confusion(true_labels, predicted_labels) -> ConfusionMatrix:
    t = _as_indices(true_labels)
    p = _as_indices(predicted_labels)
    if len(t) != len(p):
        raise LengthMismatch(f"{len(t)} true labels vs {len(p)} predictions")
    if len(t) == 0:
        raise EmptyInput("confusion matrix of zero rows")
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix.from_counts(counts)


def f1_score(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass(frozen=True)
class ClassScores:
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    # classes whose precision or recall hit a 0/0 and were defined as 0
    degenerate: tuple[bool, ...] = field(default=(False,) * N_CLASSES)

    @property
    def macro_precision(self) -> float:
        return float(np.mean(self.precision))

    @property
    def macro_recall(self) -> float:
        return float(np.mean(self.recall))

    @property
    def macro_f1(self) -> float:
        return float(np.mean(self.f1))


def scores(cm: ConfusionMatrix) -> ClassScores:
    c = cm.counts
    tp = np.diag(c).astype(np.float64)
    predicted = c.sum(axis=0)
    actual = c.sum(axis=1)
    precision, recall, f1, degenerate = [], [], [], []
    for k in range(N_CLASSES):
        p = tp[k] / predicted[k] if predicted[k] else 0.0
        r = tp[k] / actual[k] if actual[k] else 0.0
        precision.append(float(p))
        recall.append(float(r))
        f1.append(f1_score(p, r))
        degenerate.append(bool(predicted[k] == 0 or actual[k] == 0))
    return ClassScores(tuple(precision), tuple(recall), tuple(f1), tuple(degenerate))


def macro_f1(true_labels, predicted_labels) -> float:
    return scores(confusion(true_labels, predicted_labels)).macro_f1


# grid search ---------------------------------------------------------------


def table_grid(variant: Variant | str) -> list[HyperParams]:
    """Every point of the standard search space, in a fixed enumeration order."""
    variant = Variant(variant)
    if variant is Variant.DT:
        return [DTParams(d) for d in MAX_DEPTH_RANGE]
    if variant is Variant.KNN:
        return [
            KNNParams(k, w, idx)
            for k in NEIGHBORS_RANGE
            for w in (Weights.UNIFORM, Weights.DISTANCE)
            for idx in (IndexKind.BALL_TREE, IndexKind.KD_TREE)
        ]
    if variant is Variant.SVM:
        return [SVMParams(kern, g, c) for kern in (Kernel.RBF, Kernel.LINEAR) for g in GAMMAS for c in CS]
    return [MLPParams()]


@dataclass(frozen=True)
class GridSpec:
    variant: Variant
    candidates: tuple[HyperParams, ...]

    @classmethod
    def table(cls, variant: Variant | str) -> GridSpec:
        return cls(Variant(variant), tuple(table_grid(variant)))

    def __len__(self) -> int:
        return len(self.candidates)


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> list[np.ndarray]:
    """Partition row indices into ``folds`` validation folds, stratified by class."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(y), dtype=np.int64)
    for c in range(N_CLASSES):
        idx = np.nonzero(y == c)[0]
        if len(idx) == 0:
            continue
        if len(idx) < folds:
            raise InsufficientData(f"class {CLASS_ORDER[c].value} has {len(idx)} rows, need >= {folds}")
        perm = rng.permutation(idx)
        assignment[perm] = np.arange(len(perm)) % folds
    return [np.nonzero(assignment == f)[0] for f in range(folds)]


@dataclass(frozen=True)
class GridResult:
    best: HyperParams
    table: tuple[tuple[HyperParams, float, tuple[float, ...]], ...]  # (params, mean macro-F1, per-fold)

    @property
    def n_candidates(self) -> int:
        return len(self.table)


def _knn_fold_scores(candidates: Sequence[KNNParams], train: Dataset, val: Dataset) -> list[float]:
    """Macro-F1 for every KNN candidate on one fold.

    Each index is queried once for the largest k; smaller k use the prefix of
    the same sorted neighbour list, which is exactly what a separate query returns.
    """
    out = [0.0] * len(candidates)
    by_index: dict[IndexKind, list[int]] = {}
    for i, p in enumerate(candidates):
        by_index.setdefault(p.index, []).append(i)
    for kind, members in by_index.items():
        k_max = max(candidates[i].n_neighbors for i in members)
        model = KNNClassifier.fit(KNNParams(k_max, Weights.UNIFORM, kind), train.X, train.y)
        idx, d2 = model.kneighbors(val.X, min(k_max, len(train)))
        for i in members:
            p = candidates[i]
            k = min(p.n_neighbors, len(train))
            proba = model.proba_from_neighbors(idx, d2, k, p.weights)
            out[i] = macro_f1(val.y, np.argmax(proba, axis=1))
    return out


def grid_search(
    variant: Variant | str,
    grid: GridSpec | None,
    train: Dataset,
    folds: int = 5,
    seed: int = 0,
) -> GridResult:
    """Exhaustive stratified k-fold search maximizing mean macro-F1; ties go to the earlier candidate."""
    variant = Variant(variant)
    grid = grid or GridSpec.table(variant)
    if grid.variant is not variant:
        raise ValueError(f"grid is for {grid.variant.value}, not {variant.value}")
    if train.y is None:
        raise ValueError("grid search needs labeled data")
    if folds < 2:
        raise InsufficientData("need at least 2 folds")
    parts = stratified_folds(train.y, folds, seed)
    candidates = list(grid.candidates)
    per_fold = np.zeros((len(candidates), folds))
    for f, val_idx in enumerate(parts):
        tr_idx = np.setdiff1d(np.arange(len(train)), val_idx)
        tr, va = train.subset(tr_idx), train.subset(val_idx)
        if variant is Variant.KNN:
            per_fold[:, f] = _knn_fold_scores(candidates, tr, va)
            continue
        for i, params in enumerate(candidates):
            model = clf.fit(params, tr, seed=seed)
            per_fold[i, f] = macro_f1(va.y, clf.predict(model, va))
    means = per_fold.mean(axis=1)
    best = int(np.argmax(means))
    table = tuple((p, float(m), tuple(float(v) for v in row)) for p, m, row in zip(candidates, means, per_fold))
    log.info("grid search %s: %d candidates, best %s (macro-F1 %.4f)", variant.value, len(candidates), candidates[best], means[best])
    return GridResult(candidates[best], table)


# evaluation -----------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    confusion: ConfusionMatrix
    scores: ClassScores
    n_rows: int
    params: dict

    @property
    def accuracy(self) -> float:
        return self.confusion.accuracy

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "version": REPORT_SCHEMA_VERSION,
            "class_order": [c.value for c in CLASS_ORDER],
            "params": self.params,
            "n_rows": self.n_rows,
            "accuracy": self.accuracy,
            "confusion": {
                "counts": self.confusion.counts.tolist(),
                "normalized": self.confusion.normalized.tolist(),
                "empty_rows": list(self.confusion.empty_rows),
            },
            "scores": {
                "precision": list(self.scores.precision),
                "recall": list(self.scores.recall),
                "f1": list(self.scores.f1),
                "degenerate": list(self.scores.degenerate),
                "macro_precision": self.scores.macro_precision,
                "macro_recall": self.scores.macro_recall,
                "macro_f1": self.scores.macro_f1,
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> EvalReport:
        if data.get("schema") != REPORT_SCHEMA or data.get("version") != REPORT_SCHEMA_VERSION:
            raise ValueError("not a version-1 evaluation report")
        cm = ConfusionMatrix.from_counts(data["confusion"]["counts"])
        s = data["scores"]
        sc = ClassScores(tuple(s["precision"]), tuple(s["recall"]), tuple(s["f1"]), tuple(s["degenerate"]))
        return cls(cm, sc, int(data["n_rows"]), dict(data["params"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self, title: str | None = None) -> str:
        names = [c.value for c in CLASS_ORDER]
        width = max(len(n) for n in names) + 2
        lines = []
        if title:
            lines.append(title)
        lines.append("NORMALIZED CONFUSION MATRIX (rows: true label, columns: predicted label)")
        lines.append(" " * width + "".join(f"{n:>{width}}" for n in names))
        for i, n in enumerate(names):
            cells = "".join(f"{v:>{width}.2f}" for v in self.confusion.normalized[i])
            lines.append(f"{n:<{width}}{cells}")
        lines.append("")
        lines.append("SCORING STATISTICS")
        lines.append(" " * width + "".join(f"{h:>{width}}" for h in ("Precision", "Recall", "F1-score")))
        for i, n in enumerate(names):
            vals = (self.scores.precision[i], self.scores.recall[i], self.scores.f1[i])
            lines.append(f"{n:<{width}}" + "".join(f"{v:>{width}.2f}" for v in vals))
        lines.append("")
        lines.append(f"rows: {self.n_rows}  accuracy: {self.accuracy:.2f}  macro-F1: {self.scores.macro_f1:.2f}")
        return "\n".join(lines) + "\n"


def evaluate(model, validation: Dataset) -> EvalReport:
    if validation.width != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} features, got {validation.width}")
    if validation.y is None:
        raise ValueError("evaluation needs labeled data")
    predicted = clf.predict(model, validation)
    cm = confusion(validation.y, predicted)
    return EvalReport(cm, scores(cm), len(validation), params_to_dict(model.params))


# raw vs augmented ----------------------------------------------------------


def bracket(raw: float, augmented: float) -> str:
    return f"{raw:.2f} [{augmented:.2f}]"


@dataclass(frozen=True)
class DeltaTable:
    """Per classifier: raw and augmented scores plus ``f1_aug - f1_raw`` per class."""

    raw: Mapping[str, ClassScores]
    augmented: Mapping[str, ClassScores]
    delta_f1: Mapping[str, tuple[float, ...]]

    def max_abs_delta(self) -> float:
        return max((abs(d) for row in self.delta_f1.values() for d in row), default=0.0)

    def to_text(self) -> str:
        names = [c.value for c in CLASS_ORDER]
        width = max(len(n) for n in names) + 2
        cell = 16
        lines = []
        for key in self.raw:
            r, a = self.raw[key], self.augmented[key]
            lines.append(f"{key.upper()} SCORING STATISTICS (raw [PCA-augmented])")
            lines.append(" " * width + "".join(f"{h:>{cell}}" for h in ("Precision", "Recall", "F1-score", "dF1")))
            for i, n in enumerate(names):
                cells = (
                    bracket(r.precision[i], a.precision[i]),
                    bracket(r.recall[i], a.recall[i]),
                    bracket(r.f1[i], a.f1[i]),
                    f"{self.delta_f1[key][i]:+.2f}",
                )
                lines.append(f"{n:<{width}}" + "".join(f"{c:>{cell}}" for c in cells))
            lines.append("")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            key: {
                "raw_f1": list(self.raw[key].f1),
                "augmented_f1": list(self.augmented[key].f1),
                "delta_f1": list(self.delta_f1[key]),
            }
            for key in self.raw
        }


def _scores_of(report) -> ClassScores:
    return report.scores if isinstance(report, EvalReport) else report


def compare_augmented(reports_raw: Mapping[str, EvalReport], reports_pca: Mapping[str, EvalReport]) -> DeltaTable:
    if set(reports_raw) != set(reports_pca):
        raise KeyMismatch(f"classifier sets differ: {sorted(reports_raw)} vs {sorted(reports_pca)}")
    raw = {k: _scores_of(reports_raw[k]) for k in reports_raw}
    aug = {k: _scores_of(reports_pca[k]) for k in reports_raw}
    delta = {k: tuple(a - r for r, a in zip(raw[k].f1, aug[k].f1)) for k in raw}
    return DeltaTable(raw, aug, delta)


def format_grid_table(result: GridResult) -> Iterable[str]:
    for params, mean, _ in result.table:
        yield f"{mean:.4f}  {params_to_dict(params)}"
