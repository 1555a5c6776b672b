"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line (also repeated in the pytest
terminal summary) before asserting.
"""

import time

import numpy as np

from fleetprint import classifiers as clf
from fleetprint.classifiers import DTParams, IndexKind, Kernel, MLPParams, SVMParams, Variant, in_table_space
from fleetprint.classifiers.knn import build_index
from fleetprint.classifiers.mlp import init_params, layer_sizes, loss_and_grads
from fleetprint.eval import ConfusionMatrix, GridSpec, compare_augmented, confusion, grid_search, scores
from fleetprint.ingest import format_csv, read_csv, stream_lines, subscribe_stream
from fleetprint.pca import augment, pca_fit
from fleetprint.pipeline import ModelBundle, run_suite, train_bundle
from fleetprint.sim import generate_corpus, train_validation_corpora
from fleetprint.telemetry import Dataset, apply_scaler, featurize, featurize_corpus, fit_scaler


def test_criterion_1_headline_accuracy(criterion):
    start = time.perf_counter()
    train_runs, val_runs = train_validation_corpora(10, seed=2016)
    train, val = featurize_corpus(train_runs), featurize_corpus(val_runs)
    bundle = train_bundle(train, "dt", DTParams(10))
    report = bundle.evaluate(val)
    elapsed = time.perf_counter() - start
    ok = report.accuracy > 0.90 and elapsed < 60
    criterion(
        1,
        ok,
        f"DT depth 10 validation accuracy {report.accuracy:.4f} (macro recall {report.scores.macro_recall:.4f}) "
        f"> 0.90 on {report.n_rows} rows, {elapsed:.1f}s including simulation",
    )
    assert ok


def test_criterion_2_grid_consistency(criterion):
    raw = featurize_corpus(generate_corpus(3, 42, prefix="grid", duration=180.0))
    train = apply_scaler(fit_scaler(raw), raw)
    expected = {"dt": 20, "knn": 80, "svm": 16}
    details, ok = [], True
    for variant, n in expected.items():
        first = grid_search(variant, GridSpec.table(variant), train, folds=5, seed=0)
        again = grid_search(variant, GridSpec.table(variant), train, folds=5, seed=0)
        good = first.n_candidates == n and in_table_space(first.best) and first == again
        ok &= good
        details.append(f"{variant}={first.n_candidates}")
    criterion(2, ok, f"candidates {' '.join(details)}; winners inside the search space and reproducible")
    assert ok


def test_criterion_3_metric_oracle(criterion):
    dt = scores(ConfusionMatrix.from_counts([[71, 0, 29], [0, 100, 0], [0, 0, 100]]))
    knn = scores(ConfusionMatrix.from_counts([[30, 0, 0], [0, 40, 0], [10, 0, 30]]))
    got_dt = tuple(round(float(v), 2) for v in (dt.precision[0], dt.recall[0], dt.f1[0]))
    got_knn = tuple(round(float(v), 2) for v in (knn.precision[0], knn.recall[0], knn.f1[0]))
    ok = got_dt == (1.0, 0.71, 0.83) and got_knn == (0.75, 1.0, 0.86)
    criterion(3, ok, f"DT CADO row p/r/f1 {got_dt}, kNN CADO row {got_knn}")
    assert ok


def test_criterion_4_normalization(criterion):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 200))
        t = rng.integers(0, 3, size=n)
        p = rng.integers(0, 3, size=n)
        cm = confusion(t, p)
        for row, empty in zip(cm.normalized, cm.empty_rows):
            if not empty:
                worst = max(worst, abs(row.sum() - 1.0))
    ok = worst <= 1e-9
    criterion(4, ok, f"max |row sum - 1| = {worst:.2e} over 1000 random label/prediction pairs")
    assert ok


def distinct_distance_points(rng, n=500, d=4):
    X = rng.uniform(-1, 1, size=(n, d))
    q = rng.uniform(-1.2, 1.2, size=d)
    d2 = ((X - q) ** 2).sum(axis=1)
    return X, q, len(np.unique(d2)) == n


def test_criterion_5_knn_backends(criterion):
    rng = np.random.default_rng(5)
    mismatches = trials = 0
    while trials < 100:
        X, _, _ = distinct_distance_points(rng)
        queries = rng.uniform(-1.2, 1.2, size=(10, X.shape[1]))
        d2 = ((X[None, :, :] - queries[:, None, :]) ** 2).sum(axis=2)
        if any(len(np.unique(row)) != len(X) for row in d2):
            continue
        trials += 1
        indexes = {kind: build_index(kind, X) for kind in IndexKind}
        for q in queries:
            for k in (1, 5, 20):
                sets = {kind: frozenset(idx.query(q, k)[0].tolist()) for kind, idx in indexes.items()}
                mismatches += len(set(sets.values())) != 1
    ok = mismatches == 0
    criterion(5, ok, f"brute/kd/ball neighbor sets identical for k in 1,5,20 over {trials} trials x 10 queries ({mismatches} mismatches)")
    assert ok


def test_criterion_6_mlp(criterion):
    rng = np.random.default_rng(6)
    X = rng.normal(size=(30, 20))
    data = Dataset(X, np.tile([0, 1, 2], 10), tuple(f"f{i}" for i in range(20)))
    shapes = clf.fit(MLPParams(epochs=1), data, seed=0).weight_shapes
    params = [(W, rng.normal(scale=0.1, size=b.shape)) for W, b in init_params(layer_sizes(20), rng)]
    Xg = rng.normal(size=(10, 20))
    Y = np.eye(3)[rng.integers(0, 3, size=10)]
    _, grads = loss_and_grads(params, Xg, Y)
    h, worst, checked = 1e-5, 0.0, 0
    for li, (W, b) in enumerate(params):
        for arr, g in ((W, grads[li][0]), (b, grads[li][1])):
            for idx in np.ndindex(arr.shape):
                old = arr[idx]
                arr[idx] = old + h
                up, _ = loss_and_grads(params, Xg, Y)
                arr[idx] = old - h
                down, _ = loss_and_grads(params, Xg, Y)
                arr[idx] = old
                num = (up - down) / (2 * h)
                worst = max(worst, abs(g[idx] - num) / max(abs(g[idx]), abs(num), 1e-6))
                checked += 1
    ok = shapes == [(20, 16), (16, 8), (8, 4), (4, 3)] and worst <= 1e-4
    criterion(6, ok, f"weights {shapes}; gradient check max relative error {worst:.2e} over {checked} parameters")
    assert ok


def separable(rng, n=60):
    """Standardized, linearly separable two-class data with margin >= 0.1 around a random hyperplane."""
    d = int(rng.integers(2, 6))
    while True:
        X = rng.standard_normal((n * 2, d))
        X = (X - X.mean(0)) / X.std(0)
        w = rng.standard_normal(d)
        w /= np.linalg.norm(w)
        b = rng.uniform(-0.5, 0.5)
        m = X @ w - b
        keep = np.abs(m) >= 0.1
        X, m = X[keep][:n], m[keep][:n]
        y = np.where(m > 0, 1, 0)
        if len(np.unique(y)) == 2 and len(y) >= 10:
            return X, y


def test_criterion_7_svm(criterion):
    separated = agree = 0
    for trial in range(100):
        X, y = separable(np.random.default_rng(trial))
        data = Dataset(X, y, tuple(f"f{i}" for i in range(X.shape[1])))
        linear = clf.predict(clf.fit(SVMParams(Kernel.LINEAR, c=1000.0), data), data)
        rbf = clf.predict(clf.fit(SVMParams(Kernel.RBF, gamma=1e-3, c=1000.0), data), data)
        separated += bool(np.all(linear == y))
        agree += bool(np.all(linear == rbf))
    ok = separated == 100 and agree >= 95
    criterion(7, ok, f"linear C=1000 separates {separated}/100; RBF gamma=1e-3 matches linear in {agree}/100 trials (need >= 95)")
    assert ok


def test_criterion_8_pca(standardized, criterion):
    t = np.linspace(-1, 2, 9)
    rank1 = pca_fit(np.outer(t, [2.0, -1.0, 0.5, 3.0]), 3).explained_variance_ratio
    s3, s15 = np.sqrt(3.0), np.sqrt(1.5)
    hand = pca_fit(np.array([[s3, 0], [-s3, 0], [0, s15], [0, -s15]]), 2).explained_variance_ratio
    train, _ = standardized
    model = pca_fit(train, 3)
    ortho = float(np.abs(model.components @ model.components.T - np.eye(3)).max())
    width = augment(model, train, 2).width
    ok = (
        abs(rank1[0] - 1.0) <= 1e-9
        and np.all(np.abs(hand - [2 / 3, 1 / 3]) <= 1e-9)
        and ortho <= 1e-8
        and train.width == 20
        and width == 22
    )
    criterion(
        8,
        ok,
        f"rank-1 ratio {rank1[0]:.12f}; diag(2,1) ratios ({hand[0]:.12f}, {hand[1]:.12f}); "
        f"orthonormality {ortho:.1e}; augmented width {train.width} -> {width}",
    )
    assert ok


def test_criterion_9_augmentation_effect(default_datasets, criterion):
    train, val = default_datasets
    raw = run_suite(train, val, pca_augment=False, seed=0)
    aug = run_suite(train, val, pca_augment=True, seed=0)
    table = compare_augmented(raw, aug)
    worst = table.max_abs_delta()
    per = " ".join(f"{k}={max(abs(d) for d in v):.3f}" for k, v in table.delta_f1.items())
    ok = worst <= 0.10 and set(table.delta_f1) == {v.value for v in Variant}
    criterion(9, ok, f"max per-class |dF1| raw vs PCA-augmented {worst:.3f} <= 0.10 ({per})")
    assert ok


def test_criterion_10_round_trips(default_corpora, default_datasets, tmp_path, criterion):
    train_runs, val_runs = default_corpora
    csv_path = tmp_path / "train.csv"
    csv_path.write_text(format_csv(train_runs), encoding="utf-8", newline="")
    csv_ok = read_csv(csv_path) == sorted(train_runs, key=lambda r: r.run_id)

    train, val = default_datasets
    bundle = train_bundle(train, "dt", DTParams(10))
    stream_ok = True
    for run in val_runs[::5]:
        streamed = np.array([bundle.predict(ds)[0] for _, ds in subscribe_stream(stream_lines([run], unlabeled=True), window=1)])
        stream_ok &= np.array_equal(streamed, bundle.predict(featurize(run)))

    save_ok = True
    for variant in Variant:
        params = MLPParams(epochs=20) if variant is Variant.MLP else None
        b = train_bundle(train, variant, params, pca_augment=variant in (Variant.DT, Variant.SVM), seed=1)
        path = tmp_path / f"{variant.value}.fpb"
        b.save(path)
        loaded = ModelBundle.load(path)
        save_ok &= np.array_equal(loaded.predict_proba(val), b.predict_proba(val))
        save_ok &= np.array_equal(loaded.predict(val), b.predict(val))
    ok = csv_ok and stream_ok and save_ok
    criterion(10, ok, f"CSV write/read identity {csv_ok}; stream==batch at window 1 {stream_ok}; save/load bit-identical {save_ok}")
    assert ok
