#!/usr/bin/env python3
"""Reproduce the classifier comparison: raw vs PCA-augmented features.

Simulates disjoint training and validation corpora, optionally grid-searches
each classifier on the training set, then prints per-classifier confusion
matrices and scoring tables plus the bracketed raw [augmented] comparison.

    python3 scripts/run_experiment.py --runs 10 --seed 2016 --gridsearch
"""

import argparse
import json
import logging
import time
from pathlib import Path

from fleetprint.classifiers import Variant
from fleetprint.eval import compare_augmented
from fleetprint.pca import pca_fit
from fleetprint.pipeline import train_bundle
from fleetprint.sim import train_validation_corpora
from fleetprint.telemetry import apply_scaler, featurize_corpus, fit_scaler


def parse_args():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--runs", type=int, default=10, help="runs per application in each corpus")
    p.add_argument("--duration", type=float, default=600.0)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=2016)
    p.add_argument("--classifiers", default="dt,knn,svm,mlp")
    p.add_argument("--gridsearch", action="store_true", help="pick hyperparameters by 5-fold CV on the training set")
    p.add_argument("--out", default=None, help="optional JSON summary path")
    p.add_argument("-v", "--verbose", action="store_true")
    return p.parse_args()


def main():
    args = parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    t0 = time.perf_counter()
    train_runs, val_runs = train_validation_corpora(args.runs, seed=args.seed, duration=args.duration, noise_std_fraction=args.noise)
    train, val = featurize_corpus(train_runs), featurize_corpus(val_runs)
    print(f"training rows {len(train)}, validation rows {len(val)}, features {train.width}")

    pca = pca_fit(apply_scaler(fit_scaler(train), train))
    ratios = ", ".join(f"{r:.2f}" for r in pca.explained_variance_ratio)
    print(f"explained variance ratio of the first three components: {ratios}\n")

    raw, aug, chosen = {}, {}, {}
    for name in args.classifiers.split(","):
        variant = Variant(name)
        for augmented, store in ((False, raw), (True, aug)):
            bundle = train_bundle(train, variant, pca_augment=augmented, gridsearch=args.gridsearch, seed=args.seed)
            store[variant.value] = bundle.evaluate(val)
            chosen.setdefault(variant.value, {})["pca" if augmented else "raw"] = store[variant.value].params
        print(raw[variant.value].to_text(f"{variant.value.upper()} (raw features) params={raw[variant.value].params}"))

    table = compare_augmented(raw, aug)
    print(table.to_text())
    print(f"largest per-class |dF1|: {table.max_abs_delta():.3f}")
    print(f"elapsed {time.perf_counter() - t0:.1f}s")
    if args.out:
        summary = {
            "args": vars(args),
            "explained_variance_ratio": pca.explained_variance_ratio.tolist(),
            "params": chosen,
            "raw": {k: r.to_dict() for k, r in raw.items()},
            "augmented": {k: r.to_dict() for k, r in aug.items()},
            "delta_f1": table.to_dict(),
        }
        Path(args.out).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
