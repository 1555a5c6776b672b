#!/usr/bin/env python3
"""Export labeled PCA scores of a simulated training corpus for plotting.

Writes one CSV per component pair (1-2, 1-3, 2-3) with columns
``component_i,component_j,label``.
"""

import argparse
from itertools import combinations
from pathlib import Path

from fleetprint.ingest import format_number
from fleetprint.pca import pca_fit, pca_transform
from fleetprint.sim import generate_corpus
from fleetprint.telemetry import apply_scaler, featurize_corpus, fit_scaler


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=2016)
    p.add_argument("--out-dir", default="pca_scores")
    args = p.parse_args()

    raw = featurize_corpus(generate_corpus(args.runs, args.seed, prefix="train"))
    train = apply_scaler(fit_scaler(raw), raw)
    model = pca_fit(train, 3)
    scores = pca_transform(model, train)
    labels = [lab.value for lab in train.labels]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, j in combinations(range(3), 2):
        path = out / f"components_{i + 1}_{j + 1}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"component_{i + 1},component_{j + 1},label\n")
            for row, lab in zip(scores, labels):
                fh.write(f"{format_number(row[i])},{format_number(row[j])},{lab}\n")
        print(f"wrote {len(labels)} rows to {path}")
    print("explained variance ratio:", " ".join(f"{r:.4f}" for r in model.explained_variance_ratio))


if __name__ == "__main__":
    main()
