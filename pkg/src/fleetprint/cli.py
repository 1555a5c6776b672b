"""Command-line entry point: ``fleetprint <subcommand> [flags]``.

Exit codes: 0 ok, 1 I/O or unreadable input, 2 usage, 3 degenerate data,
4 train/evaluate pipeline mismatch.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import ingest
from .classifiers.params import Variant, default_params, params_from_dict, params_to_dict
from .errors import (
    DegenerateData,
    EmptyRun,
    InsufficientData,
    InsufficientRows,
    InvalidConfig,
    InvalidParams,
    ModelFormatError,
    NComponentsTooLarge,
    ParseError,
    PipelineMismatch,
)
from .eval import format_grid_table
from .pca import pca_fit, pca_transform
from .pipeline import ModelBundle, train_bundle
from .sim import SimConfig, config_overrides_from_text, generate_corpus, parse_nodes
from .telemetry import CLASS_ORDER, AppLabel, apply_scaler, featurize, featurize_corpus, fit_scaler

log = logging.getLogger("fleetprint")

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_DEGENERATE, EXIT_MISMATCH = 0, 1, 2, 3, 4
SEED_ENV = "FLEETPRINT_SEED"


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _out_path(args, path: str | None) -> Path | None:
    if path is None or path == "-":
        return None
    p = Path(path)
    return p if p.is_absolute() else Path(args.output_dir) / p


def _emit(args, text_lines: list[str], machine: dict) -> None:
    if args.format == "machine":
        print(json.dumps(machine, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _flag_line(args) -> str:
    shown = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    line = "# flags: " + " ".join(f"{k}={v}" for k, v in shown.items())
    if args.timestamps:
        line += f"\n# generated: {_dt.datetime.now(_dt.timezone.utc).isoformat()}"
    return line


def _load_corpus(path: str):
    runs = ingest.read_csv(sys.stdin if path == "-" else path)
    if not runs:
        raise EmptyRun(f"{path} holds no runs")
    return runs


# subcommands ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    overrides = {}
    if args.config:
        overrides = config_overrides_from_text(Path(args.config).read_text(encoding="utf-8"))
    for key, value in (
        ("duration", args.duration),
        ("sample_period", args.period),
        ("noise_std_fraction", args.noise),
    ):
        if value is not None:
            overrides[key] = value
    if args.nodes:
        overrides["nodes"] = parse_nodes(args.nodes)
    if "app" in overrides and not (args.all or args.app):
        apps = (AppLabel(overrides.pop("app")),)
    else:
        overrides.pop("app", None)
        if args.all:
            apps = CLASS_ORDER
        elif args.app:
            apps = (AppLabel(args.app.upper()),)
        else:
            raise UsageError("one of --app or --all is required")
    seed = overrides.pop("seed", None) if args.seed is None else args.seed
    overrides.pop("seed", None)
    seed = _default_seed() if seed is None else seed
    runs = generate_corpus(args.runs, seed, prefix=args.prefix, apps=apps, **overrides)
    dest = _out_path(args, args.out)
    if dest is None:
        ingest.write_csv(runs, sys.stdout)
        return EXIT_OK
    dest.parent.mkdir(parents=True, exist_ok=True)
    n_bytes = ingest.write_csv(runs, dest)
    rows = sum(len(featurize(r)) for r in runs)
    cfg = SimConfig(app=apps[0], seed=seed, **overrides)
    _emit(
        args,
        [f"runs: {len(runs)}", f"rows: {rows}", f"buckets per run: {cfg.n_samples}", f"wrote {n_bytes} bytes to {dest}"],
        {"runs": len(runs), "rows": rows, "buckets_per_run": cfg.n_samples, "bytes": n_bytes, "path": str(dest)},
    )
    return EXIT_OK


def cmd_featurize(args) -> int:
    runs = _load_corpus(args.input)
    dest = _out_path(args, args.out)
    out = open(dest, "w", encoding="utf-8", newline="") if dest else sys.stdout
    try:
        first = featurize(runs[0])
        out.write("run_id,bucket," + ",".join(first.feature_names) + ",label\n")
        for run in runs:
            ds = featurize(run)
            for b, row in zip(ds.buckets, ds.X):
                vals = ",".join(ingest.format_number(v) for v in row)
                out.write(f"{run.run_id},{b},{vals},{run.label.value}\n")
    finally:
        if dest:
            out.close()
    return EXIT_OK


def _parse_param_overrides(variant: Variant, pairs: list[str]):
    if not pairs:
        return None
    base = params_to_dict(default_params(variant))
    for pair in pairs:
        if "=" not in pair:
            raise UsageError(f"--param expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        if key not in base or key == "variant":
            raise UsageError(f"unknown {variant.value} parameter {key!r}")
        current = base[key]
        if isinstance(current, bool):
            base[key] = value.lower() in ("1", "true", "yes")
        elif isinstance(current, int):
            base[key] = int(value)
        elif isinstance(current, float):
            base[key] = float(value)
        elif isinstance(current, list):
            base[key] = [int(v) for v in value.split(",")]
        else:
            base[key] = value
    try:
        return params_from_dict(base).validate()
    except ValueError as exc:
        raise InvalidParams(str(exc)) from None


def _train(args, gridsearch: bool) -> int:
    variant = Variant(args.classifier)
    params = None if gridsearch else _parse_param_overrides(variant, args.param)
    runs = _load_corpus(args.train)
    train_raw = featurize_corpus(runs)
    bundle = train_bundle(
        train_raw,
        variant,
        params,
        pca_augment=args.pca_augment,
        gridsearch=gridsearch,
        folds=getattr(args, "folds", 5),
        seed=args.seed,
        sample_period=runs[0].sample_period,
    )
    dest = _out_path(args, args.model_out)
    dest.parent.mkdir(parents=True, exist_ok=True)
    bundle.save(dest)
    chosen = params_to_dict(bundle.params)
    lines = [f"classifier: {variant.value}", "params: " + " ".join(f"{k}={v}" for k, v in chosen.items() if k != "variant")]
    machine = {"classifier": variant.value, "params": chosen, "pca_augment": args.pca_augment, "model": str(dest)}
    if bundle.grid is not None:
        best_score = max(m for _, m, _ in bundle.grid.table)
        lines.insert(0, f"grid candidates: {bundle.grid.n_candidates}")
        lines.append(f"winner macro-F1 (cv): {best_score:.4f}")
        machine["grid"] = {"n_candidates": bundle.grid.n_candidates, "best_macro_f1": best_score}
        if args.verbose:
            lines.extend(format_grid_table(bundle.grid))
    lines.append(f"model written to {dest}")
    _emit(args, lines, machine)
    return EXIT_OK


def cmd_train(args) -> int:
    return _train(args, gridsearch=False)


def cmd_gridsearch(args) -> int:
    return _train(args, gridsearch=True)


def cmd_evaluate(args) -> int:
    bundle = ModelBundle.load(args.model)
    if bundle.pca_augment != args.pca_augment:
        raise PipelineMismatch(
            f"model was trained {'with' if bundle.pca_augment else 'without'} PCA augmentation; "
            f"--pca-augment is {'set' if args.pca_augment else 'unset'}"
        )
    runs = _load_corpus(args.validation)
    report = bundle.evaluate(featurize_corpus(runs))
    title = f"{bundle.params.variant.value.upper()} on {args.validation}" + (" (PCA-augmented)" if args.pca_augment else "")
    text = _flag_line(args) + "\n" + report.to_text(title)
    dest = _out_path(args, args.report_out)
    if dest is not None:
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(text, encoding="utf-8")
        dest.with_suffix(".json").write_text(report.to_json(), encoding="utf-8")
    if args.format == "machine":
        print(report.to_json(), end="")
    else:
        print(report.to_text(title), end="")
        print(f"accuracy: {report.accuracy:.2f}")
    return EXIT_OK


def cmd_classify(args) -> int:
    bundle = ModelBundle.load(args.model)
    if args.window < 1:
        raise UsageError("--window must be at least 1")
    stream = sys.stdin if args.stream in ("-", "stdin") else open(args.stream, "r", encoding="utf-8", newline="")
    errors = 0

    def report_error(err: ParseError):
        nonlocal errors
        errors += 1
        print(f"parse error: {err}", file=sys.stderr)

    try:
        for run_id, window in ingest.subscribe_stream(
            stream, args.window, bundle.nodes, bundle.sample_period, on_error=report_error
        ):
            proba = bundle.predict_proba(window).mean(axis=0)
            label = CLASS_ORDER[int(np.argmax(proba))]
            bucket = int(window.buckets[-1])
            if args.format == "machine":
                print(json.dumps({"run_id": run_id, "bucket": bucket, "proba": proba.tolist(), "label": label.value}))
            else:
                probs = ",".join(f"{p:.6f}" for p in proba)
                print(f"{run_id},{bucket},{probs},{label.value}")
            sys.stdout.flush()
    finally:
        if stream is not sys.stdin:
            stream.close()
    if errors:
        log.warning("%d malformed records skipped", errors)
    return EXIT_OK


def cmd_pca(args) -> int:
    runs = _load_corpus(args.train)
    raw = featurize_corpus(runs)
    train = apply_scaler(fit_scaler(raw), raw)
    model = pca_fit(train, args.components)
    ratios = model.explained_variance_ratio
    scores = pca_transform(model, train)
    dest = _out_path(args, args.scores_out)
    if dest is not None:
        dest.parent.mkdir(parents=True, exist_ok=True)
        labels = train.labels
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(f"component_{i + 1}" for i in range(model.n_components)) + ",label\n")
            for row, lab in zip(scores, labels):
                fh.write(",".join(ingest.format_number(v) for v in row) + f",{lab.value}\n")
    lines = [f"component {i + 1}: explained variance ratio {r:.4f}" for i, r in enumerate(ratios)]
    lines.append(f"total retained: {float(np.sum(ratios)):.4f}")
    if dest is not None:
        lines.append(f"scores ({len(scores)} rows) written to {dest}")
    _emit(args, lines, {"explained_variance_ratio": ratios.tolist(), "rows": len(scores)})
    return EXIT_OK


# parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"base seed (falls back to ${SEED_ENV}, then 0)")
    common.add_argument("--output-dir", default=".", help="directory for relative output paths")
    common.add_argument("--format", choices=("text", "machine"), default="text", help="stdout format")
    common.add_argument("--timestamps", action="store_true", help="embed generation time in text reports")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging and extra detail")

    parser = argparse.ArgumentParser(prog="fleetprint", description=__doc__, formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], formatter_class=fmt, help="generate a synthetic telemetry corpus")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--app", choices=[a.value for a in CLASS_ORDER] + [a.value.lower() for a in CLASS_ORDER])
    group.add_argument("--all", action="store_true", help="simulate every application")
    p.add_argument("--runs", type=int, default=10, help="runs per application")
    p.add_argument("--duration", type=float, default=None, help="seconds per run (default 600)")
    p.add_argument("--period", type=float, default=None, help="sample period in seconds (default 5)")
    p.add_argument("--noise", type=float, default=None, help="multiplicative noise std fraction (default 0.05)")
    p.add_argument("--nodes", default=None, help="comma-separated node names, master first (default digi-a,digi-b)")
    p.add_argument("--config", default=None, help="key=value SimConfig file; flags override it")
    p.add_argument("--prefix", default="run", help="run id prefix")
    p.add_argument("--out", default="corpus.csv", help="output CSV ('-' for stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("featurize", parents=[common], formatter_class=fmt, help="write per-bucket feature rows")
    p.add_argument("--input", required=True, help="corpus CSV ('-' for stdin)")
    p.add_argument("--out", default="-", help="output CSV ('-' for stdout)")
    p.set_defaults(func=cmd_featurize)

    for name, func, helptext in (
        ("train", cmd_train, "fit one classifier"),
        ("gridsearch", cmd_gridsearch, "grid-search a classifier, then fit the winner"),
    ):
        p = sub.add_parser(name, parents=[common], formatter_class=fmt, help=helptext)
        p.add_argument("--train", required=True, help="training corpus CSV")
        p.add_argument("--classifier", required=True, choices=[v.value for v in Variant])
        p.add_argument("--pca-augment", action="store_true", help="append the first two PCA scores as features")
        p.add_argument("--model-out", default="model.fpm", help="model bundle path")
        if name == "train":
            p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="override a hyperparameter")
        else:
            p.add_argument("--folds", type=int, default=5, help="stratified cross-validation folds")
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", parents=[common], formatter_class=fmt, help="score a model on a validation corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--validation", required=True, help="validation corpus CSV")
    p.add_argument("--pca-augment", action="store_true", help="must match the flag used at training time")
    p.add_argument("--report-out", default=None, help="text report path; a .json twin is written alongside")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("classify", parents=[common], formatter_class=fmt, help="classify a live record stream")
    p.add_argument("--model", required=True)
    p.add_argument("--stream", default="stdin", help="'stdin' or a file of newline-delimited records")
    p.add_argument("--window", type=int, default=12, help="buckets averaged per decision")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("pca", parents=[common], formatter_class=fmt, help="explained variance and component scores")
    p.add_argument("--train", required=True, help="training corpus CSV")
    p.add_argument("--components", type=int, default=3)
    p.add_argument("--scores-out", default=None, help="CSV of per-row component scores with labels")
    p.set_defaults(func=cmd_pca)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.seed is None and args.command != "simulate":
            args.seed = _default_seed()
        return args.func(args)
    except BrokenPipeError:
        # downstream reader (e.g. `head`) went away; not an error for a filter
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK
    except (UsageError, InvalidConfig, InvalidParams, NComponentsTooLarge) as exc:
        print(f"fleetprint {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateData, EmptyRun, InsufficientData, InsufficientRows) as exc:
        print(f"fleetprint {args.command}: degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except PipelineMismatch as exc:
        print(f"fleetprint {args.command}: pipeline mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (OSError, ParseError, ModelFormatError, ValueError) as exc:
        print(f"fleetprint {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
