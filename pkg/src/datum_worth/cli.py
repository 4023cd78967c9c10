"""Command-line pipeline: split, value, curve, audit, chi2, heatmap.

Conventions shared by every subcommand:

* exit code 0 on success, 2 on domain/validation errors, 1 on I/O errors;
* ``--seed`` falls back to the ``DATUM_WORTH_SEED`` environment variable,
  then to 0;
* a run manifest (inputs with digests, resolved flags, timestamps, emitted
  artifacts) is written beside the primary output;
* identical inputs, flags, and seed produce byte-identical artifacts,
  manifest timestamps aside.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import report
from .data import Metric
from .errors import IoError, ValidationError
from .evaluation import (
    Direction,
    cumulative_mislabel_curve,
    rank_points,
    removal_curve,
)
from .heatmap import compute_heatmap, normalize_heatmap
from .ingest import (
    SplitSpec,
    load_dataset,
    load_flags,
    load_stack,
    load_table,
    load_valuation,
    load_weights,
    save_audit,
    save_chi_square,
    save_dataset,
    save_heatmap_csv,
    save_heatmap_pgm,
    save_removal_curve,
    save_valuation,
    stratified_split,
)
from .learner import LearnerConfig
from .shapley import ValuationConfig, ValuationMethod, run_valuation
from .stats import chi_square_test


def _default_seed() -> int:
    return int(os.environ.get("DATUM_WORTH_SEED", "0"))


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    command: str,
    args: argparse.Namespace,
    inputs: list[str],
    artifacts: list[str],
    started: str,
    manifest_path: Path,
) -> None:
    config = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k not in ("func", "command")
    }
    doc = {
        "schema_version": 1,
        "command": command,
        "config": config,
        "inputs": [{"path": p, "sha256": _sha256(p)} for p in inputs],
        "seed": getattr(args, "seed", None),
        "started_at": started,
        "finished_at": _utcnow(),
        "artifacts": artifacts,
    }
    manifest_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _learner_from_args(args: argparse.Namespace) -> LearnerConfig:
    return LearnerConfig(
        learning_rate=args.learning_rate,
        iterations=args.iterations,
        l2_penalty=args.l2_penalty,
        fit_intercept=not args.no_intercept,
    )


def _add_learner_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("learner")
    group.add_argument("--learning-rate", type=float, default=0.1)
    group.add_argument("--iterations", type=int, default=500)
    group.add_argument("--l2-penalty", type=float, default=0.0)
    group.add_argument("--no-intercept", action="store_true")


def _add_seed_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="RNG seed (default: $DATUM_WORTH_SEED, else 0)",
    )


# --------------------------------------------------------------------------
# subcommands

def _cmd_split(args: argparse.Namespace) -> int:
    started = _utcnow()
    pool = load_dataset(args.pool)
    spec = SplitSpec(
        train_size=args.train_size,
        train_positives=args.train_pos,
        validation_size=args.val_size,
        validation_positives=args.val_pos,
        test_size=args.test_size,
        test_positives=args.test_pos,
        seed=args.seed,
    )
    split = stratified_split(pool, spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "train": out_dir / "train.csv",
        "validation": out_dir / "val.csv",
        "test": out_dir / "test.csv",
    }
    save_dataset(split.train, paths["train"])
    save_dataset(split.validation, paths["validation"])
    save_dataset(split.test, paths["test"])
    for name, part in (("train", split.train), ("validation", split.validation), ("test", split.test)):
        _, pos = part.class_counts()
        print(f"{name}: {part.n} points, {pos} positive -> {paths[name]}")
    _write_manifest(
        "split", args, [args.pool], [str(p) for p in paths.values()],
        started, out_dir / "manifest.json",
    )
    return 0


def _cmd_value(args: argparse.Namespace) -> int:
    started = _utcnow()
    train_set = load_dataset(args.train)
    validation = load_dataset(args.validation)
    config = ValuationConfig(
        method=ValuationMethod(args.method),
        metric=Metric(args.metric),
        truncation_tolerance=args.truncation_tolerance,
        convergence_threshold=args.convergence_threshold,
        convergence_window=args.convergence_window,
        min_permutations=args.min_permutations,
        max_permutations=args.max_permutations,
        seed=args.seed,
        g_learning_rate=args.g_learning_rate,
        learner=_learner_from_args(args),
        workers=args.workers,
    )
    result = run_valuation(train_set, validation, config)
    save_valuation(result, args.out)
    artifacts = [args.out]
    if args.plot:
        report.save_figure(report.value_histogram_figure(result), args.plot)
        artifacts.append(args.plot)
    negative = sum(1 for v in result.values.values() if v < 0)
    print(
        f"{result.method.value}: {len(result.values)} values, "
        f"{negative} negative, full_score={result.full_score:.6f}, "
        f"permutations={result.permutations_used}, converged={result.converged}"
    )
    _write_manifest(
        "value", args, [args.train, args.validation], artifacts,
        started, Path(args.out + ".manifest.json"),
    )
    return 0


def _cmd_curve(args: argparse.Namespace) -> int:
    started = _utcnow()
    train_set = load_dataset(args.train)
    eval_set = load_dataset(args.eval)
    result = load_valuation(args.valuation)
    ranking = rank_points(result, Direction(args.direction), seed=args.seed)
    metrics = (Metric.ACCURACY, Metric.PRECISION, Metric.RECALL)
    curve = removal_curve(
        train_set,
        eval_set,
        ranking,
        step_fraction=args.step,
        learner=_learner_from_args(args),
        metrics=metrics,
        max_fraction=args.max_fraction,
        eval_set_label=args.eval_label,
    )
    save_removal_curve(curve, args.step, args.out)
    artifacts = [args.out]
    if args.plot:
        report.save_figure(report.removal_curve_figure(curve), args.plot)
        artifacts.append(args.plot)
    header = f"{'removed':>9}  " + "  ".join(f"{m.value:>9}" for m in metrics)
    print(header)
    for i, fraction in enumerate(curve.fractions):
        cells = "  ".join(f"{curve.scores[m][i]:9.4f}" for m in metrics)
        print(f"{fraction:8.1%}  {cells}")
    _write_manifest(
        "curve", args, [args.train, args.eval, args.valuation], artifacts,
        started, Path(args.out + ".manifest.json"),
    )
    return 0


def _cmd_audit(args: argparse.Namespace) -> int:
    started = _utcnow()
    result = load_valuation(args.valuation)
    flags = load_flags(args.flags)
    n = len(result.values)
    if args.k > n:
        raise ValidationError(f"k = {args.k} exceeds the {n} valued points")
    descending = rank_points(result, Direction.MOST_VALUABLE_FIRST)
    ascending = rank_points(result, Direction.LEAST_VALUABLE_FIRST)
    randomized = rank_points(result, Direction.RANDOM, seed=args.seed)
    curves = {
        "descending": cumulative_mislabel_curve(descending, flags),
        "ascending": cumulative_mislabel_curve(ascending, flags),
        "random": cumulative_mislabel_curve(randomized, flags),
    }
    k = args.k
    total = curves["descending"][-1]
    doc = {
        "k": k,
        "seed": args.seed,
        "n": n,
        "curves": {name: counts[: k + 1] for name, counts in curves.items()},
        "summary": {
            "top_k_flagged": curves["descending"][k],
            "bottom_k_flagged": curves["ascending"][k],
            "random_k_flagged": curves["random"][k],
            "total_flagged": total,
            "flagged_rate": total / n if n else 0.0,
        },
    }
    save_audit(doc, args.out)
    artifacts = [args.out]
    if args.plot:
        fig = report.mislabel_curves_figure(
            {name: counts[: k + 1] for name, counts in curves.items()}
        )
        report.save_figure(fig, args.plot)
        artifacts.append(args.plot)
    s = doc["summary"]
    print(
        f"flagged in top-{k}: {s['top_k_flagged']}, "
        f"bottom-{k}: {s['bottom_k_flagged']}, "
        f"random-{k}: {s['random_k_flagged']} "
        f"(total {total}/{n})"
    )
    _write_manifest(
        "audit", args, [args.valuation, args.flags], artifacts,
        started, Path(args.out + ".manifest.json"),
    )
    return 0


def _parse_indices(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(c) for c in text.split(",") if c.strip() != ""]
    except ValueError:
        raise ValidationError(f"bad index list {text!r}") from None


def _cmd_chi2(args: argparse.Namespace) -> int:
    started = _utcnow()
    table = load_table(args.table)
    rows = _parse_indices(args.rows)
    cols = _parse_indices(args.cols)
    if rows is not None or cols is not None:
        table = table.select(rows, cols)
    result = chi_square_test(table)
    artifacts = []
    if args.out:
        save_chi_square(result, args.out)
        artifacts.append(args.out)
    print(
        f"chi2 = {result.statistic:.6g}, dof = {result.dof}, "
        f"p = {result.p_value:.6g}"
    )
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.out:
        _write_manifest(
            "chi2", args, [args.table], artifacts,
            started, Path(args.out + ".manifest.json"),
        )
    return 0


def _cmd_heatmap(args: argparse.Namespace) -> int:
    started = _utcnow()
    stack = load_stack(args.stack)
    weights = load_weights(args.weights)
    heatmap = compute_heatmap(stack, weights)
    if args.normalize:
        heatmap = normalize_heatmap(heatmap)
    artifacts = []
    save_heatmap_csv(heatmap, args.out_csv)
    artifacts.append(args.out_csv)
    if args.out_pgm:
        save_heatmap_pgm(heatmap, args.out_pgm)
        artifacts.append(args.out_pgm)
    if args.plot:
        report.save_figure(report.heatmap_figure(heatmap), args.plot)
        artifacts.append(args.plot)
    h, w = heatmap.grid.shape
    print(f"heatmap {h}x{w} (normalized={heatmap.normalized}) -> {args.out_csv}")
    _write_manifest(
        "heatmap", args, [args.stack, args.weights], artifacts,
        started, Path(args.out_csv + ".manifest.json"),
    )
    return 0


# --------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="datum-worth",
        description="Training-data valuation and dataset auditing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="stratified train/validation/test split")
    p.add_argument("pool", help="pool dataset CSV")
    p.add_argument("--train-size", type=int, required=True)
    p.add_argument("--train-pos", type=int, required=True)
    p.add_argument("--val-size", type=int, required=True)
    p.add_argument("--val-pos", type=int, required=True)
    p.add_argument("--test-size", type=int, required=True)
    p.add_argument("--test-pos", type=int, required=True)
    _add_seed_flag(p)
    p.add_argument("--out-dir", default=".", help="directory for the three CSVs")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("value", help="compute per-point data values")
    p.add_argument("train", help="training dataset CSV")
    p.add_argument("validation", help="validation dataset CSV")
    p.add_argument(
        "--method",
        choices=[m.value for m in ValuationMethod],
        default=ValuationMethod.TMC.value,
    )
    p.add_argument(
        "--metric",
        choices=[m.value for m in Metric],
        default=Metric.ACCURACY.value,
    )
    p.add_argument("--truncation-tolerance", type=float, default=0.01)
    p.add_argument("--convergence-threshold", type=float, default=0.05)
    p.add_argument("--convergence-window", type=int, default=100)
    p.add_argument("--min-permutations", type=int, default=100)
    p.add_argument("--max-permutations", type=int, default=10_000)
    p.add_argument("--g-learning-rate", type=float, default=0.1)
    p.add_argument("--workers", type=int, default=1)
    _add_seed_flag(p)
    _add_learner_flags(p)
    p.add_argument("--out", required=True, help="valuation JSON path")
    p.add_argument("--plot", default=None, help="optional value-histogram PNG")
    p.set_defaults(func=_cmd_value)

    p = sub.add_parser("curve", help="removal-curve experiment")
    p.add_argument("train", help="training dataset CSV")
    p.add_argument("eval", help="evaluation dataset CSV")
    p.add_argument("valuation", help="valuation JSON from the value command")
    p.add_argument(
        "--direction",
        choices=[d.value for d in Direction],
        default=Direction.LEAST_VALUABLE_FIRST.value,
    )
    p.add_argument("--step", type=float, default=0.01, help="removal step fraction")
    p.add_argument("--max-fraction", type=float, default=1.0)
    p.add_argument("--eval-label", choices=["validation", "test"], default="test")
    _add_seed_flag(p)
    _add_learner_flags(p)
    p.add_argument("--out", required=True, help="curve JSON path")
    p.add_argument("--plot", default=None, help="optional curve PNG")
    p.set_defaults(func=_cmd_curve)

    p = sub.add_parser("audit", help="mislabel audit against known flags")
    p.add_argument("valuation", help="valuation JSON")
    p.add_argument("flags", help="CSV of id,mislabeled rows")
    p.add_argument("--k", type=int, default=100, help="audit group size")
    _add_seed_flag(p)
    p.add_argument("--out", required=True, help="audit JSON path")
    p.add_argument("--plot", default=None, help="optional cumulative-curve PNG")
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("chi2", help="chi-square test on a contingency table")
    p.add_argument("table", help="contingency table CSV")
    p.add_argument("--rows", default=None, help="comma-separated row indices")
    p.add_argument("--cols", default=None, help="comma-separated column indices")
    p.add_argument("--out", default=None, help="result JSON path")
    p.set_defaults(func=_cmd_chi2)

    p = sub.add_parser("heatmap", help="weighted-sum activation heatmap")
    p.add_argument("stack", help="feature-map stack (CSV or binary container)")
    p.add_argument("weights", help="class-weight CSV")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-pgm", default=None)
    p.add_argument("--plot", default=None, help="optional heatmap PNG")
    p.set_defaults(func=_cmd_heatmap)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and hasattr(args, "seed"):
        args.seed = _default_seed()
    try:
        return args.func(args)
    except IoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
