"""Loading, splitting, and persistence.

File formats (all UTF-8, '.' decimal separator, no thousands separators):

* dataset CSV       header ``id,label,f0,...,f{d-1}``; one point per row.
* valuation JSON    ``{schema_version, method, seed, metric, full_score,
                    empty_score, permutations_used, converged,
                    values: [{id, value}]}``; floats round-trip exactly.
* curve JSON        ``{schema_version, ranking_source, direction, eval_set,
                    step_fraction, points: [{fraction, accuracy,
                    precision, recall}]}`` (absent metrics are null).
* table CSV         integer grid, optional header row and/or label column.
* stack CSV         header line ``K,h,w``, a line with the three values,
                    then K*h rows of w comma-separated reals.
* stack binary      magic ``DWFS``, u32 version=1, u32 K, u32 h, u32 w,
                    then K*h*w little-endian float64, row-major.
* weights CSV       one real per line (optional ``weight`` header).
* heatmap CSV       h rows of w comma-separated reals.
* heatmap PGM       plain P2, 8-bit; level = floor(value * 255) after
                    normalization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .data import Dataset, Metric, Split, validate_dataset
from .errors import (
    InsufficientClass,
    IoError,
    ParseError,
    SchemaError,
    ValidationError,
)
from .evaluation import Direction, Ranking, RankingSource, RemovalCurve
from .heatmap import ClassWeights, FeatureMapStack, Heatmap
from .rng import stream
from .shapley import ValuationMethod, ValuationResult
from .stats import ChiSquareResult, ContingencyTable

SCHEMA_VERSION = 1
_STACK_MAGIC = b"DWFS"


# --------------------------------------------------------------------------
# dataset CSV

def _read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _write_text(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_dataset(path: str | Path) -> Dataset:
    """Parse and validate a dataset CSV; dimension comes from the header."""
    lines = _read_text(path).splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) < 2 or header[0] != "id" or header[1] != "label":
        raise ParseError(f"{path}:1: header must start with 'id,label'")
    expected = [f"f{i}" for i in range(len(header) - 2)]
    if header[2:] != expected:
        raise ParseError(
            f"{path}:1: feature columns must be named f0..f{len(header) - 3}"
        )
    d = len(header) - 2
    if d < 1:
        raise ParseError(f"{path}:1: at least one feature column is required")
    ids: list[str] = []
    labels: list[int] = []
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != d + 2:
            raise ParseError(
                f"{path}:{lineno}: expected {d + 2} columns, got {len(cells)}"
            )
        ids.append(cells[0].strip())
        try:
            labels.append(int(cells[1]))
        except ValueError:
            raise ParseError(
                f"{path}:{lineno}: label {cells[1].strip()!r} is not an integer"
            ) from None
        try:
            rows.append([float(c) for c in cells[2:]])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: malformed feature value") from None
    features = np.array(rows, dtype=np.float64).reshape(len(ids), d)
    return validate_dataset(
        Dataset(ids=tuple(ids), features=features, labels=np.array(labels))
    )


def save_dataset(data: Dataset, path: str | Path) -> None:
    d = data.dim
    lines = ["id,label," + ",".join(f"f{i}" for i in range(d))]
    for i, pid in enumerate(data.ids):
        feats = ",".join(repr(float(v)) for v in data.features[i])
        lines.append(f"{pid},{int(data.labels[i])},{feats}")
    _write_text(path, "\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# stratified split

@dataclass(frozen=True)
class SplitSpec:
    """Exact per-split sizes and positive counts, plus the sampling seed."""

    train_size: int
    train_positives: int
    validation_size: int
    validation_positives: int
    test_size: int
    test_positives: int
    seed: int = 0

    def __post_init__(self):
        for name in ("train", "validation", "test"):
            size = getattr(self, f"{name}_size")
            pos = getattr(self, f"{name}_positives")
            if size < 1:
                raise ValidationError(f"{name}_size must be >= 1")
            if not 0 <= pos <= size:
                raise ValidationError(
                    f"{name}_positives must be between 0 and {name}_size"
                )


def stratified_split(pool: Dataset, spec: SplitSpec) -> Split:
    """Sample disjoint train/validation/test sets with exact class counts.

    Selection is uniform without replacement from the remaining pool, one
    split at a time in train, validation, test order, with independent
    RNG streams per split and class. Rows keep their pool order inside
    each split, so the output is a pure function of (pool order, spec).
    """
    pos_pool = [i for i, y in enumerate(pool.labels) if y == 1]
    neg_pool = [i for i, y in enumerate(pool.labels) if y == 0]
    parts: dict[str, Dataset] = {}
    for name in ("train", "validation", "test"):
        size = getattr(spec, f"{name}_size")
        pos_count = getattr(spec, f"{name}_positives")
        neg_count = size - pos_count
        if pos_count > len(pos_pool):
            raise InsufficientClass(
                f"{name}: need {pos_count} positives, {len(pos_pool)} remain"
            )
        if neg_count > len(neg_pool):
            raise InsufficientClass(
                f"{name}: need {neg_count} negatives, {len(neg_pool)} remain"
            )
        chosen_pos = stream(spec.seed, f"{name}/pos").sample(pos_pool, pos_count)
        chosen_neg = stream(spec.seed, f"{name}/neg").sample(neg_pool, neg_count)
        chosen = sorted(chosen_pos + chosen_neg)
        parts[name] = pool.take(chosen)
        taken = set(chosen)
        pos_pool = [i for i in pos_pool if i not in taken]
        neg_pool = [i for i in neg_pool if i not in taken]
    return Split(train=parts["train"], validation=parts["validation"], test=parts["test"])


# --------------------------------------------------------------------------
# valuation JSON

def _load_json(path: str | Path) -> dict:
    text = _read_text(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: unsupported schema_version {doc.get('schema_version')!r}"
        )
    return doc


def save_valuation(result: ValuationResult, path: str | Path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "method": result.method.value,
        "seed": result.seed,
        "metric": result.metric.value,
        "full_score": result.full_score,
        "empty_score": result.empty_score,
        "permutations_used": result.permutations_used,
        "converged": result.converged,
        "values": [{"id": pid, "value": v} for pid, v in result.values.items()],
    }
    _write_text(path, json.dumps(doc, indent=2) + "\n")


def load_valuation(path: str | Path) -> ValuationResult:
    doc = _load_json(path)
    try:
        return ValuationResult(
            method=ValuationMethod(doc["method"]),
            metric=Metric(doc["metric"]),
            values={entry["id"]: float(entry["value"]) for entry in doc["values"]},
            permutations_used=int(doc["permutations_used"]),
            converged=bool(doc["converged"]),
            full_score=float(doc["full_score"]),
            empty_score=float(doc["empty_score"]),
            seed=int(doc["seed"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed valuation document: {exc}") from exc


# --------------------------------------------------------------------------
# removal-curve JSON

def save_removal_curve(curve: RemovalCurve, step_fraction: float, path: str | Path) -> None:
    points = []
    for i, fraction in enumerate(curve.fractions):
        point: dict[str, float | None] = {"fraction": fraction}
        for metric in Metric:
            series = curve.scores.get(metric)
            point[metric.value] = series[i] if series is not None else None
        points.append(point)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "ranking_source": curve.ranking.source.value,
        "direction": curve.ranking.direction.value,
        "eval_set": curve.eval_set_label,
        "step_fraction": step_fraction,
        "points": points,
    }
    _write_text(path, json.dumps(doc, indent=2) + "\n")


def load_removal_curve(path: str | Path) -> RemovalCurve:
    doc = _load_json(path)
    try:
        points = doc["points"]
        fractions = tuple(float(p["fraction"]) for p in points)
        scores = {}
        for metric in Metric:
            series = [p.get(metric.value) for p in points]
            if all(v is not None for v in series):
                scores[metric] = tuple(float(v) for v in series)
        ranking = Ranking(
            order=(),
            direction=Direction(doc["direction"]),
            source=RankingSource(doc["ranking_source"]),
        )
        return RemovalCurve(
            fractions=fractions,
            scores=scores,
            ranking=ranking,
            eval_set_label=str(doc["eval_set"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed curve document: {exc}") from exc


# --------------------------------------------------------------------------
# mislabel flags CSV and audit JSON

_TRUE = {"1", "true", "yes"}
_FALSE = {"0", "false", "no"}


def load_flags(path: str | Path) -> dict[str, bool]:
    """CSV of ``id,mislabeled`` rows (header optional)."""
    flags: dict[str, bool] = {}
    lines = _read_text(path).splitlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 2:
            raise ParseError(f"{path}:{lineno}: expected 'id,flag'")
        if lineno == 1 and cells[1].lower() not in _TRUE | _FALSE:
            continue  # header row
        value = cells[1].lower()
        if value not in _TRUE | _FALSE:
            raise ParseError(f"{path}:{lineno}: flag {cells[1]!r} is not boolean")
        if cells[0] in flags:
            raise ParseError(f"{path}:{lineno}: duplicate id {cells[0]!r}")
        flags[cells[0]] = value in _TRUE
    if not flags:
        raise ParseError(f"{path}: no flag rows")
    return flags


def save_audit(doc: Mapping, path: str | Path) -> None:
    _write_text(path, json.dumps({"schema_version": SCHEMA_VERSION, **doc}, indent=2) + "\n")


# --------------------------------------------------------------------------
# contingency-table CSV and chi-square JSON

def _is_int(cell: str) -> bool:
    try:
        int(cell)
        return True
    except ValueError:
        return False


def load_table(path: str | Path) -> ContingencyTable:
    """Integer grid with optional header row and optional label column."""
    lines = [ln for ln in _read_text(path).splitlines() if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty table")
    grid = [[c.strip() for c in ln.split(",")] for ln in lines]
    col_labels = None
    if not all(_is_int(c) for c in grid[0][1:]):
        col_labels = grid[0]
        grid = grid[1:]
        if not grid:
            raise ParseError(f"{path}: header but no data rows")
    row_labels = None
    if any(not _is_int(row[0]) for row in grid):
        row_labels = [row[0] for row in grid]
        grid = [row[1:] for row in grid]
        if col_labels is not None and len(col_labels) == len(grid[0]) + 1:
            col_labels = col_labels[1:]
    try:
        counts = [[int(c) for c in row] for row in grid]
    except ValueError:
        raise ParseError(f"{path}: non-integer count in table body") from None
    widths = {len(row) for row in counts}
    if len(widths) != 1:
        raise ParseError(f"{path}: ragged table rows")
    return ContingencyTable.from_rows(counts, row_labels, col_labels)


def save_chi_square(result: ChiSquareResult, path: str | Path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "statistic": result.statistic,
        "dof": result.dof,
        "p_value": result.p_value,
        "warnings": list(result.warnings),
    }
    _write_text(path, json.dumps(doc, indent=2) + "\n")


# --------------------------------------------------------------------------
# feature-map stacks, weights, heatmaps

def load_stack(path: str | Path) -> FeatureMapStack:
    """Sniff the binary container by magic, fall back to CSV."""
    try:
        with Path(path).open("rb") as fh:
            head = fh.read(4)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if head == _STACK_MAGIC:
        return load_stack_binary(path)
    return load_stack_csv(path)


def load_stack_csv(path: str | Path) -> FeatureMapStack:
    lines = [ln for ln in _read_text(path).splitlines() if ln.strip()]
    if len(lines) < 2 or [c.strip() for c in lines[0].split(",")] != ["K", "h", "w"]:
        raise ParseError(f"{path}:1: stack CSV must begin with a 'K,h,w' header")
    try:
        k, h, w = (int(c) for c in lines[1].split(","))
    except ValueError:
        raise ParseError(f"{path}:2: expected three integer dimensions") from None
    body = lines[2:]
    if len(body) != k * h:
        raise ParseError(
            f"{path}: expected {k * h} map rows for K={k}, h={h}; got {len(body)}"
        )
    rows = []
    for lineno, line in enumerate(body, start=3):
        cells = line.split(",")
        if len(cells) != w:
            raise ParseError(f"{path}:{lineno}: expected {w} columns")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: malformed real value") from None
    maps = np.array(rows, dtype=np.float64).reshape(k, h, w)
    return FeatureMapStack.from_array(maps, metadata=str(path))


def save_stack_csv(stack: FeatureMapStack, path: str | Path) -> None:
    k, (h, w) = stack.k, stack.shape
    lines = ["K,h,w", f"{k},{h},{w}"]
    flat = stack.maps.reshape(k * h, w)
    lines.extend(",".join(repr(float(v)) for v in row) for row in flat)
    _write_text(path, "\n".join(lines) + "\n")


def load_stack_binary(path: str | Path) -> FeatureMapStack:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if raw[:4] != _STACK_MAGIC:
        raise ParseError(f"{path}: missing stack magic bytes")
    header = np.frombuffer(raw[4:20], dtype="<u4")
    if len(header) != 4:
        raise ParseError(f"{path}: truncated stack header")
    version, k, h, w = (int(v) for v in header)
    if version != 1:
        raise SchemaError(f"{path}: unsupported stack container version {version}")
    payload = np.frombuffer(raw[20:], dtype="<f8")
    if len(payload) != k * h * w:
        raise ParseError(
            f"{path}: expected {k * h * w} float64 values, found {len(payload)}"
        )
    return FeatureMapStack.from_array(
        payload.reshape(k, h, w).astype(np.float64), metadata=str(path)
    )


def save_stack_binary(stack: FeatureMapStack, path: str | Path) -> None:
    k, (h, w) = stack.k, stack.shape
    header = np.array([1, k, h, w], dtype="<u4").tobytes()
    payload = stack.maps.astype("<f8").tobytes()
    try:
        Path(path).write_bytes(_STACK_MAGIC + header + payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_weights(path: str | Path) -> ClassWeights:
    values = []
    lines = _read_text(path).splitlines()
    for lineno, line in enumerate(lines, start=1):
        cell = line.strip()
        if not cell:
            continue
        if lineno == 1 and cell.lower() == "weight":
            continue
        try:
            values.append(float(cell))
        except ValueError:
            raise ParseError(f"{path}:{lineno}: malformed weight {cell!r}") from None
    if not values:
        raise ParseError(f"{path}: no weights")
    return ClassWeights.from_array(values)


def save_heatmap_csv(heatmap: Heatmap, path: str | Path) -> None:
    lines = [",".join(repr(float(v)) for v in row) for row in heatmap.grid]
    _write_text(path, "\n".join(lines) + "\n")


def save_heatmap_pgm(heatmap: Heatmap, path: str | Path) -> None:
    """Plain (P2) PGM of the normalized grid; level = floor(value * 255)."""
    grid = heatmap.grid
    if not heatmap.normalized:
        from .heatmap import normalize_heatmap

        grid = normalize_heatmap(heatmap).grid
    levels = np.floor(grid * 255.0).astype(np.int64)
    levels = np.clip(levels, 0, 255)
    h, w = levels.shape
    lines = ["P2", f"{w} {h}", "255"]
    lines.extend(" ".join(str(v) for v in row) for row in levels)
    _write_text(path, "\n".join(lines) + "\n")
