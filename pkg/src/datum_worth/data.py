"""Core domain types: datasets, metrics, splits.

A ``Dataset`` is an immutable bundle of string ids, a float64 feature
matrix, and binary labels. Construction is cheap and unchecked; call
``validate_dataset`` (or build through ``Dataset.from_arrays``) to enforce
the invariants. Validation never repairs anything: every violation raises.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateId,
    NonBinaryLabel,
    NonFiniteFeature,
)


class Metric(Enum):
    ACCURACY = "accuracy"
    PRECISION = "precision"
    RECALL = "recall"


@dataclass(frozen=True)
class Dataset:
    """ids, n x d feature matrix, and {0,1} labels for n points."""

    ids: tuple[str, ...]
    features: np.ndarray
    labels: np.ndarray

    @classmethod
    def from_arrays(
        cls,
        ids: Sequence[str],
        features: Iterable,
        labels: Iterable,
    ) -> "Dataset":
        """Coerce raw sequences to canonical dtypes and validate."""
        feats = np.asarray(features, dtype=np.float64)
        if feats.ndim == 1:
            feats = feats.reshape(-1, 1)
        labs = np.asarray(labels)
        ds = cls(ids=tuple(str(i) for i in ids), features=feats, labels=labs)
        return validate_dataset(ds)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return int(self.features.shape[1]) if self.features.ndim == 2 else 0

    def take(self, indices: Sequence[int]) -> "Dataset":
        """Sub-dataset of the given row indices, in the given order."""
        idx = list(indices)
        return Dataset(
            ids=tuple(self.ids[i] for i in idx),
            features=self.features[idx] if idx else self.features[:0],
            labels=self.labels[idx] if idx else self.labels[:0],
        )

    def without_ids(self, drop: Iterable[str]) -> "Dataset":
        dropped = set(drop)
        return self.take([i for i, pid in enumerate(self.ids) if pid not in dropped])

    def index_of(self) -> dict[str, int]:
        return {pid: i for i, pid in enumerate(self.ids)}

    def class_counts(self) -> tuple[int, int]:
        """(negatives, positives)."""
        pos = int(np.sum(self.labels == 1))
        return self.n - pos, pos


def validate_dataset(raw: Dataset) -> Dataset:
    """Check every Dataset invariant; return the dataset unchanged if all hold.

    Raises:
        DimensionMismatch: ragged features or id/label length mismatch.
        DuplicateId: repeated id (the message names it).
        NonFiniteFeature: NaN or infinity in a feature row (names the id).
        NonBinaryLabel: label outside {0, 1} (names the row).
    """
    feats = raw.features
    if feats.ndim != 2:
        raise DimensionMismatch(
            f"features must be a 2-D matrix, got ndim={feats.ndim}"
        )
    n, d = feats.shape
    if len(raw.ids) != n:
        raise DimensionMismatch(
            f"{len(raw.ids)} ids for {n} feature rows"
        )
    if len(raw.labels) != n:
        raise DimensionMismatch(
            f"{len(raw.labels)} labels for {n} feature rows"
        )
    if n > 0 and d < 1:
        raise DimensionMismatch("feature dimension must be >= 1")

    seen: set[str] = set()
    for pid in raw.ids:
        if pid in seen:
            raise DuplicateId(f"duplicate id {pid!r}")
        seen.add(pid)

    if n:
        finite_rows = np.isfinite(feats).all(axis=1)
        if not finite_rows.all():
            row = int(np.flatnonzero(~finite_rows)[0])
            raise NonFiniteFeature(
                f"non-finite feature in row {row} (id {raw.ids[row]!r})"
            )
        labs = np.asarray(raw.labels)
        ok = np.isin(labs, (0, 1))
        if not ok.all():
            row = int(np.flatnonzero(~ok)[0])
            raise NonBinaryLabel(
                f"label {labs[row]!r} at row {row} (id {raw.ids[row]!r}) is not 0/1"
            )

    if raw.labels.dtype != np.int64:
        object.__setattr__(raw, "labels", raw.labels.astype(np.int64))
    raw.features.flags.writeable = False
    raw.labels.flags.writeable = False
    return raw


@dataclass(frozen=True)
class Split:
    """Disjoint train / validation / test datasets of equal feature dimension."""

    train: Dataset
    validation: Dataset
    test: Dataset

    def __post_init__(self):
        parts = (self.train, self.validation, self.test)
        sets = [set(p.ids) for p in parts]
        for a in range(3):
            for b in range(a + 1, 3):
                common = sets[a] & sets[b]
                if common:
                    raise DuplicateId(
                        f"id {sorted(common)[0]!r} appears in two splits"
                    )
        dims = {p.dim for p in parts if p.n}
        if len(dims) > 1:
            raise DimensionMismatch(f"splits disagree on feature dimension: {dims}")
