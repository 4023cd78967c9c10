"""Chi-square tests of independence on contingency tables.

The p-value is the upper tail of the chi-square distribution,
Q(dof/2, statistic/2), computed from scratch: series expansion of the
regularized lower incomplete gamma for x < a + 1, Lentz's continued
fraction for the upper function otherwise (the classic split, accurate to
well below 1e-10 absolute). No continuity correction is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTable, ValidationError

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 500


def _lower_gamma_series(a: float, x: float) -> float:
    """P(a, x) by series: converges fast for x < a + 1."""
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(_MAX_ITER):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_gamma_cf(a: float, x: float) -> float:
    """Q(a, x) by Lentz's continued fraction: converges fast for x >= a + 1."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_upper_gamma(a: float, x: float) -> float:
    """Q(a, x) = Gamma(a, x) / Gamma(a) for a > 0, x >= 0."""
    if a <= 0:
        raise ValidationError(f"shape parameter must be positive, got {a}")
    if x < 0:
        raise ValidationError(f"argument must be non-negative, got {x}")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return min(max(1.0 - _lower_gamma_series(a, x), 0.0), 1.0)
    return min(max(_upper_gamma_cf(a, x), 0.0), 1.0)


def chi_square_sf(statistic: float, dof: int) -> float:
    """Upper-tail probability of chi-square(dof) at ``statistic``."""
    if dof < 1:
        raise ValidationError(f"dof must be >= 1, got {dof}")
    return regularized_upper_gamma(dof / 2.0, statistic / 2.0)


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray
    row_labels: tuple[str, ...] = ()
    col_labels: tuple[str, ...] = ()

    @classmethod
    def from_rows(
        cls,
        rows,
        row_labels=None,
        col_labels=None,
    ) -> "ContingencyTable":
        counts = np.asarray(rows)
        if counts.ndim != 2:
            raise DegenerateTable("a contingency table must be two-dimensional")
        if not np.issubdtype(counts.dtype, np.integer):
            as_int = counts.astype(np.int64)
            if not np.array_equal(as_int, counts):
                raise ValidationError("contingency counts must be integers")
            counts = as_int
        if (counts < 0).any():
            raise ValidationError("contingency counts must be non-negative")
        r, c = counts.shape
        if r < 2 or c < 2:
            raise DegenerateTable(f"need at least a 2x2 table, got {r}x{c}")
        row_labels = tuple(row_labels) if row_labels else tuple(f"row{i}" for i in range(r))
        col_labels = tuple(col_labels) if col_labels else tuple(f"col{j}" for j in range(c))
        if len(row_labels) != r or len(col_labels) != c:
            raise ValidationError("label counts do not match the table shape")
        counts.flags.writeable = False
        return cls(counts=counts, row_labels=row_labels, col_labels=col_labels)

    def select(self, rows=None, cols=None) -> "ContingencyTable":
        """Sub-table of the chosen row/column indices (for pairwise tests)."""
        rows = list(rows) if rows is not None else list(range(self.counts.shape[0]))
        cols = list(cols) if cols is not None else list(range(self.counts.shape[1]))
        return ContingencyTable.from_rows(
            self.counts[np.ix_(rows, cols)],
            [self.row_labels[i] for i in rows],
            [self.col_labels[j] for j in cols],
        )


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    warnings: tuple[str, ...] = ()


def chi_square_test(table: ContingencyTable) -> ChiSquareResult:
    """Pearson chi-square test of independence, no continuity correction.

    Raises DegenerateTable when any row or column total is zero. Tables
    with an expected cell below 5 are accepted but carry a warning in the
    result (the usual small-sample caveat).
    """
    counts = table.counts.astype(np.float64)
    row_totals = counts.sum(axis=1)
    col_totals = counts.sum(axis=0)
    if (row_totals == 0).any():
        i = int(np.flatnonzero(row_totals == 0)[0])
        raise DegenerateTable(f"row {table.row_labels[i]!r} has zero total")
    if (col_totals == 0).any():
        j = int(np.flatnonzero(col_totals == 0)[0])
        raise DegenerateTable(f"column {table.col_labels[j]!r} has zero total")
    total = counts.sum()
    expected = np.outer(row_totals, col_totals) / total
    statistic = float(((counts - expected) ** 2 / expected).sum())
    r, c = counts.shape
    dof = (r - 1) * (c - 1)
    warnings = ()
    low = int((expected < 5).sum())
    if low:
        warnings = (f"{low} expected cell(s) below 5; p-value may be unreliable",)
    return ChiSquareResult(
        statistic=statistic,
        dof=dof,
        p_value=chi_square_sf(statistic, dof),
        warnings=warnings,
    )
