"""Removal-curve experiments and mislabel audits on top of a valuation.

A ``Ranking`` fixes the order in which training points are removed (or
inspected); ``removal_curve`` retrains at each cumulative removal fraction
and records the chosen metrics; ``cumulative_mislabel_curve`` counts known
mislabels along a ranking prefix.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .data import Dataset, Metric
from .errors import MissingFlag, ValidationError
from .learner import LearnerConfig, score, train
from .rng import stream
from .shapley import ValuationMethod, ValuationResult, constant_score, empty_set_score


class Direction(Enum):
    MOST_VALUABLE_FIRST = "most"
    LEAST_VALUABLE_FIRST = "least"
    RANDOM = "random"


class RankingSource(Enum):
    EXACT = "exact"
    TMC = "tmc"
    G_SHAPLEY = "gshapley"
    LOO = "loo"
    RANDOM = "random"


_METHOD_TO_SOURCE = {
    ValuationMethod.EXACT: RankingSource.EXACT,
    ValuationMethod.TMC: RankingSource.TMC,
    ValuationMethod.G_SHAPLEY: RankingSource.G_SHAPLEY,
    ValuationMethod.LOO: RankingSource.LOO,
}


@dataclass(frozen=True)
class Ranking:
    order: tuple[str, ...]
    direction: Direction
    source: RankingSource


@dataclass(frozen=True)
class RemovalCurve:
    fractions: tuple[float, ...]
    scores: dict[Metric, tuple[float, ...]]
    ranking: Ranking
    eval_set_label: str


def rank_points(
    result: ValuationResult,
    direction: Direction,
    seed: int | None = None,
) -> Ranking:
    """Order training ids by value.

    Ties are broken by ascending id so a ranking is a pure function of the
    values. ``Direction.RANDOM`` ignores the values entirely and shuffles
    the (sorted) ids under ``seed``.
    """
    ids = sorted(result.values)
    if direction is Direction.RANDOM:
        if seed is None:
            raise ValidationError("a seed is required for a random ranking")
        rng = stream(seed, "ranking")
        rng.shuffle(ids)
        return Ranking(tuple(ids), direction, RankingSource.RANDOM)
    descending = direction is Direction.MOST_VALUABLE_FIRST
    ordered = sorted(
        ids,
        key=lambda pid: ((-result.values[pid]) if descending else result.values[pid], pid),
    )
    return Ranking(tuple(ordered), direction, _METHOD_TO_SOURCE[result.method])


def _degenerate_scores(
    retained: Dataset, eval_set: Dataset, metrics: Sequence[Metric]
) -> dict[Metric, float] | None:
    """Constant-predictor scores when the retained set is empty/single-class."""
    if retained.n == 0:
        return {m: empty_set_score(eval_set, m) for m in metrics}
    neg, pos = retained.class_counts()
    if neg == 0 or pos == 0:
        label = 1 if neg == 0 else 0
        return {m: constant_score(label, eval_set, m) for m in metrics}
    return None


def removal_curve(
    train_set: Dataset,
    eval_set: Dataset,
    ranking: Ranking,
    step_fraction: float = 0.01,
    learner: LearnerConfig | None = None,
    metrics: Sequence[Metric] = (Metric.ACCURACY,),
    max_fraction: float = 1.0,
    eval_set_label: str = "test",
) -> RemovalCurve:
    """Score the model as growing prefixes of ``ranking`` are removed.

    Step k removes the first floor(k * step_fraction * n) ids; the counts
    are recomputed from the full ranking each step so flooring never skips
    a point. The curve ends at the first step where the retained set is
    empty or single-class (that step's constant-predictor score is still
    recorded), or once the removal fraction passes ``max_fraction``.
    """
    if not 0 < step_fraction <= 1:
        raise ValidationError(f"step_fraction must be in (0, 1], got {step_fraction}")
    if eval_set.n == 0:
        raise ValidationError("evaluation set must be nonempty")
    if set(ranking.order) != set(train_set.ids):
        raise ValidationError("ranking does not cover the training set")
    if learner is None:
        learner = LearnerConfig()

    n = train_set.n
    index = train_set.index_of()
    fractions: list[float] = []
    series: dict[Metric, list[float]] = {m: [] for m in metrics}
    k = 0
    while True:
        removed = min(int(k * step_fraction * n), n)
        fraction = min(k * step_fraction, 1.0)
        retained = train_set.take(
            sorted(index[pid] for pid in ranking.order[removed:])
        )
        fractions.append(fraction)
        fallback = _degenerate_scores(retained, eval_set, metrics)
        if fallback is None:
            model = train(retained, learner)
            for m in metrics:
                series[m].append(score(model, eval_set, m))
        else:
            for m in metrics:
                series[m].append(fallback[m])
        if fallback is not None or fraction >= max_fraction or removed >= n:
            break
        k += 1

    return RemovalCurve(
        fractions=tuple(fractions),
        scores={m: tuple(v) for m, v in series.items()},
        ranking=ranking,
        eval_set_label=eval_set_label,
    )


def cumulative_mislabel_curve(
    ranking: Ranking, mislabel_flags: Mapping[str, bool]
) -> list[int]:
    """Entry k = number of flagged ids among the first k of the ranking."""
    missing = [pid for pid in ranking.order if pid not in mislabel_flags]
    if missing:
        raise MissingFlag(f"no mislabel flag for id {missing[0]!r}")
    counts = [0]
    for pid in ranking.order:
        counts.append(counts[-1] + (1 if mislabel_flags[pid] else 0))
    return counts


def flagged_in_prefix(ranking: Ranking, flags: Mapping[str, bool], k: int) -> int:
    """Number of flagged ids among the first k of the ranking."""
    if k > len(ranking.order):
        raise ValidationError(
            f"k = {k} exceeds the {len(ranking.order)} ranked points"
        )
    return cumulative_mislabel_curve(ranking, flags)[k]
