"""Training-data valuation.

Four value notions over a shared scoring contract:

* ``exact_shapley`` — direct enumeration of every subset of the rest of
  the data; each marginal contribution of point i against subset S is
  weighted by 1 / (n * C(n-1, |S|)). Feasible only for small n, and used
  as the ground truth the sampling estimators are tested against.
* ``tmc_shapley`` — truncated Monte Carlo permutation sampling. Each
  sampled permutation is scanned prefix by prefix; the j-th point's
  marginal is the prefix-score delta. Once the prefix score is within
  ``truncation_tolerance`` of the full-data score, every remaining point
  in that permutation is assigned a zero marginal without retraining.
* ``g_shapley`` — the same permutation scaffolding, but prefix scores come
  from a single model updated with one gradient step per arriving point
  instead of full retraining.
* ``loo_values`` — leave-one-out deltas, n + 1 retrains.

Scoring contract: V(S) is the validation score of a model trained on S.
V of the empty set is the score of the constant predictor of the
validation majority class (ties toward 0); V of a single-class subset is
the score of the constant predictor of that class. These fallbacks make V
total over every subset the estimators visit.

Determinism: permutation t is drawn from an independent RNG stream derived
from (seed, t), and marginals are folded into the running means in
ascending t order, so results are bit-identical regardless of how many
workers evaluated permutations concurrently.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Callable

import numpy as np

from .data import Dataset, Metric
from .errors import EmptyEvaluationSet, TooLargeForExact, ValidationError
from .learner import LearnerConfig, metric_from_counts, score, train
from .rng import stream

EXACT_MAX_POINTS = 12


class ValuationMethod(Enum):
    EXACT = "exact"
    TMC = "tmc"
    G_SHAPLEY = "gshapley"
    LOO = "loo"


@dataclass(frozen=True)
class ValuationConfig:
    method: ValuationMethod = ValuationMethod.TMC
    metric: Metric = Metric.ACCURACY
    truncation_tolerance: float = 0.01
    convergence_threshold: float = 0.05
    convergence_window: int = 100
    min_permutations: int = 100
    max_permutations: int = 10_000
    seed: int = 0
    g_learning_rate: float = 0.1
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    workers: int = 1

    def __post_init__(self):
        if self.truncation_tolerance < 0:
            raise ValidationError("truncation_tolerance must be >= 0")
        if self.convergence_threshold <= 0:
            raise ValidationError("convergence_threshold must be > 0")
        if self.convergence_window < 2:
            raise ValidationError("convergence_window must be >= 2")
        if self.min_permutations < 1 or self.max_permutations < 1:
            raise ValidationError("permutation counts must be >= 1")
        if self.min_permutations > self.max_permutations:
            raise ValidationError("min_permutations must be <= max_permutations")
        if self.g_learning_rate <= 0:
            raise ValidationError("g_learning_rate must be > 0")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")


@dataclass(frozen=True)
class ValuationResult:
    method: ValuationMethod
    metric: Metric
    values: dict[str, float]
    permutations_used: int
    converged: bool
    full_score: float
    empty_score: float
    seed: int


def constant_score(label: int, validation: Dataset, metric: Metric) -> float:
    """Score of the predictor that outputs ``label`` for every point."""
    if validation.n == 0:
        raise EmptyEvaluationSet("cannot score on an empty validation set")
    neg, pos = validation.class_counts()
    if label == 1:
        tp, fp, tn, fn = pos, neg, 0, 0
    else:
        tp, fp, tn, fn = 0, 0, neg, pos
    return metric_from_counts(tp, fp, tn, fn, metric)


def empty_set_score(validation: Dataset, metric: Metric) -> float:
    """Score of the validation-majority constant predictor (ties toward 0)."""
    neg, pos = validation.class_counts()
    return constant_score(1 if pos > neg else 0, validation, metric)


def subset_score(subset: Dataset, validation: Dataset, config: ValuationConfig) -> float:
    """V(S): constant-predictor fallback for empty / single-class subsets,
    otherwise train-and-score."""
    if subset.n == 0:
        return empty_set_score(validation, config.metric)
    neg, pos = subset.class_counts()
    if neg == 0 or pos == 0:
        return constant_score(1 if neg == 0 else 0, validation, config.metric)
    model = train(subset, config.learner)
    return score(model, validation, config.metric)


def _subset_value_fn(
    train_set: Dataset, validation: Dataset, config: ValuationConfig
) -> Callable[[tuple[int, ...]], float]:
    """V over index tuples, memoized (V is pure, so caching is free speedup)."""
    cache: dict[tuple[int, ...], float] = {}

    def value(indices: tuple[int, ...]) -> float:
        key = tuple(sorted(indices))
        hit = cache.get(key)
        if hit is None:
            hit = cache[key] = subset_score(train_set.take(key), validation, config)
        return hit

    return value


def exact_shapley_from_values(
    n: int, value: Callable[[tuple[int, ...]], float]
) -> tuple[list[float], float, float]:
    """Enumerate every subset of {0..n-1} under an arbitrary set function.

    Returns (per-point values, V(full), V(empty)). Exposed separately from
    ``exact_shapley`` so tests can plug in stubbed set functions.
    """
    if n > EXACT_MAX_POINTS:
        raise TooLargeForExact(
            f"exact enumeration capped at n = {EXACT_MAX_POINTS}, got n = {n}"
        )
    indices = list(range(n))
    cached = {
        comb: value(comb)
        for r in range(n + 1)
        for comb in combinations(indices, r)
    }
    phi = [0.0] * n
    for i in range(n):
        rest = [j for j in indices if j != i]
        for r in range(n):
            coeff = 1.0 / (n * math.comb(n - 1, r))
            for comb in combinations(rest, r):
                with_i = tuple(sorted(comb + (i,)))
                phi[i] += coeff * (cached[with_i] - cached[comb])
    return phi, cached[tuple(indices)], cached[()]


def exact_shapley(
    train_set: Dataset, validation: Dataset, config: ValuationConfig
) -> ValuationResult:
    """Ground-truth values by full subset enumeration (n <= 12)."""
    if train_set.n > EXACT_MAX_POINTS:
        raise TooLargeForExact(
            f"exact method allows at most {EXACT_MAX_POINTS} training points, "
            f"got {train_set.n}"
        )
    value = _subset_value_fn(train_set, validation, config)
    phi, full, empty = exact_shapley_from_values(train_set.n, value)
    return ValuationResult(
        method=ValuationMethod.EXACT,
        metric=config.metric,
        values=dict(zip(train_set.ids, phi)),
        permutations_used=0,
        converged=True,
        full_score=full,
        empty_score=empty,
        seed=config.seed,
    )


def _check_window_convergence(
    current: np.ndarray, past: np.ndarray, threshold: float
) -> bool:
    rel = np.abs(current - past) / (np.abs(current) + 1e-12)
    return bool(np.mean(rel) < threshold)


def _run_permutation_estimator(
    train_set: Dataset,
    validation: Dataset,
    config: ValuationConfig,
    marginals_of: Callable[[int], np.ndarray],
    method: ValuationMethod,
    full: float,
    empty: float,
) -> ValuationResult:
    """Shared permutation loop: sample, reduce in index order, stop on the
    windowed mean relative change of the running means."""
    n = train_set.n
    window = config.convergence_window
    phi = np.zeros(n, dtype=np.float64)
    history: deque[np.ndarray] = deque(maxlen=window)
    converged = False
    t = 0

    def fold(tt: int, marginals: np.ndarray) -> bool:
        nonlocal converged
        np.add(phi, (marginals - phi) / tt, out=phi)
        ready = tt >= config.min_permutations and len(history) == window
        if ready and _check_window_convergence(
            phi, history[0], config.convergence_threshold
        ):
            converged = True
            return True
        history.append(phi.copy())
        return False

    if config.workers == 1:
        while t < config.max_permutations:
            t += 1
            if fold(t, marginals_of(t)):
                break
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            while t < config.max_permutations and not converged:
                block = range(t + 1, min(t + window, config.max_permutations) + 1)
                results = list(pool.map(marginals_of, block))
                for tt, marginals in zip(block, results):
                    t = tt
                    if fold(tt, marginals):
                        break

    return ValuationResult(
        method=method,
        metric=config.metric,
        values=dict(zip(train_set.ids, phi.tolist())),
        permutations_used=t,
        converged=converged,
        full_score=full,
        empty_score=empty,
        seed=config.seed,
    )


def tmc_shapley(
    train_set: Dataset, validation: Dataset, config: ValuationConfig
) -> ValuationResult:
    """Truncated Monte Carlo permutation estimate of the data values."""
    if train_set.n == 0:
        raise ValidationError("valuation requires at least one training point")
    empty = empty_set_score(validation, config.metric)
    full = subset_score(train_set, validation, config)
    n = train_set.n
    # Subset scores repeat often when the subset lattice is small; the cache
    # is dropped above the exact-method cap where prefixes rarely collide.
    value = _subset_value_fn(train_set, validation, config) if n <= EXACT_MAX_POINTS else None

    def marginals_of(t: int) -> np.ndarray:
        order = stream(config.seed, t).permutation(n)
        marginals = np.zeros(n, dtype=np.float64)
        prev = empty
        for j, point in enumerate(order):
            prefix = order[: j + 1]
            if value is not None:
                v = value(tuple(prefix))
            else:
                v = subset_score(train_set.take(prefix), validation, config)
            marginals[point] = v - prev
            prev = v
            if abs(v - full) < config.truncation_tolerance:
                break  # remaining points keep their zero marginal
        return marginals

    return _run_permutation_estimator(
        train_set, validation, config, marginals_of, ValuationMethod.TMC, full, empty
    )


def g_shapley(
    train_set: Dataset, validation: Dataset, config: ValuationConfig
) -> ValuationResult:
    """One-gradient-step-per-point permutation estimate (no retraining)."""
    if train_set.n == 0:
        raise ValidationError("valuation requires at least one training point")
    empty = empty_set_score(validation, config.metric)
    full = subset_score(train_set, validation, config)
    n = train_set.n
    feats = train_set.features
    labels = train_set.labels.astype(np.float64)
    val_x = validation.features
    val_y = validation.labels
    lr = config.g_learning_rate
    l2 = config.learner.l2_penalty
    fit_intercept = config.learner.fit_intercept

    def marginals_of(t: int) -> np.ndarray:
        order = stream(config.seed, t).permutation(n)
        w = np.zeros(train_set.dim, dtype=np.float64)
        b = 0.0
        marginals = np.zeros(n, dtype=np.float64)
        prev = empty
        for point in order:
            x = feats[point]
            z = float(x @ w) + b
            p = 1.0 / (1.0 + math.exp(-max(min(z, 500.0), -500.0)))
            residual = p - labels[point]
            grad = residual * x
            if l2:
                grad = grad + l2 * w
            w = w - lr * grad
            if fit_intercept:
                b -= lr * residual
            pred = (1.0 / (1.0 + np.exp(-np.clip(val_x @ w + b, -500.0, 500.0)))) >= 0.5
            tp = int(np.sum(pred & (val_y == 1)))
            fp = int(np.sum(pred & (val_y == 0)))
            tn = int(np.sum(~pred & (val_y == 0)))
            fn = int(np.sum(~pred & (val_y == 1)))
            v = metric_from_counts(tp, fp, tn, fn, config.metric)
            marginals[point] = v - prev
            prev = v
        return marginals

    return _run_permutation_estimator(
        train_set, validation, config, marginals_of, ValuationMethod.G_SHAPLEY, full, empty
    )


def loo_values(
    train_set: Dataset, validation: Dataset, config: ValuationConfig
) -> ValuationResult:
    """Leave-one-out values: V(D) - V(D without i) for each point."""
    if train_set.n == 0:
        raise ValidationError("valuation requires at least one training point")
    empty = empty_set_score(validation, config.metric)
    full = subset_score(train_set, validation, config)
    n = train_set.n
    values = {}
    for i, pid in enumerate(train_set.ids):
        rest = train_set.take([j for j in range(n) if j != i])
        values[pid] = full - subset_score(rest, validation, config)
    return ValuationResult(
        method=ValuationMethod.LOO,
        metric=config.metric,
        values=values,
        permutations_used=0,
        converged=True,
        full_score=full,
        empty_score=empty,
        seed=config.seed,
    )


def run_valuation(
    train_set: Dataset, validation: Dataset, config: ValuationConfig
) -> ValuationResult:
    """Dispatch on ``config.method``."""
    dispatch = {
        ValuationMethod.EXACT: exact_shapley,
        ValuationMethod.TMC: tmc_shapley,
        ValuationMethod.G_SHAPLEY: g_shapley,
        ValuationMethod.LOO: loo_values,
    }
    return dispatch[config.method](train_set, validation, config)
