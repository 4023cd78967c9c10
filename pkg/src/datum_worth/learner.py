"""Binary logistic regression with deterministic full-batch gradient descent.

The training rule is deliberately plain so that identical inputs always
produce bit-identical models: weights and intercept start at zero, and for
exactly ``iterations`` steps

    p      = sigmoid(X w + b)
    grad_w = X^T (p - y) / n + l2_penalty * w
    grad_b = mean(p - y)                      (only when fitting an intercept)
    w     -= learning_rate * grad_w
    b     -= learning_rate * grad_b

i.e. gradient descent on mean cross-entropy plus (l2_penalty / 2) ||w||^2.
The intercept is never penalized. There is no early stopping, no line
search, and no randomness anywhere in the solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, Metric
from .errors import DimensionMismatch, EmptyEvaluationSet, EmptyTrainingSet, ValidationError

_P_MIN = 1e-300
_P_MAX = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class LearnerConfig:
    learning_rate: float = 0.1
    iterations: int = 500
    l2_penalty: float = 0.0
    fit_intercept: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.iterations < 1:
            raise ValidationError(f"iterations must be >= 1, got {self.iterations}")
        if self.l2_penalty < 0:
            raise ValidationError(f"l2_penalty must be >= 0, got {self.l2_penalty}")


@dataclass(frozen=True)
class Model:
    weights: np.ndarray
    intercept: float
    config: LearnerConfig = field(default_factory=LearnerConfig)

    @property
    def dim(self) -> int:
        return len(self.weights)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Clipping the logit at +-500 keeps exp() finite; the result is exact
    # wherever it matters and deterministic everywhere.
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def train(data: Dataset, config: LearnerConfig | None = None) -> Model:
    """Fit a logistic model on ``data`` with the fixed-step recurrence above.

    Single-class datasets are legal training input; the optimizer simply
    drives every prediction toward the one class present.
    """
    if config is None:
        config = LearnerConfig()
    if data.n == 0:
        raise EmptyTrainingSet("cannot train on an empty dataset")
    x = data.features
    y = data.labels.astype(np.float64)
    n = data.n
    w = np.zeros(data.dim, dtype=np.float64)
    b = 0.0
    xt = x.T
    lr = config.learning_rate
    l2 = config.l2_penalty
    for _ in range(config.iterations):
        p = _sigmoid(x @ w + b)
        residual = p - y
        grad_w = xt @ residual / n
        if l2:
            grad_w = grad_w + l2 * w
        w = w - lr * grad_w
        if config.fit_intercept:
            b = b - lr * (float(residual.sum()) / n)
    w.flags.writeable = False
    return Model(weights=w, intercept=b, config=config)


def predict_proba(model: Model, features: np.ndarray) -> np.ndarray:
    """Per-row probability of class 1, clipped into the open interval (0, 1)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features.reshape(1, -1)
    if features.shape[1] != model.dim:
        raise DimensionMismatch(
            f"model expects {model.dim} features, got {features.shape[1]}"
        )
    p = _sigmoid(features @ model.weights + model.intercept)
    return np.clip(p, _P_MIN, _P_MAX)


def predict(model: Model, features: np.ndarray) -> np.ndarray:
    """Hard labels: 1 where the probability is >= 0.5 (ties go to class 1)."""
    return (predict_proba(model, features) >= 0.5).astype(np.int64)


def confusion(predicted: np.ndarray, actual: np.ndarray) -> tuple[int, int, int, int]:
    """(tp, fp, tn, fn) counts."""
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    tp = int(np.sum((predicted == 1) & (actual == 1)))
    fp = int(np.sum((predicted == 1) & (actual == 0)))
    tn = int(np.sum((predicted == 0) & (actual == 0)))
    fn = int(np.sum((predicted == 0) & (actual == 1)))
    return tp, fp, tn, fn


def metric_from_counts(tp: int, fp: int, tn: int, fn: int, metric: Metric) -> float:
    """Accuracy / precision / recall with the 0.0 zero-denominator convention."""
    total = tp + fp + tn + fn
    if metric is Metric.ACCURACY:
        return (tp + tn) / total
    if metric is Metric.PRECISION:
        return tp / (tp + fp) if tp + fp else 0.0
    if metric is Metric.RECALL:
        return tp / (tp + fn) if tp + fn else 0.0
    raise ValidationError(f"unknown metric {metric!r}")


def score(model: Model, data: Dataset, metric: Metric) -> float:
    """Evaluate ``model`` on ``data`` under ``metric``; result is in [0, 1]."""
    if data.n == 0:
        raise EmptyEvaluationSet("cannot score on an empty dataset")
    if data.dim != model.dim:
        raise DimensionMismatch(
            f"model expects {model.dim} features, data has {data.dim}"
        )
    predicted = predict(model, data.features)
    return metric_from_counts(*confusion(predicted, data.labels), metric)


def logistic_loss(model: Model, data: Dataset) -> float:
    """Mean cross-entropy plus the L2 term; the quantity train() descends."""
    p = predict_proba(model, data.features)
    y = data.labels.astype(np.float64)
    ce = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    penalty = 0.5 * model.config.l2_penalty * float(model.weights @ model.weights)
    return float(ce + penalty)
