"""datum-worth: training-data valuation and dataset auditing."""

from .data import Dataset, Metric, Split, validate_dataset
from .errors import DatumWorthError, IoError, ValidationError
from .evaluation import (
    Direction,
    Ranking,
    RankingSource,
    RemovalCurve,
    cumulative_mislabel_curve,
    rank_points,
    removal_curve,
)
from .heatmap import (
    ClassWeights,
    FeatureMapStack,
    Heatmap,
    compute_heatmap,
    normalize_heatmap,
)
from .ingest import (
    SplitSpec,
    load_dataset,
    load_valuation,
    save_dataset,
    save_valuation,
    stratified_split,
)
from .learner import LearnerConfig, Model, predict_proba, score, train
from .shapley import (
    ValuationConfig,
    ValuationMethod,
    ValuationResult,
    empty_set_score,
    exact_shapley,
    g_shapley,
    loo_values,
    run_valuation,
    subset_score,
    tmc_shapley,
)
from .stats import ChiSquareResult, ContingencyTable, chi_square_test

__version__ = "0.1.0"

__all__ = [
    "ChiSquareResult",
    "ClassWeights",
    "ContingencyTable",
    "Dataset",
    "DatumWorthError",
    "Direction",
    "FeatureMapStack",
    "Heatmap",
    "IoError",
    "LearnerConfig",
    "Metric",
    "Model",
    "Ranking",
    "RankingSource",
    "RemovalCurve",
    "Split",
    "SplitSpec",
    "ValidationError",
    "ValuationConfig",
    "ValuationMethod",
    "ValuationResult",
    "chi_square_test",
    "compute_heatmap",
    "cumulative_mislabel_curve",
    "empty_set_score",
    "exact_shapley",
    "g_shapley",
    "load_dataset",
    "load_valuation",
    "loo_values",
    "normalize_heatmap",
    "predict_proba",
    "rank_points",
    "removal_curve",
    "run_valuation",
    "save_dataset",
    "save_valuation",
    "score",
    "stratified_split",
    "subset_score",
    "tmc_shapley",
    "train",
    "validate_dataset",
]
