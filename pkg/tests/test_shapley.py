import numpy as np
import pytest

from datum_worth import (
    Dataset,
    Metric,
    ValuationConfig,
    ValuationMethod,
    empty_set_score,
    exact_shapley,
    g_shapley,
    loo_values,
    run_valuation,
    subset_score,
    tmc_shapley,
    train,
    score,
)
from datum_worth.errors import EmptyEvaluationSet, TooLargeForExact
from datum_worth.shapley import constant_score, exact_shapley_from_values

from conftest import FIXTURE_LEARNER, oracle_fixtures, spearman
from _synth import make_noisy_problem

# Frozen output of an independent plain-Python subset-enumeration script
# run on the six-point fixture before the engine was written.
SIX_POINT_PHI = [
    0.11944444444444444,
    0.11388888888888887,
    0.04027777777777777,
    0.002777777777777761,
    0.11805555555555552,
    0.10555555555555554,
]
SIX_POINT_LOO = [
    0.08333333333333337,
    0.08333333333333337,
    0.25,
    0.16666666666666663,
    0.08333333333333337,
    0.08333333333333337,
]


# ------------------------------------------------------------- score plumbing

def test_empty_set_score_balanced_validation():
    val = Dataset.from_arrays(
        [f"v{i}" for i in range(10)],
        [[float(i)] for i in range(10)],
        [1] * 5 + [0] * 5,
    )
    assert empty_set_score(val, Metric.ACCURACY) == 0.5


def test_empty_set_score_imbalanced_majority_baseline():
    # 306 positives out of 610: majority-class accuracy is 306/610.
    labels = [1] * 306 + [0] * 304
    val = Dataset.from_arrays(
        [f"v{i}" for i in range(610)], [[float(i)] for i in range(610)], labels
    )
    assert empty_set_score(val, Metric.ACCURACY) == pytest.approx(306 / 610)


def test_empty_set_score_all_negative_recall_is_zero():
    val = Dataset.from_arrays(["a", "b"], [[0.0], [1.0]], [0, 0])
    assert empty_set_score(val, Metric.RECALL) == 0.0


def test_empty_set_score_tie_breaks_toward_negative():
    val = Dataset.from_arrays(["a", "b"], [[0.0], [1.0]], [0, 1])
    # majority tie -> constant-0 predictor -> recall 0
    assert empty_set_score(val, Metric.RECALL) == 0.0
    assert empty_set_score(val, Metric.PRECISION) == 0.0


def test_empty_set_score_requires_nonempty_validation():
    empty = Dataset(ids=(), features=np.zeros((0, 1)), labels=np.array([], dtype=np.int64))
    with pytest.raises(EmptyEvaluationSet):
        empty_set_score(empty, Metric.ACCURACY)


def test_subset_score_empty_equals_empty_set_score(grid_validation, fixture_config):
    empty = Dataset(ids=(), features=np.zeros((0, 1)), labels=np.array([], dtype=np.int64))
    assert subset_score(empty, grid_validation, fixture_config) == empty_set_score(
        grid_validation, Metric.ACCURACY
    )


def test_subset_score_single_class_constant_predictor(grid_validation, fixture_config):
    ones = Dataset.from_arrays(["a", "b"], [[0.3], [0.7]], [1, 1])
    assert subset_score(ones, grid_validation, fixture_config) == constant_score(
        1, grid_validation, Metric.ACCURACY
    )
    assert subset_score(ones, grid_validation, fixture_config) == 0.5


def test_subset_score_two_class_trains(six_point_train, grid_validation, fixture_config):
    sub = six_point_train.take([0, 1, 4, 5])
    expected = score(
        train(sub, fixture_config.learner), grid_validation, fixture_config.metric
    )
    assert subset_score(sub, grid_validation, fixture_config) == expected


# ------------------------------------------------------------- exact Shapley

def test_exact_matches_frozen_oracle(six_point_train, grid_validation, fixture_config):
    result = exact_shapley(six_point_train, grid_validation, fixture_config)
    assert list(result.values.values()) == pytest.approx(SIX_POINT_PHI, abs=1e-9)
    assert result.full_score == 1.0
    assert result.empty_score == 0.5
    assert result.permutations_used == 0


def test_exact_single_point(grid_validation, fixture_config):
    one = Dataset.from_arrays(["only"], [[1.0]], [1])
    result = exact_shapley(one, grid_validation, fixture_config)
    expected = subset_score(one, grid_validation, fixture_config) - empty_set_score(
        grid_validation, Metric.ACCURACY
    )
    assert result.values["only"] == pytest.approx(expected, abs=1e-12)


def test_exact_refuses_large_sets(grid_validation, fixture_config):
    big = Dataset.from_arrays(
        [f"p{i}" for i in range(13)], [[float(i)] for i in range(13)], [i % 2 for i in range(13)]
    )
    with pytest.raises(TooLargeForExact):
        exact_shapley(big, grid_validation, fixture_config)


@pytest.mark.parametrize("name,train_set,val", oracle_fixtures())
def test_exact_efficiency_axiom(name, train_set, val):
    config = ValuationConfig(learner=FIXTURE_LEARNER)
    result = exact_shapley(train_set, val, config)
    assert sum(result.values.values()) == pytest.approx(
        result.full_score - result.empty_score, abs=1e-9
    )


def test_exact_symmetry_for_duplicated_points():
    _, train_set, val = oracle_fixtures()[1]  # n4-duplicate-pair
    result = exact_shapley(train_set, val, ValuationConfig(learner=FIXTURE_LEARNER))
    assert result.values["a"] == pytest.approx(result.values["b"], abs=1e-9)


def test_null_player_gets_exactly_zero():
    # Stubbed set function that ignores player 2 entirely.
    def value(indices):
        active = [i for i in indices if i != 2]
        return float(len(active)) * 0.1 + (0.05 if 0 in active else 0.0)

    phi, full, empty = exact_shapley_from_values(5, value)
    assert phi[2] == 0.0
    assert sum(phi) == pytest.approx(full - empty, abs=1e-12)


def test_exact_from_values_respects_cap():
    with pytest.raises(TooLargeForExact):
        exact_shapley_from_values(13, lambda idx: 0.0)


# ---------------------------------------------------------------- TMC-Shapley

def test_tmc_single_point_is_exact(grid_validation, fixture_config):
    one = Dataset.from_arrays(["only"], [[1.0]], [1])
    config = ValuationConfig(
        learner=FIXTURE_LEARNER, min_permutations=10, max_permutations=10, seed=5
    )
    result = tmc_shapley(one, grid_validation, config)
    expected = subset_score(one, grid_validation, config) - empty_set_score(
        grid_validation, Metric.ACCURACY
    )
    assert result.values["only"] == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("name,train_set,val", oracle_fixtures())
def test_tmc_converges_to_exact_values(name, train_set, val):
    exact = exact_shapley(train_set, val, ValuationConfig(learner=FIXTURE_LEARNER))
    config = ValuationConfig(
        learner=FIXTURE_LEARNER,
        truncation_tolerance=0.0,
        min_permutations=5000,
        max_permutations=5000,
        seed=17,
    )
    approx = tmc_shapley(train_set, val, config)
    errors = [
        abs(approx.values[pid] - exact.values[pid]) for pid in train_set.ids
    ]
    assert np.mean(errors) < 0.02


def test_tmc_truncation_zeroes_tail_marginals(six_point_train, grid_validation):
    # A huge tolerance truncates after the first prefix of every permutation:
    # exactly one point per permutation receives a nonzero marginal.
    config = ValuationConfig(
        learner=FIXTURE_LEARNER,
        truncation_tolerance=10.0,
        min_permutations=1,
        max_permutations=1,
        seed=3,
    )
    result = tmc_shapley(six_point_train, grid_validation, config)
    nonzero = [v for v in result.values.values() if v != 0.0]
    assert len(nonzero) <= 1


def test_tmc_is_deterministic_given_seed(six_point_train, grid_validation):
    config = ValuationConfig(
        learner=FIXTURE_LEARNER, min_permutations=50, max_permutations=50, seed=99
    )
    r1 = tmc_shapley(six_point_train, grid_validation, config)
    r2 = tmc_shapley(six_point_train, grid_validation, config)
    assert r1.values == r2.values
    assert r1.permutations_used == r2.permutations_used


def test_tmc_seed_changes_output(six_point_train, grid_validation):
    base = dict(learner=FIXTURE_LEARNER, min_permutations=50, max_permutations=50)
    r1 = tmc_shapley(six_point_train, grid_validation, ValuationConfig(seed=1, **base))
    r2 = tmc_shapley(six_point_train, grid_validation, ValuationConfig(seed=2, **base))
    assert r1.values != r2.values


def test_tmc_worker_count_does_not_change_results(six_point_train, grid_validation):
    base = dict(
        learner=FIXTURE_LEARNER,
        truncation_tolerance=0.0,
        min_permutations=100,
        max_permutations=400,
        convergence_window=50,
        convergence_threshold=0.01,
        seed=7,
    )
    serial = tmc_shapley(six_point_train, grid_validation, ValuationConfig(workers=1, **base))
    threaded = tmc_shapley(six_point_train, grid_validation, ValuationConfig(workers=8, **base))
    assert serial.values == threaded.values
    assert serial.permutations_used == threaded.permutations_used
    assert serial.converged == threaded.converged


def test_tmc_convergence_stops_early(six_point_train, grid_validation):
    config = ValuationConfig(
        learner=FIXTURE_LEARNER,
        min_permutations=10,
        max_permutations=5000,
        convergence_window=20,
        convergence_threshold=0.05,
        seed=4,
    )
    result = tmc_shapley(six_point_train, grid_validation, config)
    assert result.converged
    assert result.permutations_used < 5000


def test_tmc_reports_not_converged_at_cap(six_point_train, grid_validation):
    config = ValuationConfig(
        learner=FIXTURE_LEARNER,
        min_permutations=5,
        max_permutations=5,
        seed=4,
    )
    result = tmc_shapley(six_point_train, grid_validation, config)
    assert not result.converged
    assert result.permutations_used == 5


# ------------------------------------------------------------------ G-Shapley

def test_g_shapley_single_point_deterministic(grid_validation):
    one = Dataset.from_arrays(["only"], [[1.0]], [1])
    config = ValuationConfig(
        learner=FIXTURE_LEARNER, min_permutations=7, max_permutations=7, seed=21
    )
    r1 = g_shapley(one, grid_validation, config)
    r2 = g_shapley(one, grid_validation, config)
    assert r1.values == r2.values
    # One step from zeros with rate 0.1: w = 0.05, b = 0.05, so the model
    # predicts 1 wherever x >= -1, which is right on 9 of the 12 grid points.
    assert r1.values["only"] == pytest.approx(0.75 - 0.5, abs=1e-12)


def test_g_shapley_duplicate_points_agree_across_seeds(grid_validation):
    dup = Dataset.from_arrays(
        ["a", "b", "c", "d"],
        [[1.1, 0.4], [1.1, 0.4], [-0.9, -0.6], [-0.3, 1.0]],
        [1, 1, 0, 0],
    )
    val2 = Dataset.from_arrays(
        [f"v{i}" for i in range(8)],
        [
            [-1.6, -1.0], [-1.2, -0.4], [-0.8, -1.2], [-0.4, -0.2],
            [0.4, 0.2], [0.8, 1.2], [1.2, 0.4], [1.6, 1.0],
        ],
        [0, 0, 0, 0, 1, 1, 1, 1],
    )
    gaps = []
    for seed in range(10):
        config = ValuationConfig(
            learner=FIXTURE_LEARNER, min_permutations=2000, max_permutations=2000, seed=seed
        )
        result = g_shapley(dup, val2, config)
        gaps.append(abs(result.values["a"] - result.values["b"]))
    # the gap is pure Monte Carlo noise; at 2000 permutations its measured
    # standard error is well under 0.02
    assert np.mean(gaps) < 0.02


@pytest.mark.parametrize("fixture_index", [2, 3])  # the two n=6 fixtures
def test_g_shapley_rank_correlates_with_exact(fixture_index):
    _, train_set, val = oracle_fixtures()[fixture_index]
    exact = exact_shapley(train_set, val, ValuationConfig(learner=FIXTURE_LEARNER))
    exact_vec = [exact.values[pid] for pid in train_set.ids]
    rhos = []
    for seed in range(10):
        config = ValuationConfig(
            learner=FIXTURE_LEARNER,
            min_permutations=500,
            max_permutations=500,
            seed=seed,
        )
        g = g_shapley(train_set, val, config)
        rhos.append(spearman([g.values[pid] for pid in train_set.ids], exact_vec))
    assert np.mean(rhos) > 0.5


# ------------------------------------------------------------------------ LOO

def _loo_oracle(train_set, validation, config):
    """Independent n+1-retrain implementation of the leave-one-out values."""
    def v(subset):
        if subset.n == 0:
            return empty_set_score(validation, config.metric)
        neg, pos = subset.class_counts()
        if neg == 0 or pos == 0:
            return constant_score(1 if neg == 0 else 0, validation, config.metric)
        return score(train(subset, config.learner), validation, config.metric)

    full = v(train_set)
    return {
        pid: full - v(train_set.take([j for j in range(train_set.n) if j != i]))
        for i, pid in enumerate(train_set.ids)
    }


def test_loo_matches_frozen_oracle(six_point_train, grid_validation, fixture_config):
    result = loo_values(six_point_train, grid_validation, fixture_config)
    assert list(result.values.values()) == pytest.approx(SIX_POINT_LOO, abs=1e-12)


@pytest.mark.parametrize("name,train_set,val", oracle_fixtures())
def test_loo_bit_exact_against_independent_retrains(name, train_set, val):
    config = ValuationConfig(learner=FIXTURE_LEARNER)
    result = loo_values(train_set, val, config)
    assert result.values == _loo_oracle(train_set, val, config)


def test_loo_single_point(grid_validation, fixture_config):
    one = Dataset.from_arrays(["only"], [[1.0]], [1])
    result = loo_values(one, grid_validation, fixture_config)
    expected = subset_score(one, grid_validation, fixture_config) - empty_set_score(
        grid_validation, Metric.ACCURACY
    )
    assert result.values["only"] == expected


def test_loo_identical_points_get_identical_values(grid_validation, fixture_config):
    ds = Dataset.from_arrays(
        ["a", "b", "c", "d"], [[1.0], [1.0], [-1.0], [-0.5]], [1, 1, 0, 0]
    )
    result = loo_values(ds, grid_validation, fixture_config)
    assert result.values["a"] == result.values["b"]


# ------------------------------------------------------------------ dispatch

def test_run_valuation_dispatches(six_point_train, grid_validation):
    config = ValuationConfig(
        method=ValuationMethod.LOO, learner=FIXTURE_LEARNER, seed=1
    )
    assert run_valuation(six_point_train, grid_validation, config).method is ValuationMethod.LOO


# --------------------------------------------------- statistical shape checks

def test_flipped_labels_get_lower_exact_values():
    # Exact values on ten 10-point problems with two flipped labels each:
    # flipped points should average below clean points almost always.
    wins = 0
    for seed in range(10):
        problem = make_noisy_problem(seed, n_train=10, d=2, flip_fraction=0.2, n_val=40, n_test=10)
        config = ValuationConfig(learner=FIXTURE_LEARNER)
        result = exact_shapley(problem.train, problem.validation, config)
        flipped = [v for pid, v in result.values.items() if problem.flags[pid]]
        clean = [v for pid, v in result.values.items() if not problem.flags[pid]]
        if np.mean(flipped) < np.mean(clean):
            wins += 1
    assert wins >= 9
