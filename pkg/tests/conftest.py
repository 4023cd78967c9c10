import time

import numpy as np
import pytest

from datum_worth import (
    Dataset,
    LearnerConfig,
    ValuationConfig,
    tmc_shapley,
)
from _synth import NoisyProblem, make_noisy_problem

# Learner settings shared by the desk-scale fixtures: light enough that full
# subset enumeration stays fast, strong enough to separate the classes.
FIXTURE_LEARNER = LearnerConfig(learning_rate=0.5, iterations=60)


def _d1(values):
    return [[v] for v in values]


@pytest.fixture
def six_point_train() -> Dataset:
    # Two flipped labels (rows 2 and 3 of a clean [0,0,0,1,1,1] pattern).
    return Dataset.from_arrays(
        ["t0", "t1", "t2", "t3", "t4", "t5"],
        _d1([-2.0, -1.4, -0.9, 0.8, 1.6, 2.3]),
        [0, 0, 1, 0, 1, 1],
    )


@pytest.fixture
def grid_validation() -> Dataset:
    return Dataset.from_arrays(
        [f"v{i}" for i in range(12)],
        _d1([-2.1, -1.7, -1.3, -0.9, -0.5, -0.2, 0.2, 0.5, 0.9, 1.3, 1.7, 2.1]),
        [0] * 6 + [1] * 6,
    )


@pytest.fixture
def fixture_config() -> ValuationConfig:
    return ValuationConfig(learner=FIXTURE_LEARNER)


def oracle_fixtures() -> list[tuple[str, Dataset, Dataset]]:
    """Desk-scale (name, train, validation) fixtures with n in {4, 6, 8}."""
    val_1d = Dataset.from_arrays(
        [f"v{i}" for i in range(12)],
        _d1([-2.1, -1.7, -1.3, -0.9, -0.5, -0.2, 0.2, 0.5, 0.9, 1.3, 1.7, 2.1]),
        [0] * 6 + [1] * 6,
    )
    val_2d = Dataset.from_arrays(
        [f"v{i}" for i in range(8)],
        [
            [-1.6, -1.0], [-1.2, -0.4], [-0.8, -1.2], [-0.4, -0.2],
            [0.4, 0.2], [0.8, 1.2], [1.2, 0.4], [1.6, 1.0],
        ],
        [0, 0, 0, 0, 1, 1, 1, 1],
    )
    fixtures = [
        (
            "n4-clean",
            Dataset.from_arrays(
                ["a", "b", "c", "d"], _d1([-1.5, -0.5, 0.6, 1.4]), [0, 0, 1, 1]
            ),
            val_1d,
        ),
        (
            "n4-duplicate-pair",
            Dataset.from_arrays(
                ["a", "b", "c", "d"],
                [[1.0, 0.5], [1.0, 0.5], [-1.0, -0.5], [-0.2, 1.1]],
                [1, 1, 0, 0],
            ),
            val_2d,
        ),
        (
            "n6-two-flips",
            Dataset.from_arrays(
                ["t0", "t1", "t2", "t3", "t4", "t5"],
                _d1([-2.0, -1.4, -0.9, 0.8, 1.6, 2.3]),
                [0, 0, 1, 0, 1, 1],
            ),
            val_1d,
        ),
        (
            "n6-alternating",
            Dataset.from_arrays(
                ["u0", "u1", "u2", "u3", "u4", "u5"],
                _d1([-2.2, -1.1, -0.6, 0.7, 1.2, 2.4]),
                [0, 1, 0, 1, 0, 1],
            ),
            val_1d,
        ),
        (
            "n8-two-flips",
            Dataset.from_arrays(
                [f"w{i}" for i in range(8)],
                [
                    [-2.0, -1.0], [-1.5, -0.5], [-1.0, -1.5], [-0.5, -0.25],
                    [0.5, 0.25], [1.0, 1.5], [1.5, 0.5], [2.0, 1.0],
                ],
                [0, 0, 0, 1, 0, 1, 1, 1],
            ),
            val_2d,
        ),
        (
            "n8-duplicates",
            Dataset.from_arrays(
                [f"x{i}" for i in range(8)],
                _d1([-2.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.3, 2.3]),
                [0, 0, 0, 1, 0, 1, 1, 1],
            ),
            val_1d,
        ),
    ]
    return fixtures


@pytest.fixture(scope="session")
def noisy_experiment() -> tuple[list[tuple[NoisyProblem, object]], float]:
    """TMC valuations of ten seeded 200-point / 20%-flip problems.

    Session-scoped because the valuations take ~1.5 minutes total and feed
    several statistical checks. Returns (runs, build_seconds) so timed
    criteria can count the valuation cost once.
    """
    started = time.monotonic()
    runs = []
    for seed in range(10):
        problem = make_noisy_problem(seed)
        config = ValuationConfig(
            learner=FIXTURE_LEARNER,
            seed=seed,
            min_permutations=100,
            max_permutations=150,
        )
        runs.append((problem, tmc_shapley(problem.train, problem.validation, config)))
    return runs, time.monotonic() - started


def spearman(a, b) -> float:
    """Spearman rank correlation with average ranks for ties."""
    def ranks(v):
        v = np.asarray(v, dtype=float)
        order = np.argsort(v, kind="stable")
        r = np.empty(len(v))
        i = 0
        while i < len(v):
            j = i
            while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
                j += 1
            r[order[i : j + 1]] = (i + j) / 2.0 + 1.0
            i = j + 1
        return r
    ra, rb = ranks(a), ranks(b)
    ra -= ra.mean()
    rb -= rb.mean()
    denom = float(np.sqrt((ra @ ra) * (rb @ rb)))
    return float(ra @ rb) / denom if denom else 0.0
