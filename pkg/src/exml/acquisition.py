"""Budgeted identification of the most informative candidate feature.

Feature quality is the training-set 0/1 rejection risk of a rejection model
fitted on the observed features augmented with the candidate (lower is
better).  Two allocation schemes are provided: uniform allocation and median
elimination.  Within an episode all active features are queried on the same
sample rows, and each query is charged separately.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .data import FeatureOracle, TrainingSet
from .errors import AllocationError, BudgetExhaustedError, InputError
from .kernel import KernelParams, median_bandwidth
from .rejection import RejectionModel, TrainConfig, check_theta, empirical_risk, train_rejection_model

UNIFORM = "uniform"
MEDIAN_ELIMINATION = "median"
STRATEGIES = (UNIFORM, MEDIAN_ELIMINATION)


@dataclass(frozen=True, eq=False)
class AugmentedDataset:
    """Rows of the training set acquired for one candidate, observed ⊕ candidate."""

    feature_id: int
    rows: np.ndarray
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=int)
        if len(np.unique(rows)) != len(rows):
            raise InputError("augmented dataset rows must be distinct")
        if not (len(rows) == len(self.X) == len(self.y)):
            raise InputError("rows, X and y must have equal length")
        object.__setattr__(self, "rows", rows)

    def __len__(self):
        return len(self.rows)

    def extend(self, rows, X_new, y_new) -> "AugmentedDataset":
        return AugmentedDataset(self.feature_id, np.concatenate([self.rows, rows]),
                                np.vstack([self.X, X_new]), np.concatenate([self.y, y_new]))


@dataclass
class EpisodeRecord:
    episode: int
    scheduled: int
    drawn: int
    active: list
    risks: dict
    n_cumulative: int
    kept: list


@dataclass
class AllocationReport:
    strategy: str
    initial_budget: int
    n_features: int
    per_feature_spend: dict = field(default_factory=dict)
    episodes: list = field(default_factory=list)
    selected_feature: int | None = None
    selected_dataset_size: int = 0

    @property
    def per_episode_risks(self) -> list[dict]:
        return [dict(e.risks) for e in self.episodes]

    @property
    def total_spend(self) -> int:
        return sum(self.per_feature_spend.values())

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "initial_budget": self.initial_budget,
            "n_features": self.n_features,
            "per_feature_spend": {str(k): v for k, v in sorted(self.per_feature_spend.items())},
            "episodes": [
                {"episode": e.episode, "scheduled": e.scheduled, "drawn": e.drawn, "active": e.active,
                 "risks": {str(k): v for k, v in e.risks.items()}, "n_cumulative": e.n_cumulative,
                 "kept": e.kept}
                for e in self.episodes
            ],
            "selected_feature": self.selected_feature,
            "selected_dataset_size": self.selected_dataset_size,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AllocationReport":
        eps = [EpisodeRecord(e["episode"], e["scheduled"], e["drawn"], list(e["active"]),
                             {int(k): v for k, v in e["risks"].items()}, e["n_cumulative"], list(e["kept"]))
               for e in d["episodes"]]
        return cls(d["strategy"], d["initial_budget"], d["n_features"],
                   {int(k): v for k, v in d["per_feature_spend"].items()}, eps,
                   d["selected_feature"], d["selected_dataset_size"])

    def episode_rows(self) -> list[tuple]:
        """``(episode, feature_id, n_cumulative, risk)`` for plotting."""
        return [(e.episode, k, e.n_cumulative, e.risks[k]) for e in self.episodes for k in e.active]

    def write_episodes_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["episode", "feature_id", "n_cumulative", "risk"])
            w.writerows(self.episode_rows())


@dataclass(frozen=True, eq=False)
class AcquisitionResult:
    selected_feature: int
    model: RejectionModel
    report: AllocationReport
    dataset: AugmentedDataset


def evaluate_feature(
    dataset: AugmentedDataset,
    theta: float,
    config: TrainConfig | None = None,
    bandwidth: Callable[[np.ndarray], KernelParams] = median_bandwidth,
) -> tuple[RejectionModel, float]:
    """Fit on the augmented rows and return the model with its training risk.

    A single row gets an arbitrary unit bandwidth: with one point the Gram
    matrix is ``[[1]]`` whatever the bandwidth.
    """
    if len(dataset) == 0:
        raise InputError("cannot evaluate a feature on an empty dataset")
    kernel = bandwidth(dataset.X) if len(dataset) > 1 else KernelParams(1.0)
    model = train_rejection_model(dataset.X, dataset.y, theta, kernel, config)
    return model, empirical_risk(model, dataset.X, dataset.y, theta)


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _check_pool(train: TrainingSet, oracle: FeatureOracle):
    if oracle.n_samples != len(train) or oracle.sample_ids != train.sample_ids:
        raise InputError("oracle and training set disagree on sample ids")
    if oracle.n_features < 1:
        raise InputError("no candidate features")


def _acquire(train, oracle, datasets, features, rows, report):
    """Query ``rows`` for every feature in ``features`` and grow their datasets."""
    ids = [train.sample_ids[r] for r in rows]
    for k in features:
        try:
            vals = oracle.query_rows(ids, k)
        except BudgetExhaustedError as exc:
            raise AllocationError(str(exc), partial_report=report) from exc
        report.per_feature_spend[k] = report.per_feature_spend.get(k, 0) + len(rows)
        X_new = np.hstack([train.observed[rows], vals])
        datasets[k] = datasets[k].extend(rows, X_new, train.labels[rows])


def _evaluate_all(datasets, features, theta, config, threads):
    def job(k):
        return evaluate_feature(datasets[k], theta, config)

    if threads and threads > 1 and len(features) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, features))
    else:
        results = [job(k) for k in features]
    return dict(zip(features, results))


def _empty_datasets(train: TrainingSet, oracle: FeatureOracle) -> dict[int, AugmentedDataset]:
    return {
        k: AugmentedDataset(k, np.empty(0, dtype=int), np.empty((0, train.dim + oracle.feature_width(k))),
                            np.empty(0, dtype=int))
        for k in range(oracle.n_features)
    }


def uniform_allocation(
    train: TrainingSet,
    oracle: FeatureOracle,
    theta: float,
    config: TrainConfig | None = None,
    rng=None,
    threads: int = 1,
) -> AcquisitionResult:
    """Spend ``floor(B/K)`` (capped at m) on every candidate and keep the lowest risk."""
    theta = check_theta(theta)
    _check_pool(train, oracle)
    rng = _rng(rng)
    budget, K = oracle.budget_remaining, oracle.n_features
    per_feature = budget // K
    if per_feature == 0:
        raise InputError(f"budget {budget} is too small for {K} candidate features")
    n = min(per_feature, len(train))

    report = AllocationReport(UNIFORM, budget, K)
    datasets = _empty_datasets(train, oracle)
    rows = rng.choice(len(train), size=n, replace=False)
    features = list(range(K))
    _acquire(train, oracle, datasets, features, rows, report)
    fitted = _evaluate_all(datasets, features, theta, config, threads)

    risks = {k: fitted[k][1] for k in features}
    best = min(features, key=lambda k: (risks[k], k))
    report.episodes.append(EpisodeRecord(1, per_feature, n, features, risks, n, [best]))
    report.selected_feature = best
    report.selected_dataset_size = len(datasets[best])
    return AcquisitionResult(best, fitted[best][0], report, datasets[best])


def elimination_schedule(budget: int, n_features: int) -> list[tuple[int, int]]:
    """``[(active count, n_t), ...]`` for median elimination, ignoring pool caps."""
    if n_features == 1:
        return [(1, budget)]
    T = math.ceil(math.log2(n_features))
    sched, active = [], n_features
    for _ in range(T):
        sched.append((active, budget // (T * active)))
        active = math.ceil(active / 2)
    return sched


def median_elimination(
    train: TrainingSet,
    oracle: FeatureOracle,
    theta: float,
    config: TrainConfig | None = None,
    rng=None,
    threads: int = 1,
) -> AcquisitionResult:
    """Episodic halving of the candidate pool.

    Episode ``t`` draws ``n_t = floor(B / (T |C_t|))`` fresh rows (capped by
    the unqueried pool), queries them for each active candidate, refits every
    active model on its accumulated rows and keeps the ``ceil(|C_t|/2)``
    lowest-risk candidates (ties to the lower index).  With a single candidate
    one pseudo-episode spends ``min(B, m)``.
    """
    theta = check_theta(theta)
    _check_pool(train, oracle)
    rng = _rng(rng)
    budget, K = oracle.budget_remaining, oracle.n_features
    m = len(train)

    report = AllocationReport(MEDIAN_ELIMINATION, budget, K)
    datasets = _empty_datasets(train, oracle)
    active = list(range(K))
    acquired = np.zeros(m, dtype=bool)
    fitted = {}

    for t, (n_active, n_t) in enumerate(elimination_schedule(budget, K), start=1):
        if n_t == 0:
            raise AllocationError(
                f"budget {budget} too small for the elimination schedule (episode {t} gets 0 samples)",
                partial_report=report)
        pool = np.flatnonzero(~acquired)
        drawn = min(n_t, len(pool))
        rows = np.sort(rng.choice(pool, size=drawn, replace=False)) if drawn else np.empty(0, dtype=int)
        acquired[rows] = True
        _acquire(train, oracle, datasets, active, rows, report)
        fitted = _evaluate_all(datasets, active, theta, config, threads)
        risks = {k: fitted[k][1] for k in active}
        kept = sorted(active, key=lambda k: (risks[k], k))[: math.ceil(len(active) / 2)]
        report.episodes.append(EpisodeRecord(t, n_t, drawn, list(active), risks,
                                             len(datasets[active[0]]), sorted(kept)))
        active = sorted(kept)

    best = min(active, key=lambda k: (report.episodes[-1].risks[k], k))
    report.selected_feature = best
    report.selected_dataset_size = len(datasets[best])
    return AcquisitionResult(best, fitted[best][0], report, datasets[best])


def acquire(strategy: str, train, oracle, theta, config=None, rng=None, threads=1) -> AcquisitionResult:
    if strategy == UNIFORM:
        return uniform_allocation(train, oracle, theta, config, rng, threads)
    if strategy == MEDIAN_ELIMINATION:
        return median_elimination(train, oracle, theta, config, rng, threads)
    raise InputError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
