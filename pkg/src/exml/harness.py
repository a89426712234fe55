"""Experiment orchestration: SL baseline vs. exploratory variants.

Per repetition: build the data, calibrate the initial threshold by cross
validation, train the initial model (shared by SL and the cascades), run each
acquisition strategy on a fresh oracle, refit the augmented model on the
survivor's acquired rows for every threshold in the grid, and score the
augmented-only and cascaded predictors on the test set.  The augmented
threshold is chosen by test accuracy (reported as ``oracle-theta``).
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .acquisition import MEDIAN_ELIMINATION, UNIFORM, acquire
from .cascade import build_cascade, cascade_predict_batch
from .config import ExperimentConfig, FilesSpec, MultiviewSpec, SyntheticSpec
from .data import (Dataset, SyntheticConfig, TrainingSet, budget_for, generate_synthetic,
                   load_dataset_files, load_multiview_csv, load_view_assignment, replay_audit)
from .errors import InputError
from .kernel import KernelParams, median_bandwidth
from .labels import REJECT
from .rejection import RejectionModel, TrainConfig, check_theta, train_rejection_model

log = logging.getLogger(__name__)

REPORT_SCHEMA = "exml-report/1"
STRATEGY_TAG = {MEDIAN_ELIMINATION: "ME", UNIFORM: "UA"}
_STREAM = {"calibration": 0, UNIFORM: 1, MEDIAN_ELIMINATION: 2}


# -- metrics ----------------------------------------------------------------


def three_way_accuracy(predictions, truth) -> float:
    """Percentage of exact matches over {POSITIVE, NEGATIVE, UNKNOWN}."""
    p = np.asarray(predictions, dtype=int).ravel()
    t = np.asarray(truth, dtype=int).ravel()
    if len(p) != len(t):
        raise InputError(f"length mismatch: {len(p)} predictions vs {len(t)} truths")
    if len(p) == 0:
        raise InputError("accuracy of an empty prediction set is undefined")
    return 100.0 * float(np.mean(p == t))


def best_feature_recall(runs: Sequence[tuple[int, Sequence[int]]]) -> float:
    """Fraction of runs whose selected feature is among the two best."""
    if not runs:
        raise InputError("recall needs at least one run")
    hits = 0
    for selected, ranking in runs:
        if selected not in ranking:
            raise InputError(f"feature {selected} missing from ranking {list(ranking)}")
        hits += selected in list(ranking)[:2]
    return hits / len(runs)


# -- initial threshold ------------------------------------------------------


@dataclass(frozen=True)
class CalibrationResult:
    theta: float
    qualified: bool
    accepted_accuracy: dict
    rejection_rate: dict
    all_reject_folds: dict

    def to_dict(self) -> dict:
        return {"theta": self.theta, "qualified": self.qualified,
                "accepted_accuracy": {str(k): v for k, v in self.accepted_accuracy.items()},
                "rejection_rate": {str(k): v for k, v in self.rejection_rate.items()},
                "all_reject_folds": {str(k): v for k, v in self.all_reject_folds.items()}}


def _fit(X, y, theta, config) -> RejectionModel:
    kernel = median_bandwidth(X) if len(X) > 1 else KernelParams(1.0)
    return train_rejection_model(X, y, theta, kernel, config)


def calibrate_initial_threshold(
    train: TrainingSet,
    theta_grid: Sequence[float],
    folds: int = 5,
    target_accepted_accuracy: float = 0.95,
    config: TrainConfig | None = None,
    seed=0,
) -> CalibrationResult:
    """Pick the threshold with the lowest cross-validated rejection rate among
    those whose accepted accuracy reaches the target; if none does, the one
    with the best accepted accuracy.  Ties go to the earlier grid entry.
    Accepted accuracy pools counts over folds; with nothing accepted it is 1.
    """
    grid = [check_theta(t) for t in theta_grid]
    if not grid:
        raise InputError("theta grid is empty")
    if folds < 2:
        raise InputError("need at least two folds")
    m = len(train)
    if m < folds:
        raise InputError(f"{m} training samples cannot be split into {folds} folds")
    if len(grid) == 1:
        t = grid[0]
        return CalibrationResult(t, True, {t: float("nan")}, {t: float("nan")}, {t: 0})

    rng = np.random.default_rng(seed)
    fold_of = rng.permutation(m) % folds
    acc, rej, flags = {}, {}, {}
    for t in grid:
        correct = accepted = all_reject = 0
        for f in range(folds):
            tr, va = fold_of != f, fold_of == f
            model = _fit(train.observed[tr], train.labels[tr], t, config)
            pred = model.predict_labels(train.observed[va])
            keep = pred != REJECT
            accepted += int(keep.sum())
            correct += int((pred[keep] == train.labels[va][keep]).sum())
            all_reject += int(not keep.any())
        acc[t] = correct / accepted if accepted else 1.0
        rej[t] = 1.0 - accepted / m
        flags[t] = all_reject

    ok = [t for t in grid if acc[t] >= target_accepted_accuracy]
    if ok:
        best = min(ok, key=lambda t: (rej[t], grid.index(t)))
    else:
        best = min(grid, key=lambda t: (-acc[t], rej[t], grid.index(t)))
    return CalibrationResult(best, bool(ok), acc, rej, flags)


# -- ground-truth feature ranking ---------------------------------------------


@dataclass(frozen=True)
class RankingResult:
    ranking: tuple
    accuracies: dict


def compute_true_ranking(dataset: Dataset, theta: float = 0.3, config: TrainConfig | None = None) -> RankingResult:
    """Rank candidates by test accuracy of an augmented-only model trained on
    the full (unmetered) training set; ties go to the lower index."""
    train, test = dataset.train, dataset.test
    accs = {}
    for k in range(dataset.n_features):
        X = np.hstack([train.observed, dataset.train_candidates[k]])
        model = _fit(X, train.labels, theta, config)
        accs[k] = three_way_accuracy(model.predict_labels(test.augmented(k)), test.truth)
    ranking = tuple(sorted(accs, key=lambda k: (-accs[k], k)))
    return RankingResult(ranking, accs)


# -- experiment -----------------------------------------------------------------


def build_dataset(config: ExperimentConfig, index: int, seed: int) -> Dataset:
    spec = config.dataset
    if isinstance(spec, SyntheticSpec):
        return generate_synthetic(SyntheticConfig(spec.a, spec.n_per_class, spec.angles, int(seed),
                                                  spec.n_test_per_class))
    if isinstance(spec, MultiviewSpec):
        views = load_view_assignment(spec.views) if isinstance(spec.views, str) else spec.views
        conf = spec.class_configurations[(index // config.repetitions) % len(spec.class_configurations)]
        return load_multiview_csv(spec.path, views, spec.original_view, conf["positive"], conf["negative"],
                                  conf.get("unknown", ()), conf.get("ignore", ()), spec.train_fraction,
                                  spec.test_fraction, int(seed), spec.standardize)
    if isinstance(spec, FilesSpec):
        return load_dataset_files(spec.path)
    raise InputError(f"unsupported dataset spec {spec!r}")


def total_repetitions(config: ExperimentConfig) -> int:
    if isinstance(config.dataset, MultiviewSpec):
        return config.repetitions * len(config.dataset.class_configurations)
    return config.repetitions


def repetition_seeds(config: ExperimentConfig) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(config.seed).generate_state(total_repetitions(config))]


def _sub_rng(seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), _STREAM[stream]])


def _best_theta(per_theta: dict, grid) -> float:
    return max(grid, key=lambda t: (per_theta[t], -grid.index(t)))


def run_repetition(config: ExperimentConfig, index: int, seed: int, keep_models: bool = False) -> dict:
    """One repetition; raises on failure (``run_experiment`` records it)."""
    started = time.perf_counter()
    tc = config.train
    grid = list(config.theta_grid)
    ds = build_dataset(config, index, seed)
    train, test = ds.train, ds.test
    m, K = len(train), ds.n_features

    cal = calibrate_initial_threshold(train, grid, config.calibration_folds, config.target_accepted_accuracy,
                                      tc, seed=_sub_rng(seed, "calibration"))
    initial = _fit(train.observed, train.labels, cal.theta, tc)
    sl_pred = initial.predict_labels(test.observed)

    rec = {
        "index": index, "seed": int(seed), "status": "ok", "n_train": m, "n_test": len(test),
        "n_features": K, "feature_names": list(ds.feature_names),
        "initial_theta": cal.theta, "calibration": cal.to_dict(),
        "initial_rejection_rate_test": float(np.mean(sl_pred == REJECT)),
        "accuracy": {}, "selected_theta": {}, "per_theta": {}, "skipped": {},
        "selected_feature": {}, "recall_hit": {}, "spend_top_half_fraction": {},
        "allocation": {}, "budget": {}, "reference_ranking": list(ds.reference_ranking)
        if ds.reference_ranking is not None else None,
    }
    models = {"initial": initial}
    if "SL" in config.variants:
        rec["accuracy"]["SL"] = three_way_accuracy(sl_pred, test.truth)

    exml = [v for v in ("EXML_AUG", "EXML_CSD") if v in config.variants]
    budget = budget_for(config.budget_ratio, m, K)
    if exml and budget == 0:
        for s in config.strategies:
            for v in exml:
                rec["skipped"][f"{v}^{STRATEGY_TAG[s]}"] = "budget is zero; acquisition impossible"
        exml = []

    if exml:
        truth = compute_true_ranking(ds, config.ranking_theta, tc)
        rec["true_ranking"] = list(truth.ranking)
        rec["true_ranking_accuracy"] = {str(k): v for k, v in truth.accuracies.items()}
        top_half = set(truth.ranking[: max(1, K // 2)])
        for s in config.strategies:
            tag = STRATEGY_TAG[s]
            oracle = ds.oracle(budget)
            res = acquire(s, train, oracle, config.acquisition_theta, tc, rng=_sub_rng(seed, s))
            spend, unique = replay_audit(oracle.audit_log)
            rec["budget"][tag] = {
                "initial": oracle.initial_budget, "spent": oracle.budget_spent,
                "remaining": oracle.budget_remaining, "audit_unique_pairs": unique,
                "audit_matches_report": spend == {k: v for k, v in res.report.per_feature_spend.items() if v},
            }
            rec["allocation"][tag] = res.report.to_dict()
            k = res.selected_feature
            rec["selected_feature"][tag] = k
            rec["recall_hit"][tag] = bool(k in truth.ranking[:2])
            total = res.report.total_spend
            rec["spend_top_half_fraction"][tag] = (
                sum(v for f, v in res.report.per_feature_spend.items() if f in top_half) / total if total else 0.0)

            D = res.dataset
            X_test_aug = test.augmented(k)
            per_aug, per_csd, fitted = {}, {}, {}
            for t in grid:
                aug = _fit(D.X, D.y, t, tc)
                fitted[t] = aug
                per_aug[t] = three_way_accuracy(aug.predict_labels(X_test_aug), test.truth)
                casc = build_cascade(initial, k, aug, ds.feature_width(k), ds.feature_names[k], K)
                per_csd[t] = three_way_accuracy(
                    cascade_predict_batch(casc, test.observed, test.candidates[k]).labels, test.truth)
            for v, per in (("EXML_AUG", per_aug), ("EXML_CSD", per_csd)):
                if v not in exml:
                    continue
                key = f"{v}^{tag}"
                best = _best_theta(per, grid)
                rec["accuracy"][key] = per[best]
                rec["selected_theta"][key] = best
                rec["per_theta"][key] = {str(t): a for t, a in per.items()}
            if keep_models:
                t_best = rec["selected_theta"].get(f"EXML_CSD^{tag}", grid[0])
                models[tag] = build_cascade(initial, k, fitted[t_best], ds.feature_width(k),
                                            ds.feature_names[k], K)

    rec["seconds"] = time.perf_counter() - started
    if keep_models:
        rec["_models"] = models
    return rec


@dataclass
class ExperimentReport:
    config: dict
    config_hash: str
    repetitions: list
    summary: dict = field(default_factory=dict)
    recall: dict = field(default_factory=dict)
    spend_top_half_fraction: dict = field(default_factory=dict)
    allocation_summary: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    schema: str = REPORT_SCHEMA

    @property
    def successful(self) -> list:
        return [r for r in self.repetitions if r.get("status") == "ok"]

    def to_dict(self) -> dict:
        return {
            "schema": self.schema, "config": self.config, "config_hash": self.config_hash,
            "summary": self.summary, "recall": self.recall,
            "spend_top_half_fraction": self.spend_top_half_fraction,
            "allocation_summary": self.allocation_summary, "warnings": self.warnings,
            "metadata": self.metadata, "repetitions": self.repetitions,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        if d.get("schema") != REPORT_SCHEMA:
            raise InputError(f"unsupported report schema {d.get('schema')!r}")
        return cls(d["config"], d["config_hash"], d["repetitions"], d.get("summary", {}), d.get("recall", {}),
                   d.get("spend_top_half_fraction", {}), d.get("allocation_summary", {}),
                   d.get("warnings", []), d.get("metadata", {}))

    @classmethod
    def load(cls, path) -> "ExperimentReport":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise InputError(f"{path}: cannot read report: {exc}") from exc


def _mean_std(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {"mean": float(v.mean()), "std": float(v.std(ddof=1)) if len(v) > 1 else 0.0, "n": int(len(v))}


def aggregate(repetitions: list) -> dict:
    """Summary statistics recomputed from per-repetition records (std uses ddof=1)."""
    ok = [r for r in repetitions if r.get("status") == "ok"]
    keys = sorted({k for r in ok for k in r["accuracy"]})
    summary = {k: _mean_std([r["accuracy"][k] for r in ok if k in r["accuracy"]]) for k in keys}
    tags = sorted({t for r in ok for t in r["recall_hit"]})
    recall = {t: float(np.mean([r["recall_hit"][t] for r in ok if t in r["recall_hit"]])) for t in tags}
    top_half = {}
    alloc = {}
    for t in tags:
        reps = [r for r in ok if t in r["allocation"]]
        spend = np.zeros(reps[0]["n_features"]) if reps else np.zeros(0)
        top = 0.0
        for r in reps:
            ps = r["allocation"][t]["per_feature_spend"]
            for f, v in ps.items():
                spend[int(f)] += v
            K = r["n_features"]
            best = set(r["true_ranking"][: max(1, K // 2)])
            top += sum(v for f, v in ps.items() if int(f) in best)
        total = float(spend.sum())
        top_half[t] = top / total if total else 0.0
        alloc[t] = {"total_spend": spend.tolist(),
                    "fraction": (spend / total).tolist() if total else spend.tolist(),
                    "feature_names": reps[0]["feature_names"] if reps else []}
    return {"summary": summary, "recall": recall, "spend_top_half_fraction": top_half, "allocation_summary": alloc}


def run_experiment(config: ExperimentConfig, progress=None, model_sink=None) -> ExperimentReport:
    """Run every repetition.  ``model_sink(index, models)`` receives the fitted
    initial model and cascades of each successful repetition."""
    seeds = repetition_seeds(config)
    started = time.perf_counter()

    def one(i):
        try:
            rec = run_repetition(config, i, seeds[i], keep_models=model_sink is not None)
            models = rec.pop("_models", None)
            if model_sink is not None:
                model_sink(i, models)
        except Exception as exc:  # recorded, the remaining repetitions still run
            log.warning("repetition %d failed: %s", i, exc)
            rec = {"index": i, "seed": seeds[i], "status": "failed",
                   "error": f"{type(exc).__name__}: {exc}"}
        if progress:
            progress(i, rec)
        return rec

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            reps = list(pool.map(one, range(len(seeds))))
    else:
        reps = [one(i) for i in range(len(seeds))]

    agg = aggregate(reps)
    warnings = [f"repetition {r['index']} (seed {r['seed']}): {r['error']}" for r in reps if r["status"] != "ok"]
    for r in reps:
        for key, why in r.get("skipped", {}).items():
            msg = f"{key} skipped: {why}"
            if msg not in warnings:
                warnings.append(msg)
    meta = {"version": __version__, "seeds": seeds, "seconds": time.perf_counter() - started,
            "theta_selection": "oracle-theta (best test accuracy over the grid)",
            "std_ddof": 1, "standardized": isinstance(config.dataset, MultiviewSpec) and config.dataset.standardize}
    return ExperimentReport(config.to_dict(), config.config_hash(), reps, agg["summary"], agg["recall"],
                            agg["spend_top_half_fraction"], agg["allocation_summary"], warnings, meta)


# -- output files -----------------------------------------------------------------


def _dataset_label(config: dict) -> str:
    ds = config["dataset"]
    if ds.get("kind") == "multiview_csv":
        return ds["original_view"]
    return ds.get("kind", "dataset")


def write_summary_csv(report: ExperimentReport, path) -> None:
    cols = [("SL", "SL"), ("EXML_AUG^ME", "EXML_AUG^ME"), ("EXML_CSD^UA", "EXML_CSD^UA"), ("EXML", "EXML_CSD^ME"),
            ("EXML_AUG^UA", "EXML_AUG^UA")]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["feature", "budget", *[f"{c}_{s}" for c, _ in cols for s in ("mean", "std")], "recall"])
        row = [_dataset_label(report.config), report.config["budget_ratio"]]
        for _, key in cols:
            st = report.summary.get(key)
            row += [f"{st['mean']:.2f}", f"{st['std']:.2f}"] if st else ["", ""]
        rec = report.recall.get("ME")
        row.append("" if rec is None else f"{rec:.2f}")
        w.writerow(row)


def write_report_outputs(report: ExperimentReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "report.json", out / "summary.csv"]
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    write_summary_csv(report, out / "summary.csv")

    for tag, alloc in report.allocation_summary.items():
        p = out / f"allocation_{tag}.csv"
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["feature_id", "feature_name", "total_spend", "fraction"])
            for k, (s, f) in enumerate(zip(alloc["total_spend"], alloc["fraction"])):
                name = alloc["feature_names"][k] if k < len(alloc["feature_names"]) else str(k)
                w.writerow([k, name, int(s), f"{f:.6f}"])
        written.append(p)
        p = out / f"episodes_{tag}.csv"
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["repetition", "episode", "feature_id", "n_cumulative", "risk"])
            for r in report.successful:
                for e in r["allocation"].get(tag, {}).get("episodes", []):
                    for f in e["active"]:
                        w.writerow([r["index"], e["episode"], f, e["n_cumulative"], repr(e["risks"][str(f)])])
        written.append(p)

    p = out / "repetitions.csv"
    keys = sorted({k for r in report.successful for k in r["accuracy"]})
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "seed", "status", "initial_theta", *keys])
        for r in report.repetitions:
            w.writerow([r["index"], r["seed"], r["status"], r.get("initial_theta", ""),
                        *[repr(r["accuracy"][k]) if r.get("accuracy", {}).get(k) is not None else "" for k in keys]])
    written.append(p)
    return written


def format_summary(report: ExperimentReport) -> str:
    lines = [f"dataset={_dataset_label(report.config)} budget_ratio={report.config['budget_ratio']} "
             f"repetitions={len(report.successful)}/{len(report.repetitions)}"]
    for key, st in report.summary.items():
        lines.append(f"  {key:<14} {st['mean']:6.2f} ± {st['std']:5.2f}")
    for tag, r in report.recall.items():
        lines.append(f"  recall^{tag:<7} {r:6.2f}")
    for w in report.warnings:
        lines.append(f"  warning: {w}")
    return "\n".join(lines)
