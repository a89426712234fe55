"""Datasets with hidden candidate features and the budget-metered oracle.

A candidate feature is a block of one or more columns.  Querying it for one
sample reveals the whole block and costs one unit of budget.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import BudgetExhaustedError, InputError
from .labels import NEGATIVE, POSITIVE, UNKNOWN, label_code, label_name


@dataclass(frozen=True, eq=False)
class TrainingSet:
    observed: np.ndarray
    labels: np.ndarray
    sample_ids: tuple

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.observed, dtype=float))
        y = np.asarray(self.labels, dtype=int).ravel()
        ids = tuple(str(s) for s in self.sample_ids)
        if not (X.shape[0] == len(y) == len(ids)):
            raise InputError("observed, labels and sample_ids must have the same row count")
        if not np.all((y == POSITIVE) | (y == NEGATIVE)):
            raise InputError("training labels must be -1 or +1")
        if len(set(ids)) != len(ids):
            raise InputError("sample ids must be unique")
        object.__setattr__(self, "observed", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "sample_ids", ids)

    def __len__(self):
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.observed.shape[1]

    def subset(self, rows) -> "TrainingSet":
        rows = np.asarray(rows, dtype=int)
        return TrainingSet(self.observed[rows], self.labels[rows], [self.sample_ids[r] for r in rows])


@dataclass(frozen=True, eq=False)
class TestSet:
    """Evaluation rows; candidate blocks are stored in full (not metered)."""

    __test__ = False  # not a pytest class

    observed: np.ndarray
    candidates: tuple
    truth: np.ndarray
    sample_ids: tuple

    def __post_init__(self):
        X = np.asarray(self.observed, dtype=float)
        if X.ndim == 1:
            X = X.reshape(len(self.truth), -1)
        truth = np.asarray(self.truth, dtype=int).ravel()
        ids = tuple(str(s) for s in self.sample_ids)
        blocks = tuple(_as_block(c, X.shape[0]) for c in self.candidates)
        if not (X.shape[0] == len(truth) == len(ids)):
            raise InputError("test observed, truth and sample_ids must have the same row count")
        if not np.all(np.isin(truth, (POSITIVE, NEGATIVE, UNKNOWN))):
            raise InputError("test truth must be POSITIVE, NEGATIVE or UNKNOWN")
        object.__setattr__(self, "observed", X)
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "sample_ids", ids)
        object.__setattr__(self, "candidates", blocks)

    def __len__(self):
        return len(self.truth)

    def augmented(self, feature_id: int) -> np.ndarray:
        return np.hstack([self.observed, self.candidates[feature_id]])


def _as_block(values, n_rows: int) -> np.ndarray:
    block = np.asarray(values, dtype=float)
    if block.ndim == 1:
        block = block[:, None]
    if block.ndim != 2 or block.shape[0] != n_rows:
        raise InputError(f"candidate block has shape {block.shape}, expected {n_rows} rows")
    return block


@dataclass(frozen=True, eq=False)
class Dataset:
    """Everything one repetition needs: training rows, the hidden candidate
    blocks for those rows, and a test set."""

    train: TrainingSet
    train_candidates: tuple
    test: TestSet
    feature_names: tuple
    reference_ranking: tuple | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        blocks = tuple(_as_block(c, len(self.train)) for c in self.train_candidates)
        object.__setattr__(self, "train_candidates", blocks)
        object.__setattr__(self, "feature_names", tuple(str(n) for n in self.feature_names))
        if len(blocks) != len(self.feature_names) or len(self.test.candidates) != len(blocks):
            raise InputError("feature_names, train and test candidate blocks disagree on K")
        for k, (a, b) in enumerate(zip(blocks, self.test.candidates)):
            if a.shape[1] != b.shape[1]:
                raise InputError(f"candidate {k} has width {a.shape[1]} in train, {b.shape[1]} in test")

    @property
    def n_features(self) -> int:
        return len(self.train_candidates)

    def feature_width(self, feature_id: int) -> int:
        return self.train_candidates[feature_id].shape[1]

    def oracle(self, budget: int) -> "FeatureOracle":
        return FeatureOracle(self.train_candidates, self.train.sample_ids, budget, self.feature_names)


# -- budget ----------------------------------------------------------------


def budget_for(ratio: float, m: int, k: int) -> int:
    """``floor(b * m * K)``; the epsilon absorbs float noise such as 0.2*300*9."""
    if not 0.0 <= ratio <= 1.0:
        raise InputError(f"budget ratio must lie in [0, 1], got {ratio}")
    return int(math.floor(ratio * m * k + 1e-9))


class AuditEntry(NamedTuple):
    sequence: int
    sample_id: str
    feature_id: int
    cost: int


class FeatureOracle:
    """Budget-metered access to hidden candidate values.

    Each ``(sample, feature)`` pair is charged once; re-queries are free and
    return the same value.  Charging is atomic under a lock.
    """

    cost_per_query = 1

    def __init__(self, candidate_values: Sequence, sample_ids: Sequence, budget: int,
                 feature_names: Sequence[str] | None = None):
        ids = [str(s) for s in sample_ids]
        self._blocks = [_as_block(c, len(ids)) for c in candidate_values]
        self._row_of = {sid: i for i, sid in enumerate(ids)}
        if len(self._row_of) != len(ids):
            raise InputError("sample ids must be unique")
        if int(budget) < 0:
            raise InputError("budget must be non-negative")
        self.sample_ids = tuple(ids)
        self.feature_names = tuple(feature_names) if feature_names else tuple(
            f"f{k}" for k in range(len(self._blocks)))
        self.initial_budget = int(budget)
        self._remaining = int(budget)
        self._queried: set[tuple[str, int]] = set()
        self._log: list[AuditEntry] = []
        self._lock = threading.Lock()

    @property
    def n_features(self) -> int:
        return len(self._blocks)

    @property
    def n_samples(self) -> int:
        return len(self.sample_ids)

    @property
    def budget_remaining(self) -> int:
        return self._remaining

    @property
    def budget_spent(self) -> int:
        return self.initial_budget - self._remaining

    @property
    def audit_log(self) -> list[AuditEntry]:
        with self._lock:
            return list(self._log)

    def feature_width(self, feature_id: int) -> int:
        return self._blocks[feature_id].shape[1]

    def is_queried(self, sample_id, feature_id: int) -> bool:
        return (str(sample_id), int(feature_id)) in self._queried

    def _charge(self, sample_id: str, feature_id: int) -> int:
        if not 0 <= feature_id < len(self._blocks):
            raise InputError(f"unknown feature id {feature_id}")
        try:
            row = self._row_of[sample_id]
        except KeyError:
            raise InputError(f"unknown sample id {sample_id!r}") from None
        key = (sample_id, feature_id)
        with self._lock:
            if key not in self._queried:
                if self._remaining < self.cost_per_query:
                    raise BudgetExhaustedError(
                        f"budget exhausted querying feature {feature_id} of sample {sample_id!r}")
                self._remaining -= self.cost_per_query
                self._queried.add(key)
                self._log.append(AuditEntry(len(self._log), sample_id, feature_id, self.cost_per_query))
        return row

    def query(self, sample_id, feature_id: int):
        """Value of one candidate for one sample: a float for single-column
        features, a 1-D array for column blocks."""
        feature_id = int(feature_id)
        row = self._charge(str(sample_id), feature_id)
        block = self._blocks[feature_id]
        return float(block[row, 0]) if block.shape[1] == 1 else block[row].copy()

    def query_rows(self, sample_ids: Sequence, feature_id: int) -> np.ndarray:
        """Charge and fetch ``feature_id`` for several samples; returns ``(n, width)``."""
        feature_id = int(feature_id)
        rows = [self._charge(str(s), feature_id) for s in sample_ids]
        return self._blocks[feature_id][rows].copy()

    def write_audit_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sequence", "sample_id", "feature_id", "cost"])
            writer.writerows(self.audit_log)


def query_feature(oracle: FeatureOracle, sample_id, feature_id: int):
    return oracle.query(sample_id, feature_id)


def replay_audit(entries: Sequence[AuditEntry]) -> tuple[dict[int, int], bool]:
    """Per-feature spend reconstructed from an audit log, and whether every
    ``(sample, feature)`` pair appears at most once."""
    spend: dict[int, int] = {}
    seen = set()
    unique = True
    for e in entries:
        key = (str(e.sample_id), int(e.feature_id))
        unique &= key not in seen
        seen.add(key)
        spend[int(e.feature_id)] = spend.get(int(e.feature_id), 0) + int(e.cost)
    return spend, unique


def read_audit_csv(path) -> list[AuditEntry]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [AuditEntry(int(r["sequence"]), r["sample_id"], int(r["feature_id"]), int(r["cost"]))
                for r in csv.DictReader(fh)]


# -- synthetic data ----------------------------------------------------------


@dataclass(frozen=True)
class SyntheticConfig:
    """Three Gaussian classes in 3-d; only (x, y) is observed and the third
    class is mislabelled at random.  Candidates project (x, y, z) onto
    ``(cos a, 0, sin a)`` for each angle ``a`` in degrees."""

    a: float = 1.0
    n_per_class: int = 100
    angles: tuple = (10, 20, 30, 40, 50, 60, 70, 80, 90)
    seed: int = 0
    n_test_per_class: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(x) for x in self.angles))
        if not self.a > 0:
            raise InputError("cluster offset a must be positive")
        if int(self.n_per_class) < 1:
            raise InputError("n_per_class must be a positive integer")
        if not self.angles:
            raise InputError("at least one candidate angle is required")
        for ang in self.angles:
            if not 0.0 < ang <= 90.0:
                raise InputError(f"candidate angles must lie in (0, 90] degrees, got {ang}")

    @property
    def sigma(self) -> float:
        return 3.0 * self.a

    @property
    def z(self) -> float:
        return 5.0 * self.a


def _synthetic_points(cfg: SyntheticConfig, n: int, rng: np.random.Generator):
    sd = math.sqrt(cfg.sigma)
    means = (np.array([-cfg.a, 0.0, -cfg.z]), np.array([cfg.a, 0.0, cfg.z]), np.zeros(3))
    scales = (sd, sd, math.sqrt(cfg.sigma / 2.0))
    pts = np.vstack([rng.normal(mu, s, size=(n, 3)) for mu, s in zip(means, scales)])
    cls = np.repeat([1, 2, 3], n)
    return pts, cls


def project_angles(points: np.ndarray, angles) -> list[np.ndarray]:
    """One scalar column per angle: ``x cos a + z sin a``."""
    out = []
    for ang in angles:
        r = math.radians(ang)
        # exact at 90 degrees so the candidate reproduces the hidden coordinate
        c, s = (0.0, 1.0) if ang == 90 else (math.cos(r), math.sin(r))
        out.append((points[:, 0] * c + points[:, 2] * s)[:, None])
    return out


def generate_synthetic(config: SyntheticConfig) -> Dataset:
    rng = np.random.default_rng(config.seed)
    n_test = config.n_test_per_class or config.n_per_class

    pts, cls = _synthetic_points(config, config.n_per_class, rng)
    order = rng.permutation(len(cls))
    pts, cls = pts[order], cls[order]
    labels = np.where(cls == 1, NEGATIVE, POSITIVE)
    unk = cls == 3
    labels[unk] = rng.choice([NEGATIVE, POSITIVE], size=int(unk.sum()))
    train = TrainingSet(pts[:, :2], labels, [f"tr{i:05d}" for i in range(len(cls))])

    tpts, tcls = _synthetic_points(config, n_test, rng)
    order = rng.permutation(len(tcls))
    tpts, tcls = tpts[order], tcls[order]
    truth = np.select([tcls == 1, tcls == 2], [NEGATIVE, POSITIVE], UNKNOWN)
    test = TestSet(tpts[:, :2], project_angles(tpts, config.angles), truth,
                   [f"te{i:05d}" for i in range(len(tcls))])

    names = [f"angle_{ang:g}" for ang in config.angles]
    ranking = tuple(sorted(range(len(config.angles)), key=lambda k: (-config.angles[k], k)))
    return Dataset(
        train, project_angles(pts, config.angles), test, names, ranking,
        metadata={"kind": "synthetic", "hidden_z_train": pts[:, 2], "train_classes": cls},
    )


# -- multi-view CSV ---------------------------------------------------------


def _resolve_view_columns(header: list[str], spec) -> list[str]:
    if isinstance(spec, str):
        if ":" not in spec:
            spec = [spec]
        else:
            lo, hi = spec.split(":", 1)
            for col in (lo, hi):
                if col not in header:
                    raise InputError(f"view range references missing column {col!r}")
            i, j = header.index(lo), header.index(hi)
            if j < i:
                raise InputError(f"view range {spec!r} is reversed")
            return header[i:j + 1]
    cols = [str(c) for c in spec]
    missing = [c for c in cols if c not in header]
    if missing:
        raise InputError(f"missing columns {missing}")
    return cols


def load_view_assignment(path) -> dict[str, list[str] | str]:
    """JSON sidecar ``{view: [columns] | "first:last"}``."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: cannot read view assignment: {exc}") from exc
    if not isinstance(data, dict) or not data:
        raise InputError(f"{path}: view assignment must be a non-empty object")
    return data


def load_multiview_csv(
    path,
    views: Mapping[str, Sequence[str] | str],
    original_view: str,
    positive_labels,
    negative_labels,
    unknown_labels=(),
    ignore_labels=(),
    train_fraction: float = 1 / 3,
    test_fraction: float = 2 / 3,
    seed: int = 0,
    standardize: bool = True,
) -> Dataset:
    """Load a multi-view CSV (``id``, feature columns, ``label``).

    The original view becomes the observed space, every other view one
    candidate block.  Raw labels are mapped to +1/-1; unknown-class rows get a
    random training label and UNKNOWN test truth; ignored rows are dropped.
    Columns are z-scored with training statistics when ``standardize``.
    """
    path = Path(path)
    pos, neg, unk, ign = (set(map(str, s)) for s in (positive_labels, negative_labels,
                                                       unknown_labels, ignore_labels))
    overlap = (pos & neg) | (pos & unk) | (neg & unk)
    if overlap:
        raise InputError(f"labels {sorted(overlap)} are assigned to more than one class")
    if original_view not in views:
        raise InputError(f"original view {original_view!r} not in view assignment")
    if len(views) < 2:
        raise InputError("need at least one view besides the original")

    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        for col in ("id", "label"):
            if col not in header:
                raise InputError(f"{path}: missing required column {col!r}")
        view_cols = {v: _resolve_view_columns(header, spec) for v, spec in views.items()}
        feat_cols = [c for cols in view_cols.values() for c in cols]
        col_idx = {c: header.index(c) for c in feat_cols}
        id_i, lab_i = header.index("id"), header.index("label")

        ids, raw, values = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            lab = row[lab_i].strip()
            if lab in ign:
                continue
            if lab not in pos | neg | unk:
                raise InputError(f"{path}:{lineno}: column 'label': value {lab!r} outside the declared mapping")
            vals = []
            for c in feat_cols:
                try:
                    vals.append(float(row[col_idx[c]]))
                except ValueError:
                    raise InputError(f"{path}:{lineno}: column {c!r}: cannot parse {row[col_idx[c]]!r}") from None
            ids.append(row[id_i])
            raw.append(lab)
            values.append(vals)

    n = len(ids)
    if n == 0:
        raise InputError(f"{path}: no usable rows")
    if not (0 < train_fraction <= 1 and 0 <= test_fraction <= 1 and train_fraction + test_fraction <= 1 + 1e-9):
        raise InputError("train/test fractions must be positive and sum to at most 1")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_train = max(1, int(round(train_fraction * n)))
    n_test = min(n - n_train, int(round(test_fraction * n)))
    tr, te = perm[:n_train], perm[n_train:n_train + n_test]

    M = np.asarray(values, dtype=float).reshape(n, len(feat_cols))
    mean = np.zeros(M.shape[1])
    scale = np.ones(M.shape[1])
    if standardize:
        mean = M[tr].mean(axis=0)
        sd = M[tr].std(axis=0)
        scale = np.where(sd > 0, sd, 1.0)
        M = (M - mean) / scale

    raw = np.asarray(raw, dtype=object)
    y = np.where(np.isin(raw, list(pos)), POSITIVE, NEGATIVE)
    is_unk = np.isin(raw, list(unk))
    y_train = y[tr].copy()
    y_train[is_unk[tr]] = rng.choice([NEGATIVE, POSITIVE], size=int(is_unk[tr].sum()))
    truth = np.where(is_unk, UNKNOWN, y)

    def cols_of(view):
        return [feat_cols.index(c) for c in view_cols[view]]

    obs = cols_of(original_view)
    others = [v for v in views if v != original_view]
    ids_arr = np.asarray(ids, dtype=object)
    train = TrainingSet(M[np.ix_(tr, obs)], y_train, ids_arr[tr])
    test = TestSet(M[np.ix_(te, obs)], [M[np.ix_(te, cols_of(v))] for v in others], truth[te], ids_arr[te])
    return Dataset(
        train, [M[np.ix_(tr, cols_of(v))] for v in others], test, others,
        metadata={"kind": "multiview_csv", "path": str(path), "original_view": original_view,
                  "standardized": bool(standardize), "n_train": int(n_train), "n_test": int(n_test)},
    )


MFEAT_VIEWS = ("fac", "fou", "kar", "mor", "pix", "zer")


def mfeat_to_csv(raw_dir, out_csv, views_json=None) -> dict[str, list[str]]:
    """Convert the raw UCI Multiple Features files (``mfeat-fac`` ...; 200
    consecutive rows per digit) into the generic CSV plus a view sidecar."""
    raw_dir = Path(raw_dir)
    blocks, assignment = [], {}
    for v in MFEAT_VIEWS:
        f = raw_dir / f"mfeat-{v}"
        if not f.exists():
            raise InputError(f"missing Mfeat file {f}")
        arr = np.loadtxt(f, ndmin=2)
        blocks.append(arr)
        assignment[v] = [f"{v}{j}" for j in range(arr.shape[1])]
    n = blocks[0].shape[0]
    digits = np.repeat(np.arange(10), n // 10)
    with open(out_csv, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", *[c for v in MFEAT_VIEWS for c in assignment[v]], "label"])
        for i in range(n):
            w.writerow([f"m{i:04d}", *[repr(float(x)) for b in blocks for x in b[i]], int(digits[i])])
    if views_json is not None:
        Path(views_json).write_text(json.dumps(assignment), encoding="utf-8")
    return assignment


def mfeat_class_configurations(n_configs: int, seed: int) -> list[dict[str, list[str]]]:
    """Random binary conversions: three digits per known class, three for the unknown class."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_configs):
        d = [str(x) for x in rng.permutation(10)]
        out.append({"positive": d[0:3], "negative": d[3:6], "unknown": d[6:9], "ignore": d[9:]})
    return out


# -- dataset files (synth output) ------------------------------------------


def _feature_columns(name: str, width: int) -> list[str]:
    return [name] if width == 1 else [f"{name}__{j}" for j in range(width)]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_dataset_files(ds: Dataset, out_dir, extra_manifest: dict | None = None) -> dict:
    """Write ``train.csv``, ``test.csv``, ``candidates.csv`` and ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    obs_cols = [f"x{j}" for j in range(ds.train.dim)]
    cand_cols = [_feature_columns(n, ds.feature_width(k)) for k, n in enumerate(ds.feature_names)]

    with open(out / "train.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", *obs_cols, "label"])
        for sid, x, lab in zip(ds.train.sample_ids, ds.train.observed, ds.train.labels):
            w.writerow([sid, *map(_fmt, x), int(lab)])
    with open(out / "test.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", *obs_cols, "truth"])
        for sid, x, t in zip(ds.test.sample_ids, ds.test.observed, ds.test.truth):
            w.writerow([sid, *map(_fmt, x), label_name(t)])
    with open(out / "candidates.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "split", *[c for cols in cand_cols for c in cols]])
        for split, ids, blocks in (("train", ds.train.sample_ids, ds.train_candidates),
                                   ("test", ds.test.sample_ids, ds.test.candidates)):
            stacked = np.hstack(blocks)
            for sid, row in zip(ids, stacked):
                w.writerow([sid, split, *map(_fmt, row)])

    files = {}
    for name in ("train.csv", "test.csv", "candidates.csv"):
        files[name] = hashlib.sha256((out / name).read_bytes()).hexdigest()
    manifest = {
        "schema": "exml-dataset/1",
        "observed_columns": obs_cols,
        "features": [{"id": k, "name": n, "columns": cols}
                     for k, (n, cols) in enumerate(zip(ds.feature_names, cand_cols))],
        "reference_ranking": list(ds.reference_ranking) if ds.reference_ranking is not None else None,
        "files": files,
        **(extra_manifest or {}),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest


def _read_csv_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty file")
    return rows[0], [r for r in rows[1:] if r]


def _floats(path, lineno, header, row, cols) -> list[float]:
    out = []
    for c in cols:
        try:
            out.append(float(row[header.index(c)]))
        except ValueError:
            raise InputError(f"{path}:{lineno}: column {c!r}: cannot parse {row[header.index(c)]!r}") from None
    return out


def load_dataset_files(directory) -> Dataset:
    d = Path(directory)
    try:
        manifest = json.loads((d / "manifest.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{d / 'manifest.json'}: {exc}") from exc
    obs_cols = manifest["observed_columns"]
    feats = manifest["features"]

    h, rows = _read_csv_rows(d / "train.csv")
    train = TrainingSet([_floats(d / "train.csv", i + 2, h, r, obs_cols) for i, r in enumerate(rows)],
                        [int(r[h.index("label")]) for r in rows], [r[0] for r in rows])
    h, rows = _read_csv_rows(d / "test.csv")
    t_obs = np.asarray([_floats(d / "test.csv", i + 2, h, r, obs_cols) for i, r in enumerate(rows)],
                       dtype=float).reshape(len(rows), len(obs_cols))
    t_truth = [label_code(r[h.index("truth")]) for r in rows]
    t_ids = [r[0] for r in rows]

    h, rows = _read_csv_rows(d / "candidates.csv")
    by_split: dict[str, dict[str, list[str]]] = {"train": {}, "test": {}}
    for r in rows:
        by_split.setdefault(r[h.index("split")], {})[r[0]] = r

    def blocks(split, ids):
        table = by_split.get(split, {})
        missing = [s for s in ids if s not in table]
        if missing:
            raise InputError(f"{d / 'candidates.csv'}: no {split} row for sample {missing[0]!r}")
        return [np.asarray([_floats(d / "candidates.csv", 0, h, table[s], f["columns"]) for s in ids],
                           dtype=float).reshape(len(ids), len(f["columns"])) for f in feats]

    test = TestSet(t_obs, blocks("test", t_ids), t_truth, t_ids)
    ranking = manifest.get("reference_ranking")
    return Dataset(train, blocks("train", train.sample_ids), test, [f["name"] for f in feats],
                   tuple(ranking) if ranking is not None else None,
                   metadata={"kind": "files", "path": str(d)})
