"""Declarative experiment configuration (one JSON document drives a run)."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .acquisition import STRATEGIES
from .errors import ConfigError
from .rejection import TrainConfig

VARIANTS = ("SL", "EXML_AUG", "EXML_CSD")
DEFAULT_THETA_GRID = (0.1, 0.2, 0.3, 0.4)


@dataclass(frozen=True)
class SyntheticSpec:
    a: float = 1.0
    n_per_class: int = 100
    n_test_per_class: int | None = None
    angles: tuple = (10, 20, 30, 40, 50, 60, 70, 80, 90)
    kind: str = "synthetic"


@dataclass(frozen=True)
class MultiviewSpec:
    """Multi-view CSV.  ``class_configurations`` is a list of
    ``{"positive": [...], "negative": [...], "unknown": [...], "ignore": [...]}``;
    repetitions are run for each configuration in turn."""

    path: str
    views: dict | str
    original_view: str
    class_configurations: tuple
    train_fraction: float = 1 / 3
    test_fraction: float = 2 / 3
    standardize: bool = True
    kind: str = "multiview_csv"


@dataclass(frozen=True)
class FilesSpec:
    """A directory written by ``exml synth`` (train/test/candidates CSV + manifest)."""

    path: str
    kind: str = "files"


_DATASET_KINDS = {"synthetic": SyntheticSpec, "multiview_csv": MultiviewSpec, "files": FilesSpec}


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: SyntheticSpec | MultiviewSpec | FilesSpec = field(default_factory=SyntheticSpec)
    budget_ratio: float = 0.2
    theta_grid: tuple = DEFAULT_THETA_GRID
    strategies: tuple = ("median", "uniform")
    variants: tuple = VARIANTS
    repetitions: int = 10
    seed: int = 0
    acquisition_theta: float = 0.3
    ranking_theta: float = 0.3
    calibration_folds: int = 5
    target_accepted_accuracy: float = 0.95
    train: TrainConfig = field(default_factory=lambda: TrainConfig(loss_normalization="sum"))
    threads: int = 1

    def __post_init__(self):
        if not 0.0 <= self.budget_ratio <= 1.0:
            raise ConfigError("must lie in [0, 1]", "budget_ratio")
        if not self.theta_grid or not all(0.0 < t < 0.5 for t in self.theta_grid):
            raise ConfigError("must be a non-empty list of values in (0, 0.5)", "theta_grid")
        for key in ("acquisition_theta", "ranking_theta"):
            if not 0.0 < getattr(self, key) < 0.5:
                raise ConfigError("must lie in (0, 0.5)", key)
        bad = [s for s in self.strategies if s not in STRATEGIES]
        if bad or not self.strategies:
            raise ConfigError(f"unknown strategies {bad}; choose from {list(STRATEGIES)}", "strategies")
        bad = [v for v in self.variants if v not in VARIANTS]
        if bad or not self.variants:
            raise ConfigError(f"unknown variants {bad}; choose from {list(VARIANTS)}", "variants")
        if self.repetitions < 1:
            raise ConfigError("must be at least 1", "repetitions")
        if self.calibration_folds < 2:
            raise ConfigError("must be at least 2", "calibration_folds")
        if not 0.0 < self.target_accepted_accuracy <= 1.0:
            raise ConfigError("must lie in (0, 1]", "target_accepted_accuracy")
        if self.threads < 1:
            raise ConfigError("must be at least 1", "threads")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dataset"] = asdict(self.dataset)
        d["train"] = asdict(self.train)
        return d

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("top level must be a JSON object")
        raw = dict(raw)
        if "strategy" in raw:
            if "strategies" in raw:
                raise ConfigError("give either 'strategy' or 'strategies', not both", "strategy")
            s = raw.pop("strategy")
            raw["strategies"] = [s] if isinstance(s, str) else s
        known = {f.name for f in fields(cls)}
        for key in raw:
            if key not in known:
                raise ConfigError("unknown configuration key", key)
        kwargs = {}
        for key, value in raw.items():
            if key == "dataset":
                kwargs[key] = _parse_dataset(value)
            elif key == "train":
                kwargs[key] = _parse_train(value)
            elif key in ("theta_grid", "strategies", "variants"):
                if not isinstance(value, (list, tuple)):
                    raise ConfigError("must be a list", key)
                kwargs[key] = tuple(float(v) for v in value) if key == "theta_grid" else tuple(map(str, value))
            else:
                kwargs[key] = _scalar(key, value, cls.__dataclass_fields__[key].default)
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(raw)

    def replace(self, **changes) -> "ExperimentConfig":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(changes)
        return ExperimentConfig(**d)


def _scalar(key, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError("must be true or false", key)
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("must be an integer", key)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("must be a number", key)
        return float(value)
    return value


def _parse_train(raw) -> TrainConfig:
    if not isinstance(raw, dict):
        raise ConfigError("must be an object", "train")
    base = TrainConfig(loss_normalization="sum")
    known = {f.name for f in fields(TrainConfig)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError("unknown key", f"train.{key}")
        kwargs[key] = _scalar(f"train.{key}", value, getattr(base, key))
    try:
        return TrainConfig(**{**asdict(base), **kwargs})
    except ValueError as exc:
        raise ConfigError(str(exc), "train") from exc


def _parse_dataset(raw):
    if not isinstance(raw, dict):
        raise ConfigError("must be an object", "dataset")
    raw = dict(raw)
    kind = raw.pop("kind", "synthetic")
    if kind not in _DATASET_KINDS:
        raise ConfigError(f"unknown dataset kind {kind!r}", "dataset.kind")
    spec_cls = _DATASET_KINDS[kind]
    known = {f.name for f in fields(spec_cls)} - {"kind"}
    for key in raw:
        if key not in known:
            raise ConfigError("unknown key", f"dataset.{key}")
    if kind == "synthetic":
        if "angles" in raw:
            if not isinstance(raw["angles"], (list, tuple)) or not raw["angles"]:
                raise ConfigError("must be a non-empty list", "dataset.angles")
            raw["angles"] = tuple(raw["angles"])
        for key in ("n_per_class", "n_test_per_class"):
            if key in raw and raw[key] is not None and (not isinstance(raw[key], int) or raw[key] < 1):
                raise ConfigError("must be a positive integer", f"dataset.{key}")
    elif kind == "multiview_csv":
        for key in ("path", "views", "original_view", "class_configurations"):
            if key not in raw:
                raise ConfigError("required", f"dataset.{key}")
        confs = raw["class_configurations"]
        if not isinstance(confs, (list, tuple)) or not confs:
            raise ConfigError("must be a non-empty list", "dataset.class_configurations")
        for i, c in enumerate(confs):
            if not isinstance(c, dict) or not {"positive", "negative"} <= set(c):
                raise ConfigError("needs 'positive' and 'negative' label lists",
                                  f"dataset.class_configurations[{i}]")
        raw["class_configurations"] = tuple(confs)
    elif "path" not in raw:
        raise ConfigError("required", "dataset.path")
    try:
        return spec_cls(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc), "dataset") from exc
