"""Two-layer cascade of the initial and augmented rejection models."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .errors import AcquisitionError, InputError
from .labels import REJECT, UNKNOWN, label_name
from .rejection import RejectionModel, decide, model_from_dict, model_to_dict, predict

CASCADE_SCHEMA = "exml-cascade/1"


@dataclass(frozen=True, eq=False)
class CascadeModel:
    initial: RejectionModel
    selected_feature: int
    augmented: RejectionModel
    feature_width: int = 1
    feature_name: str | None = None

    def __post_init__(self):
        if self.feature_width < 1:
            raise InputError("feature_width must be positive")
        if self.augmented.dim != self.initial.dim + self.feature_width:
            raise InputError(
                f"augmented model expects {self.augmented.dim} inputs but the initial model has "
                f"{self.initial.dim} and the feature adds {self.feature_width}")
        if int(self.selected_feature) < 0:
            raise InputError("selected_feature must be a valid feature id")


def build_cascade(initial: RejectionModel, selected_feature: int, augmented: RejectionModel,
                  feature_width: int = 1, feature_name: str | None = None,
                  n_features: int | None = None) -> CascadeModel:
    if n_features is not None and not 0 <= selected_feature < n_features:
        raise InputError(f"feature {selected_feature} is not in a pool of {n_features}")
    return CascadeModel(initial, int(selected_feature), augmented, feature_width, feature_name)


def cascade_predict(model: CascadeModel, x_observed, candidate_value_provider: Callable[[], object]) -> int:
    """Label in {POSITIVE, NEGATIVE, UNKNOWN}.

    The provider is called only when the initial model rejects.
    """
    first = predict(model.initial, x_observed)
    if first.label != REJECT:
        return first.label
    try:
        value = candidate_value_provider()
    except AcquisitionError:
        raise
    except Exception as exc:
        raise AcquisitionError(f"could not obtain feature {model.selected_feature}: {exc}") from exc
    value = np.atleast_1d(np.asarray(value, dtype=float)) if value is not None else None
    if value is None or value.shape != (model.feature_width,) or not np.all(np.isfinite(value)):
        raise AcquisitionError(f"missing value for feature {model.selected_feature}")
    x_aug = np.concatenate([np.atleast_1d(np.asarray(x_observed, dtype=float)), value])
    second = predict(model.augmented, x_aug)
    return UNKNOWN if second.label == REJECT else second.label


class BatchPrediction(NamedTuple):
    labels: np.ndarray
    layer: np.ndarray
    h1: np.ndarray
    g1: np.ndarray
    h2: np.ndarray  # NaN where layer 2 was not reached
    g2: np.ndarray


def cascade_predict_batch(model: CascadeModel, X_observed, candidates, augment_all: bool = False) -> BatchPrediction:
    """Vectorised cascade.

    ``candidates`` is an ``(n, width)`` array of the selected feature; rows
    that never reach layer 2 may hold NaN.  With ``augment_all`` the augmented
    model labels every row and the initial model is bypassed.
    """
    X = np.asarray(X_observed, dtype=float).reshape(-1, model.initial.dim)
    n = len(X)
    h1, g1 = model.initial.decision_values(X) if n else (np.empty(0), np.empty(0))
    if augment_all:
        reach = np.ones(n, dtype=bool)
        labels = np.full(n, UNKNOWN)
    else:
        labels = decide(h1, g1)
        reach = labels == REJECT
    h2 = np.full(n, np.nan)
    g2 = np.full(n, np.nan)
    if reach.any():
        if candidates is None:
            raise AcquisitionError(f"feature {model.selected_feature} values are unavailable")
        C = np.asarray(candidates, dtype=float).reshape(n, -1)
        if C.shape[1] != model.feature_width:
            raise AcquisitionError(f"expected {model.feature_width} candidate columns, got {C.shape[1]}")
        bad = reach & ~np.all(np.isfinite(C), axis=1)
        if bad.any():
            raise AcquisitionError(f"missing value for feature {model.selected_feature} at row {int(np.argmax(bad))}")
        hv, gv = model.augmented.decision_values(np.hstack([X[reach], C[reach]]))
        h2[reach], g2[reach] = hv, gv
        second = decide(hv, gv)
        labels[reach] = np.where(second == REJECT, UNKNOWN, second)
    return BatchPrediction(labels.astype(int), np.where(reach, 2, 1), h1, g1, h2, g2)


def write_predictions_csv(path, sample_ids, pred: BatchPrediction) -> None:
    def cell(v):
        return "" if math.isnan(v) else repr(float(v))

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", "layer_decided", "label", "h1", "g1", "h2", "g2"])
        for i, sid in enumerate(sample_ids):
            w.writerow([sid, int(pred.layer[i]), label_name(pred.labels[i]), repr(float(pred.h1[i])),
                        repr(float(pred.g1[i])), cell(pred.h2[i]), cell(pred.g2[i])])


def cascade_to_dict(model: CascadeModel, observed_columns=None, feature_columns=None) -> dict:
    return {
        "schema": CASCADE_SCHEMA,
        "selected_feature": model.selected_feature,
        "feature_name": model.feature_name,
        "feature_width": model.feature_width,
        "observed_columns": list(observed_columns) if observed_columns else None,
        "feature_columns": list(feature_columns) if feature_columns else None,
        "initial": model_to_dict(model.initial),
        "augmented": model_to_dict(model.augmented),
    }


def cascade_from_dict(d: dict) -> CascadeModel:
    if d.get("schema") != CASCADE_SCHEMA:
        raise InputError(f"unsupported cascade schema {d.get('schema')!r}")
    return CascadeModel(model_from_dict(d["initial"]), int(d["selected_feature"]),
                        model_from_dict(d["augmented"]), int(d.get("feature_width", 1)), d.get("feature_name"))


def save_cascade(model: CascadeModel, path, observed_columns=None, feature_columns=None) -> None:
    Path(path).write_text(json.dumps(cascade_to_dict(model, observed_columns, feature_columns)), encoding="utf-8")


def load_cascade(path) -> tuple[CascadeModel, dict]:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    return cascade_from_dict(d), d
