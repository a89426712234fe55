"""Kernel rejection model ``f = (h, g)``: losses, ERM training, inference.

A sample is rejected when ``g(x) < 0`` and otherwise labelled by the sign of
``h(x)`` (``h(x) = 0`` counts as positive).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import _solver
from .errors import ConvergenceError, InputError
from .kernel import KernelParams, cross_kernel, kernel_matrix
from .labels import NEGATIVE, POSITIVE, REJECT

MODEL_SCHEMA = "exml-rejection-model/1"


def check_theta(theta: float) -> float:
    theta = float(theta)
    if not (0.0 < theta < 0.5):
        raise InputError(f"rejection threshold must satisfy 0 < theta < 0.5, got {theta}")
    return theta


def check_labels(y) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if not np.all((y == 1) | (y == -1)):
        raise InputError("labels must be -1 or +1")
    return y


@dataclass(frozen=True)
class TrainConfig:
    """ERM settings.

    ``loss_normalization`` selects how the surrogate term is scaled relative to
    the regularisers: ``"mean"`` divides the summed loss by ``m``, ``"sum"``
    does not.  ``seed`` fixes the coordinate visiting order.
    """

    c_h: float = 1.0
    c_g: float = 1.0
    solver_tolerance: float = 1e-6
    max_iterations: int = 100_000
    loss_normalization: str = "mean"
    seed: int = 0

    def __post_init__(self):
        if not (self.c_h > 0 and self.c_g > 0):
            raise InputError("c_h and c_g must be positive")
        if not self.solver_tolerance > 0:
            raise InputError("solver_tolerance must be positive")
        if int(self.max_iterations) < 1:
            raise InputError("max_iterations must be a positive integer")
        if self.loss_normalization not in ("mean", "sum"):
            raise InputError("loss_normalization must be 'mean' or 'sum'")

    def loss_scale(self, m: int) -> float:
        return 1.0 / m if self.loss_normalization == "mean" else 1.0


@dataclass(frozen=True, eq=False)
class RejectionModel:
    support_points: np.ndarray
    u: np.ndarray
    w: np.ndarray
    kernel: KernelParams
    theta: float
    fit_info: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.support_points, dtype=float))
        u = np.asarray(self.u, dtype=float).ravel()
        w = np.asarray(self.w, dtype=float).ravel()
        if not (len(u) == len(w) == pts.shape[0]):
            raise InputError("u, w and support_points must have the same length")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(u)) and np.all(np.isfinite(w))):
            raise InputError("model parameters must be finite")
        check_theta(self.theta)
        object.__setattr__(self, "support_points", pts)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "w", w)

    @property
    def dim(self) -> int:
        return self.support_points.shape[1]

    def decision_values(self, X) -> tuple[np.ndarray, np.ndarray]:
        """``(h(X), g(X))`` for a batch of rows."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.dim:
            raise InputError(f"expected {self.dim}-dimensional inputs, got {X.shape[1]}")
        if X.shape[0] == 0:
            return np.empty(0), np.empty(0)
        Kx = cross_kernel(X, self.support_points, self.kernel)
        return Kx @ self.u, Kx @ self.w

    def predict_labels(self, X) -> np.ndarray:
        h, g = self.decision_values(X)
        return decide(h, g)


class Prediction(NamedTuple):
    label: int
    h_value: float
    g_value: float


def decide(h, g) -> np.ndarray:
    """Vectorised decision rule: REJECT iff ``g < 0``, else ``sign(h)`` with ties positive."""
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    return np.where(g < 0, REJECT, np.where(h >= 0, POSITIVE, NEGATIVE)).astype(int)


def zero_one_rejection_loss(h_value, g_value, y, theta):
    """0/1 loss with rejection; vectorises over array arguments."""
    h = np.asarray(h_value, dtype=float)
    g = np.asarray(g_value, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.where(g <= 0, theta, np.where((y * h < 0) & (g > 0), 1.0, 0.0))
    return float(out) if out.ndim == 0 else out


def surrogate_loss(h_value, g_value, y, theta):
    """Convex upper bound ``max{1 + (g - y h)/2, theta (1 - g/(1 - 2 theta)), 0}``."""
    h = np.asarray(h_value, dtype=float)
    g = np.asarray(g_value, dtype=float)
    y = np.asarray(y, dtype=float)
    hinge = 1.0 + 0.5 * (g - y * h)
    gate = theta * (1.0 - g / (1.0 - 2.0 * theta))
    out = np.maximum(np.maximum(hinge, gate), 0.0)
    return float(out) if out.ndim == 0 else out


def erm_objective(u, w, K, y, theta, config: TrainConfig) -> float:
    """Regularised surrogate risk of coefficients ``(u, w)`` on Gram matrix ``K``."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    h = K @ u
    g = K @ w
    loss = surrogate_loss(h, g, y, theta)
    return float(
        config.loss_scale(len(y)) * np.sum(loss) + config.c_h * u @ K @ u + config.c_g * w @ K @ w
    )


def train_rejection_model(
    X, y, theta: float, kernel: KernelParams, config: TrainConfig | None = None
) -> RejectionModel:
    config = config or TrainConfig()
    theta = check_theta(theta)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = check_labels(y)
    if X.shape[0] != len(y) or len(y) == 0:
        raise InputError("X and y must be non-empty and of equal length")
    if not np.all(np.isfinite(X)):
        raise InputError("training inputs must be finite")

    K = kernel_matrix(X, kernel)
    scale = config.loss_scale(len(y))
    a, b, primal, dual, sweeps, converged = _solver.solve_dual(
        K, y, theta, float(config.c_h), float(config.c_g), scale,
        float(config.solver_tolerance), int(config.max_iterations), int(config.seed),
    )
    gap = (primal - dual) / max(abs(primal), 1e-12)
    if not converged:
        raise ConvergenceError("rejection ERM did not converge", gap, sweeps)

    c = theta / (1.0 - 2.0 * theta)
    u = a * y / (4.0 * config.c_h)
    w = (c * b - 0.5 * a) / (2.0 * config.c_g)
    info = {"objective": float(primal), "dual": float(dual), "gap": float(gap), "sweeps": int(sweeps)}
    return RejectionModel(X.copy(), u, w, kernel, theta, fit_info=info)


def predict(model: RejectionModel, x) -> Prediction:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise InputError("predict expects a single feature vector")
    h, g = model.decision_values(x)
    h, g = float(h[0]), float(g[0])
    return Prediction(int(decide(h, g)), h, g)


def empirical_risk(model: RejectionModel, X, y, theta: float | None = None) -> float:
    """Mean 0/1 rejection loss of ``model`` on ``(X, y)``."""
    y = check_labels(y)
    if len(y) == 0:
        raise InputError("empirical risk of an empty dataset is undefined")
    theta = model.theta if theta is None else check_theta(theta)
    h, g = model.decision_values(X)
    if len(h) != len(y):
        raise InputError("X and y must have equal length")
    return float(np.mean(zero_one_rejection_loss(h, g, y, theta)))


# -- serialisation ---------------------------------------------------------


def model_to_dict(model: RejectionModel) -> dict:
    return {
        "schema": MODEL_SCHEMA,
        "gamma": model.kernel.gamma,
        "theta": model.theta,
        "support_points": model.support_points.tolist(),
        "u": model.u.tolist(),
        "w": model.w.tolist(),
    }


def model_from_dict(data: dict) -> RejectionModel:
    if data.get("schema") != MODEL_SCHEMA:
        raise InputError(f"unsupported model schema {data.get('schema')!r}")
    try:
        return RejectionModel(
            np.asarray(data["support_points"], dtype=float),
            np.asarray(data["u"], dtype=float),
            np.asarray(data["w"], dtype=float),
            KernelParams(float(data["gamma"])),
            float(data["theta"]),
        )
    except KeyError as exc:
        raise InputError(f"model record missing field {exc.args[0]!r}") from None


def save_model(model: RejectionModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path) -> RejectionModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
