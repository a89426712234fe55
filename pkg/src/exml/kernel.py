"""Gaussian kernel, median-heuristic bandwidth and Gram matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import DegenerateDataError, InputError


@dataclass(frozen=True)
class KernelParams:
    """Bandwidth of ``k(x, y) = exp(-||x - y||^2 / gamma)``.

    ``gamma`` is expressed in squared-distance units.
    """

    gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise InputError(f"kernel gamma must be a positive finite number, got {self.gamma!r}")


def _as_matrix(X, name="X") -> np.ndarray:
    try:
        arr = np.asarray(X, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name}: rows must be numeric vectors of equal length") from exc
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError(f"{name}: expected a list of feature vectors, got shape {arr.shape}")
    return arr


def gaussian_kernel(x, y, params: KernelParams) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape} vs {y.shape}")
    diff = x - y
    return float(np.exp(-np.dot(diff, diff) / params.gamma))


def median_bandwidth(X) -> KernelParams:
    """Median of squared distances over unordered pairs ``i < j``.

    Even pair counts average the two middle values (``np.median``).
    """
    X = _as_matrix(X)
    if X.shape[0] < 2:
        raise InputError("median bandwidth needs at least two points")
    gamma = float(np.median(pdist(X, "sqeuclidean")))
    if gamma <= 0:
        raise DegenerateDataError("median squared pairwise distance is zero; points are (mostly) identical")
    return KernelParams(gamma)


def cross_kernel(A, B, params: KernelParams) -> np.ndarray:
    """Rectangular kernel block ``M[i, j] = k(A[i], B[j])``."""
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise InputError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    return np.exp(-cdist(A, B, "sqeuclidean") / params.gamma)


def kernel_matrix(X, params: KernelParams) -> np.ndarray:
    X = _as_matrix(X)
    if X.shape[0] < 1:
        raise InputError("kernel matrix needs at least one point")
    M = cross_kernel(X, X, params)
    # cdist can leave tiny asymmetries and off-unit diagonals
    M = 0.5 * (M + M.T)
    np.fill_diagonal(M, 1.0)
    return M
