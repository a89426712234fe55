"""Exploratory learning with unknown unknowns.

Rejection models flag low-confidence samples, a query budget is spent to find
the most informative hidden feature, and a two-layer cascade classifies known
classes while reporting the rest as an unknown class.
"""

__version__ = "0.1.0"

from .acquisition import AllocationReport, median_elimination, uniform_allocation  # noqa: E402
from .cascade import CascadeModel, build_cascade, cascade_predict  # noqa: E402
from .data import FeatureOracle, SyntheticConfig, TestSet, TrainingSet, generate_synthetic  # noqa: E402
from .kernel import KernelParams, gaussian_kernel, kernel_matrix, median_bandwidth  # noqa: E402
from .rejection import RejectionModel, TrainConfig, predict, train_rejection_model  # noqa: E402

__all__ = [
    "AllocationReport", "CascadeModel", "FeatureOracle", "KernelParams", "RejectionModel",
    "SyntheticConfig", "TestSet", "TrainConfig", "TrainingSet", "build_cascade", "cascade_predict",
    "gaussian_kernel", "generate_synthetic", "kernel_matrix", "median_bandwidth", "median_elimination",
    "predict", "train_rejection_model", "uniform_allocation",
]
