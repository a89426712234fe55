import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from exml.errors import DegenerateDataError, InputError
from exml.kernel import KernelParams, cross_kernel, gaussian_kernel, kernel_matrix, median_bandwidth


def test_gaussian_kernel_examples():
    assert gaussian_kernel([1.5, -2.0], [1.5, -2.0], KernelParams(1.0)) == 1.0
    np.testing.assert_allclose(gaussian_kernel([0.0], [1.0], KernelParams(1.0)), np.exp(-1))
    np.testing.assert_allclose(gaussian_kernel([0.0, 0.0], [3.0, 4.0], KernelParams(25.0)), np.exp(-1))


def test_gaussian_kernel_dimension_mismatch():
    with pytest.raises(InputError):
        gaussian_kernel([0.0], [0.0, 1.0], KernelParams(1.0))


@pytest.mark.parametrize("gamma", [0.0, -1.0, np.inf, np.nan])
def test_kernel_params_reject_bad_gamma(gamma):
    with pytest.raises(InputError):
        KernelParams(gamma)


def test_median_bandwidth_examples():
    assert median_bandwidth([[0.0], [2.0]]).gamma == 4.0
    # squared distances {1, 9, 4}
    assert median_bandwidth([[0.0], [1.0], [3.0]]).gamma == 4.0
    # four points: six pairs {1, 4, 9, 1, 4, 1} -> middle values 1 and 4
    assert median_bandwidth([[0.0], [1.0], [2.0], [3.0]]).gamma == 2.5


def test_median_bandwidth_errors():
    with pytest.raises(DegenerateDataError):
        median_bandwidth([[0.0], [0.0]])
    with pytest.raises(InputError):
        median_bandwidth([[1.0]])


def test_kernel_matrix_examples():
    np.testing.assert_array_equal(kernel_matrix([[3.0, 1.0]], KernelParams(2.0)), [[1.0]])
    e = np.exp(-1)
    np.testing.assert_allclose(kernel_matrix([[0.0], [1.0]], KernelParams(1.0)), [[1, e], [e, 1]])


def test_kernel_matrix_matches_pairwise_evaluation():
    X = np.random.default_rng(3).normal(size=(7, 3))
    p = KernelParams(2.7)
    K = kernel_matrix(X, p)
    ref = np.array([[gaussian_kernel(a, b, p) for b in X] for a in X])
    np.testing.assert_allclose(K, ref, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(cross_kernel(X[:3], X, p), ref[:3], rtol=1e-12, atol=1e-15)


def test_kernel_matrix_ragged_rows():
    with pytest.raises(InputError):
        kernel_matrix([[0.0, 1.0], [1.0]], KernelParams(1.0))


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 50), st.integers(1, 4)),
              elements=st.floats(-10, 10, allow_nan=False)),
       st.floats(0.05, 50.0))
def test_kernel_matrix_is_psd(X, gamma):
    K = kernel_matrix(X, KernelParams(gamma))
    np.testing.assert_array_equal(K, K.T)
    np.testing.assert_array_equal(np.diag(K), 1.0)
    assert np.linalg.eigvalsh(K).min() >= -1e-8
