import numpy as np
import pytest
from _oracle import slack_qp

from exml.errors import ConvergenceError, InputError
from exml.kernel import KernelParams, kernel_matrix, median_bandwidth
from exml.labels import NEGATIVE, POSITIVE, REJECT
from exml.rejection import (RejectionModel, TrainConfig, decide, empirical_risk, erm_objective, load_model,
                            model_from_dict, model_to_dict, predict, save_model, surrogate_loss,
                            train_rejection_model, zero_one_rejection_loss)

TIGHT = dict(solver_tolerance=1e-10)


def unit_model(u, w, s=(0.5,)):
    return RejectionModel(np.array([s]), [u], [w], KernelParams(1.0), 0.3)


# -- losses --------------------------------------------------------------------


@pytest.mark.parametrize("h,g,y,expected", [(2, 1, 1, 0.0), (2, -1, 1, 0.3), (-2, 1, 1, 1.0), (1, 0, 1, 0.3)])
def test_zero_one_loss_examples(h, g, y, expected):
    assert zero_one_rejection_loss(h, g, y, 0.3) == pytest.approx(expected)


@pytest.mark.parametrize("h,g,expected", [(4, 2, 0.0), (0, 0, 1.0), (0, -0.4, 0.8)])
def test_surrogate_loss_examples(h, g, expected):
    assert surrogate_loss(h, g, 1, 0.3) == pytest.approx(expected)


def test_losses_vectorise():
    h, g, y = np.array([2.0, 2.0, -2.0]), np.array([1.0, -1.0, 1.0]), np.ones(3)
    np.testing.assert_allclose(zero_one_rejection_loss(h, g, y, 0.3), [0, 0.3, 1])
    assert surrogate_loss(h, g, y, 0.3).shape == (3,)


# -- decision rule and inference -------------------------------------------------


def test_decide_rule_and_ties():
    np.testing.assert_array_equal(decide([1, -1, 5, 0, -3], [1, 1, -1e-9, 0, 0]),
                                  [POSITIVE, NEGATIVE, REJECT, POSITIVE, NEGATIVE])


def test_predict_examples():
    s = (0.5,)
    p = predict(unit_model(1.0, 1.0), s)
    assert (p.label, p.h_value, p.g_value) == (POSITIVE, 1.0, 1.0)
    assert predict(unit_model(-1.0, 1.0), s).label == NEGATIVE
    for u in (-1.0, 1.0):
        assert predict(unit_model(u, -1.0), s).label == REJECT


def test_predict_dimension_mismatch():
    with pytest.raises(InputError):
        predict(unit_model(1.0, 1.0), [0.5, 0.1])


def test_model_validation():
    with pytest.raises(InputError):
        RejectionModel(np.zeros((2, 1)), [1.0], [1.0, 2.0], KernelParams(1.0), 0.3)
    with pytest.raises(InputError):
        RejectionModel(np.zeros((1, 1)), [np.nan], [1.0], KernelParams(1.0), 0.3)
    with pytest.raises(InputError):
        RejectionModel(np.zeros((1, 1)), [1.0], [1.0], KernelParams(1.0), 0.5)


# -- empirical risk -----------------------------------------------------------------


def test_empirical_risk_examples():
    X = np.linspace(-1, 1, 5)[:, None]
    y = np.array([1, -1, 1, 1, -1])
    assert empirical_risk(unit_model(0.0, -1.0), X, y) == pytest.approx(0.3)

    # supports far apart with gamma small: each point sees only its own coefficient
    pts = np.array([[0.0], [10.0], [20.0], [30.0]])
    y4 = np.array([1, 1, 1, 1])
    model = RejectionModel(pts, [1, 1, 1, -1], [1, 1, -1, 1], KernelParams(1e-3), 0.2)
    assert empirical_risk(model, pts, y4) == pytest.approx((0 + 0 + 0.2 + 1) / 4)

    perfect = RejectionModel(pts, [1, -1, 1, -1], [1, 1, 1, 1], KernelParams(1e-3), 0.2)
    assert empirical_risk(perfect, pts, [1, -1, 1, -1]) == 0.0
    with pytest.raises(InputError):
        empirical_risk(perfect, np.empty((0, 1)), [])


# -- training --------------------------------------------------------------------------


@pytest.mark.parametrize("norm,expected", [("mean", 15 / 16), ("sum", 1.75)])
@pytest.mark.parametrize("theta", [0.1, 0.3])
def test_two_point_problem_rejects_both_at_unit_regularisation(norm, expected, theta):
    # Every point is rejected at C_h = C_g = 1: the optimum is (u, w) with g < 0
    # on both points, objective value fixed by the slack QP oracle.
    X, y = np.array([[-1.0], [1.0]]), np.array([-1, 1])
    kernel = KernelParams(4.0)
    model = train_rejection_model(X, y, theta, kernel, TrainConfig(loss_normalization=norm, **TIGHT))
    ref, _, _ = slack_qp(kernel_matrix(X, kernel), y.astype(float), theta, scale=0.5 if norm == "mean" else 1.0)
    assert ref == pytest.approx(expected, rel=1e-6)
    assert model.fit_info["objective"] == pytest.approx(ref, rel=1e-6)
    np.testing.assert_array_equal(model.predict_labels(X), [REJECT, REJECT])
    assert empirical_risk(model, X, y) == pytest.approx(theta)


@pytest.mark.parametrize("theta", [0.1, 0.3])
def test_two_point_problem_zero_risk_with_weak_regularisation(theta):
    X, y = np.array([[-1.0], [1.0]]), np.array([-1, 1])
    cfg = TrainConfig(c_h=0.01, c_g=0.01, loss_normalization="sum", **TIGHT)
    model = train_rejection_model(X, y, theta, median_bandwidth(X), cfg)
    ref, _, _ = slack_qp(kernel_matrix(X, median_bandwidth(X)), y.astype(float), theta, 0.01, 0.01, 1.0)
    assert model.fit_info["objective"] == pytest.approx(ref, rel=1e-6)
    assert empirical_risk(model, X, y) == 0.0
    np.testing.assert_array_equal(model.predict_labels(X), y)


def _instance(seed):
    rng = np.random.default_rng(seed)
    m, d = int(rng.integers(2, 21)), int(rng.integers(1, 4))
    X = rng.normal(size=(m, d))
    y = rng.choice([-1.0, 1.0], size=m)
    theta = float(rng.uniform(0.05, 0.45))
    return X, y, theta


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("norm,c", [("mean", 1.0), ("sum", 1.0), ("sum", 0.05)])
def test_objective_matches_slack_qp_oracle(seed, norm, c):
    X, y, theta = _instance(seed)
    kernel = median_bandwidth(X)
    cfg = TrainConfig(c_h=c, c_g=c, loss_normalization=norm, **TIGHT)
    model = train_rejection_model(X, y, theta, kernel, cfg)
    K = kernel_matrix(X, kernel)
    ref, _, _ = slack_qp(K, y, theta, c, c, cfg.loss_scale(len(y)))
    assert model.fit_info["objective"] == pytest.approx(ref, rel=1e-4, abs=1e-9)
    # the reported objective is the objective of the returned coefficients
    assert erm_objective(model.u, model.w, K, y, theta, cfg) == pytest.approx(model.fit_info["objective"], rel=1e-9)


def test_duplicated_dataset_gives_same_decision_function():
    X, y, theta = _instance(5)
    kernel = median_bandwidth(X)
    cfg = TrainConfig(loss_normalization="mean", c_h=0.05, c_g=0.05, solver_tolerance=1e-12)
    one = train_rejection_model(X, y, theta, kernel, cfg)
    two = train_rejection_model(np.vstack([X, X]), np.r_[y, y], theta, kernel, cfg)
    probe = np.random.default_rng(1).normal(size=(30, X.shape[1]))
    for a, b in zip(one.decision_values(probe), two.decision_values(probe)):
        np.testing.assert_allclose(a, b, atol=1e-4)


def test_training_is_deterministic():
    X, y, theta = _instance(7)
    k = median_bandwidth(X)
    a = train_rejection_model(X, y, theta, k)
    b = train_rejection_model(X, y, theta, k)
    np.testing.assert_array_equal(a.u, b.u)
    np.testing.assert_array_equal(a.w, b.w)


def test_training_errors():
    X = np.array([[0.0], [1.0]])
    with pytest.raises(InputError):
        train_rejection_model(X, [1, 2], 0.3, KernelParams(1.0))
    with pytest.raises(InputError):
        train_rejection_model([[0.0], [np.inf]], [1, -1], 0.3, KernelParams(1.0))
    with pytest.raises(InputError):
        train_rejection_model(X, [1, -1], 0.0, KernelParams(1.0))
    with pytest.raises(InputError):
        train_rejection_model(X, [1], 0.3, KernelParams(1.0))


def test_convergence_error_carries_gap():
    X, y, theta = _instance(11)
    cfg = TrainConfig(solver_tolerance=1e-15, max_iterations=1, loss_normalization="sum", c_h=0.01, c_g=0.01)
    with pytest.raises(ConvergenceError) as info:
        train_rejection_model(X, y, theta, median_bandwidth(X), cfg)
    assert info.value.gap > 0
    assert info.value.iterations >= 1


@pytest.mark.parametrize("kwargs", [dict(c_h=0), dict(c_g=-1), dict(solver_tolerance=0),
                                    dict(max_iterations=0), dict(loss_normalization="median")])
def test_train_config_validation(kwargs):
    with pytest.raises(InputError):
        TrainConfig(**kwargs)


def test_model_serialisation_round_trip(tmp_path):
    X, y, theta = _instance(2)
    model = train_rejection_model(X, y, theta, median_bandwidth(X))
    path = tmp_path / "m.json"
    save_model(model, path)
    back = load_model(path)
    probe = np.random.default_rng(0).normal(size=(20, X.shape[1]))
    for a, b in zip(model.decision_values(probe), back.decision_values(probe)):
        np.testing.assert_array_equal(a, b)
    with pytest.raises(InputError):
        model_from_dict({**model_to_dict(model), "schema": "other"})
    d = model_to_dict(model)
    del d["u"]
    with pytest.raises(InputError):
        model_from_dict(d)
