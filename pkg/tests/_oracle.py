"""Independent reference: the slack QP solved by a generic conic solver."""

import cvxpy as cp
import numpy as np


def slack_qp(K, y, theta, c_h=1.0, c_g=1.0, scale=None):
    """Optimal objective and ``(h, g)`` on the training points."""
    m = len(y)
    scale = 1.0 / m if scale is None else scale
    vals, vecs = np.linalg.eigh((K + K.T) / 2)
    R = vecs * np.sqrt(np.clip(vals, 0.0, None))
    u, w, xi = cp.Variable(m), cp.Variable(m), cp.Variable(m)
    h, g = K @ u, K @ w
    cons = [xi >= 1 + (g - cp.multiply(y, h)) / 2, xi >= theta * (1 - g / (1 - 2 * theta)), xi >= 0]
    obj = scale * cp.sum(xi) + c_h * cp.sum_squares(R.T @ u) + c_g * cp.sum_squares(R.T @ w)
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return prob.value, K @ u.value, K @ w.value
