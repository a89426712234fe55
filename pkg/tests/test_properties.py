"""Property tests of the loss pair."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from exml.rejection import surrogate_loss, zero_one_rejection_loss

reals = st.floats(-1e3, 1e3, allow_nan=False)
thetas = st.floats(0.01, 0.49)
labels = st.sampled_from([-1, 1])


@settings(max_examples=2000, deadline=None)
@given(reals, reals, labels, thetas)
def test_surrogate_dominates_zero_one(h, g, y, theta):
    assert surrogate_loss(h, g, y, theta) >= zero_one_rejection_loss(h, g, y, theta)


@settings(max_examples=2000, deadline=None)
@given(reals, reals, reals, reals, st.floats(0, 1), labels, thetas)
def test_surrogate_is_convex_along_chords(h1, g1, h2, g2, lam, y, theta):
    mid = surrogate_loss(lam * h1 + (1 - lam) * h2, lam * g1 + (1 - lam) * g2, y, theta)
    chord = lam * surrogate_loss(h1, g1, y, theta) + (1 - lam) * surrogate_loss(h2, g2, y, theta)
    assert mid <= chord + 1e-12 * max(1.0, abs(chord))


@settings(max_examples=500, deadline=None)
@given(reals, reals, labels, thetas)
def test_losses_are_nonnegative_and_bounded(h, g, y, theta):
    z = zero_one_rejection_loss(h, g, y, theta)
    assert z in (0.0, theta, 1.0)
    assert surrogate_loss(h, g, y, theta) >= 0.0


def test_surrogate_equals_theta_on_the_rejection_boundary():
    # At g = 0 with a confident correct h, only the gate term is active.
    np.testing.assert_allclose(surrogate_loss(10.0, 0.0, 1, 0.3), 0.3)
