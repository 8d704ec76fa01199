import math

import numpy as np
import pytest

import ricciball as rb
from ricciball.errors import DomainError, InvalidStateError


def test_xi_values():
    model = rb.BackgroundModel(n=3, m=2.0, r0=1.0)
    assert rb.xi(0.0, model) == pytest.approx(2.0, abs=1e-15)
    assert rb.xi(0.25, model) == pytest.approx(1.0 + math.exp(-1.0), rel=1e-12)
    model1 = rb.BackgroundModel(n=3, m=1.0, r0=1.0)
    for t in (0.0, 0.3, 5.0):
        assert rb.xi(t, model1) == 1.0


def test_xi_monotone_and_decay():
    for m, sign in ((2.0, -1.0), (0.5, 1.0)):
        model = rb.BackgroundModel(n=3, m=m, r0=1.0)
        ts = np.linspace(0.0, 3.0, 50)
        vals = rb.xi(ts, model)
        assert np.all(sign * np.diff(vals) > 0)
        # |xi - 1| = |m - 1| e^{-2(n-1)t} exactly
        assert np.allclose(np.abs(vals - 1.0),
                           abs(m - 1.0) * np.exp(-4.0 * ts), rtol=1e-13)


def test_xi_derivative_identity():
    model = rb.BackgroundModel(n=4, m=0.3, r0=2.0)
    h = 1e-4
    for t in (0.1, 0.7, 2.0):
        fd = (rb.xi(t + h, model) - rb.xi(t - h, model)) / (2 * h)
        assert fd == pytest.approx(2 * (model.n - 1) * (1.0 - rb.xi(t, model)),
                                   abs=5e-6)


def test_xi_rejects_negative_time():
    model = rb.BackgroundModel(n=3, m=2.0, r0=1.0)
    with pytest.raises(DomainError):
        rb.xi(-0.1, model)


def test_background_state_is_initial_data_at_zero(grid_101):
    model = rb.BackgroundModel(n=3, m=2.0, r0=1.0)
    st = rb.background_state(0.0, model, grid_101)
    assert np.allclose(st.a, math.sqrt(2.0), atol=1e-15)
    assert np.allclose(st.b, math.sqrt(2.0) * np.sinh(grid_101.r), atol=1e-15)


def test_background_state_late_time_limit(grid_101):
    model = rb.BackgroundModel(n=3, m=2.0, r0=1.0)
    st = rb.background_state(50.0, model, grid_101)
    assert np.allclose(st.a, 1.0, atol=1e-12)
    assert np.allclose(st.b, np.sinh(grid_101.r), atol=1e-12)


def test_background_state_curvature_consistency():
    # discrete kernel on the closed form: shifted curvatures vanish at the
    # kernel's second-order level (~1e-7 at dr = 1e-3)
    model = rb.BackgroundModel(n=3, m=2.0, r0=1.0)
    grid = rb.RadialGrid.make(1.0, 1001)
    st = rb.background_state(1.0, model, grid)
    f = rb.curvature(st, rb.xi(1.0, model))
    assert np.max(np.abs(f.F1)) < 1e-6
    assert np.max(np.abs(f.F2)) < 1e-6


def test_background_mean_curvature_values():
    model = rb.BackgroundModel(n=3, m=1.0, r0=1.0)
    assert rb.background_mean_curvature(0.0, model) == pytest.approx(
        2.0 * math.cosh(1.0) / math.sinh(1.0), rel=1e-14)
    model2 = rb.BackgroundModel(n=2, m=1.0, r0=0.8)
    for t in (0.0, 1.3):
        assert rb.background_mean_curvature(t, model2) == pytest.approx(
            math.cosh(0.8) / math.sinh(0.8), rel=1e-14)


def test_eta_composition():
    model = rb.BackgroundModel(n=3, m=2.0, r0=1.0)
    assert rb.eta(1.3, model) == pytest.approx(
        rb.background_mean_curvature(1.3, model), rel=1e-15)
    rho = rb.RhoSpec(family="poly-saturating", amplitude=0.1, order=2)
    # compatibility: rho(0) = 0
    assert rb.eta(0.0, model, rho) == pytest.approx(
        2.0 / math.sqrt(2.0) * math.cosh(1.0) / math.sinh(1.0), rel=1e-14)
    expected = (2.0 / math.sqrt(rb.xi(1.0, model))
                * math.cosh(1.0) / math.sinh(1.0) + 0.1 * 0.5)
    assert rb.eta(1.0, model, rho) == pytest.approx(expected, rel=1e-13)


def test_time_transform():
    assert rb.time_transform(0.0, 3).t_unnormalized == 0.0
    tt = rb.time_transform(0.25, 3)
    assert tt.t_unnormalized == pytest.approx((math.e - 1.0) / 4.0, rel=1e-14)
    assert tt.metric_scale == pytest.approx(math.exp(-1.0), rel=1e-14)
    for n in (2, 3, 5):
        for t in (0.0, 0.37, 2.0):
            tau = rb.time_transform(t, n).t_unnormalized
            assert rb.time_transform_inverse(tau, n) == pytest.approx(t, abs=1e-12)
    with pytest.raises(DomainError):
        rb.time_transform(-1.0, 3)
    with pytest.raises(DomainError):
        rb.time_transform_inverse(-1.0, 3)


def test_model_validation():
    with pytest.raises(InvalidStateError):
        rb.BackgroundModel(n=1, m=1.0, r0=1.0)
    with pytest.raises(InvalidStateError):
        rb.BackgroundModel(n=3, m=-1.0, r0=1.0)
    with pytest.raises(InvalidStateError):
        rb.BackgroundModel(n=3, m=1.0, r0=0.0)
