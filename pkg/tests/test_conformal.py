import math

import numpy as np
import pytest

import ricciball as rb
from ricciball import conformal
from ricciball.background import xi as xi_fn
from ricciball.errors import ConfigError


def model2(m=2.0, r0=1.0):
    return rb.BackgroundModel(n=2, m=m, r0=r0)


def test_conformal_state_requires_n2(grid_101):
    with pytest.raises(ConfigError):
        rb.ConformalState(t=0.0, u=np.zeros(101),
                          model=rb.BackgroundModel(n=3, m=1.0, r0=1.0),
                          grid=grid_101)


def test_rhs_hyperbolic_fixed_point(grid_101):
    # u = 0, m = 1: exact stationary point of the u-flow, boundary included
    st = rb.initial_conformal_state(model2(m=1.0), grid_101)
    du = rb.conformal_rhs(st, 0.0)
    assert np.max(np.abs(du)) < 1e-13


def test_rhs_constant_shift(grid_101):
    # u = c, m = 1: interior du = e^{-2c} - 1; with eta = coth(r0) e^{-c} the
    # Robin slope vanishes and the boundary row agrees too
    c = 0.3
    st = rb.ConformalState(t=0.0, u=np.full(101, c), model=model2(m=1.0),
                           grid=grid_101)
    eta_v = math.cosh(1.0) / math.sinh(1.0) * math.exp(-c)
    du = rb.conformal_rhs(st, 0.0, eta_value=eta_v)
    assert np.max(np.abs(du - (math.exp(-2 * c) - 1.0))) < 1e-12


def test_rhs_background_profile(grid_101):
    # u(t) = (ln xi - ln m)/2 spatially constant: du = 1/xi - 1 exactly
    model = model2(m=2.0)
    for t in (0.0, 0.5, 2.0):
        xi = float(xi_fn(t, model))
        st = rb.ConformalState(t=t, u=np.full(101, 0.5 * math.log(xi / 2.0)),
                               model=model, grid=grid_101)
        du = rb.conformal_rhs(st, t)
        assert np.max(np.abs(du - (1.0 / xi - 1.0))) < 1e-11


def test_conformal_boundary_data(grid_101):
    model = model2(m=2.0)
    st = rb.initial_conformal_state(model, grid_101)
    # background eta at t = 0 gives a vanishing Robin slope
    bd = rb.conformal_boundary(st, 0.0, float(rb.eta(0.0, model)))
    assert bd.du_dr_boundary == pytest.approx(0.0, abs=1e-14)
    assert bd.u_ghost == pytest.approx(st.u[-2], abs=1e-14)
    # a larger eta pushes u up at the boundary
    bd2 = rb.conformal_boundary(st, 0.0, float(rb.eta(0.0, model)) + 0.3)
    assert bd2.du_dr_boundary > 0.0


def test_u_run_stationary_m1(grid_101):
    # m = 1, rho = 0: u stays identically zero
    model = model2(m=1.0)
    traj = rb.run_conformal(model, grid_101, rb.RhoSpec(), rb.SchemeConfig(),
                            rb.RunSettings(t_end=0.05, record_cadence=0.01))
    assert np.max(np.abs(traj.snapshots[-1].u)) < 1e-14


def test_u_run_background_exact_profile(grid_101):
    # rho = 0: u(r, t) = (ln xi(t) - ln m)/2, constant in r; the spatial
    # operator is exact on constants so only temporal error remains
    model = model2(m=0.5)
    traj = rb.run_conformal(model, grid_101, rb.RhoSpec(), rb.SchemeConfig(),
                            rb.RunSettings(t_end=0.5, record_cadence=0.1))
    u = traj.snapshots[-1].u
    expected = 0.5 * math.log(float(xi_fn(0.5, model)) / 0.5)
    assert np.max(np.abs(u - expected)) < 1e-9


def test_cross_check_t0_exact(grid_101):
    model = model2(m=2.0)
    rho = rb.RhoSpec(family="ramped-loglog", amplitude=0.1, order=2)
    settings = rb.RunSettings(t_end=0.05, snapshot_times=(0.05,),
                              record_cadence=0.02)
    tab = rb.run(model, grid_101, rho, rb.SchemeConfig(), settings)
    tu = rb.run_conformal(model, grid_101, rho, rb.SchemeConfig(), settings)
    report = rb.cross_check(tab, tu)
    assert report.per_snapshot[0][0] == 0.0
    assert report.per_snapshot[0][1] == 0.0  # shared initial data
    assert report.per_snapshot[0][2] == 0.0
    assert report.discrepancy < 1e-6


def test_cross_check_requires_matching_runs(grid_101):
    model = model2(m=2.0)
    settings = rb.RunSettings(t_end=0.02, record_cadence=0.01)
    tab = rb.run(model, grid_101, rb.RhoSpec(), rb.SchemeConfig(), settings)
    tu = rb.run_conformal(model, grid_101, rb.RhoSpec(), rb.SchemeConfig(),
                          settings)
    with pytest.raises(ConfigError):
        rb.cross_check(tab, tab)
    other = rb.run_conformal(model, grid_101, rb.RhoSpec(), rb.SchemeConfig(),
                             rb.RunSettings(t_end=0.02, snapshot_times=(0.01,),
                                            record_cadence=0.01))
    with pytest.raises(ConfigError):
        rb.cross_check(tab, other)


def test_dual_formulation_background_agreement():
    # rho = 0, t_end = 1: both formulations track the same closed form; the
    # gap is the (a, b) solver's spatial error
    model = model2(m=2.0)
    grid = rb.RadialGrid.make(1.0, 201)
    settings = rb.RunSettings(t_end=1.0, snapshot_times=(0.5, 1.0),
                              record_cadence=0.25)
    tab = rb.run(model, grid, rb.RhoSpec(), rb.SchemeConfig(), settings)
    tu = rb.run_conformal(model, grid, rb.RhoSpec(), rb.SchemeConfig(), settings)
    assert rb.cross_check(tab, tu).discrepancy < 1e-5


def test_p_equals_q_identically_2d(grid_101):
    # for n = 2 the two shifted curvatures coincide exactly in code
    model = model2(m=0.5)
    rho = rb.RhoSpec(family="ramped-loglog", amplitude=0.1, order=2)
    traj = rb.run(model, grid_101, rho, rb.SchemeConfig(),
                  rb.RunSettings(t_end=0.2, record_cadence=0.05))
    st = traj.snapshots[-1]
    f = rb.curvature(st, float(xi_fn(st.t, model)))
    assert np.array_equal(f.F1, f.F2)


def test_conformal_monotonicity_small_m():
    # m < 1: u nondecreasing pointwise along the run
    model = model2(m=0.5)
    grid = rb.RadialGrid.make(1.0, 101)
    rho = rb.RhoSpec(family="ramped-loglog", amplitude=0.1, order=2)
    settings = rb.RunSettings(t_end=0.6, snapshot_times=(0.2, 0.4, 0.6),
                              record_cadence=0.1)
    traj = rb.run_conformal(model, grid, rho, rb.SchemeConfig(), settings)
    for s1, s2 in zip(traj.snapshots[:-1], traj.snapshots[1:]):
        assert np.min(s2.u - s1.u) > -1e-8


def test_conformal_floor_large_m():
    model = model2(m=2.0)
    grid = rb.RadialGrid.make(1.0, 101)
    rho = rb.RhoSpec(family="ramped-loglog", amplitude=0.1, order=2)
    traj = rb.run_conformal(model, grid, rho, rb.SchemeConfig(),
                            rb.RunSettings(t_end=0.6, snapshot_times=(0.3, 0.6),
                                           record_cadence=0.1))
    for snap in traj.snapshots:
        assert np.min(snap.u) >= -math.log(2.0) - 1e-6


def test_conformal_imex_matches_rk4():
    model = model2(m=2.0)
    grid = rb.RadialGrid.make(1.0, 101)
    rho = rb.RhoSpec(family="ramped-loglog", amplitude=0.1, order=2)
    settings = rb.RunSettings(t_end=0.3, record_cadence=0.1)
    ref = rb.run_conformal(model, grid, rho, rb.SchemeConfig(), settings)
    imex = rb.run_conformal(model, grid, rho,
                            rb.SchemeConfig(scheme="imex-cn", dt_max=2e-3),
                            settings)
    gap = np.max(np.abs(ref.snapshots[-1].u - imex.snapshots[-1].u))
    assert gap < 1e-5


def test_conformal_trajectory_records_u_min(grid_101):
    model = model2(m=2.0)
    traj = rb.run_conformal(model, grid_101, rb.RhoSpec(), rb.SchemeConfig(),
                            rb.RunSettings(t_end=0.1, record_cadence=0.05))
    for rec in traj.records:
        assert rec.u_min is not None
        assert rec.u_min <= 0.0  # m > 1: u decreases from 0 toward -ln m / 2
