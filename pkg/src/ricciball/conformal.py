"""Two-dimensional flow in conformal-factor form: g(t) = e^{2u} g(0).

Runs on the same grid and scheme configuration as the (a, b) solver so that
cross-checking the two formulations isolates formulation error.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from . import kernels
from .background import BackgroundModel, eta as eta_fn
from .errors import (ConfigError, NewtonDivergenceError, StepRejectedError)
from .geometry import RadialMetricState
from .grid import RadialGrid
from .rho import RhoSpec
from .solver import (RunSettings, SchemeConfig, TimeSeriesRecord, Trajectory,
                     _banded_fd_jacobian, _make_record)


@dataclass
class ConformalState:
    """Log conformal factor u(r, t) for n = 2; u(., 0) = 0."""

    t: float
    u: np.ndarray
    model: BackgroundModel
    grid: RadialGrid

    def __post_init__(self):
        if self.model.n != 2:
            raise ConfigError("conformal flow is the n = 2 formulation")
        self.u = np.ascontiguousarray(self.u, dtype=np.float64)

    def copy(self) -> "ConformalState":
        return ConformalState(self.t, self.u.copy(), self.model, self.grid)

    def to_metric_state(self) -> RadialMetricState:
        """The (a, b) image: a = sqrt(m) e^u, b = sqrt(m) sinh(r) e^u."""
        c = math.sqrt(self.model.m)
        eu = np.exp(self.u)
        return RadialMetricState(t=self.t, a=c * eu,
                                 b=c * np.sinh(self.grid.r) * eu,
                                 grid=self.grid, n=2, m=self.model.m)


def _coth_grid(grid: RadialGrid) -> np.ndarray:
    c = np.empty(grid.n_points)
    c[0] = np.inf  # unused: the pole row has its own limit formula
    c[1:] = np.cosh(grid.r[1:]) / np.sinh(grid.r[1:])
    return c


def conformal_rhs(state: ConformalState, t: float,
                  rho: RhoSpec | None = None,
                  eta_value: float | None = None) -> np.ndarray:
    """du/dt = e^{-2u} (Lap_{g(0)} u + 1/m) - 1 with the Robin closure at r0."""
    rho = rho or RhoSpec()
    if eta_value is None:
        eta_value = float(eta_fn(t, state.model, rho))
    du = np.empty(state.grid.n_points)
    kernels.u_rhs_into(state.u, state.grid.dr, _coth_grid(state.grid),
                       state.model.m, state.model.r0, eta_value, du)
    return du


@dataclass(frozen=True)
class ConformalBoundaryData:
    du_dr_boundary: float
    u_ghost: float


def conformal_boundary(state: ConformalState, t: float,
                       eta_value: float) -> ConformalBoundaryData:
    """Robin datum (1/sqrt(m)) u_r(r0) = eta e^{u(r0)} - coth(r0)/sqrt(m)."""
    m, r0 = state.model.m, state.model.r0
    uB = float(state.u[-1])
    slope = math.sqrt(m) * eta_value * math.exp(uB) - math.cosh(r0) / math.sinh(r0)
    ghost = float(state.u[-2]) + 2.0 * state.grid.dr * slope
    return ConformalBoundaryData(du_dr_boundary=slope, u_ghost=ghost)


def initial_conformal_state(model: BackgroundModel,
                            grid: RadialGrid) -> ConformalState:
    return ConformalState(t=0.0, u=np.zeros(grid.n_points), model=model,
                          grid=grid)


def _u_step_rk4(state, t, dt, rho):
    grid = state.grid
    N = grid.n_points
    bufs = [np.empty(N) for _ in range(5)]
    bad = kernels.u_rk4_step(state.u, t, dt, grid.dr, _coth_grid(grid),
                             state.model.m, state.model.r0,
                             *rho.kernel_params(), *bufs)
    if bad:
        raise StepRejectedError(f"conformal rk4 step rejected at t={t:g}")
    return ConformalState(t=t + dt, u=bufs[4].copy(), model=state.model,
                          grid=grid)


def _u_step_imex(state, t, dt, scheme, rho):
    grid = state.grid
    coth = _coth_grid(grid)
    m, r0 = state.model.m, state.model.r0
    params = rho.kernel_params()
    eta0 = kernels.eta_value(t, 2, m, r0, *params)
    eta1 = kernels.eta_value(t + dt, 2, m, r0, *params)
    du = np.empty(grid.n_points)

    def f(u_arr, eta_v):
        kernels.u_rhs_into(u_arr, grid.dr, coth, m, r0, eta_v, du)
        return du.copy()

    u0 = state.u
    f0 = f(u0, eta0)
    u1 = u0 + dt * f0

    def residual(u_arr):
        return u_arr - u0 - 0.5 * dt * (f0 + f(u_arr, eta1))

    converged = False
    for _ in range(scheme.newton_max_iter):
        ab_j, r_val = _banded_fd_jacobian(residual, u1, bandwidth=2)
        if float(np.max(np.abs(r_val))) <= scheme.newton_tol:
            converged = True
            break
        delta = solve_banded((2, 2), ab_j, -r_val)
        if not np.all(np.isfinite(delta)):
            raise NewtonDivergenceError(f"Newton diverged at t={t:g}")
        u1 = u1 + delta
    if not converged:
        raise NewtonDivergenceError("conformal Newton did not converge")
    if not np.all(np.isfinite(u1)):
        raise StepRejectedError(f"imex conformal step rejected at t={t:g}")
    return ConformalState(t=t + dt, u=u1, model=state.model, grid=grid)


def run_conformal(model: BackgroundModel, grid: RadialGrid, rho: RhoSpec,
                  scheme: SchemeConfig, settings: RunSettings,
                  start_state: ConformalState | None = None) -> Trajectory:
    """Integrate the conformal flow; trajectory snapshots are ConformalState."""
    if model.n != 2:
        raise ConfigError("conformal flow requires n = 2")
    state = (start_state or initial_conformal_state(model, grid)).copy()
    t = state.t
    traj = Trajectory(model=model, grid=grid, rho=rho, scheme=scheme,
                      settings=settings, formulation="conformal")
    snap_times = [s for s in settings.resolved_snapshot_times() if s > t]
    rec_times = [s for s in settings.record_times() if s > t]
    events = sorted(set(snap_times) | set(rec_times) | {settings.t_end})
    traj.records.append(_conformal_record(state, t, 0.0, 0, model, rho,
                                          settings.r_compact))
    if start_state is None:
        traj.snapshots.append(state.copy())
    params = rho.kernel_params()
    coth = _coth_grid(grid)

    for t_next in events:
        if scheme.scheme == "explicit-rk4" and settings.record_cadence > 0.0:
            t_new, steps, dt_last, dt_lo, dt_hi, status = kernels.u_advance(
                state.u, t, t_next, grid.dr, coth, model.m, model.r0,
                scheme.cfl_factor, scheme.dt_max, scheme.dt_min, *params)
            state.t = t = t_new
            traj.total_steps += steps
            if steps:
                traj.dt_min_used = min(traj.dt_min_used, dt_lo)
                traj.dt_max_used = max(traj.dt_max_used, dt_hi)
            if status != kernels.STATUS_OK:
                traj.status = "aborted"
                traj.abort_message = f"dt collapsed at t={t:g}"
                traj.snapshots.append(state.copy())
                return traj
            traj.records.append(_conformal_record(state, t, dt_last, steps,
                                                  model, rho, settings.r_compact))
        else:
            steps = 0
            dt_last = 0.0
            while t < t_next - 1e-14 * max(1.0, t_next):
                if scheme.scheme == "explicit-rk4":
                    aeff = math.sqrt(model.m) * math.exp(float(np.min(state.u)))
                    dt = scheme.cfl_factor * (aeff * grid.dr) ** 2
                else:
                    dt = scheme.dt_max
                dt = min(dt, scheme.dt_max, t_next - t)
                while True:
                    if dt < scheme.dt_min:
                        traj.status = "aborted"
                        traj.abort_message = f"dt collapsed at t={t:g}"
                        traj.snapshots.append(state.copy())
                        return traj
                    try:
                        if scheme.scheme == "explicit-rk4":
                            new_state = _u_step_rk4(state, t, dt, rho)
                        else:
                            new_state = _u_step_imex(state, t, dt, scheme, rho)
                        break
                    except (StepRejectedError, NewtonDivergenceError):
                        dt *= 0.5
                state = new_state
                t = state.t
                steps += 1
                traj.total_steps += 1
                dt_last = dt
                traj.dt_min_used = min(traj.dt_min_used, dt)
                traj.dt_max_used = max(traj.dt_max_used, dt)
                if settings.record_cadence == 0.0:
                    traj.records.append(_conformal_record(
                        state, t, dt, 1, model, rho, settings.r_compact))
            if settings.record_cadence > 0.0:
                traj.records.append(_conformal_record(state, t, dt_last, steps,
                                                      model, rho,
                                                      settings.r_compact))
        if any(abs(t - ts) <= 1e-12 * max(1.0, ts) for ts in snap_times):
            traj.snapshots.append(state.copy())
    return traj


def _conformal_record(state, t, dt_used, steps, model, rho, r_compact):
    rec = _make_record(state.to_metric_state(), t, dt_used, steps, model, rho,
                       r_compact)
    rec.u_min = float(np.min(state.u))
    return rec


@dataclass(frozen=True)
class CrossCheckReport:
    """Max relative gap between the (a, b) run and the conformal image."""

    max_rel_a: float
    max_rel_b: float
    per_snapshot: tuple  # (t, rel_a, rel_b)

    @property
    def discrepancy(self) -> float:
        return max(self.max_rel_a, self.max_rel_b)


def cross_check(traj_ab: Trajectory, traj_u: Trajectory) -> CrossCheckReport:
    """Compare a, b against sqrt(m) e^u and sqrt(m) sinh(r) e^u per snapshot."""
    if traj_ab.formulation != "ab" or traj_u.formulation != "conformal":
        raise ConfigError("cross_check wants one ab and one conformal trajectory")
    if traj_ab.model != traj_u.model or traj_ab.grid.n_points != traj_u.grid.n_points:
        raise ConfigError("mismatched model or grid")
    if not np.allclose(traj_ab.grid.r, traj_u.grid.r):
        raise ConfigError("mismatched grids")
    ta = traj_ab.snapshot_times
    tu = traj_u.snapshot_times
    if len(ta) != len(tu) or any(abs(x - y) > 1e-10 for x, y in zip(ta, tu)):
        raise ConfigError("mismatched snapshot times")
    rows = []
    worst_a = worst_b = 0.0
    for sa, su in zip(traj_ab.snapshots, traj_u.snapshots):
        img = su.to_metric_state()
        rel_a = float(np.max(np.abs(sa.a - img.a) / sa.a))
        rel_b = float(np.max(np.abs(sa.b[1:] - img.b[1:]) / sa.b[1:]))
        rows.append((sa.t, rel_a, rel_b))
        worst_a = max(worst_a, rel_a)
        worst_b = max(worst_b, rel_b)
    return CrossCheckReport(max_rel_a=worst_a, max_rel_b=worst_b,
                            per_snapshot=tuple(rows))
