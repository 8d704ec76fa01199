"""Time integration of the coupled (a, b) system on the fixed radial grid.

Explicit RK4 with adaptive CFL dt (dt <= cfl * (min a * dr)^2) is the default
and runs in a compiled loop; an IMEX Crank-Nicolson scheme (Newton on the b
coupling, trapezoidal update for a with stage-averaged P) is available for
stiff late-time runs where the quadratic dt restriction hurts.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from . import geometry, kernels
from .background import BackgroundModel, eta as eta_fn, xi as xi_fn
from .errors import (ConfigError, DtCollapseError, InvalidStateError,
                     NewtonDivergenceError, StepRejectedError)
from .geometry import RadialMetricState
from .grid import RadialGrid
from .rho import RhoSpec

SCHEMES = ("explicit-rk4", "imex-cn")


@dataclass(frozen=True)
class SchemeConfig:
    """Time-stepping parameters; dissipation None selects the auto scaling."""

    scheme: str = "explicit-rk4"
    cfl_factor: float = 0.2
    dt_max: float = 1e-2
    dt_min: float = 1e-10
    newton_tol: float = 1e-10
    newton_max_iter: int = 20
    dissipation: float | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if not 0.0 < self.cfl_factor <= 1.0:
            raise ConfigError("cfl_factor must lie in (0, 1]")
        if self.dt_max <= 0.0 or self.dt_min <= 0.0 or self.dt_min > self.dt_max:
            raise ConfigError("need 0 < dt_min <= dt_max")

    def dissipation_strengths(self, n: int, m: float) -> tuple[float, float]:
        """Fourth-difference smoothing (nu_a, nu_b); auto scaling grows with the
        pole coupling strength (n-2)/m."""
        if self.dissipation is not None:
            nu_a = float(self.dissipation)
        else:
            nu_a = 0.5 * max(1.0, (n - 2) * max(1.0, 1.0 / m))
        return nu_a, nu_a / 4.0


@dataclass(frozen=True)
class RunSettings:
    """Horizon, output cadence and the compact-region fraction for records."""

    t_end: float
    snapshot_times: tuple = ()
    record_cadence: float = 0.0
    r_compact: float = 0.5

    def resolved_snapshot_times(self) -> tuple:
        ts = sorted(set(float(t) for t in self.snapshot_times if 0.0 < t <= self.t_end))
        if not ts or ts[-1] != self.t_end:
            ts.append(self.t_end)
        return tuple(ts)

    def record_times(self) -> tuple:
        if self.record_cadence <= 0.0:
            return ()
        k = int(math.floor(self.t_end / self.record_cadence + 1e-9))
        ts = [i * self.record_cadence for i in range(1, k + 1)]
        if not ts or ts[-1] < self.t_end - 1e-12:
            ts.append(self.t_end)
        return tuple(ts)


@dataclass
class TimeSeriesRecord:
    t: float
    dt: float
    vol: float
    eta: float
    H_boundary: float
    min_F1: float
    max_F1: float
    min_F2: float
    max_F2: float
    sup_F1_compact: float
    u_min: float | None = None
    steps: int = 0

    COLUMNS = ("t", "dt", "Vol", "eta", "H_boundary", "min_F1", "max_F1",
               "min_F2", "max_F2", "sup_F1_compact")

    def row(self, two_d: bool):
        vals = [self.t, self.dt, self.vol, self.eta, self.H_boundary,
                self.min_F1, self.max_F1, self.min_F2, self.max_F2,
                self.sup_F1_compact]
        if two_d:
            vals.append(self.u_min if self.u_min is not None else math.nan)
        return vals


@dataclass
class Trajectory:
    """Snapshots and per-interval records of one run."""

    model: BackgroundModel
    grid: RadialGrid
    rho: RhoSpec
    scheme: SchemeConfig
    settings: RunSettings
    formulation: str = "ab"
    snapshots: list = field(default_factory=list)   # RadialMetricState
    records: list = field(default_factory=list)     # TimeSeriesRecord
    status: str = "completed"
    abort_message: str = ""
    total_steps: int = 0
    dt_min_used: float = math.inf
    dt_max_used: float = 0.0

    @property
    def snapshot_times(self):
        return [s.t for s in self.snapshots]

    def state_at(self, t: float) -> RadialMetricState:
        for s in self.snapshots:
            if abs(s.t - t) <= 1e-12 * max(1.0, abs(t)):
                return s
        raise KeyError(f"no snapshot at t={t}")


def initial_state(model: BackgroundModel, grid: RadialGrid) -> RadialMetricState:
    c = math.sqrt(model.m)
    return RadialMetricState(t=0.0, a=np.full(grid.n_points, c),
                             b=c * np.sinh(grid.r), grid=grid, n=model.n, m=model.m)


def rhs(state: RadialMetricState, t: float, model: BackgroundModel,
        rho: RhoSpec | None = None, eta_value: float | None = None,
        scheme: SchemeConfig | None = None):
    """Flow right-hand side (da_dt, db_dt) with the Robin boundary closure."""
    state.validate()
    scheme = scheme or SchemeConfig()
    rho = rho or RhoSpec()
    if eta_value is None:
        eta_value = float(eta_fn(t, model, rho))
    if eta_value <= 0.0:
        raise InvalidStateError("boundary mean curvature data must be positive")
    grid = state.grid
    N = grid.n_points
    nu_a, nu_b = scheme.dissipation_strengths(model.n, model.m)
    da = np.empty(N)
    db = np.empty(N)
    w = np.empty(N)
    wr = np.empty(N)
    kernels.ab_rhs_into(state.a, state.b, grid.dr, grid.pole_weights(),
                        grid.theta_weights(), grid.dissipation_weights(),
                        eta_value, model.n, nu_a, nu_b, da, db, w, wr)
    return da, db


@dataclass(frozen=True)
class BoundaryData:
    """Robin closure data at r0: the pinned b_s value, the implied radial slope
    and the second-order ghost value one node beyond the boundary."""

    w_boundary: float
    db_dr_boundary: float
    b_ghost: float


def apply_boundary(state: RadialMetricState, t: float,
                   eta_value: float) -> BoundaryData:
    """Discretize H(g) = eta at r0: b_s(r0) = eta b(r0)/(n-1)."""
    if eta_value <= 0.0:
        raise InvalidStateError(
            "eta <= 0 breaks the convexity hypothesis; configuration rejected")
    state.validate()
    bN = float(state.b[-1])
    aN = float(state.a[-1])
    w_b = eta_value * bN / (state.n - 1)
    slope = aN * w_b
    ghost = float(state.b[-2]) + 2.0 * state.grid.dr * slope
    return BoundaryData(w_boundary=w_b, db_dr_boundary=slope, b_ghost=ghost)


def step(state: RadialMetricState, t: float, dt: float, scheme: SchemeConfig,
         model: BackgroundModel, rho: RhoSpec | None = None) -> RadialMetricState:
    """One accepted step of the configured scheme; raises on rejection."""
    state.validate()
    rho = rho or RhoSpec()
    if scheme.scheme == "explicit-rk4":
        return _rk4_step(state, t, dt, scheme, model, rho)
    return _imex_step(state, t, dt, scheme, model, rho)


def _rk4_step(state, t, dt, scheme, model, rho):
    grid = state.grid
    N = grid.n_points
    nu_a, nu_b = scheme.dissipation_strengths(model.n, model.m)
    bufs = [np.empty(N) for _ in range(12)]
    ta, tb = bufs[8], bufs[9]
    bad = kernels.ab_rk4_step(state.a, state.b, t, dt, grid.dr,
                              grid.pole_weights(), grid.theta_weights(),
                              grid.dissipation_weights(),
                              model.n, model.m, model.r0, nu_a, nu_b,
                              *rho.kernel_params(),
                              bufs[0], bufs[1], bufs[2], bufs[3], bufs[4],
                              bufs[5], bufs[6], bufs[7], ta, tb,
                              bufs[10], bufs[11])
    if bad:
        raise StepRejectedError(f"rk4 step rejected at t={t:g}, dt={dt:g}")
    return RadialMetricState(t=t + dt, a=ta.copy(), b=tb.copy(), grid=grid,
                             n=state.n, m=state.m)


def _banded_fd_jacobian(fun, b, bandwidth, eps=1e-7):
    """Finite-difference Jacobian of fun at b, assumed banded; probed with
    2*bandwidth+1 coloring vectors. Returns it in solve_banded layout."""
    N = b.size
    stride = 2 * bandwidth + 1
    f0 = fun(b)
    ab = np.zeros((stride, N))
    for c in range(stride):
        pert = np.zeros(N)
        idx = np.arange(c, N, stride)
        h = eps * np.maximum(1.0, np.abs(b[idx]))
        pert[idx] = h
        fp = fun(b + pert)
        for j, hj in zip(idx, h):
            lo = max(0, j - bandwidth)
            hi = min(N, j + bandwidth + 1)
            ab[bandwidth + np.arange(lo, hi) - j, j] = (fp[lo:hi] - f0[lo:hi]) / hj
    return ab, f0


# In the interleaved (a, b) vector, rows reach at most 8 grid nodes away
# (one-sided boundary stencils composed through w = b_s), i.e. 17 interleaved
# entries; 18 leaves margin.
_BANDWIDTH = 18


def _imex_step(state, t, dt, scheme, model, rho):
    """One Crank-Nicolson step: trapezoidal residuals for a (pointwise ODE,
    stage-averaged P) and b (parabolic with the Robin coupling), solved
    together by a banded Newton iteration.

    a cannot be split out of the Newton system: the pole coupling a <-> K has
    gain ~ dt/dr^2 and an outer fixed-point loop on it diverges.
    """
    grid = state.grid
    N = grid.n_points
    nu_a, nu_b = scheme.dissipation_strengths(model.n, model.m)
    pw, th = grid.pole_weights(), grid.theta_weights()
    dw = grid.dissipation_weights()
    params = rho.kernel_params()
    eta0 = kernels.eta_value(t, model.n, model.m, model.r0, *params)
    eta1 = kernels.eta_value(t + dt, model.n, model.m, model.r0, *params)
    da = np.empty(N)
    db = np.empty(N)
    w = np.empty(N)
    wr = np.empty(N)

    def eval_rhs(a_arr, b_arr, eta_v):
        kernels.ab_rhs_into(a_arr, b_arr, grid.dr, pw, th, dw, eta_v,
                            model.n, nu_a, nu_b, da, db, w, wr)
        return da, db

    a0, b0 = state.a, state.b
    f0a, f0b = eval_rhs(a0, b0, eta0)
    z0 = np.empty(2 * N)
    z0[0::2] = a0
    z0[1::2] = b0
    f0 = np.empty(2 * N)
    f0[0::2] = f0a
    f0[1::2] = f0b

    def residual(z):
        fa, fb = eval_rhs(np.ascontiguousarray(z[0::2]),
                          np.ascontiguousarray(z[1::2]), eta1)
        out = np.empty(2 * N)
        out[0::2] = fa
        out[1::2] = fb
        return z - z0 - 0.5 * dt * (f0 + out)

    # Newton from the current state; an explicit predictor would be wildly
    # unstable at implicit-scale dt
    z = z0.copy()
    scale = float(np.max(np.abs(z0))) + 1.0
    converged = False
    for _ in range(scheme.newton_max_iter):
        ab_j, r_val = _banded_fd_jacobian(residual, z, _BANDWIDTH)
        if float(np.max(np.abs(r_val))) <= scheme.newton_tol * scale:
            converged = True
            break
        delta = solve_banded((_BANDWIDTH, _BANDWIDTH), ab_j, -r_val)
        if not np.all(np.isfinite(delta)):
            raise NewtonDivergenceError(f"Newton diverged at t={t:g}")
        z = z + delta
    if not converged:
        raise NewtonDivergenceError(
            f"Newton did not converge in {scheme.newton_max_iter} iterations")
    a1 = np.ascontiguousarray(z[0::2])
    b1 = np.ascontiguousarray(z[1::2])
    b1[0] = 0.0
    if (np.any(a1 <= 0.0) or np.any(b1[1:] <= 0.0)
            or not np.all(np.isfinite(a1)) or not np.all(np.isfinite(b1))):
        raise StepRejectedError(f"imex step rejected at t={t:g}")
    return RadialMetricState(t=t + dt, a=a1, b=b1, grid=grid,
                             n=state.n, m=state.m)



def _make_record(state, t, dt_used, steps, model, rho, r_compact):
    fields = geometry.curvature(state, float(xi_fn(t, model)))
    compact = state.grid.r <= r_compact * state.grid.r0
    u_min = None
    if model.n == 2:
        u_min = float(np.min(np.log(state.a / math.sqrt(model.m))))
    return TimeSeriesRecord(
        t=t, dt=dt_used, vol=geometry.volume(state),
        eta=float(eta_fn(t, model, rho)),
        H_boundary=float(fields.H[-1]),
        min_F1=float(np.min(fields.F1)), max_F1=float(np.max(fields.F1)),
        min_F2=float(np.min(fields.F2)), max_F2=float(np.max(fields.F2)),
        sup_F1_compact=float(np.max(np.abs(fields.F1[compact]))),
        u_min=u_min, steps=steps)


def run(model: BackgroundModel, grid: RadialGrid, rho: RhoSpec,
        scheme: SchemeConfig, settings: RunSettings,
        start_state: RadialMetricState | None = None) -> Trajectory:
    """Integrate from the exact initial data (or a resumed state) to t_end.

    Deterministic for a fixed configuration: fixed event schedule, fixed
    reduction orders, no wall-clock dependence.
    """
    state = (start_state or initial_state(model, grid)).copy()
    state.validate()
    t = state.t
    if settings.t_end <= t:
        raise ConfigError("t_end must exceed the starting time")
    traj = Trajectory(model=model, grid=grid, rho=rho, scheme=scheme,
                      settings=settings, formulation="ab")
    snap_times = [s for s in settings.resolved_snapshot_times() if s > t]
    rec_times = [s for s in settings.record_times() if s > t]
    events = sorted(set(snap_times) | set(rec_times) | {settings.t_end})
    traj.records.append(_make_record(state, t, 0.0, 0, model, rho,
                                     settings.r_compact))
    if start_state is None:
        traj.snapshots.append(state.copy())

    nu_a, nu_b = scheme.dissipation_strengths(model.n, model.m)
    params = rho.kernel_params()
    per_step_records = settings.record_cadence == 0.0

    for t_next in events:
        if scheme.scheme == "explicit-rk4" and not per_step_records:
            t_new, steps, dt_last, dt_lo, dt_hi, status = kernels.ab_advance(
                state.a, state.b, t, t_next, grid.dr, grid.pole_weights(),
                grid.theta_weights(), grid.dissipation_weights(),
                model.n, model.m, model.r0,
                scheme.cfl_factor, scheme.dt_max, scheme.dt_min, nu_a, nu_b,
                *params)
            state.t = t = t_new
            traj.total_steps += steps
            if steps:
                traj.dt_min_used = min(traj.dt_min_used, dt_lo)
                traj.dt_max_used = max(traj.dt_max_used, dt_hi)
            if status != kernels.STATUS_OK:
                traj.status = "aborted"
                traj.abort_message = (f"dt collapsed below {scheme.dt_min:g} "
                                      f"at t={t:g}")
                traj.snapshots.append(state.copy())
                return traj
            traj.records.append(_make_record(state, t, dt_last, steps, model,
                                             rho, settings.r_compact))
        else:
            steps = 0
            dt_last = 0.0
            while t < t_next - 1e-14 * max(1.0, t_next):
                if scheme.scheme == "explicit-rk4":
                    dt = scheme.cfl_factor * (float(np.min(state.a)) * grid.dr) ** 2
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
                        new_state = step(state, t, dt, scheme, model, rho)
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
                if per_step_records:
                    traj.records.append(_make_record(state, t, dt, 1, model,
                                                     rho, settings.r_compact))
            if not per_step_records:
                traj.records.append(_make_record(state, t, dt_last, steps,
                                                 model, rho, settings.r_compact))
        if any(abs(t - ts) <= 1e-12 * max(1.0, ts) for ts in snap_times):
            traj.snapshots.append(state.copy())
    return traj
