"""Runtime verification of the flow's proven inequalities and identities.

Each check consumes trajectory snapshots and reports a verdict with the worst
signed margin (negative = violation magnitude) and its location. Default
tolerances scale like C (dr^2 + dt^2) times a curvature scale; exact algebraic
identities use a fixed 1e-12 relative tolerance.
"""
import math
from dataclasses import dataclass

import numpy as np

from .background import xi as xi_fn
from .errors import ConfigError
from .geometry import curvature

PASS = "pass"
FAIL = "fail"
INDET = "indeterminate"


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    verdict: str
    worst_margin: float
    worst_location: tuple   # (r, t)
    tolerance: float
    note: str = ""


@dataclass(frozen=True)
class MonitorReport:
    results: tuple

    def __post_init__(self):
        ids = [r.check_id for r in self.results]
        if len(ids) != len(set(ids)):
            raise ConfigError("duplicate check ids in a monitor report")

    @property
    def all_pass(self) -> bool:
        return all(r.verdict != FAIL for r in self.results)

    def result(self, check_id: str) -> CheckResult:
        for r in self.results:
            if r.check_id == check_id:
                return r
        raise KeyError(check_id)

    def failed_ids(self):
        return [r.check_id for r in self.results if r.verdict == FAIL]


@dataclass(frozen=True)
class MonitorSettings:
    warmup: float = 0.05            # strict inequalities are degenerate at t=0
    tol_factor: float = 10.0
    r_compact: float = 0.5
    window: float = 2.0             # convergence trend window
    c_end_threshold: float = 1e-2
    k_dev_threshold: float = 2e-2
    curvature_bound: float = 1e3
    plateau_rel: float = 1e-3
    identity_factor: float = 400.0  # C in the radial/boundary identity checks


def base_tolerance(traj, settings: MonitorSettings) -> float:
    """C (dr^2 + dt^2) * scale with scale the size of the curvature shift."""
    dr = traj.grid.dr
    dt = traj.dt_max_used if np.isfinite(traj.dt_max_used) else 0.0
    scale = (traj.model.n - 1) * max(1.0, 1.0 / traj.model.m)
    return settings.tol_factor * (dr * dr + dt * dt) * scale


def _snapshot_fields(traj):
    """(t, state, CurvatureFields) per ab-snapshot; conformal snapshots are
    mapped through their (a, b) image."""
    out = []
    for snap in traj.snapshots:
        state = snap if traj.formulation == "ab" else snap.to_metric_state()
        out.append((state.t, state, curvature(state, float(xi_fn(state.t, traj.model)))))
    return out


def _argmin_location(values_2d):
    """values_2d: list of (t, r_array, margin_array); returns min, (r, t)."""
    best = math.inf
    loc = (math.nan, math.nan)
    for t, r, v in values_2d:
        i = int(np.argmin(v))
        if v[i] < best:
            best = float(v[i])
            loc = (float(r[i]), float(t))
    return best, loc


def check_ordering(snaps, n, tol, warmup):
    """(n-1) F2 <= F1 <= F2 <= 0 at every node, after the warmup window."""
    rows = []
    for t, state, f in snaps:
        if t <= warmup:
            continue
        r = state.grid.r
        slack = np.minimum(np.minimum(f.F1 - (n - 1) * f.F2, f.F2 - f.F1), -f.F2)
        rows.append((t, r, slack))
    if not rows:
        return CheckResult("curvature-ordering", INDET, math.nan,
                           (math.nan, math.nan), tol, "no snapshots past warmup")
    margin, loc = _argmin_location(rows)
    verdict = PASS if margin >= -tol else FAIL
    return CheckResult("curvature-ordering", verdict, margin, loc, tol)


def check_ordering_strict_interior(snaps, tol, warmup):
    """Strict version F1 < F2 away from the pole; indeterminate near equality."""
    rows = []
    for t, state, f in snaps:
        if t <= warmup:
            continue
        rows.append((t, state.grid.r[1:], (f.F2 - f.F1)[1:]))
    if not rows:
        return CheckResult("ordering-strict-interior", INDET, math.nan,
                           (math.nan, math.nan), tol, "no snapshots past warmup")
    margin, loc = _argmin_location(rows)
    if margin > tol:
        verdict = PASS
    elif margin < -tol:
        verdict = FAIL
    else:
        verdict = INDET
    return CheckResult("ordering-strict-interior", verdict, margin, loc, tol)


def check_monotone_scaling(snaps, model, tol):
    """(m/xi)^(1/2) a and (m/xi)^(1/2) b nondecreasing in t, above initial data."""
    scaled = []
    for t, state, _ in snaps:
        c = math.sqrt(model.m / float(xi_fn(t, model)))
        scaled.append((t, state.grid.r, c * state.a, c * state.b))
    rows = []
    t0, r, a0, b0 = scaled[0]
    for (ta_, _, aa, bb) in scaled[1:]:
        rows.append((ta_, r, np.minimum(aa - a0, bb - b0)))
    for (t1, _, a1, b1), (t2, _, a2, b2) in zip(scaled[:-1], scaled[1:]):
        rows.append((t2, r, np.minimum(a2 - a1, b2 - b1)))
    if not rows:
        return CheckResult("monotone-scaling", INDET, math.nan,
                           (math.nan, math.nan), tol, "need two snapshots")
    margin, loc = _argmin_location(rows)
    verdict = PASS if margin >= -tol else FAIL
    return CheckResult("monotone-scaling", verdict, margin, loc, tol)


def check_lower_barriers(snaps, model, tol):
    """b >= xi^(1/2) sinh(xi^(-1/2) s) and b_s >= cosh(xi^(-1/2) s)."""
    rows = []
    for t, state, f in snaps:
        xi = float(xi_fn(t, model))
        sq = math.sqrt(xi)
        barrier_b = state.b - sq * np.sinh(f.s / sq)
        barrier_bs = f.b_s - np.cosh(f.s / sq)
        rows.append((t, state.grid.r, np.minimum(barrier_b, barrier_bs)))
    margin, loc = _argmin_location(rows)
    verdict = PASS if margin >= -tol else FAIL
    return CheckResult("lower-barriers", verdict, margin, loc, tol)


def s_upper_bound_value(r, r0):
    """The arclength bound ln((e^(r0+r)-1)/(e^(r0)-e^r)), finite for r < r0."""
    return np.log((np.exp(r0 + r) - 1.0) / (np.exp(r0) - np.exp(r)))


def check_s_upper_bound(snaps, model, tol):
    """s(r, t) <= xi^(1/2) * bound(r) on nodes with 0 < r <= 0.95 r0."""
    rows = []
    for t, state, f in snaps:
        r = state.grid.r
        sel = (r > 0.0) & (r <= 0.95 * state.grid.r0)
        xi = float(xi_fn(t, model))
        bound = math.sqrt(xi) * s_upper_bound_value(r[sel], state.grid.r0)
        rows.append((t, r[sel], bound - f.s[sel]))
    margin, loc = _argmin_location(rows)
    verdict = PASS if margin >= -tol else FAIL
    return CheckResult("s-upper-bound", verdict, margin, loc, tol)


def radial_identity_residual(state, fields):
    """Residual of d/ds (F1-(n-1)F2) + 2 (F1-F2) H at interior nodes, plus the
    boundary normal-derivative version against -2 (F1-F2) eta-free form."""
    n = fields.n
    dr = state.grid.dr
    D = fields.F1 - (n - 1) * fields.F2
    Ds = np.empty_like(D)
    Ds[1:-1] = (D[2:] - D[:-2]) / (2.0 * dr) / state.a[1:-1]
    interior = Ds[1:-1] + 2.0 * (fields.F1 - fields.F2)[1:-1] * fields.H[1:-1]
    Ds_b = (3.0 * D[-1] - 4.0 * D[-2] + D[-3]) / (2.0 * dr) / state.a[-1]
    boundary = Ds_b + 2.0 * (fields.F1[-1] - fields.F2[-1]) * fields.H[-1]
    return interior, float(boundary)


def check_radial_identity(snaps, factor, dt_eff):
    """Residual small against C ((a dr)^2 + dt^2) per node: the grid is fixed
    in r, so the resolved arclength scale a*dr (and with it the achievable
    consistency) degrades where the metric stretches."""
    rows = []
    for t, state, f in snaps:
        interior, boundary = radial_identity_residual(state, f)
        ref = max(1.0, float(np.max(np.abs(2.0 * (f.F1 - f.F2)[1:] * f.H[1:]))))
        dr = state.grid.dr
        h2 = (state.a * dr) ** 2 + dt_eff ** 2
        margins = 1.0 - np.abs(interior) / (factor * ref * h2[1:-1])
        margin_b = 1.0 - abs(boundary) / (factor * ref * h2[-1])
        rows.append((t, state.grid.r[1:-1], margins))
        rows.append((t, state.grid.r[-1:], np.array([margin_b])))
    margin, loc = _argmin_location(rows)
    verdict = PASS if margin >= 0.0 else FAIL
    return CheckResult("radial-identity", verdict, margin, loc, factor,
                       "residual relative to C ((a dr)^2 + dt^2) x term scale")


def check_boundary_eta_identity(snaps, model, rho, factor, dt_eff):
    """eta'(t) = eta (F1 + (n-1)(1 - 1/xi)) - (n-1) dF2/dn at r0 (n >= 3);
    the n = 2 analog replaces F2 by F1 and n-1 by 1. The residual is judged
    against C ((a dr)^2 + dt^2) times the size of the identity's terms, using
    the local boundary resolution a(r0) dr."""
    n = model.n
    coth = math.cosh(model.r0) / math.sinh(model.r0)
    rows = []
    for t, state, f in snaps:
        xi = float(xi_fn(t, model))
        eta_t = (n - 1) / math.sqrt(xi) * coth + rho.value(t)
        etap = (-(n - 1) ** 2 * coth * (1.0 - xi) / xi ** 1.5
                + rho.derivative(t))
        dr = state.grid.dr
        Fb = f.F1 if n == 2 else f.F2
        dF_dn = (3.0 * Fb[-1] - 4.0 * Fb[-2] + Fb[-3]) / (2.0 * dr) / state.a[-1]
        bulk = eta_t * (f.F1[-1] + (n - 1) * (1.0 - 1.0 / xi))
        residual = abs(etap - bulk + (n - 1) * dF_dn)
        ref = max(1.0, abs(etap), abs(bulk), abs((n - 1) * dF_dn))
        h2 = (float(state.a[-1]) * dr) ** 2 + dt_eff ** 2
        rows.append((t, np.array([state.grid.r0]),
                     np.array([1.0 - residual / (factor * ref * h2)])))
    margin, loc = _argmin_location(rows)
    verdict = PASS if margin >= 0.0 else FAIL
    return CheckResult("boundary-eta-identity", verdict, margin, loc, factor,
                       "residual relative to C ((a dr)^2 + dt^2) x term scale")


def check_convergence(snaps, traj, settings: MonitorSettings, tol):
    """Bounded shifted curvatures, decreasing over the final window, small at
    t_end; the pole sectional curvature fitted against -1 on the compact set."""
    t_end = snaps[-1][0]
    window = settings.window
    if t_end < 2.0 * window:
        return CheckResult("convergence-trend", INDET, math.nan,
                           (math.nan, math.nan), tol, "trajectory too short")
    series = []
    for t, state, f in snaps:
        sel = state.grid.r <= settings.r_compact * state.grid.r0
        c = max(float(np.max(np.abs(f.F1[sel]))), float(np.max(np.abs(f.F2[sel]))))
        series.append((t, c))
    margins = [settings.curvature_bound - max(c for _, c in series)]
    in_window = [(t, c) for t, c in series if t >= t_end - window]
    for (t1, c1), (t2, c2) in zip(in_window[:-1], in_window[1:]):
        margins.append(c1 - c2 + tol)   # nonincreasing within tol
    margins.append(settings.c_end_threshold - series[-1][1])
    t_last, state, f = snaps[-1]
    sel = state.grid.r <= settings.r_compact * state.grid.r0
    k_dev = float(np.max(np.abs(f.K[sel] + 1.0)))
    margins.append(settings.k_dev_threshold - k_dev)
    margin = float(min(margins))
    verdict = PASS if margin >= 0.0 else FAIL
    return CheckResult("convergence-trend", verdict, margin,
                       (settings.r_compact * state.grid.r0, t_last), tol,
                       f"c(t_end)={series[-1][1]:.3e}, |K+1|={k_dev:.3e}")


def check_volume_growth(traj, settings: MonitorSettings):
    """Vol eventually increasing over [t_end/2, t_end]; plateau flagged when
    the relative rise over the window falls below plateau_rel."""
    recs = [(r.t, r.vol) for r in traj.records]
    if not recs or recs[-1][0] < 3.0:
        return CheckResult("volume-growth", INDET, math.nan,
                           (math.nan, math.nan), 0.0, "t_end below 3")
    t_end = recs[-1][0]
    win = [(t, v) for t, v in recs if t >= 0.5 * t_end]
    vol_scale = max(v for _, v in win)
    diffs = [(t2, (v2 - v1) / vol_scale)
             for (t1, v1), (t2, v2) in zip(win[:-1], win[1:])]
    tol = 1e-8
    margin = min(d for _, d in diffs) + tol
    worst_t = min(diffs, key=lambda x: x[1])[0]
    rel_rise = (win[-1][1] - win[0][1]) / win[0][1]
    slope = np.polyfit([t for t, _ in win], [v for _, v in win], 1)[0]
    plateau = rel_rise < settings.plateau_rel
    note = f"fitted dVol/dt={slope:.6g} over [{win[0][0]:g},{t_end:g}]"
    if plateau:
        note += "; plateau"
    verdict = PASS if margin >= 0.0 else FAIL
    return CheckResult("volume-growth", verdict, float(margin),
                       (math.nan, worst_t), tol, note)


def check_convexity(snaps, tol):
    """b strictly increasing in r (eta > 0 convexity lemma): min a*b_s > 0."""
    rows = []
    for t, state, f in snaps:
        rows.append((t, state.grid.r, state.a * f.b_s))
    margin, loc = _argmin_location(rows)
    verdict = PASS if margin >= -tol else FAIL
    return CheckResult("convexity", verdict, margin, loc, tol)


def check_f1_nonpositive(snaps, tol):
    """Two-dimensional bound F1 <= 0 for all t (boundary data nondecreasing)."""
    rows = [(t, state.grid.r, -f.F1) for t, state, f in snaps]
    margin, loc = _argmin_location(rows)
    verdict = PASS if margin >= -tol else FAIL
    return CheckResult("f1-nonpositive-2d", verdict, margin, loc, tol)


def check_conformal_bounds(traj, tol):
    """u >= 0 for m < 1 and u >= -ln m for m > 1, pointwise along the run."""
    floor = 0.0 if traj.model.m < 1.0 else -math.log(traj.model.m)
    if traj.model.m == 1.0:
        floor = 0.0
    rows = []
    for snap in traj.snapshots:
        rows.append((snap.t, snap.grid.r, snap.u - floor))
    margin, loc = _argmin_location(rows)
    verdict = PASS if margin >= -tol else FAIL
    return CheckResult("conformal-lower-bound", verdict, margin, loc, tol,
                       f"floor={floor:g}")


def check_conformal_monotone(traj, tol):
    """For m < 1 the conformal factor is pointwise nondecreasing in t."""
    rows = []
    snaps = traj.snapshots
    for s1, s2 in zip(snaps[:-1], snaps[1:]):
        rows.append((s2.t, s2.grid.r, s2.u - s1.u))
    if not rows:
        return CheckResult("conformal-monotone", INDET, math.nan,
                           (math.nan, math.nan), tol, "need two snapshots")
    margin, loc = _argmin_location(rows)
    verdict = PASS if margin >= -tol else FAIL
    return CheckResult("conformal-monotone", verdict, margin, loc, tol)


DEFAULT_CHECKS_3D = ("curvature-ordering", "ordering-strict-interior",
                     "monotone-scaling", "lower-barriers", "s-upper-bound",
                     "radial-identity", "boundary-eta-identity",
                     "convergence-trend", "volume-growth", "convexity")
DEFAULT_CHECKS_2D = ("f1-nonpositive-2d", "monotone-scaling", "lower-barriers",
                     "s-upper-bound", "boundary-eta-identity",
                     "convergence-trend", "volume-growth", "convexity")
CONFORMAL_EXTRA = ("conformal-lower-bound", "conformal-monotone")


def run_suite(traj, settings: MonitorSettings | None = None,
              enabled: tuple | None = None) -> MonitorReport:
    """Evaluate every enabled check once over the trajectory snapshots."""
    settings = settings or MonitorSettings()
    n = traj.model.n
    if enabled is None:
        enabled = DEFAULT_CHECKS_3D if n >= 3 else DEFAULT_CHECKS_2D
        if traj.formulation == "conformal":
            enabled = enabled + CONFORMAL_EXTRA
    snaps = _snapshot_fields(traj)
    tol = base_tolerance(traj, settings)
    dt_eff = traj.dt_max_used if np.isfinite(traj.dt_max_used) else 0.0
    results = []
    for check_id in enabled:
        if check_id == "curvature-ordering":
            if n == 2:
                results.append(CheckResult(check_id, INDET, math.nan,
                                           (math.nan, math.nan), tol,
                                           "not applicable for n = 2"))
            else:
                results.append(check_ordering(snaps, n, tol, settings.warmup))
        elif check_id == "ordering-strict-interior":
            results.append(check_ordering_strict_interior(snaps, tol,
                                                          settings.warmup))
        elif check_id == "monotone-scaling":
            results.append(check_monotone_scaling(snaps, traj.model, tol))
        elif check_id == "lower-barriers":
            results.append(check_lower_barriers(snaps, traj.model, tol))
        elif check_id == "s-upper-bound":
            results.append(check_s_upper_bound(snaps, traj.model, tol))
        elif check_id == "radial-identity":
            results.append(check_radial_identity(snaps, settings.identity_factor,
                                                 dt_eff))
        elif check_id == "boundary-eta-identity":
            results.append(check_boundary_eta_identity(snaps, traj.model,
                                                       traj.rho,
                                                       settings.identity_factor,
                                                       dt_eff))
        elif check_id == "convergence-trend":
            results.append(check_convergence(snaps, traj, settings, tol))
        elif check_id == "volume-growth":
            results.append(check_volume_growth(traj, settings))
        elif check_id == "convexity":
            results.append(check_convexity(snaps, tol))
        elif check_id == "f1-nonpositive-2d":
            results.append(check_f1_nonpositive(snaps, tol))
        elif check_id == "conformal-lower-bound":
            results.append(check_conformal_bounds(traj, 1e-6))
        elif check_id == "conformal-monotone":
            if traj.model.m < 1.0:
                results.append(check_conformal_monotone(traj, 1e-6))
            else:
                results.append(CheckResult("conformal-monotone", INDET,
                                           math.nan, (math.nan, math.nan),
                                           1e-6, "monotonicity holds for m < 1"))
        else:
            raise ConfigError(f"unknown check {check_id!r}")
    return MonitorReport(results=tuple(results))
