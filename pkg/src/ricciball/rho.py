"""Boundary perturbation families rho(t) and their numerical admissibility checks.

The theorems constrain rho only through inequalities (vanishing derivatives at
t=0, monotonicity, growth ratios, tail behavior), so admissibility is checked
by sampling rather than hard-coded per family.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import kernels
from .errors import ConfigError

FAMILIES = ("zero", "poly-saturating", "ramped-loglog", "custom-table")

_KIND = {"zero": kernels.RHO_ZERO, "poly-saturating": kernels.RHO_POLY,
         "ramped-loglog": kernels.RHO_LOGLOG, "custom-table": kernels.RHO_TABLE}

_EMPTY = np.empty(0)


@dataclass
class RhoSpec:
    """A perturbation rho(t) of the background boundary mean curvature.

    Families: poly-saturating A t^{k+1}/(1+t^{k+1}); ramped-loglog
    A S(t/t_ramp) ln ln(e+t) with S a C^k smoothstep flat to order k+1 at 0;
    custom-table (monotone-cubic interpolation of samples); zero.
    """

    family: str = "zero"
    amplitude: float = 0.0
    order: int = 2
    t_ramp: float = 1.0
    table_times: np.ndarray | None = None
    table_values: np.ndarray | None = None
    _slopes: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown rho family {self.family!r}")
        if self.amplitude < 0.0:
            raise ConfigError("amplitude must be nonnegative")
        if self.order < 2:
            raise ConfigError("smoothness order must be at least 2")
        if self.t_ramp <= 0.0:
            raise ConfigError("t_ramp must be positive")
        if self.family == "custom-table":
            if self.table_times is None or self.table_values is None:
                raise ConfigError("custom-table needs table_times/table_values")
            xs = np.asarray(self.table_times, dtype=np.float64)
            ys = np.asarray(self.table_values, dtype=np.float64)
            if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 4:
                raise ConfigError("table needs >= 4 matching samples")
            if xs[0] != 0.0 or np.any(np.diff(xs) <= 0):
                raise ConfigError("table times must increase from 0")
            self.table_times = xs
            self.table_values = ys
            # monotone-cubic (pchip) knot slopes; evaluation is cubic Hermite
            self._slopes = PchipInterpolator(xs, ys).derivative()(xs)
        else:
            self._slopes = _EMPTY

    def is_zero(self) -> bool:
        if self.family == "zero":
            return True
        if self.family == "custom-table":
            return bool(np.all(self.table_values == 0.0))
        return self.amplitude == 0.0

    def kernel_params(self):
        """Packed arguments for the compiled eta/rho evaluators."""
        if self.family == "custom-table":
            return (_KIND[self.family], self.amplitude, self.order, self.t_ramp,
                    self.table_times, self.table_values, self._slopes)
        return (_KIND[self.family], self.amplitude, self.order, self.t_ramp,
                _EMPTY, _EMPTY, _EMPTY)

    def value(self, t):
        p = self.kernel_params()
        if np.ndim(t) == 0:
            return kernels.rho_value(*p, float(t))
        return np.array([kernels.rho_value(*p, float(x)) for x in np.ravel(t)])

    def derivative(self, t):
        p = self.kernel_params()
        if np.ndim(t) == 0:
            return kernels.rho_derivative(*p, float(t))
        return np.array([kernels.rho_derivative(*p, float(x)) for x in np.ravel(t)])


@dataclass(frozen=True)
class RhoCondition:
    condition_id: str
    verdict: str               # pass | fail | indeterminate
    worst_margin: float        # negative = violation magnitude (normalized)
    worst_time: float
    note: str = ""


@dataclass(frozen=True)
class RhoValidationReport:
    target: str
    conditions: tuple
    resolution: float
    n_samples: int
    t_max: float

    @property
    def verdict(self) -> str:
        verdicts = {c.verdict for c in self.conditions}
        if "fail" in verdicts:
            return "fail"
        if "indeterminate" in verdicts:
            return "indeterminate"
        return "pass"

    def condition(self, condition_id: str) -> RhoCondition:
        for c in self.conditions:
            if c.condition_id == condition_id:
                return c
        raise KeyError(condition_id)

    def failed_ids(self):
        return [c.condition_id for c in self.conditions if c.verdict == "fail"]


@dataclass(frozen=True)
class ValidatorSettings:
    sigma: float = 0.1          # margin exponent in the near-zero growth ratio
    sigma_window: float = 1e-3  # interval (0, eps] for that ratio
    tail_epsilon: float = 1e-3  # coefficient of the (1+t)^-1 ln(1+t)^-1 tail
    tail_T: float = 1.0         # tail conditions enforced for t >= T
    y0: float | None = None     # y(0) for the eta upper bound (default from model)
    resolution: float = 1e-9    # margins below this are indeterminate


def _verdict(margin: float, res: float, strict: bool) -> str:
    if strict:
        if margin > res:
            return "pass"
        if margin <= 0.0:
            return "fail"
        return "indeterminate"
    if margin == 0.0 or margin >= res:
        return "pass"
    if margin <= -res:
        return "fail"
    return "indeterminate"


def _worst(ts, margins):
    i = int(np.argmin(margins))
    return float(margins[i]), float(ts[i])


def _ratio_margins(lhs, rhs, floor=1e-30):
    denom = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), floor)
    return (lhs - rhs) / denom


def validate_rho(rho: RhoSpec, model, target: str = "thm-1.1",
                 t_max: float = 10.0, n_samples: int = 2000,
                 settings: ValidatorSettings | None = None) -> RhoValidationReport:
    """Sample-based check of every admissibility condition of the chosen theorem.

    target "thm-1.1" is the n>=3 result; "thm-1.2" the two-dimensional one.
    """
    from .background import eta as eta_fn  # local import to avoid a cycle

    if target not in ("thm-1.1", "thm-1.2"):
        raise ConfigError(f"unknown validation target {target!r}")
    if t_max <= 0.0:
        raise ConfigError("t_max must be positive")
    if n_samples < 1000:
        raise ConfigError("validator needs at least 1000 samples")
    s = settings or ValidatorSettings()
    res = s.resolution
    n = model.n
    m = model.m
    ts = np.linspace(0.0, t_max, n_samples)
    rho_v = rho.value(ts)
    rho_d = rho.derivative(ts)
    d_scale = max(float(np.max(np.abs(rho_d))), 1e-15)
    conditions = []

    # --- compatibility: rho(0) = rho^(j)(0) = 0 up to order k -----------------
    k = rho.order
    h = min(rho.t_ramp, t_max) / 64.0
    scale = max(float(np.max(np.abs(rho_v))), rho.amplitude, 1e-15)
    worst = np.inf
    for j in range(0, k + 1):
        if j == 0:
            dj = abs(rho.value(0.0))
        else:
            # forward difference of order j, scaled like t^{k+1}
            vals = rho.value(h * np.arange(j + 1))
            coeff = np.array([(-1.0) ** (j - i) * math.comb(j, i)
                              for i in range(j + 1)])
            dj = abs(float(coeff @ vals)) / h ** j
        tol_j = 8.0 ** k * scale * h ** (k + 1 - j)
        worst = min(worst, 1.0 - dj / tol_j)
    conditions.append(RhoCondition(
        "compatibility-vanishing-derivatives", _verdict(worst, res, strict=False),
        worst, 0.0, f"orders 0..{k} by forward differences, step {h:g}"))

    # --- rho' >= 0 on [0, t_max] ---------------------------------------------
    margins = rho_d / d_scale
    wm, wt = _worst(ts, margins)
    conditions.append(RhoCondition(
        "rho-prime-nonnegative", _verdict(wm, res, strict=False), wm, wt))

    # --- rho' > 0 on an initial interval -------------------------------------
    if rho.family == "poly-saturating":
        t_probe = min(1.0, t_max / 5.0)
    elif rho.family == "ramped-loglog":
        t_probe = min(rho.t_ramp, t_max)
    else:
        t_probe = t_max / 5.0
    sel = (ts > 0.0) & (ts <= t_probe)
    margins = rho_d[sel] / d_scale
    wm, wt = _worst(ts[sel], margins)
    conditions.append(RhoCondition(
        "rho-prime-positive-initial", _verdict(wm, res, strict=True), wm, wt,
        f"checked on (0, {t_probe:g}]"))

    # --- m > 1: rho' >= (n-1)(1 - 1/xi) rho for all t -------------------------
    from .background import xi as xi_fn
    sel = ts > 0.0
    one_minus = 1.0 - 1.0 / xi_fn(ts[sel], model)
    lhs = rho_d[sel]
    rhs = (n - 1) * one_minus * rho_v[sel]
    margins = _ratio_margins(lhs, rhs)
    wm, wt = _worst(ts[sel], margins)
    note = "" if m > 1.0 else "vacuous for m <= 1 (the ratio factor is nonpositive)"
    conditions.append(RhoCondition(
        "linear-growth-all-times", _verdict(wm, res, strict=False), wm, wt, note))

    # --- m > 1, thm-1.1 only: rho' >= (n-1+sigma)(1-1/xi) rho near t = 0 ------
    if target == "thm-1.1":
        tw = np.linspace(s.sigma_window / 64.0, s.sigma_window, 64)
        lhs = rho.derivative(tw)
        rhs = (n - 1 + s.sigma) * (1.0 - 1.0 / xi_fn(tw, model)) * rho.value(tw)
        margins = _ratio_margins(lhs, rhs)
        wm, wt = _worst(tw, margins)
        note = f"sigma={s.sigma} on (0, {s.sigma_window:g}]"
        if m <= 1.0:
            note += "; vacuous for m <= 1"
        conditions.append(RhoCondition(
            "sigma-growth-initial", _verdict(wm, res, strict=False), wm, wt, note))

    # --- thm-1.2 extras --------------------------------------------------------
    if target == "thm-1.2":
        eta0 = float(eta_fn(0.0, model, rho))
        y0 = s.y0 if s.y0 is not None else 1.05 * (eta0 + 2.0) ** 3
        y = (y0 + 1.0 / 3.0) * np.exp(3.0 * ts) - 1.0 / 3.0  # solves y' = 3y + 1
        eta_t = np.array([float(eta_fn(t, model, rho)) for t in ts])
        lhs = y ** (1.0 / 3.0) - 2.0
        margins = _ratio_margins(lhs, eta_t)
        wm, wt = _worst(ts, margins)
        conditions.append(RhoCondition(
            "eta-upper-bound", _verdict(wm, res, strict=False), wm, wt,
            f"y(0)={y0:g}, y'=3y+1"))

        sel = ts >= s.tail_T
        tail = s.tail_epsilon / ((1.0 + ts[sel]) * np.log(1.0 + ts[sel]))
        if m < 1.0:
            lhs = rho_d[sel]
            note = "rho' against the tail envelope (m < 1)"
        else:
            lhs = rho_d[sel] - (1.0 - 1.0 / xi_fn(ts[sel], model)) * rho_v[sel]
            note = "rho' - (1-1/xi) rho against the tail envelope (m > 1)"
        margins = _ratio_margins(lhs, tail)
        wm, wt = _worst(ts[sel], margins)
        conditions.append(RhoCondition(
            "tail-growth", _verdict(wm, res, strict=False), wm, wt,
            note + f", eps={s.tail_epsilon:g}, T={s.tail_T:g}"))

    return RhoValidationReport(target=target, conditions=tuple(conditions),
                               resolution=res, n_samples=n_samples, t_max=t_max)
