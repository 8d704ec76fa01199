"""Pure kernels on a rotationally symmetric metric g = a^2 dr^2 + b^2 g_{S^{n-1}}.

All quantities follow the arclength description: s is geodesic distance to the
origin, K = -b_ss/b the radial sectional curvature, L = (1-b_s^2)/b^2 the
tangential one, and F1, F2 the combinations shifted by (n-1)/xi so the exact
self-similar background has F1 = F2 = 0.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateMetricError, InvalidStateError, PoleUndefinedError
from .grid import RadialGrid


@dataclass
class RadialMetricState:
    """Discretized metric coefficients (a, b) on a radial grid at time t."""

    t: float
    a: np.ndarray
    b: np.ndarray
    grid: RadialGrid
    n: int
    m: float

    def __post_init__(self):
        self.a = np.ascontiguousarray(self.a, dtype=np.float64)
        self.b = np.ascontiguousarray(self.b, dtype=np.float64)
        if self.n < 2 or self.n != int(self.n):
            raise InvalidStateError("ambient dimension must be an integer >= 2")
        if self.m <= 0.0:
            raise InvalidStateError("initial scale m must be positive")
        if self.a.shape != self.grid.r.shape or self.b.shape != self.grid.r.shape:
            raise InvalidStateError("field shapes must match the grid")

    def validate(self) -> None:
        if not np.all(np.isfinite(self.a)) or not np.all(np.isfinite(self.b)):
            raise InvalidStateError("non-finite metric coefficients")
        if np.any(self.a <= 0.0):
            raise InvalidStateError("a must be positive everywhere")
        if self.b[0] != 0.0:
            raise InvalidStateError("b must vanish exactly at the pole")
        if np.any(self.b[1:] <= 0.0):
            raise DegenerateMetricError("b must be positive away from the pole")

    def copy(self) -> "RadialMetricState":
        return RadialMetricState(self.t, self.a.copy(), self.b.copy(),
                                 self.grid, self.n, self.m)


@dataclass
class CurvatureFields:
    """Derived curvature data of one state; H[0] is NaN (undefined at the pole)."""

    s: np.ndarray
    b_s: np.ndarray
    b_ss: np.ndarray
    K: np.ndarray
    L: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    H: np.ndarray
    R_circ: np.ndarray
    xi_value: float
    n: int


def arclength(state: RadialMetricState) -> np.ndarray:
    """Geodesic distance to the origin: cumulative trapezoid of a over r."""
    state.validate()
    a, dr = state.a, state.grid.dr
    s = np.empty_like(a)
    s[0] = 0.0
    np.cumsum(0.5 * dr * (a[1:] + a[:-1]), out=s[1:])
    return s


def curvature(state: RadialMetricState, xi_value: float) -> CurvatureFields:
    """All curvature fields of a state, with the shift evaluated at xi_value.

    The pole values use the parity-extended limit: b_s(0) = 1 is imposed,
    K[0] comes from the even second derivative of b_s, and L[0] = K[0].
    """
    state.validate()
    if xi_value <= 0.0:
        raise InvalidStateError("xi must be positive")
    grid = state.grid
    n = state.n
    N = grid.n_points
    w = np.empty(N)
    wr = np.empty(N)
    K0 = kernels.curvature_core(state.a, state.b, grid.dr, grid.pole_weights(),
                                grid.theta_weights(), np.nan, n, w, wr)
    bss = wr / state.a
    K = np.empty(N)
    L = np.empty(N)
    K[0] = K0
    L[0] = K0
    K[1:] = -bss[1:] / state.b[1:]
    L[1:] = (1.0 - w[1:] ** 2) / state.b[1:] ** 2
    shift = (n - 1) / xi_value
    F1 = (n - 1) * K + shift
    F2 = K + (n - 2) * L + shift
    H = np.empty(N)
    H[0] = np.nan
    H[1:] = (n - 1) * w[1:] / state.b[1:]
    fields = CurvatureFields(s=arclength(state), b_s=w, b_ss=bss, K=K, L=L,
                             F1=F1, F2=F2, H=H, R_circ=np.empty(N),
                             xi_value=xi_value, n=n)
    fields.R_circ = shifted_scalar_curvature(fields, xi_value, n)
    return fields


def mean_curvature(state: RadialMetricState, node: int | None = None):
    """Mean curvature of the distance sphere through each node (nodes 1..last).

    With `node` given, returns the scalar at that node; node 0 is the pole
    where H is undefined.
    """
    state.validate()
    if node == 0:
        raise PoleUndefinedError("mean curvature diverges at the pole")
    grid = state.grid
    N = grid.n_points
    w = np.empty(N)
    kernels.bs_field(state.a, state.b, grid.dr, grid.pole_weights(),
                     np.nan, state.n, w)
    H = (state.n - 1) * w[1:] / state.b[1:]
    if node is None:
        return H
    return H[node - 1]


def volume(state: RadialMetricState) -> float:
    """omega_n * int a b^(n-1) dr by the composite trapezoid rule."""
    state.validate()
    n = state.n
    omega_n = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
    integrand = state.a * state.b ** (n - 1)
    return float(omega_n * np.trapezoid(integrand, dx=state.grid.dr))


def shifted_scalar_curvature(fields: CurvatureFields, xi_value: float,
                             n: int) -> np.ndarray:
    """R + n(n-1) expressed through the shifted curvatures."""
    return fields.F1 + (n - 1) * fields.F2 + n * (n - 1) * (1.0 - 1.0 / xi_value)
