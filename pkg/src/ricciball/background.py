"""The exact self-similar background flow xi(t) g_{-1} and its boundary data."""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidStateError
from .geometry import RadialMetricState
from .grid import RadialGrid


@dataclass(frozen=True)
class BackgroundModel:
    """Problem parameters: dimension n, initial scale m, ball radius r0."""

    n: int
    m: float
    r0: float

    def __post_init__(self):
        if self.n < 2 or self.n != int(self.n):
            raise InvalidStateError("dimension must be an integer >= 2")
        if self.m <= 0.0 or self.r0 <= 0.0:
            raise InvalidStateError("m and r0 must be positive")


def xi(t, model: BackgroundModel):
    """Scale factor 1 + e^{-2(n-1)t} (m-1); solves xi' = 2(n-1)(1-xi)."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0.0):
        raise DomainError("flow time must be nonnegative")
    val = 1.0 + np.exp(-2.0 * (model.n - 1) * t) * (model.m - 1.0)
    return float(val) if val.ndim == 0 else val


def background_state(t: float, model: BackgroundModel,
                     grid: RadialGrid) -> RadialMetricState:
    """a = sqrt(xi), b = sqrt(xi) sinh r: the flow of the scaled hyperbolic ball."""
    c = math.sqrt(xi(t, model))
    a = np.full(grid.n_points, c)
    b = c * np.sinh(grid.r)
    return RadialMetricState(t=float(t), a=a, b=b, grid=grid, n=model.n, m=model.m)


def background_mean_curvature(t, model: BackgroundModel):
    """(n-1) xi^{-1/2} coth(r0): boundary mean curvature of the background
    (its geodesic curvature for n = 2)."""
    coth = math.cosh(model.r0) / math.sinh(model.r0)
    return (model.n - 1) / np.sqrt(xi(t, model)) * coth


def eta(t, model: BackgroundModel, rho=None):
    """Prescribed boundary mean curvature: background value plus rho(t)."""
    base = background_mean_curvature(t, model)
    if rho is None:
        return base
    return base + rho.value(t)


@dataclass(frozen=True)
class TimeTransform:
    """Normalized-to-unnormalized time map and the metric scale between them."""

    t_unnormalized: float
    metric_scale: float


def time_transform(t: float, n: int) -> TimeTransform:
    """tau = (e^{2(n-1)t} - 1)/(2(n-1)); the unnormalized flow runs in tau and
    its metric is e^{-2(n-1)t} times the normalized one."""
    if t < 0.0:
        raise DomainError("flow time must be nonnegative")
    c = 2.0 * (n - 1)
    return TimeTransform(t_unnormalized=math.expm1(c * t) / c,
                         metric_scale=math.exp(-c * t))


def time_transform_inverse(tau: float, n: int) -> float:
    if tau < 0.0:
        raise DomainError("unnormalized time must be nonnegative")
    c = 2.0 * (n - 1)
    return math.log1p(c * tau) / c
