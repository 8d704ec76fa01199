"""Rotationally symmetric normalized Ricci flow on a closed hyperbolic ball
with prescribed time-dependent boundary mean curvature, plus a monitor suite
for the flow's proven inequalities and identities."""

from .background import (BackgroundModel, background_mean_curvature,
                         background_state, eta, time_transform,
                         time_transform_inverse, xi)
from .conformal import (ConformalState, conformal_boundary, conformal_rhs,
                        cross_check, initial_conformal_state, run_conformal)
from .config import RunConfig
from .geometry import (CurvatureFields, RadialMetricState, arclength,
                       curvature, mean_curvature, shifted_scalar_curvature,
                       volume)
from .grid import RadialGrid
from .monitors import MonitorReport, MonitorSettings, run_suite
from .rho import RhoSpec, RhoValidationReport, ValidatorSettings, validate_rho
from .solver import (RunSettings, SchemeConfig, Trajectory, apply_boundary,
                     initial_state, rhs, run, step)

__all__ = [
    "BackgroundModel", "ConformalState", "CurvatureFields", "MonitorReport",
    "MonitorSettings", "RadialGrid", "RadialMetricState", "RhoSpec",
    "RhoValidationReport", "RunConfig", "RunSettings", "SchemeConfig",
    "Trajectory", "ValidatorSettings", "apply_boundary", "arclength",
    "background_mean_curvature", "background_state", "conformal_boundary",
    "conformal_rhs", "cross_check", "curvature", "eta",
    "initial_conformal_state", "initial_state", "mean_curvature", "rhs",
    "run", "run_conformal", "run_suite", "shifted_scalar_curvature", "step",
    "time_transform", "time_transform_inverse", "validate_rho", "volume", "xi",
]

__version__ = "0.1.0"
