"""Uniform radial grid and the fixed stencil-weight profiles.

The derivative kernels switch stencil families as smooth functions of r/r0
(never of the node index), so truncation-error fields stay smooth under mesh
refinement and differentiated residuals keep their full convergence order.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidStateError

# zone boundaries, as fractions of r0
POLE_ZONE_END = 0.10      # full high-order pole treatment below this
POLE_BLEND_END = 0.25     # smoothstep from pole stencils to interior ones
THETA_BLEND = 0.10        # 2nd-order admixture in w_r away from the pole


def _smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


@dataclass(frozen=True)
class RadialGrid:
    """Uniform nodes on [0, r0] in the geodesic-polar coordinate r."""

    r: np.ndarray
    dr: float = field(init=False)
    r0: float = field(init=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=np.float64)
        if r.ndim != 1 or r.size < 64:
            raise InvalidStateError("grid needs at least 64 nodes")
        dr = r[1] - r[0]
        if r[0] != 0.0 or dr <= 0.0:
            raise InvalidStateError("grid must start at 0 and increase")
        if not np.allclose(np.diff(r), dr, rtol=1e-12, atol=1e-14 * abs(r[-1])):
            raise InvalidStateError("grid spacing must be uniform")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "dr", float(dr))
        object.__setattr__(self, "r0", float(r[-1]))

    @classmethod
    def make(cls, r0: float, n_points: int) -> "RadialGrid":
        return cls(np.linspace(0.0, float(r0), int(n_points)))

    @property
    def n_points(self) -> int:
        return self.r.size

    def pole_weights(self) -> np.ndarray:
        """Weight of the high-order pole stencils for b_r: 1 near r=0, 0 outside."""
        x = (self.r / self.r0 - POLE_ZONE_END) / (POLE_BLEND_END - POLE_ZONE_END)
        return 1.0 - _smoothstep(x)

    def theta_weights(self) -> np.ndarray:
        """Per-node 2nd-order admixture for w_r: zero near the pole (where the
        1/b amplification forbids it) and near the boundary (where the unstable
        boundary mode amplifies truncation error most), THETA_BLEND between."""
        x = (self.r / self.r0 - POLE_ZONE_END) / (POLE_BLEND_END - POLE_ZONE_END)
        y = (self.r / self.r0 - 0.70) / 0.15
        return THETA_BLEND * _smoothstep(x) * (1.0 - _smoothstep(y))

    def dissipation_weights(self) -> np.ndarray:
        """Smooth taper of the fourth-difference dissipation toward the outer
        boundary (abrupt cutoffs would put a kink into the error field there)."""
        x = (self.r / self.r0 - 0.85) / 0.10
        return 1.0 - _smoothstep(x)
