import numpy as np
import pytest

import ricciball as rb


@pytest.fixture(scope="session")
def grid_101():
    return rb.RadialGrid.make(1.0, 101)


@pytest.fixture(scope="session")
def grid_201():
    return rb.RadialGrid.make(1.0, 201)


def synthetic_state(N, r0=1.0, n=3, m=1.0, t=0.0):
    """A smooth regular non-background state with known exact curvature.

    a = 1 + 0.3 cos r (even), s = r + 0.3 sin r, b = sinh(s) + 0.05 s^3
    (odd in s with b_s(0) = 1).
    """
    grid = rb.RadialGrid.make(r0, N)
    r = grid.r
    a = 1.0 + 0.3 * np.cos(r)
    s = r + 0.3 * np.sin(r)
    b = np.sinh(s) + 0.05 * s ** 3
    state = rb.RadialMetricState(t=t, a=a, b=b, grid=grid, n=n, m=m)
    exact = {
        "s": s,
        "b_s": np.cosh(s) + 0.15 * s ** 2,
        "b_ss": np.sinh(s) + 0.3 * s,
    }
    K = np.empty(N)
    K[1:] = -exact["b_ss"][1:] / b[1:]
    K[0] = -1.3  # -b_sss(0)/b_s(0) = -(cosh 0 + 0.3)
    L = np.empty(N)
    L[1:] = (1.0 - exact["b_s"][1:] ** 2) / b[1:] ** 2
    L[0] = K[0]
    exact["K"] = K
    exact["L"] = L
    return state, exact
