"""Compiled kernels: radial stencils, flow right-hand sides, RK4 advance loops.

Everything here is pure float64 array arithmetic with fixed evaluation order,
so runs are bit-reproducible. The Python-facing modules wrap these.

Stencil layout (see grid.py for the weight profiles):
  b_r : parity (b odd in r) 6th-order stencils in the pole zone, smoothly
        blended to 4th-order centered; 4th-order biased/one-sided at the
        outer edge. High order near the pole is required because
        L = (1 - b_s^2)/b^2 amplifies b_r errors by 1/b^2 there.
  w_r : (w = b_s, even in r) 4th-order centered with a smooth r-dependent
        admixture theta(r) of the 2nd-order stencil; the admixture keeps the
        leading truncation second order with a small constant. 3rd-order
        one-sided at the outer boundary.
  The pole value w(0) = 1 is imposed exactly (regularity of the metric), and
  the Robin condition pins w at the last node when a boundary value is given.
"""
import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_DT_COLLAPSE = -1

RHO_ZERO = 0
RHO_POLY = 1
RHO_LOGLOG = 2
RHO_TABLE = 3


# ----------------------------------------------------------------------------
# boundary data families
# ----------------------------------------------------------------------------

@njit(cache=True)
def smoothstep_ck(x, k):
    """Regularized incomplete beta I_x(k+1, k+1): C^k smoothstep, flat to
    order k+1 at both ends."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    n = 2 * k + 1
    total = 0.0
    # sum_{j=k+1}^{n} C(n,j) x^j (1-x)^(n-j)
    comb = 1.0
    for j in range(1, k + 2):
        comb = comb * (n - j + 1) / j  # C(n, k+1) after loop
    for j in range(k + 1, n + 1):
        total += comb * x ** j * (1.0 - x) ** (n - j)
        comb = comb * (n - j) / (j + 1)
    return total


@njit(cache=True)
def smoothstep_ck_deriv(x, k):
    if x <= 0.0 or x >= 1.0:
        return 0.0
    # S'(x) = x^k (1-x)^k / B(k+1, k+1), 1/B = (2k+1) C(2k, k)
    comb = 1.0
    for j in range(1, k + 1):
        comb = comb * (2 * k - j + 1) / j
    return (2 * k + 1) * comb * x ** k * (1.0 - x) ** k


@njit(cache=True)
def _hermite_eval(xs, ys, ds, t):
    """Cubic Hermite with prescribed knot slopes; linear continuation outside."""
    n = xs.shape[0]
    if t <= xs[0]:
        return ys[0] + ds[0] * (t - xs[0])
    if t >= xs[n - 1]:
        return ys[n - 1] + ds[n - 1] * (t - xs[n - 1])
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= t:
            lo = mid
        else:
            hi = mid
    h = xs[lo + 1] - xs[lo]
    s = (t - xs[lo]) / h
    h00 = (1.0 + 2.0 * s) * (1.0 - s) ** 2
    h10 = s * (1.0 - s) ** 2
    h01 = s * s * (3.0 - 2.0 * s)
    h11 = s * s * (s - 1.0)
    return h00 * ys[lo] + h10 * h * ds[lo] + h01 * ys[lo + 1] + h11 * h * ds[lo + 1]


@njit(cache=True)
def _hermite_deriv(xs, ys, ds, t):
    n = xs.shape[0]
    if t <= xs[0]:
        return ds[0]
    if t >= xs[n - 1]:
        return ds[n - 1]
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= t:
            lo = mid
        else:
            hi = mid
    h = xs[lo + 1] - xs[lo]
    s = (t - xs[lo]) / h
    dh00 = 6.0 * s * (s - 1.0) / h
    dh10 = (1.0 - s) * (1.0 - 3.0 * s)
    dh01 = -6.0 * s * (s - 1.0) / h
    dh11 = s * (3.0 * s - 2.0)
    return dh00 * ys[lo] + dh10 * ds[lo] + dh01 * ys[lo + 1] + dh11 * ds[lo + 1]


@njit(cache=True)
def rho_value(kind, amp, k, t_ramp, xs, ys, ds, t):
    if kind == RHO_POLY:
        tk = t ** (k + 1)
        return amp * tk / (1.0 + tk)
    if kind == RHO_LOGLOG:
        return amp * smoothstep_ck(t / t_ramp, k) * np.log(np.log(np.e + t))
    if kind == RHO_TABLE:
        return _hermite_eval(xs, ys, ds, t)
    return 0.0


@njit(cache=True)
def rho_derivative(kind, amp, k, t_ramp, xs, ys, ds, t):
    if kind == RHO_POLY:
        tk = t ** (k + 1)
        return amp * (k + 1) * t ** k / (1.0 + tk) ** 2
    if kind == RHO_LOGLOG:
        s = smoothstep_ck(t / t_ramp, k)
        sp = smoothstep_ck_deriv(t / t_ramp, k) / t_ramp
        ll = np.log(np.log(np.e + t))
        return amp * (sp * ll + s / ((np.e + t) * np.log(np.e + t)))
    if kind == RHO_TABLE:
        return _hermite_deriv(xs, ys, ds, t)
    return 0.0


@njit(cache=True)
def xi_value(t, n_dim, m):
    return 1.0 + np.exp(-2.0 * (n_dim - 1.0) * t) * (m - 1.0)


@njit(cache=True)
def eta_value(t, n_dim, m, r0, kind, amp, k, t_ramp, xs, ys, ds):
    xi = xi_value(t, n_dim, m)
    h_bg = (n_dim - 1.0) / np.sqrt(xi) * np.cosh(r0) / np.sinh(r0)
    return h_bg + rho_value(kind, amp, k, t_ramp, xs, ys, ds, t)


# ----------------------------------------------------------------------------
# spatial stencils
# ----------------------------------------------------------------------------

@njit(cache=True)
def d1_odd(b, dr, pole_w, out):
    """d/dr of an odd field (b): blended 6th/4th order, biased at the edge."""
    N = b.shape[0]
    s6 = (45.0 * b[1] - 9.0 * b[2] + b[3]) / (30.0 * dr)
    s4 = (8.0 * b[1] - b[2]) / (6.0 * dr)
    out[0] = pole_w[0] * s6 + (1.0 - pole_w[0]) * s4
    s6 = (-45.0 * b[0] - 9.0 * b[1] + 46.0 * b[2] - 9.0 * b[3] + b[4]) / (60.0 * dr)
    s4 = (-b[1] - 8.0 * b[0] + 8.0 * b[2] - b[3]) / (12.0 * dr)
    out[1] = pole_w[1] * s6 + (1.0 - pole_w[1]) * s4
    s6 = (9.0 * b[0] - 44.0 * b[1] + 45.0 * b[3] - 9.0 * b[4] + b[5]) / (60.0 * dr)
    s4 = (b[0] - 8.0 * b[1] + 8.0 * b[3] - b[4]) / (12.0 * dr)
    out[2] = pole_w[2] * s6 + (1.0 - pole_w[2]) * s4
    for i in range(3, N - 3):
        s4 = (b[i - 2] - 8.0 * b[i - 1] + 8.0 * b[i + 1] - b[i + 2]) / (12.0 * dr)
        if pole_w[i] > 0.0:
            s6 = (-b[i - 3] + 9.0 * b[i - 2] - 45.0 * b[i - 1]
                  + 45.0 * b[i + 1] - 9.0 * b[i + 2] + b[i + 3]) / (60.0 * dr)
            out[i] = pole_w[i] * s6 + (1.0 - pole_w[i]) * s4
        else:
            out[i] = s4
    out[N - 3] = (b[N - 5] - 8.0 * b[N - 4] + 8.0 * b[N - 2] - b[N - 1]) / (12.0 * dr)
    out[N - 2] = (-b[N - 5] + 6.0 * b[N - 4] - 18.0 * b[N - 3]
                  + 10.0 * b[N - 2] + 3.0 * b[N - 1]) / (12.0 * dr)
    out[N - 1] = (3.0 * b[N - 5] - 16.0 * b[N - 4] + 36.0 * b[N - 3]
                  - 48.0 * b[N - 2] + 25.0 * b[N - 1]) / (12.0 * dr)


@njit(cache=True)
def d1_even_theta(w, dr, theta, out):
    """d/dr of an even field (w = b_s): 4th order + theta(r) 2nd-order blend."""
    N = w.shape[0]
    out[0] = 0.0
    s4 = (w[1] - 8.0 * w[0] + 8.0 * w[2] - w[3]) / (12.0 * dr)
    s2 = (w[2] - w[0]) / (2.0 * dr)
    out[1] = (1.0 - theta[1]) * s4 + theta[1] * s2
    for i in range(2, N - 2):
        s4 = (w[i - 2] - 8.0 * w[i - 1] + 8.0 * w[i + 1] - w[i + 2]) / (12.0 * dr)
        s2 = (w[i + 1] - w[i - 1]) / (2.0 * dr)
        out[i] = (1.0 - theta[i]) * s4 + theta[i] * s2
    s4 = (-w[N - 5] + 6.0 * w[N - 4] - 18.0 * w[N - 3]
          + 10.0 * w[N - 2] + 3.0 * w[N - 1]) / (12.0 * dr)
    s2 = (w[N - 1] - w[N - 3]) / (2.0 * dr)
    out[N - 2] = (1.0 - theta[N - 2]) * s4 + theta[N - 2] * s2
    # boundary: 4th-order one-sided, with a one-sided 2nd-order admixture whose
    # leading truncation (+dr^2 w'''/6) matches the interior blend so the
    # stencil error stays smooth through the last node
    s4 = (25.0 * w[N - 1] - 48.0 * w[N - 2] + 36.0 * w[N - 3]
          - 16.0 * w[N - 4] + 3.0 * w[N - 5]) / (12.0 * dr)
    s2 = (2.0 * w[N - 1] - 3.5 * w[N - 2] + 2.0 * w[N - 3]
          - 0.5 * w[N - 4]) / dr
    out[N - 1] = (1.0 - theta[N - 1]) * s4 + theta[N - 1] * s2


@njit(cache=True)
def bs_field(a, b, dr, pole_w, eta, n_dim, w):
    """w = b_s with the pole regularity value pinned; Robin value at r0 when
    eta is finite (NaN selects the one-sided diagnostic closure)."""
    N = a.shape[0]
    d1_odd(b, dr, pole_w, w)
    for i in range(N):
        w[i] = w[i] / a[i]
    w[0] = 1.0
    if not np.isnan(eta):
        w[N - 1] = eta * b[N - 1] / (n_dim - 1.0)


@njit(cache=True)
def curvature_core(a, b, dr, pole_w, theta, eta, n_dim, w, wr):
    """Fill w = b_s and wr = (b_s)_r; return K0 (pole sectional curvature)."""
    bs_field(a, b, dr, pole_w, eta, n_dim, w)
    d1_even_theta(w, dr, theta, wr)
    wrr0 = (32.0 * w[1] - 30.0 * w[0] - 2.0 * w[2]) / (12.0 * dr * dr)
    return -wrr0 / (a[0] * a[0])


@njit(cache=True)
def ab_rhs_into(a, b, dr, pole_w, theta, diss_w, eta, n_dim, nu_a, nu_b,
                da, db, w, wr):
    """Normalized-flow right-hand side for (a, b).

    da = (n-1) a (b_ss/b - 1);  db = b_ss - (n-2)(1-b_s^2)/b - (n-1) b.
    The pole row uses the parity limit K0; db[0] is pinned to 0. A fourth-
    difference smoothing term (parabolic scaling, O(dr^2) consistent, tapered
    by diss_w toward the boundary) damps grid-scale modes of the otherwise
    diffusion-free a equation.
    """
    N = a.shape[0]
    K0 = curvature_core(a, b, dr, pole_w, theta, eta, n_dim, w, wr)
    nm1 = n_dim - 1.0
    nm2 = n_dim - 2.0
    da[0] = -nm1 * (K0 + 1.0) * a[0]
    db[0] = 0.0
    for i in range(1, N):
        bss = wr[i] / a[i]
        da[i] = nm1 * a[i] * (bss / b[i] - 1.0)
        db[i] = bss - nm2 * (1.0 - w[i] * w[i]) / b[i] - nm1 * b[i]
    c_a = nu_a / (16.0 * dr * dr)
    c_b = nu_b / (16.0 * dr * dr)
    da[1] -= diss_w[1] * c_a * (a[1] - 4.0 * a[0] + 6.0 * a[1] - 4.0 * a[2] + a[3])
    db[1] -= diss_w[1] * c_b * (-b[1] - 4.0 * b[0] + 6.0 * b[1] - 4.0 * b[2] + b[3])
    for i in range(2, N - 2):
        da[i] -= diss_w[i] * c_a * (a[i - 2] - 4.0 * a[i - 1] + 6.0 * a[i]
                                    - 4.0 * a[i + 1] + a[i + 2])
        db[i] -= diss_w[i] * c_b * (b[i - 2] - 4.0 * b[i - 1] + 6.0 * b[i]
                                    - 4.0 * b[i + 1] + b[i + 2])


@njit(cache=True)
def ab_rk4_step(a, b, t, dt, dr, pole_w, theta, diss_w, n_dim, m, r0, nu_a, nu_b,
                kind, amp, k, t_ramp, xs, ys, ds,
                k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b, ta, tb, w, wr):
    """One classical RK4 step with per-stage boundary data; returns 0 on
    success (result in ta, tb), 1 if positivity or finiteness failed."""
    N = a.shape[0]
    eta0 = eta_value(t, n_dim, m, r0, kind, amp, k, t_ramp, xs, ys, ds)
    ab_rhs_into(a, b, dr, pole_w, theta, diss_w, eta0, n_dim, nu_a, nu_b, k1a, k1b, w, wr)
    for i in range(N):
        ta[i] = a[i] + 0.5 * dt * k1a[i]
        tb[i] = b[i] + 0.5 * dt * k1b[i]
    eta_h = eta_value(t + 0.5 * dt, n_dim, m, r0, kind, amp, k, t_ramp, xs, ys, ds)
    ab_rhs_into(ta, tb, dr, pole_w, theta, diss_w, eta_h, n_dim, nu_a, nu_b, k2a, k2b, w, wr)
    for i in range(N):
        ta[i] = a[i] + 0.5 * dt * k2a[i]
        tb[i] = b[i] + 0.5 * dt * k2b[i]
    ab_rhs_into(ta, tb, dr, pole_w, theta, diss_w, eta_h, n_dim, nu_a, nu_b, k3a, k3b, w, wr)
    for i in range(N):
        ta[i] = a[i] + dt * k3a[i]
        tb[i] = b[i] + dt * k3b[i]
    eta1 = eta_value(t + dt, n_dim, m, r0, kind, amp, k, t_ramp, xs, ys, ds)
    ab_rhs_into(ta, tb, dr, pole_w, theta, diss_w, eta1, n_dim, nu_a, nu_b, k4a, k4b, w, wr)
    for i in range(N):
        na = a[i] + dt / 6.0 * (k1a[i] + 2.0 * k2a[i] + 2.0 * k3a[i] + k4a[i])
        nb = b[i] + dt / 6.0 * (k1b[i] + 2.0 * k2b[i] + 2.0 * k3b[i] + k4b[i])
        if not (np.isfinite(na) and np.isfinite(nb)) or na <= 0.0 or (i > 0 and nb <= 0.0):
            return 1
        ta[i] = na
        tb[i] = nb
    tb[0] = 0.0
    return 0


@njit(cache=True)
def ab_advance(a, b, t, t_target, dr, pole_w, theta, diss_w, n_dim, m, r0,
               cfl, dt_max, dt_min, nu_a, nu_b,
               kind, amp, k, t_ramp, xs, ys, ds):
    """Integrate (a, b) in place up to t_target with adaptive CFL dt.

    Returns (t, steps, dt_last, dt_min_used, dt_max_used, status).
    """
    N = a.shape[0]
    k1a = np.empty(N); k1b = np.empty(N); k2a = np.empty(N); k2b = np.empty(N)
    k3a = np.empty(N); k3b = np.empty(N); k4a = np.empty(N); k4b = np.empty(N)
    ta = np.empty(N); tb = np.empty(N); w = np.empty(N); wr = np.empty(N)
    steps = 0
    dt_last = 0.0
    dt_lo = np.inf
    dt_hi = 0.0
    while t < t_target - 1e-14 * max(1.0, abs(t_target)):
        amin = a[0]
        for i in range(1, N):
            if a[i] < amin:
                amin = a[i]
        dt = cfl * (amin * dr) ** 2
        if dt > dt_max:
            dt = dt_max
        if t + dt > t_target:
            dt = t_target - t
        while True:
            if dt < dt_min:
                return t, steps, dt_last, dt_lo, dt_hi, STATUS_DT_COLLAPSE
            bad = ab_rk4_step(a, b, t, dt, dr, pole_w, theta, diss_w, n_dim, m, r0,
                              nu_a, nu_b, kind, amp, k, t_ramp, xs, ys, ds,
                              k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b, ta, tb, w, wr)
            if bad == 0:
                break
            dt = 0.5 * dt
        for i in range(N):
            a[i] = ta[i]
            b[i] = tb[i]
        t = t + dt
        steps += 1
        dt_last = dt
        if dt < dt_lo:
            dt_lo = dt
        if dt > dt_hi:
            dt_hi = dt
    return t, steps, dt_last, dt_lo, dt_hi, STATUS_OK


# ----------------------------------------------------------------------------
# two-dimensional conformal-factor flow
# ----------------------------------------------------------------------------

@njit(cache=True)
def u_rhs_into(u, dr, coth_r, m, r0, eta, du):
    """du/dt = e^{-2u} (Lap0 u + 1/m) - 1 on the initial metric m*g_{-1}.

    Lap0 u = (u_rr + coth(r) u_r)/m; pole by the symmetric limit; the Robin
    condition supplies u_r at r0 and a 2nd-order one-sided u_rr closure.
    """
    N = u.shape[0]
    inv_m = 1.0 / m
    urr0 = 2.0 * (u[1] - u[0]) / (dr * dr)
    du[0] = np.exp(-2.0 * u[0]) * (2.0 * urr0 * inv_m + inv_m) - 1.0
    for i in range(1, N - 1):
        ur = (u[i + 1] - u[i - 1]) / (2.0 * dr)
        urr = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dr * dr)
        lap = (urr + coth_r[i] * ur) * inv_m
        du[i] = np.exp(-2.0 * u[i]) * (lap + inv_m) - 1.0
    uB = u[N - 1]
    ur_b = np.sqrt(m) * eta * np.exp(uB) - np.cosh(r0) / np.sinh(r0)
    urr_b = (-3.5 * uB + 4.0 * u[N - 2] - 0.5 * u[N - 3]) / (dr * dr) + 3.0 * ur_b / dr
    lap = (urr_b + (np.cosh(r0) / np.sinh(r0)) * ur_b) * inv_m
    du[N - 1] = np.exp(-2.0 * uB) * (lap + inv_m) - 1.0


@njit(cache=True)
def u_rk4_step(u, t, dt, dr, coth_r, m, r0,
               kind, amp, k, t_ramp, xs, ys, ds,
               k1, k2, k3, k4, tu):
    N = u.shape[0]
    n_dim = 2
    eta0 = eta_value(t, n_dim, m, r0, kind, amp, k, t_ramp, xs, ys, ds)
    u_rhs_into(u, dr, coth_r, m, r0, eta0, k1)
    for i in range(N):
        tu[i] = u[i] + 0.5 * dt * k1[i]
    eta_h = eta_value(t + 0.5 * dt, n_dim, m, r0, kind, amp, k, t_ramp, xs, ys, ds)
    u_rhs_into(tu, dr, coth_r, m, r0, eta_h, k2)
    for i in range(N):
        tu[i] = u[i] + 0.5 * dt * k2[i]
    u_rhs_into(tu, dr, coth_r, m, r0, eta_h, k3)
    for i in range(N):
        tu[i] = u[i] + dt * k3[i]
    eta1 = eta_value(t + dt, n_dim, m, r0, kind, amp, k, t_ramp, xs, ys, ds)
    u_rhs_into(tu, dr, coth_r, m, r0, eta1, k4)
    for i in range(N):
        nu_ = u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if not np.isfinite(nu_):
            return 1
        tu[i] = nu_
    return 0


@njit(cache=True)
def u_advance(u, t, t_target, dr, coth_r, m, r0, cfl, dt_max, dt_min,
              kind, amp, k, t_ramp, xs, ys, ds):
    """Integrate u in place up to t_target; dt from the conformal CFL
    dt <= cfl * (min sqrt(m) e^u * dr)^2."""
    N = u.shape[0]
    k1 = np.empty(N); k2 = np.empty(N); k3 = np.empty(N); k4 = np.empty(N)
    tu = np.empty(N)
    steps = 0
    dt_last = 0.0
    dt_lo = np.inf
    dt_hi = 0.0
    while t < t_target - 1e-14 * max(1.0, abs(t_target)):
        umin = u[0]
        for i in range(1, N):
            if u[i] < umin:
                umin = u[i]
        aeff = np.sqrt(m) * np.exp(umin)
        dt = cfl * (aeff * dr) ** 2
        if dt > dt_max:
            dt = dt_max
        if t + dt > t_target:
            dt = t_target - t
        while True:
            if dt < dt_min:
                return t, steps, dt_last, dt_lo, dt_hi, STATUS_DT_COLLAPSE
            bad = u_rk4_step(u, t, dt, dr, coth_r, m, r0, kind, amp, k, t_ramp,
                             xs, ys, ds, k1, k2, k3, k4, tu)
            if bad == 0:
                break
            dt = 0.5 * dt
        for i in range(N):
            u[i] = tu[i]
        t = t + dt
        steps += 1
        dt_last = dt
        if dt < dt_lo:
            dt_lo = dt
        if dt > dt_hi:
            dt_hi = dt
    return t, steps, dt_last, dt_lo, dt_hi, STATUS_OK
