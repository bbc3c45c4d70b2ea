"""Compiled scalar kernels shared by :mod:`orbkit.dynamics` and :mod:`orbkit.optctrl`.

State layout of the augmented vector ``y`` (length 14)::

    y[0:6]   element state (p, e1, e2, s1, s2, l)
    y[6]     mass
    y[7:13]  element costates
    y[13]    mass costate

``kind`` selects the orientation pair: ``KIND_MRP`` for (sigma1, sigma2) and
``KIND_CRP`` for (q1, q2).  Invalid states return NaN rates rather than
raising, so the integrator can report them uniformly.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

KIND_MRP = 0
KIND_CRP = 1

ST_OK = 0
ST_NONFINITE = 1
ST_UNDERFLOW = 2
ST_MAXSTEPS = 3


@njit(cache=True)
def orbit_scalars(x, mu):
    """Return ``(w, r/h, k6, e sin nu)``."""
    p = x[0]
    cl = math.cos(x[5])
    sl = math.sin(x[5])
    w = 1.0 + x[1] * cl + x[2] * sl
    rh = math.sqrt(p / mu) / w
    k6 = math.sqrt(mu / (p * p * p)) * w * w
    esnu = x[1] * sl - x[2] * cl
    return w, rh, k6, esnu


@njit(cache=True)
def orientation_terms(x, kind):
    """Scalars ``(b4, b5, b6)`` of the orientation rows; NaN past the singular set."""
    s1 = x[3]
    s2 = x[4]
    cl = math.cos(x[5])
    sl = math.sin(x[5])
    ss = s1 * s1 + s2 * s2
    if kind == KIND_MRP:
        d = 1.0 - ss
        if d <= 1e-9:
            return math.nan, math.nan, math.nan
        b6 = 2.0 / d * (s1 * sl - s2 * cl)
        f = 0.25 * (1.0 + ss)
        return f * (cl - s2 * b6), f * (sl + s1 * b6), b6
    f = 0.5 * (1.0 + ss)
    return f * cl, f * sl, s1 * sl - s2 * cl


@njit(cache=True)
def fill_b(x, kind, B):
    """Fill the 6x3 thrust matrix ``B``."""
    p = x[0]
    e1 = x[1]
    e2 = x[2]
    cl = math.cos(x[5])
    sl = math.sin(x[5])
    w = 1.0 + e1 * cl + e2 * sl
    b4, b5, b6 = orientation_terms(x, kind)
    for i in range(6):
        for j in range(3):
            B[i, j] = 0.0
    B[0, 1] = 2.0 * p
    B[1, 0] = w * sl
    B[1, 1] = (w + 1.0) * cl + e1
    B[1, 2] = -e2 * b6
    B[2, 0] = -w * cl
    B[2, 1] = (w + 1.0) * sl + e2
    B[2, 2] = e1 * b6
    B[3, 2] = b4
    B[4, 2] = b5
    B[5, 2] = b6


@njit(cache=True)
def orientation_gradients(x, kind, g):
    """``g[i, j]`` = d(b_{4+i}) / d(s1, s2, l)[j] for i in 0..2."""
    s1 = x[3]
    s2 = x[4]
    cl = math.cos(x[5])
    sl = math.sin(x[5])
    ss = s1 * s1 + s2 * s2
    if kind == KIND_MRP:
        d = 1.0 - ss
        gg = 2.0 / d
        b6 = gg * (s1 * sl - s2 * cl)
        d6s1 = 2.0 * s1 / d * b6 + gg * sl
        d6s2 = 2.0 * s2 / d * b6 - gg * cl
        d6l = gg * (s1 * cl + s2 * sl)
        f = 0.25 * (1.0 + ss)
        u4 = cl - s2 * b6
        u5 = sl + s1 * b6
        g[0, 0] = 0.5 * s1 * u4 - f * s2 * d6s1
        g[0, 1] = 0.5 * s2 * u4 - f * (b6 + s2 * d6s2)
        g[0, 2] = f * (-sl - s2 * d6l)
        g[1, 0] = 0.5 * s1 * u5 + f * (b6 + s1 * d6s1)
        g[1, 1] = 0.5 * s2 * u5 + f * s1 * d6s2
        g[1, 2] = f * (cl + s1 * d6l)
        g[2, 0] = d6s1
        g[2, 1] = d6s2
        g[2, 2] = d6l
    else:
        f = 0.5 * (1.0 + ss)
        g[0, 0] = s1 * cl
        g[0, 1] = s2 * cl
        g[0, 2] = -f * sl
        g[1, 0] = s1 * sl
        g[1, 1] = s2 * sl
        g[1, 2] = f * cl
        g[2, 0] = sl
        g[2, 1] = -cl
        g[2, 2] = s1 * cl + s2 * sl


@njit(cache=True)
def fill_b_gradients(x, kind, D):
    """Fill ``D[i, j, k]`` = d B[i, j] / d x[k] (shape 6x3x6)."""
    e1 = x[1]
    e2 = x[2]
    cl = math.cos(x[5])
    sl = math.sin(x[5])
    w = 1.0 + e1 * cl + e2 * sl
    wl = -(e1 * sl - e2 * cl)
    b4, b5, b6 = orientation_terms(x, kind)
    g = np.empty((3, 3))
    orientation_gradients(x, kind, g)
    for i in range(6):
        for j in range(3):
            for k in range(6):
                D[i, j, k] = 0.0
    D[0, 1, 0] = 2.0
    # b2
    D[1, 0, 1] = cl * sl
    D[1, 0, 2] = sl * sl
    D[1, 0, 5] = wl * sl + w * cl
    D[1, 1, 1] = 1.0 + cl * cl
    D[1, 1, 2] = cl * sl
    D[1, 1, 5] = wl * cl - (w + 1.0) * sl
    D[1, 2, 2] = -b6
    D[1, 2, 3] = -e2 * g[2, 0]
    D[1, 2, 4] = -e2 * g[2, 1]
    D[1, 2, 5] = -e2 * g[2, 2]
    # b3
    D[2, 0, 1] = -cl * cl
    D[2, 0, 2] = -cl * sl
    D[2, 0, 5] = -wl * cl + w * sl
    D[2, 1, 1] = cl * sl
    D[2, 1, 2] = 1.0 + sl * sl
    D[2, 1, 5] = wl * sl + (w + 1.0) * cl
    D[2, 2, 1] = b6
    D[2, 2, 3] = e1 * g[2, 0]
    D[2, 2, 4] = e1 * g[2, 1]
    D[2, 2, 5] = e1 * g[2, 2]
    # b4..b6
    for i in range(3):
        D[3 + i, 2, 3] = g[i, 0]
        D[3 + i, 2, 4] = g[i, 1]
        D[3 + i, 2, 5] = g[i, 2]


@njit(cache=True)
def fill_scalar_gradients(x, mu, grh, gk6):
    """Gradients of ``r/h`` and ``k6 = h/r^2`` with respect to the element state."""
    p = x[0]
    cl = math.cos(x[5])
    sl = math.sin(x[5])
    w, rh, k6, esnu = orbit_scalars(x, mu)
    grh[0] = 0.5 * rh / p
    grh[1] = -rh * cl / w
    grh[2] = -rh * sl / w
    grh[3] = 0.0
    grh[4] = 0.0
    grh[5] = rh * esnu / w
    gk6[0] = -1.5 * k6 / p
    gk6[1] = 2.0 * k6 * cl / w
    gk6[2] = 2.0 * k6 * sl / w
    gk6[3] = 0.0
    gk6[4] = 0.0
    gk6[5] = -2.0 * k6 * esnu / w


@njit(cache=True)
def element_rates(x, a, mu, kind, out):
    """``out = (r/h) B a + k`` for a given LVLH acceleration ``a``."""
    B = np.empty((6, 3))
    fill_b(x, kind, B)
    w, rh, k6, esnu = orbit_scalars(x, mu)
    for i in range(6):
        out[i] = rh * (B[i, 0] * a[0] + B[i, 1] * a[1] + B[i, 2] * a[2])
    out[5] += k6


@njit(cache=True)
def costate_rates_kind(x, lam, lam_m, a, mu, c, kind, out):
    B = np.empty((6, 3))
    D = np.empty((6, 3, 6))
    grh = np.empty(6)
    gk6 = np.empty(6)
    return _costate_rates(x, lam, lam_m, a, mu, c, kind, B, D, grh, gk6, out)


@njit(cache=True)
def _costate_rates(x, lam, lam_m, a, mu, c, kind, B, D, grh, gk6, out):
    fill_b(x, kind, B)
    fill_b_gradients(x, kind, D)
    fill_scalar_gradients(x, mu, grh, gk6)
    w, rh, k6, esnu = orbit_scalars(x, mu)
    lba = 0.0
    for i in range(6):
        lba += lam[i] * (B[i, 0] * a[0] + B[i, 1] * a[1] + B[i, 2] * a[2])
    for k in range(6):
        s = 0.0
        for i in range(6):
            if lam[i] != 0.0:
                s += lam[i] * (D[i, 0, k] * a[0] + D[i, 1, k] * a[1] + D[i, 2, k] * a[2])
        out[k] = -(lba * grh[k] + rh * s) - lam[5] * gk6[k]
    amag = math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
    return (lam_m - 1.0) * amag / c


@njit(cache=True)
def control_kernel(x, m, lam, lam_m, mu, c, rho, kind, alpha):
    """Fill ``alpha`` with the optimal direction; return ``(delta, s_tilde, |B^T lam|)``."""
    B = np.empty((6, 3))
    fill_b(x, kind, B)
    w, rh, k6, esnu = orbit_scalars(x, mu)
    bt0 = 0.0
    bt1 = 0.0
    bt2 = 0.0
    for i in range(6):
        bt0 += B[i, 0] * lam[i]
        bt1 += B[i, 1] * lam[i]
        bt2 += B[i, 2] * lam[i]
    nb = math.sqrt(bt0 * bt0 + bt1 * bt1 + bt2 * bt2)
    if nb < 1e-14:
        alpha[0] = 0.0
        alpha[1] = 0.0
        alpha[2] = 0.0
    else:
        alpha[0] = -bt0 / nb
        alpha[1] = -bt1 / nb
        alpha[2] = -bt2 / nb
    s = rh * nb * c / m + lam_m - 1.0
    delta = 0.5 * (1.0 + math.tanh(s / rho))
    return delta, s, nb


@njit(cache=True)
def aug_rhs(t, y, dy, mu, thrust, c, rho, kind):
    x = y[0:6]
    m = y[6]
    lam = y[7:13]
    lam_m = y[13]
    alpha = np.empty(3)
    if m <= 0.0 or x[0] <= 0.0:
        for i in range(14):
            dy[i] = math.nan
        return
    delta, s, nb = control_kernel(x, m, lam, lam_m, mu, c, rho, kind, alpha)
    amag = thrust * delta / m
    a = np.empty(3)
    for j in range(3):
        a[j] = amag * alpha[j]
    xd = np.empty(6)
    element_rates(x, a, mu, kind, xd)
    for i in range(6):
        dy[i] = xd[i]
    dy[6] = -thrust * delta / c
    ld = np.empty(6)
    lmd = costate_rates_kind(x, lam, lam_m, a, mu, c, kind, ld)
    for i in range(6):
        dy[7 + i] = ld[i]
    dy[13] = lmd


@njit(cache=True)
def hamiltonian_kernel(x, m, lam, lam_m, a, mu, c, kind):
    xd = np.empty(6)
    element_rates(x, a, mu, kind, xd)
    h = 0.0
    for i in range(6):
        h += lam[i] * xd[i]
    amag = math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
    return h - (lam_m - 1.0) * m * amag / c


# Dormand-Prince 5(4)

_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1 = 71.0 / 57600.0
_E3 = -71.0 / 16695.0
_E4 = 71.0 / 1920.0
_E5 = -17253.0 / 339200.0
_E6 = 22.0 / 525.0
_E7 = -1.0 / 40.0


@njit(cache=True, nogil=True)
def dp54_aug(y0, t0, tf, rtol, atol, h_init, h_min, h_max, max_steps,
             mu, thrust, c, rho, kind, record):
    """Integrate the augmented system.

    Returns ``(status, y_final, t_final, n_accept, n_reject, n_fev, ts, ys)``;
    ``ts``/``ys`` hold accepted steps when ``record`` is true.
    """
    n = y0.shape[0]
    cap = max_steps + 1 if record else 1
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    y = y0.copy()
    t = t0
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    yt = np.empty(n)
    ynew = np.empty(n)
    nacc = 0
    nrej = 0
    nfev = 0
    if record:
        ts[0] = t
        ys[0, :] = y
    aug_rhs(t, y, k1, mu, thrust, c, rho, kind)
    nfev += 1
    for i in range(n):
        if not math.isfinite(k1[i]):
            return ST_NONFINITE, y, t, nacc, nrej, nfev, ts[:1], ys[:1]
    span = tf - t0
    if h_init > 0.0:
        h = h_init
    else:
        d0 = 0.0
        d1 = 0.0
        for i in range(n):
            sc = atol + rtol * abs(y[i])
            d0 += (y[i] / sc) ** 2
            d1 += (k1[i] / sc) ** 2
        d0 = math.sqrt(d0 / n)
        d1 = math.sqrt(d1 / n)
        h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        h = min(h, span)
    h = min(h, h_max)
    err_old = 1e-4
    steps = 0
    while t < tf:
        if steps >= max_steps:
            return ST_MAXSTEPS, y, t, nacc, nrej, nfev, ts[: nacc + 1], ys[: nacc + 1]
        if h < h_min:
            return ST_UNDERFLOW, y, t, nacc, nrej, nfev, ts[: nacc + 1], ys[: nacc + 1]
        last = False
        if t + h >= tf:
            h = tf - t
            last = True
        for i in range(n):
            yt[i] = y[i] + h * _A21 * k1[i]
        aug_rhs(t + _C2 * h, yt, k2, mu, thrust, c, rho, kind)
        for i in range(n):
            yt[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        aug_rhs(t + _C3 * h, yt, k3, mu, thrust, c, rho, kind)
        for i in range(n):
            yt[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        aug_rhs(t + _C4 * h, yt, k4, mu, thrust, c, rho, kind)
        for i in range(n):
            yt[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        aug_rhs(t + _C5 * h, yt, k5, mu, thrust, c, rho, kind)
        for i in range(n):
            yt[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i])
        aug_rhs(t + h, yt, k6, mu, thrust, c, rho, kind)
        for i in range(n):
            ynew[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i])
        aug_rhs(t + h, ynew, k7, mu, thrust, c, rho, kind)
        nfev += 6
        steps += 1
        err = 0.0
        finite = True
        for i in range(n):
            if not (math.isfinite(ynew[i]) and math.isfinite(k7[i])):
                finite = False
                break
            e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            err += (e / sc) ** 2
        if not finite:
            nrej += 1
            h *= 0.2
            if h < h_min:
                return ST_NONFINITE, y, t, nacc, nrej, nfev, ts[: nacc + 1], ys[: nacc + 1]
            continue
        err = math.sqrt(err / n)
        if err <= 1.0:
            t = tf if last else t + h
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]
            nacc += 1
            if record:
                ts[nacc] = t
                ys[nacc, :] = y
            if err == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * err ** -0.2 * err_old ** 0.04
            fac = min(5.0, max(0.2, fac))
            err_old = max(err, 1e-4)
            h = min(h * fac, h_max)
        else:
            nrej += 1
            fac = max(0.2, 0.9 * err ** -0.2)
            h *= fac
    return ST_OK, y, t, nacc, nrej, nfev, ts[: nacc + 1], ys[: nacc + 1]
