"""Hot loops: adaptive DOP853 integration of the radial equations.

Two systems are supported, selected by an integer id so a single compiled
stepper serves both:

``SINGLE`` (state ``[y, y']``, params ``[n, M, lam]``)::

    y'' = -(n-1) cot(t) y' - (lam - M / sin(t)^2) y ,   M = m (m + n - 2)

``PAIR`` (state ``[y1, y1', y2, y2', S]``, params ``[n, lam1, lam2]``)::

    y1 = u_0(.; lam1),  y2 = u_1(.; lam2),
    S  = sin(t)^(n-1) (y2' y1 - y1' y2)
    S' = sin(t)^(n-1) y1 y2 ((n-1)/sin(t)^2 - (lam2 - lam1))

Carrying ``S`` as its own unknown avoids the cancellation that a Wronskian
assembled from samples suffers near the common zero of ``y1`` and ``y2``.
"""

import math

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

from ._accel import jit

SINGLE = 0
PAIR = 1

N_STAGES = _dop.N_STAGES
A = np.ascontiguousarray(_dop.A[:N_STAGES, :N_STAGES])
B = np.ascontiguousarray(_dop.B)
C = np.ascontiguousarray(_dop.C[:N_STAGES])
E3 = np.ascontiguousarray(_dop.E3)
E5 = np.ascontiguousarray(_dop.E5)

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAXSTEPS = 2

MAX_STEPS = 200000


@jit
def rhs(sysid, par, t, y, out):
    n1 = par[0] - 1.0
    s = math.sin(t)
    cot = math.cos(t) / s
    if sysid == 0:
        out[0] = y[1]
        out[1] = -n1 * cot * y[1] - (par[2] - par[1] / (s * s)) * y[0]
    else:
        lam1 = par[1]
        lam2 = par[2]
        out[0] = y[1]
        out[1] = -n1 * cot * y[1] - lam1 * y[0]
        out[2] = y[3]
        out[3] = -n1 * cot * y[3] - (lam2 - n1 / (s * s)) * y[2]
        out[4] = s**n1 * y[0] * y[2] * (n1 / (s * s) - (lam2 - lam1))


@jit
def _stages(sysid, par, t, y, h, K, tmp, ynew, A, B, C):
    # K[0] must already hold f(t, y); fills K[1..12] and ynew
    d = y.shape[0]
    for s in range(1, 12):
        for i in range(d):
            acc = 0.0
            for j in range(s):
                acc += A[s, j] * K[j, i]
            tmp[i] = y[i] + h * acc
        rhs(sysid, par, t + C[s] * h, tmp, K[s])
    for i in range(d):
        acc = 0.0
        for j in range(12):
            acc += B[j] * K[j, i]
        ynew[i] = y[i] + h * acc
    rhs(sysid, par, t + h, ynew, K[12])


@jit
def _error_norm(y, ynew, h, K, E3, E5, rtol, atol):
    d = y.shape[0]
    err5 = 0.0
    err3 = 0.0
    for i in range(d):
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        e5 = 0.0
        e3 = 0.0
        for j in range(13):
            e5 += E5[j] * K[j, i]
            e3 += E3[j] * K[j, i]
        err5 += (e5 / sc) ** 2
        err3 += (e3 / sc) ** 2
    if err5 == 0.0 and err3 == 0.0:
        return 0.0
    return abs(h) * err5 / math.sqrt((err5 + 0.01 * err3) * d)


@jit
def _sign(x):
    if x > 0.0:
        return 1
    if x < 0.0:
        return -1
    return 0


@jit
def _refine_zero(sysid, par, ta, ya, h, tol, K, tmp, ynew, A, B, C):
    """Bisect, with single sub-steps from ``ta``, for the sign change of y[0]."""
    s0 = _sign(ya[0])
    lo = 0.0
    hi = h
    k0 = np.empty(ya.shape[0])
    rhs(sysid, par, ta, ya, k0)
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        K[0, :] = k0
        _stages(sysid, par, ta, ya, mid, K, tmp, ynew, A, B, C)
        if _sign(ynew[0]) == s0:
            lo = mid
        else:
            hi = mid
    return ta + 0.5 * (lo + hi)


@jit
def integrate(sysid, par, t0, y0, targets, rtol, atol, h0, out, zeros,
              stop_when_full, zero_tol, A, B, C, E3, E5):
    """Integrate from ``t0`` through the monotone ``targets``.

    Each target is hit exactly and its state written to ``out``. Sign changes
    of component 0 after ``t0`` are counted; the first ``len(zeros)`` of them
    are refined to ``zero_tol`` and stored. With ``stop_when_full`` the run
    ends as soon as ``zeros`` is filled.

    Returns ``info = [status, t_reached, n_sign_changes, n_steps]``.
    """
    d = y0.shape[0]
    info = np.zeros(4)
    y = y0.copy()
    ynew = np.empty(d)
    tmp = np.empty(d)
    K = np.empty((13, d))
    Kz = np.empty((13, d))
    yz = np.empty(d)
    tmpz = np.empty(d)
    t = t0
    direction = 1.0 if targets[targets.shape[0] - 1] >= t0 else -1.0
    hprop = abs(h0)
    rhs(sysid, par, t, y, K[0])
    last_sign = _sign(y[0])
    count = 0
    nz = 0
    nsteps = 0
    status = 0
    for k in range(targets.shape[0]):
        target = targets[k]
        while (target - t) * direction > 0.0:
            remaining = abs(target - t)
            clipped = hprop >= remaining
            habs = remaining if clipped else hprop
            h = habs * direction
            _stages(sysid, par, t, y, h, K, tmp, ynew, A, B, C)
            err = _error_norm(y, ynew, h, K, E3, E5, rtol, atol)
            if err <= 1.0:
                factor = 10.0 if err == 0.0 else min(10.0, 0.9 * err ** (-0.125))
                sgn = _sign(ynew[0])
                if sgn != 0 and last_sign != 0 and sgn != last_sign:
                    count += 1
                    if nz < zeros.shape[0]:
                        zeros[nz] = _refine_zero(sysid, par, t, y, h, zero_tol,
                                                 Kz, tmpz, yz, A, B, C)
                        nz += 1
                if sgn != 0:
                    last_sign = sgn
                t = target if clipped else t + h
                for i in range(d):
                    y[i] = ynew[i]
                    K[0, i] = K[12, i]
                if not clipped or factor < 1.0:
                    hprop = habs * factor
                nsteps += 1
                if stop_when_full and zeros.shape[0] > 0 and nz == zeros.shape[0]:
                    info[0] = status
                    info[1] = t
                    info[2] = count
                    info[3] = nsteps
                    return info
                if nsteps > 200000:
                    status = 2
                    break
            else:
                hprop = habs * max(0.2, 0.9 * err ** (-0.125))
                if hprop < 1e-15 * max(1.0, abs(t)):
                    status = 1
                    break
        if status != 0:
            break
        for i in range(d):
            out[k, i] = y[i]
    info[0] = status
    info[1] = t
    info[2] = count
    info[3] = nsteps
    return info


@jit
def frobenius_coefficients(n, m, lam, order, b, d):
    """Even-offset series coefficients ``a_0..a_order`` with ``a_0 = 1``.

    ``b`` and ``d`` are the Taylor coefficients of ``t cot t`` and
    ``t^2 csc^2 t`` in powers of ``t^2``.
    """
    M = m * (m + n - 2.0)
    a = np.zeros(order + 1)
    a[0] = 1.0
    for K in range(1, order + 1):
        acc = lam * a[K - 1]
        for j in range(1, K + 1):
            acc += (n - 1.0) * b[j] * a[K - j] * (m + 2.0 * (K - j))
            acc -= M * d[j] * a[K - j]
        a[K] = -acc / (2.0 * K * (2.0 * m + 2.0 * K + n - 2.0))
    return a


@jit
def series_eval(m, a, c, theta):
    """Value and derivative of ``c theta^m sum_k a_k theta^(2k)``."""
    val = 0.0
    der = 0.0
    t2 = theta * theta
    p = 1.0
    for k in range(a.shape[0]):
        e = m + 2 * k
        val += a[k] * p
        der += a[k] * e * p
        p *= t2
    tm = theta**m
    return c * tm * val, c * tm * der / theta
