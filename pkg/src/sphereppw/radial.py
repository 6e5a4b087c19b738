"""Radial solutions u_m(theta; lam) of the separated Laplacian on a polar cap.

For a geodesic ball of S^n centred at the north pole the m-th angular mode
satisfies

    -y'' - (n-1) cot(t) y' + m (m+n-2) csc(t)^2 y = lam y

with y ~ c_m t^m at the regular singular point t = 0. We fix c_0 = 1 and
c_{m+1} = (lam - m (m+n-1)) / (2m+n) c_m, which makes the raising relation
u_{m+1} = -u_m' + m cot u_m hold without extra constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.special import zeta

from . import _kernels as kern

DEFAULT_SEED = 1e-3
DEFAULT_ORDER = 6
DEFAULT_RTOL = 1e-13
DEFAULT_ATOL = 1e-15


class IntegrationError(RuntimeError):
    """The adaptive integrator could not reach the requested angle."""

    def __init__(self, message, theta_reached):
        super().__init__(f"{message} (last theta reached: {theta_reached:.17g})")
        self.theta_reached = theta_reached


@dataclass(frozen=True)
class BallSpec:
    """Geodesic ball of radius ``theta1`` in S^n (a polar cap)."""

    n: int
    theta1: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension n must be an integer >= 2, got {self.n!r}")
        if not 0.0 < self.theta1 < np.pi:
            raise ValueError(f"theta1 must lie in (0, pi), got {self.theta1!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "theta1", float(self.theta1))


@dataclass(frozen=True)
class ModeParams:
    n: int
    m: int
    lam: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension n must be an integer >= 2, got {self.n!r}")
        if int(self.m) != self.m or self.m < 0:
            raise ValueError(f"mode m must be a nonnegative integer, got {self.m!r}")
        if not np.isfinite(self.lam):
            raise ValueError("lam must be finite")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def potential(self) -> float:
        """Coefficient m(m+n-2) of csc^2 in the radial equation."""
        return self.m * (self.m + self.n - 2.0)

    def with_m(self, m: int) -> "ModeParams":
        return ModeParams(self.n, m, self.lam)


@dataclass(frozen=True)
class RadialFunction:
    mode: ModeParams
    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray = field(repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("grid must be a nonempty 1-d array")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        for name in ("values", "derivs"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != grid.shape:
                raise ValueError(f"{name} must match the grid shape")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)

    def second_derivs(self) -> np.ndarray:
        """u'' from the radial equation."""
        n, lam, M = self.mode.n, self.mode.lam, self.mode.potential
        t = self.grid
        return -(n - 1) / np.tan(t) * self.derivs - (lam - M / np.sin(t) ** 2) * self.values


@lru_cache(maxsize=None)
def _trig_series(terms: int = 24):
    """Taylor coefficients (in t^2) of t cot t and t^2 csc^2 t."""
    j = np.arange(terms + 1)
    # t cot t = 1 - 2 sum_j zeta(2j) (t / pi)^(2j); Bernoulli numbers lose digits here
    b = np.empty(terms + 1)
    b[0] = 1.0
    b[1:] = -2.0 * zeta(2.0 * j[1:]) / np.pi ** (2.0 * j[1:])
    d = (1.0 - 2.0 * j) * b
    return b, d


def leading_coefficient(mode: ModeParams) -> float:
    """c_m from c_0 = 1 and the two-term product recursion."""
    c = 1.0
    for k in range(mode.m):
        c *= (mode.lam - k * (k + mode.n - 1.0)) / (2.0 * k + mode.n)
    return c


def frobenius_coefficients(mode: ModeParams, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Coefficients a_k of u_m = c_m t^m sum_k a_k t^(2k), with a_0 = 1."""
    b, d = _trig_series()
    if order + 1 > b.size:
        raise ValueError(f"order must be at most {b.size - 1}")
    return kern.frobenius_coefficients(float(mode.n), float(mode.m), mode.lam, int(order), b, d)


def frobenius_seed(mode: ModeParams, order: int = DEFAULT_ORDER,
                   theta_seed: float = DEFAULT_SEED) -> tuple[float, float]:
    """Value and derivative of the truncated Frobenius series at ``theta_seed``.

    The truncation error is of the size of the first omitted term,
    c_m a_{order+1} theta_seed^(m + 2 order + 2).
    """
    if not 0.0 < theta_seed <= 1e-3:
        raise ValueError("theta_seed must lie in (0, 1e-3]")
    if order < 2:
        raise ValueError("series order must be at least 2")
    a = frobenius_coefficients(mode, order)
    return kern.series_eval(mode.m, a, leading_coefficient(mode), theta_seed)


def _series_samples(mode, thetas, order):
    a = frobenius_coefficients(mode, order)
    c = leading_coefficient(mode)
    vals = np.empty(len(thetas))
    ders = np.empty(len(thetas))
    for i, t in enumerate(thetas):
        vals[i], ders[i] = kern.series_eval(mode.m, a, c, float(t))
    return vals, ders


def integrate_states(sysid, par, t0, y0, targets, *, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
                     h0=None, max_zeros=0, stop_at_zeros=False, zero_tol=1e-13):
    """Thin wrapper over the compiled integrator; raises on failure."""
    targets = np.ascontiguousarray(targets, dtype=float)
    y0 = np.ascontiguousarray(y0, dtype=float)
    out = np.empty((targets.size, y0.size))
    zeros = np.empty(max_zeros)
    if h0 is None:
        h0 = 0.25 * abs(t0) if t0 != 0 else 1e-3
    info = kern.integrate(sysid, np.asarray(par, dtype=float), float(t0), y0, targets,
                          rtol, atol, float(h0), out, zeros, stop_at_zeros, zero_tol,
                          kern.A, kern.B, kern.C, kern.E3, kern.E5)
    status = int(info[0])
    if status == kern.STATUS_UNDERFLOW:
        raise IntegrationError("step size underflow", info[1])
    if status == kern.STATUS_MAXSTEPS:
        raise IntegrationError("too many steps", info[1])
    nz = min(int(info[2]), max_zeros)
    return out, int(info[2]), zeros[:nz], float(info[1])


def _seed_point(theta_end: float, theta_seed: float) -> float:
    return min(theta_seed, 0.05 * theta_end)


def eval_um(mode: ModeParams, grid, *, theta_seed: float = DEFAULT_SEED,
            order: int = DEFAULT_ORDER, rtol: float = DEFAULT_RTOL,
            atol: float = DEFAULT_ATOL) -> RadialFunction:
    """Sample u_m(.; lam) and u_m' on an increasing grid in (0, pi)."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-d array")
    if grid[0] <= 0.0 or grid[-1] >= np.pi:
        raise ValueError("grid must lie inside (0, pi)")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    ts = _seed_point(grid[-1], theta_seed)
    vals = np.empty(grid.size)
    ders = np.empty(grid.size)
    near = grid <= ts
    if near.any():
        vals[near], ders[near] = _series_samples(mode, grid[near], order)
    if (~near).any():
        y0 = np.array(kern.series_eval(mode.m, frobenius_coefficients(mode, order),
                                       leading_coefficient(mode), ts))
        par = [mode.n, mode.potential, mode.lam]
        out, _, _, _ = integrate_states(kern.SINGLE, par, ts, y0, grid[~near],
                                        rtol=rtol, atol=atol)
        vals[~near] = out[:, 0]
        ders[~near] = out[:, 1]
    return RadialFunction(mode, grid, vals, ders)


def value_at(mode: ModeParams, theta: float, *, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
             theta_seed: float = DEFAULT_SEED, order: int = DEFAULT_ORDER):
    """(u(theta), u'(theta), sign changes of u on (0, theta)) in one pass."""
    ts = _seed_point(theta, theta_seed)
    a = frobenius_coefficients(mode, order)
    y0 = np.array(kern.series_eval(mode.m, a, leading_coefficient(mode), ts))
    out, count, _, _ = integrate_states(kern.SINGLE, [mode.n, mode.potential, mode.lam],
                                        ts, y0, np.array([theta]), rtol=rtol, atol=atol)
    return out[0, 0], out[0, 1], count


def zeros_of(mode: ModeParams, theta_end: float, max_zeros: int = 64, *,
             stop_at_first: bool = False, tol: float = 1e-13,
             rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> np.ndarray:
    """Sign changes of u_m on (0, theta_end], refined by bisection to ``tol``."""
    ts = _seed_point(theta_end, DEFAULT_SEED)
    a = frobenius_coefficients(mode, DEFAULT_ORDER)
    y0 = np.array(kern.series_eval(mode.m, a, leading_coefficient(mode), ts))
    _, _, zeros, _ = integrate_states(kern.SINGLE, [mode.n, mode.potential, mode.lam], ts, y0,
                                      np.array([theta_end]), rtol=rtol, atol=atol,
                                      max_zeros=1 if stop_at_first else max_zeros,
                                      stop_at_zeros=stop_at_first, zero_tol=tol)
    return zeros


def raise_mode(u: RadialFunction) -> RadialFunction:
    """u_{m+1} = -u_m' + m cot(t) u_m, with its derivative."""
    m = u.mode.m
    t = u.grid
    cot = 1.0 / np.tan(t)
    csc2 = 1.0 / np.sin(t) ** 2
    vals = -u.derivs + m * cot * u.values
    ders = -u.second_derivs() + m * (cot * u.derivs - csc2 * u.values)
    return RadialFunction(u.mode.with_m(m + 1), t, vals, ders)


def lower_mode(u: RadialFunction) -> RadialFunction:
    """u_m' + (m+n-2) cot(t) u_m, i.e. [lam - (m-1)(m+n-2)] u_{m-1}."""
    m, n = u.mode.m, u.mode.n
    if m < 1:
        raise ValueError("cannot lower the m = 0 mode")
    t = u.grid
    k = m + n - 2.0
    cot = 1.0 / np.tan(t)
    csc2 = 1.0 / np.sin(t) ** 2
    vals = u.derivs + k * cot * u.values
    ders = u.second_derivs() + k * (cot * u.derivs - csc2 * u.values)
    return RadialFunction(u.mode.with_m(m - 1), t, vals, ders)


def lowering_factor(mode: ModeParams) -> float:
    """Scale lam - (m-1)(m+n-2) relating lower_mode(u_m) to u_{m-1}."""
    return mode.lam - (mode.m - 1.0) * (mode.m + mode.n - 2.0)


def _check_common(*us: RadialFunction):
    first = us[0]
    for u in us[1:]:
        if u.grid.shape != first.grid.shape or not np.array_equal(u.grid, first.grid):
            raise ValueError("radial functions must share a grid")
        if u.mode.n != first.mode.n or u.mode.lam != first.mode.lam:
            raise ValueError("radial functions must share n and lam")


def recursion_residual(u_prev: RadialFunction, u_mid: RadialFunction,
                       u_next: RadialFunction) -> float:
    """sup |u_{m+1} - (2m+n-2) cot u_m + [lam - (m-1)(m+n-2)] u_{m-1}|."""
    _check_common(u_prev, u_mid, u_next)
    m, n, lam = u_mid.mode.m, u_mid.mode.n, u_mid.mode.lam
    if u_prev.mode.m != m - 1 or u_next.mode.m != m + 1:
        raise ValueError("modes must be consecutive")
    t = u_mid.grid
    res = (u_next.values - (2 * m + n - 2) / np.tan(t) * u_mid.values
           + (lam - (m - 1) * (m + n - 2)) * u_prev.values)
    return float(np.max(np.abs(res)))


def integral_identity_residual(u_m: RadialFunction, u_next: RadialFunction) -> float:
    """Sup-norm gap between sin^(m+n-1) u_{m+1} and its integral representation.

    The integral [lam - m(m+n-1)] int_0^t sin^(m+n-1) u_m is computed by
    cumulative Simpson on the stored grid, with the integrand's zero at t = 0
    prepended.
    """
    _check_common(u_m, u_next)
    m, n, lam = u_m.mode.m, u_m.mode.n, u_m.mode.lam
    if u_next.mode.m != m + 1:
        raise ValueError("modes must be consecutive")
    p = m + n - 1
    t = np.concatenate(([0.0], u_m.grid))
    f = np.concatenate(([0.0], np.sin(u_m.grid) ** p * u_m.values))
    integral = cumulative_simpson(f, x=t, initial=0.0)[1:]
    lhs = np.sin(u_m.grid) ** p * u_next.values
    return float(np.max(np.abs(lhs - (lam - m * (m + n - 1)) * integral)))
