"""Ratio profile of the two cap eigenfunctions and its monotonicity structure.

With y1 = u_0(.; lambda_1) and y2 = u_1(.; lambda_2) / c_1 (so that g'(0) = 1)

    p = -y1'/y1,   g = y2/y1,   q = sin g'/g,   B = (q^2 + n - 1) (g/sin)^2

Both eigenfunctions vanish at theta1, so q is a ratio of two quantities that
vanish to third and second order there. The Wronskian-type product
S = sin^(n-1) (y2' y1 - y1' y2) is therefore integrated as its own unknown,
and everything past the midpoint comes from a backward solve started with
exact zeros at theta1.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline

from . import _kernels as kern
from .ball import lambda_shoot
from .radial import (DEFAULT_SEED, BallSpec, ModeParams, _seed_point, frobenius_coefficients,
                     integrate_states, leading_coefficient)

MONOTONE_SLACK = 1e-8
HEMISPHERE = math.pi / 2


def _series_pair(n, lam1, lam2, thetas):
    m0 = ModeParams(n, 0, lam1)
    m1 = ModeParams(n, 1, lam2)
    a0, c0 = frobenius_coefficients(m0), leading_coefficient(m0)
    a1, c1 = frobenius_coefficients(m1), leading_coefficient(m1)
    out = np.empty((len(thetas), 5))
    for i, t in enumerate(thetas):
        y1, d1 = kern.series_eval(0, a0, c0, float(t))
        y2, d2 = kern.series_eval(1, a1, c1, float(t))
        out[i] = y1, d1, y2, d2, math.sin(t) ** (n - 1) * (d2 * y1 - d1 * y2)
    return out


@dataclass(frozen=True)
class PairSolver:
    """States [y1, y1', y2, y2', S] of the unnormalized pair at any theta in (0, theta1]."""

    n: int
    theta1: float
    lam1: float
    lam2: float

    def states(self, thetas) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        if np.any((thetas <= 0) | (thetas > self.theta1)):
            raise ValueError("points must lie in (0, theta1]")
        order = np.argsort(thetas, kind="stable")
        ts = np.sort(thetas)
        out = np.empty((ts.size, 5))
        seed = _seed_point(self.theta1, DEFAULT_SEED)
        mid = 0.5 * self.theta1
        near = ts <= seed
        fwd = (ts > seed) & (ts <= mid)
        bwd = ts > mid
        if near.any():
            out[near] = _series_pair(self.n, self.lam1, self.lam2, ts[near])
        par = [self.n, self.lam1, self.lam2]
        y_seed = _series_pair(self.n, self.lam1, self.lam2, [seed])[0]
        targets = np.concatenate([ts[fwd], [mid, self.theta1]])
        fstates, _, _, _ = integrate_states(kern.PAIR, par, seed, y_seed, targets)
        out[fwd] = fstates[:-2]
        at_mid, at_end = fstates[-2], fstates[-1]
        if bwd.any():
            start = np.array([0.0, at_end[1], 0.0, at_end[3], 0.0])
            btargets = np.concatenate([ts[bwd][::-1], [mid]])
            bstates, _, _, _ = integrate_states(kern.PAIR, par, self.theta1, start, btargets,
                                                h0=0.05 * self.theta1)
            k1 = at_mid[0] / bstates[-1, 0]
            k2 = at_mid[2] / bstates[-1, 2]
            scale = np.array([k1, k1, k2, k2, k1 * k2])
            out[bwd] = (bstates[:-1] * scale)[::-1]
            # exact zeros are kept at theta1 itself
        result = np.empty_like(out)
        result[order] = out
        return result

    def boundary_slopes(self) -> tuple[float, float]:
        """y1'(theta1), y2'(theta1) on the forward normalization."""
        s = self.states([self.theta1])[0]
        return s[1], s[3]


def _derived(n, lam2, thetas, st):
    """p, q, g, B from states, with y2 rescaled so g'(0) = 1."""
    c1 = lam2 / n
    y1, d1, y2, d2, S = st[:, 0], st[:, 1], st[:, 2] / c1, st[:, 3] / c1, st[:, 4] / c1
    s = np.sin(thetas)
    p = -d1 / y1
    g = y2 / y1
    q = S / s ** (n - 2) / (y1 * y2)
    B = (q * q + n - 1) * (g / s) ** 2
    return y1, d1, y2, d2, p, q, g, B


PROFILE_COLUMNS = ("theta", "y1", "y2", "p", "q", "g", "B")


@dataclass(frozen=True)
class GapProfile:
    spec: BallSpec
    lambda1: float
    lambda2: float
    grid: np.ndarray
    y1: np.ndarray
    y1p: np.ndarray
    y2: np.ndarray
    y2p: np.ndarray
    p: np.ndarray
    q: np.ndarray
    g: np.ndarray
    B: np.ndarray
    g_theta1: float

    @property
    def solver(self) -> PairSolver:
        return PairSolver(self.spec.n, self.spec.theta1, self.lambda1, self.lambda2)

    def evaluate_inside(self, thetas) -> dict:
        """All profile quantities at arbitrary points of (0, theta1)."""
        thetas = np.asarray(thetas, dtype=float)
        st = self.solver.states(thetas)
        y1, d1, y2, d2, p, q, g, B = _derived(self.spec.n, self.lambda2, thetas, st)
        return {"y1": y1, "y1p": d1, "y2": y2, "y2p": d2, "p": p, "q": q, "g": g, "B": B}

    def extended(self, thetas) -> tuple[np.ndarray, np.ndarray]:
        """(g, B) continued past theta1 and reflected about pi/2, on [0, pi]."""
        n, theta1 = self.spec.n, self.spec.theta1
        t = np.asarray(thetas, dtype=float)
        if np.any((t < 0) | (t > math.pi)):
            raise ValueError("theta must lie in [0, pi]")
        t = np.where(t > HEMISPHERE, math.pi - t, t)
        g = np.empty_like(t)
        B = np.empty_like(t)
        zero = t == 0.0
        g[zero], B[zero] = 0.0, float(n)
        outside = t >= theta1
        g[outside] = self.g_theta1
        # g' = 0 beyond theta1
        B[outside] = (n - 1) * self.g_theta1**2 / np.sin(t[outside]) ** 2
        inside = ~(zero | outside)
        if inside.any():
            vals = self.evaluate_inside(t[inside])
            g[inside], B[inside] = vals["g"], vals["B"]
        return g, B

    def extended_g(self, thetas) -> np.ndarray:
        return self.extended(thetas)[0]

    def gtilde(self, thetas) -> np.ndarray:
        """Extended g divided by sin; equal to g'(0) = 1 at the poles."""
        t = np.asarray(thetas, dtype=float)
        g = self.extended_g(t)
        # sin of the folded angle; sin(pi) itself is 1e-16, not 0
        s = np.sin(np.where(t > HEMISPHERE, math.pi - t, t))
        safe = s > 1e-8
        return np.where(safe, g / np.where(safe, s, 1.0), 1.0)

    def sigma(self) -> np.ndarray:
        n, lam = self.spec.n, self.lambda1
        u0, u1 = self.y1, -self.y1p
        return lam * u0**2 + u1**2 - (n - 1) / np.tan(self.grid) * u0 * u1

    def s_function(self) -> np.ndarray:
        n = self.spec.n
        sig = self.sigma()
        return ((n - 1) * self.y1**2 * self.p / np.sin(self.grid) ** 2
                - (n - 1) / np.tan(self.grid) * sig + 2 * self.p * sig)

    def r_function(self) -> np.ndarray:
        return self.p / np.tan(self.grid) - self.lambda1 / self.spec.n

    def interpolant(self) -> "ProfileInterpolant":
        return ProfileInterpolant.from_profile(self)

    def to_csv(self) -> str:
        buf = io.StringIO()
        data = np.column_stack([self.grid, self.y1, self.y2, self.p, self.q, self.g, self.B])
        np.savetxt(buf, data, delimiter=",", header=",".join(PROFILE_COLUMNS), comments="",
                   fmt="%.17g")
        return buf.getvalue()


@dataclass(frozen=True)
class ProfileInterpolant:
    """Hermite cubics for g and B on [0, theta1], extended to [0, pi] like ``extended``.

    Knot derivatives come from g' = g q / sin and
    B' = 2 (q q' - (cos - q)(q^2 + n - 1) / sin) (g / sin)^2, so the error is
    fourth order in the tabulation step.
    """

    n: int
    theta1: float
    g_theta1: float
    g_spline: CubicHermiteSpline
    B_spline: CubicHermiteSpline

    @classmethod
    def from_profile(cls, profile: GapProfile) -> "ProfileInterpolant":
        n, t1 = profile.spec.n, profile.spec.theta1
        t, p, q, g = profile.grid, profile.p, profile.q, profile.g
        s, c = np.sin(t), np.cos(t)
        dq = q_rhs(n, profile.lambda1, profile.lambda2, t, p, q)
        dg = g * q / s
        dB = 2 * (q * dq - (c - q) * (q * q + n - 1) / s) * (g / s) ** 2
        g1 = profile.g_theta1
        s1 = math.sin(t1)
        B1 = (n - 1) * (g1 / s1) ** 2
        dB1 = -2 * math.cos(t1) * (n - 1) / s1 * (g1 / s1) ** 2
        knots = np.concatenate([[0.0], t, [t1]])
        g_spline = CubicHermiteSpline(knots, np.concatenate([[0.0], g, [g1]]),
                                      np.concatenate([[1.0], dg, [0.0]]))
        B_spline = CubicHermiteSpline(knots, np.concatenate([[float(n)], profile.B, [B1]]),
                                      np.concatenate([[0.0], dB, [dB1]]))
        return cls(n, t1, g1, g_spline, B_spline)

    def _fold(self, thetas):
        t = np.asarray(thetas, dtype=float)
        if np.any((t < 0) | (t > math.pi)):
            raise ValueError("theta must lie in [0, pi]")
        return np.where(t > HEMISPHERE, math.pi - t, t)

    def g(self, thetas):
        t = self._fold(thetas)
        return np.where(t < self.theta1, self.g_spline(np.minimum(t, self.theta1)),
                        self.g_theta1)

    def B(self, thetas):
        t = self._fold(thetas)
        outside = (self.n - 1) * self.g_theta1**2 / np.sin(np.maximum(t, self.theta1)) ** 2
        return np.where(t < self.theta1, self.B_spline(np.minimum(t, self.theta1)), outside)

    def gtilde(self, thetas):
        """g / sin, equal to 1 at both poles."""
        t = self._fold(thetas)
        s = np.sin(t)
        safe = s > 1e-8
        # g = t + O(t^3) so g / sin = 1 + O(t^2) below the cutoff
        return np.where(safe, self.g(t) / np.where(safe, s, 1.0), 1.0)


def build_profile(spec: BallSpec, points: int = 801, *, grid=None) -> GapProfile:
    """Tabulate the profile on ``points`` equispaced interior points of (0, theta1)."""
    if spec.theta1 > HEMISPHERE + 1e-12:
        raise ValueError("profiles are only defined for theta1 <= pi/2")
    lam1 = lambda_shoot(spec, 0)
    lam2 = lambda_shoot(spec, 1)
    if grid is None:
        grid = np.linspace(0.0, spec.theta1, points + 2)[1:-1]
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0) or grid[0] <= 0 or grid[-1] >= spec.theta1:
        raise ValueError("grid must be increasing and inside (0, theta1)")
    solver = PairSolver(spec.n, spec.theta1, lam1, lam2)
    st = solver.states(grid)
    y1, d1, y2, d2, p, q, g, B = _derived(spec.n, lam2, grid, st)
    s1, s2 = solver.boundary_slopes()
    g1 = s2 / s1 / (lam2 / spec.n)
    return GapProfile(spec, lam1, lam2, grid, y1, d1, y2, d2, p, q, g, B, g1)


def q_second_derivative_at_zero(n: int, lam1: float, lam2: float) -> float:
    return 2.0 * (lam1 / n - lam2 / (n + 2.0) - (2.0 - n) / (2.0 * (n + 2.0)))


def q_slope_at_theta1(n: int, theta1: float, lam1: float, lam2: float) -> float:
    s = math.sin(theta1)
    return -(lam2 - lam1 - (n - 1) / s**2) * s / 3.0


def p_rhs(n, lam1, theta, p):
    return lam1 + p * p - (n - 1) / np.tan(theta) * p


def q_rhs(n, lam1, lam2, theta, p, q):
    s = np.sin(theta)
    return 2 * p * q - (n - 2) * q / np.tan(theta) - (q * q + 1 - n) / s - (lam2 - lam1) * s


def _interior(profile: GapProfile, lo=0.05, hi=0.95):
    t1 = profile.spec.theta1
    g = profile.grid
    return g[(g >= lo * t1) & (g <= hi * t1)]


def riccati_residuals(profile: GapProfile, rel_step: float = 1e-4) -> tuple[float, float]:
    """Sup of the p- and q-equation residuals on the 5%-95% interior.

    Derivatives come from a five-point stencil on freshly integrated states,
    not from the equations themselves; each residual is scaled by 1 + |rhs|.
    """
    n, t1 = profile.spec.n, profile.spec.theta1
    pts = _interior(profile)
    h = rel_step * t1
    offsets = np.array([-2, -1, 1, 2]) * h
    stencil = (pts[:, None] + offsets[None, :]).ravel()
    vals = profile.evaluate_inside(stencil)
    P = vals["p"].reshape(-1, 4)
    Q = vals["q"].reshape(-1, 4)
    centre = profile.evaluate_inside(pts)

    def five_point(F):
        return (F[:, 0] - 8 * F[:, 1] + 8 * F[:, 2] - F[:, 3]) / (12 * h)

    rp = p_rhs(n, profile.lambda1, pts, centre["p"])
    rq = q_rhs(n, profile.lambda1, profile.lambda2, pts, centre["p"], centre["q"])
    res_p = np.abs(five_point(P) - rp) / (1 + np.abs(rp))
    res_q = np.abs(five_point(Q) - rq) / (1 + np.abs(rq))
    return float(res_p.max()), float(res_q.max())


def _nonincreasing(x, slack=MONOTONE_SLACK):
    x = np.asarray(x)
    return bool(np.all(np.diff(x) <= slack * np.maximum(1.0, np.abs(x[:-1]))))


def _nondecreasing(x, slack=MONOTONE_SLACK):
    return _nonincreasing(-np.asarray(x), slack)


def _strictly_increasing(x):
    return bool(np.all(np.diff(x) > 0))


def p_structure_check(profile: GapProfile, tol: float = 1e-8) -> dict:
    """Positivity, monotonicity and convexity of p, and the behaviour of p cot - lambda1/n."""
    n, t1, lam1 = profile.spec.n, profile.spec.theta1, profile.lambda1
    hemisphere = abs(t1 - HEMISPHERE) < 1e-12
    sig = profile.sigma()
    s = profile.s_function()
    r = profile.r_function()
    # p(0) = 0 with slope lam1/n and a known cubic term
    t_small = np.array([1e-3 * t1])
    p_small = profile.evaluate_inside(t_small)["p"][0]
    cubic = lam1 * (3 * lam1 + n * (n - 1)) / (3 * n**2 * (n + 2))
    p_series = lam1 / n * t_small[0] + cubic * t_small[0] ** 3
    # p ~ 1/(theta1 - theta) at the boundary
    p_edge = profile.evaluate_inside([t1 * (1 - tol)])["p"][0]
    checks = {
        "p_positive": bool(np.all(profile.p > 0)),
        "p_increasing": bool(np.all(sig > 0)) and _strictly_increasing(profile.p),
        "p_convex": bool(np.all(s > 0)),
        "y1_decreasing": bool(np.all(profile.y1p < 0)),
        "p_origin": abs(p_small - p_series) <= 1e-9 * max(1.0, abs(p_series)),
        "p_blows_up": p_edge > 1.0 / (tol * t1) * 0.5,
    }
    if hemisphere:
        checks["r_identically_zero"] = bool(np.max(np.abs(r)) < 1e-8)
    else:
        checks["r_increasing"] = _strictly_increasing(r)
    return {"checks": checks, "passed": all(checks.values()),
            "min_sigma": float(sig.min()), "min_s": float(s.min()),
            "p_edge": float(p_edge)}


def q_bounds_check(profile: GapProfile, slack: float = MONOTONE_SLACK) -> dict:
    """Bounds and monotonicity of q, g and B, and the boundary data of q."""
    n, t1 = profile.spec.n, profile.spec.theta1
    lam1, lam2 = profile.lambda1, profile.lambda2
    hemisphere = abs(t1 - HEMISPHERE) < 1e-12
    q, g, B = profile.q, profile.g, profile.B
    cos = np.cos(profile.grid)

    # boundary data from Richardson-extrapolated differences
    h = 1e-3 * t1
    q_near0 = profile.evaluate_inside([h, 2 * h])["q"]
    d2 = 2 * (q_near0 - 1.0) / np.array([h, 2 * h]) ** 2
    q2_num = (4 * d2[0] - d2[1]) / 3
    q2_formula = q_second_derivative_at_zero(n, lam1, lam2)
    q_end = profile.evaluate_inside([t1 - h, t1 - 2 * h])["q"]
    d1 = q_end / -np.array([h, 2 * h])
    q1_num = 2 * d1[0] - d1[1]
    q1_formula = q_slope_at_theta1(n, t1, lam1, lam2)

    ext_t = np.linspace(t1, HEMISPHERE, 64)
    _, B_ext = profile.extended(ext_t)
    # B keeps decreasing across theta1 onto the extension
    B_joined = np.concatenate([B, B_ext])
    checks = {
        "q_nonnegative": bool(np.all(q >= -slack)),
        "q_below_cos": bool(np.all(q <= cos + slack)),
        "q_nonincreasing": _nonincreasing(q, slack),
        "g_nondecreasing": _nondecreasing(g, slack),
        "B_nonincreasing": _nonincreasing(B_joined, slack),
        "q0_limit": abs(profile.evaluate_inside([1e-6 * t1])["q"][0] - 1.0) < 1e-8,
        "q2_at_zero": abs(q2_num - q2_formula) <= 1e-4 * max(1.0, abs(q2_formula)),
        "q1_at_theta1": abs(q1_num - q1_formula) <= 1e-4 * max(1.0, abs(q1_formula)),
        "q1_at_theta1_negative": q1_formula < 0,
    }
    if not hemisphere:
        checks["q2_below_minus_one"] = q2_formula < -1
    return {
        "checks": checks,
        "passed": all(checks.values()),
        "q2_at_zero": {"numeric": q2_num, "formula": q2_formula},
        "q1_at_theta1": {"numeric": q1_num, "formula": q1_formula},
        "min_psi": float(np.min(cos - q)),
    }


def hemisphere_deviation(profile: GapProfile) -> dict:
    """Relative sup distance to g = sin, B = n - 1 + cos^2, p = tan, q = cos."""
    n, t = profile.spec.n, profile.grid

    def rel(a, b):
        return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))

    return {
        "g": rel(profile.g, np.sin(t)),
        "B": rel(profile.B, n - 1 + np.cos(t) ** 2),
        "p": rel(profile.p, np.tan(t)),
        "q": rel(profile.q, np.cos(t)),
    }


def g_from_q(profile: GapProfile) -> np.ndarray:
    """g rebuilt as exp of the integral of q/sin, anchored at the first grid point."""
    t = profile.grid
    # q/sin - 1/t is smooth at 0; the 1/t part integrates exactly
    smooth = cumulative_simpson(profile.q / np.sin(t) - 1.0 / t, x=t, initial=0.0)
    return profile.g[0] * (t / t[0]) * np.exp(smooth)
