"""One-crossing comparison of a rearranged eigenfunction with the cap mode.

Everything is expressed in the volume variable s: the cap eigenfunction
becomes v(s) = y1(theta(s)), and a domain's first eigenfunction enters only
through its decreasing rearrangement.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .ball import lambda_shoot
from .quadrature import gauss_panels
from .radial import BallSpec, ModeParams, eval_um
from .rearrangement import (DomainMeasure, RearrangedProfile, cap_boundary, cap_volume,
                            decreasing_rearrangement, theta_of_volume, unit_ball_volume)

IDENTICAL_TOL = 1e-6
NOISE_SLACK = 1e-6


class MultipleCrossings(RuntimeError):
    """More than one sign change beyond the noise slack."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class VolumeProfile:
    """The cap's first eigenfunction as a function of enclosed volume.

    ``values`` and ``slopes`` are y1 and dy1/ds on ``s``; y1(0) = 1.
    """

    spec: BallSpec
    lambda1: float
    theta: np.ndarray
    s: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    residual: float
    l2_squared: float
    spline: CubicHermiteSpline

    @property
    def volume(self) -> float:
        return cap_volume(self.spec.n, self.spec.theta1)

    def __call__(self, s):
        """v(s), zero beyond the cap volume."""
        s = np.asarray(s, dtype=float)
        t = theta_of_volume(self.spec.n, np.clip(s, 0.0, self.volume))
        out = np.where(s < self.volume, self.spline(np.minimum(t, self.spec.theta1)), 0.0)
        return out if out.ndim else float(out)


def _coefficient(n: int) -> float:
    # lambda / (n^2 C_n^2) multiplies sin^(2-2n) in the comparison inequality
    return 1.0 / (n * unit_ball_volume(n)) ** 2


def v1_volume_profile(spec: BallSpec, points: int = 2000) -> VolumeProfile:
    """Tabulate v(s) and check -dv/ds = lambda1 / L(theta(s))^2 * int_0^s v."""
    n, t1 = spec.n, spec.theta1
    lam = lambda_shoot(spec, 0)
    theta = np.linspace(0.0, t1, points + 1)[1:]
    u = eval_um(ModeParams(n, 0, lam), theta[:-1])
    vals = np.append(u.values, 0.0)
    ders = np.append(u.derivs, eval_um(ModeParams(n, 0, lam), [t1]).derivs[0])
    # y1 is even in theta, so the slope at the pole is zero
    knots = np.concatenate([[0.0], theta])
    spline = CubicHermiteSpline(knots, np.concatenate([[1.0], vals]),
                                np.concatenate([[0.0], ders]))

    # running integral of v over caps, panel by panel
    nodes, weights = gauss_panels(0.0, 1.0, 1, 16)
    a, b = knots[:-1], knots[1:]
    x = a[:, None] + (b - a)[:, None] * nodes[None, :]
    ball_integral = np.cumsum(((b - a)[:, None] * weights[None, :]
                               * spline(x) * cap_boundary(n, x)).sum(axis=1))
    L = cap_boundary(n, theta)
    slopes = ders / L
    rhs = lam * ball_integral / L**2
    inner = slice(points // 100, points - points // 100)
    residual = float(np.max(np.abs(-slopes[inner] - rhs[inner]))
                     / np.max(np.abs(slopes[inner])))
    l2 = float(((b - a)[:, None] * weights[None, :] * spline(x) ** 2 * cap_boundary(n, x)).sum())
    return VolumeProfile(spec, lam, theta, cap_volume(n, theta), vals, slopes, residual, l2,
                         spline)


def _normalized(u_dm: DomainMeasure, v: VolumeProfile) -> DomainMeasure:
    return u_dm.scaled(math.sqrt(v.l2_squared / u_dm.integral(2)))


@dataclass(frozen=True)
class ChitiReport:
    s_grid: np.ndarray
    u_sharp: np.ndarray
    v_profile: np.ndarray
    verdict: str  # "identical", "one-crossing", "no-crossing", "wrong-pattern" or "multiple"
    crossings: int
    crossing_volume: float | None
    crossing_radius: float | None
    sup_difference: float
    slack: float
    u_sharp_at_zero: float
    v_at_zero: float

    @property
    def passed(self) -> bool:
        return self.verdict in ("identical", "one-crossing") and (
            self.verdict == "identical" or self.u_sharp_at_zero < self.v_at_zero)

    def to_csv(self) -> str:
        buf = io.StringIO()
        np.savetxt(buf, np.column_stack([self.s_grid, self.u_sharp, self.v_profile]),
                   delimiter=",", header="s,u_sharp,v1", comments="", fmt="%.17g")
        return buf.getvalue()

    def verdict_dict(self) -> dict:
        return {"verdict": self.verdict, "passed": self.passed, "crossings": self.crossings,
                "crossing_volume": self.crossing_volume, "crossing_radius": self.crossing_radius,
                "sup_difference": self.sup_difference, "slack": self.slack,
                "u_sharp_at_zero": self.u_sharp_at_zero, "v_at_zero": self.v_at_zero}

    def to_json(self) -> str:
        return json.dumps(self.verdict_dict(), indent=2)


def _evaluation_points(profile: RearrangedProfile, volume: float) -> np.ndarray:
    s = profile.midpoints
    if volume > profile.total * (1 + 1e-12):
        # the domain came out smaller than the cap; sample the gap too
        s = np.concatenate([s, np.linspace(profile.total, volume, 65)[1:]])
    return s


def chiti_crossing(u_dm: DomainMeasure, spec: BallSpec, *, slack: float = NOISE_SLACK,
                   identical_tol: float = IDENTICAL_TOL,
                   v: VolumeProfile | None = None) -> ChitiReport:
    """Sign changes of v - u# on the volume axis after matching L2 norms.

    ``slack`` and ``identical_tol`` are relative to sup v = v(0) = 1.
    """
    v = v or v1_volume_profile(spec)
    sharp = decreasing_rearrangement(_normalized(u_dm, v))
    s = _evaluation_points(sharp, v.volume)
    u = np.where(s < sharp.total, sharp(np.minimum(s, sharp.total)), 0.0)
    vv = v(s)
    d = vv - u
    sup = float(np.max(np.abs(d)))
    u0, v0 = float(sharp.values[0]), 1.0
    signs = np.sign(np.where(np.abs(d) > slack * v0, d, 0.0))
    nz = np.flatnonzero(signs)
    flips = np.flatnonzero(signs[nz][1:] != signs[nz][:-1])
    common = dict(s_grid=s, u_sharp=u, v_profile=vv, crossings=len(flips), sup_difference=sup,
                  slack=slack, u_sharp_at_zero=u0, v_at_zero=v0)
    if sup < identical_tol * v0:
        return ChitiReport(verdict="identical", crossing_volume=None, crossing_radius=None,
                           **common)
    if len(flips) == 0:
        return ChitiReport(verdict="no-crossing", crossing_volume=None, crossing_radius=None,
                           **common)
    i, j = nz[flips[0]], nz[flips[0] + 1]
    # linear zero of d between the last sample of one sign and the first of the other
    s1 = float(s[i] + (s[j] - s[i]) * d[i] / (d[i] - d[j]))
    r1 = float(theta_of_volume(spec.n, min(s1, cap_volume(spec.n, math.pi))))
    if len(flips) > 1:
        report = ChitiReport(verdict="multiple", crossing_volume=s1, crossing_radius=r1,
                             **common)
        raise MultipleCrossings(f"{len(flips)} sign changes of v - u# beyond slack", report)
    verdict = "one-crossing" if signs[nz[0]] > 0 else "wrong-pattern"
    return ChitiReport(verdict=verdict, crossing_volume=s1, crossing_radius=r1, **common)


@dataclass(frozen=True)
class InequalityResidual:
    """Window-averaged violation of -du#/ds <= lambda1 / L(theta(s))^2 int_0^s u#."""

    edges: np.ndarray          # window edges as fractions of |Omega|
    violations: np.ndarray     # one per window; positive means violated

    @property
    def max_violation(self) -> float:
        return float(np.max(self.violations))


def chiti_inequality_residual(u_dm: DomainMeasure, spec: BallSpec, *, windows: int = 100,
                              lambda1: float | None = None, v: VolumeProfile | None = None,
                              sub_panels: int = 8) -> InequalityResidual:
    """Integrated form of the comparison inequality over equal windows of [0, |Omega|].

    Over a window [a, b] the inequality integrates to
    u#(a) - u#(b) <= int_a^b lambda1 / L(theta(s))^2 U(s) ds with U = int_0^s u#;
    the reported value is (left - right) / (b - a). Point values of u# are
    interpolated through step midpoints.
    """
    n = spec.n
    if lambda1 is None:
        lambda1 = lambda_shoot(spec, 0)
    v = v or v1_volume_profile(spec)
    sharp = decreasing_rearrangement(_normalized(u_dm, v))
    total = sharp.total
    fractions = np.linspace(0.0, 1.0, windows + 1)
    edges = fractions * total
    u_edge = np.interp(edges, sharp.midpoints, sharp.values)
    running = np.concatenate([[0.0], np.cumsum(sharp.values * sharp.widths)])

    nodes, weights = gauss_panels(0.0, 1.0, sub_panels, 8)
    a, b = edges[:-1], edges[1:]
    x = a[:, None] + (b - a)[:, None] * nodes[None, :]
    U = np.interp(x, sharp.breaks, running)
    theta = theta_of_volume(n, np.minimum(x, cap_volume(n, math.pi)))
    kernel = lambda1 * _coefficient(n) * np.sin(theta) ** (2 - 2 * n)
    rhs = ((b - a)[:, None] * weights[None, :] * kernel * U).sum(axis=1)
    violations = ((u_edge[:-1] - u_edge[1:]) - rhs) / (b - a)
    return InequalityResidual(fractions, violations)


def radial_measure(spec: BallSpec, func=None, cells: int = 20000) -> DomainMeasure:
    """Value/measure pairs of a radial function on the cap, in equal volume cells.

    With ``func`` omitted the cap's own first eigenfunction is used, which is
    the equality case of every comparison here.
    """
    volume = cap_volume(spec.n, spec.theta1)
    mids = (np.arange(cells) + 0.5) * volume / cells
    theta = theta_of_volume(spec.n, mids)
    if func is None:
        values = v1_volume_profile(spec)(mids)
    else:
        values = np.asarray(func(theta), dtype=float)
    return DomainMeasure(values, np.full(cells, volume / cells))
