"""Cap volumes on S^n(rho) and rearrangements of value/measure data.

Functions are represented by their distribution: finitely many
(value, measure) pairs. The decreasing rearrangement is then an exact step
function on [0, |Omega|] and no interpolation enters the comparisons.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from .mesh import SphericalDomainMesh
from .quadrature import gauss_panels


def unit_ball_volume(n: int) -> float:
    """C_n, the volume of the unit ball in R^n."""
    return math.pi ** (n / 2) / gamma(n / 2 + 1)


def sphere_measure(n: int) -> float:
    """n C_n = |S^(n-1)|."""
    return n * unit_ball_volume(n)


def _sin_power_integral(k: int, x):
    """int_0^x sin^k t dt for arrays x in [0, pi]."""
    x = np.asarray(x, dtype=float)
    # the reduction formula loses relative accuracy as x -> 0; Gauss is exact enough there
    small = x < 0.5
    out = np.empty_like(x)
    xs = x[small]
    if xs.size:
        nodes, weights = np.polynomial.legendre.leggauss(24)
        t = 0.5 * xs[:, None] * (nodes[None, :] + 1)
        out[small] = 0.5 * xs * (np.sin(t) ** k @ weights)
    xl = x[~small]
    if xl.size:
        s, c = np.sin(xl), np.cos(xl)
        prev, cur = xl, 1 - c  # I_0, I_1
        if k == 0:
            cur = prev
        else:
            for j in range(2, k + 1):
                prev, cur = cur, -s ** (j - 1) * c / j + (j - 1) / j * prev
        out[~small] = cur
    return out


def _check_radius(r, rho):
    r = np.asarray(r, dtype=float)
    if rho <= 0:
        raise ValueError("rho must be positive")
    if np.any(r < 0) or np.any(r > rho * math.pi * (1 + 1e-15)):
        raise ValueError("geodesic radius must lie in [0, rho pi]")
    return np.clip(r, 0.0, rho * math.pi)


def cap_volume(n: int, r, rho: float = 1.0):
    """A(r) = n C_n int_0^r (rho sin(t/rho))^(n-1) dt."""
    r = _check_radius(r, rho)
    if n == 2:
        # 2 pi rho^2 (1 - cos) written without cancellation
        out = 4 * math.pi * rho**2 * np.sin(r / (2 * rho)) ** 2
    else:
        out = sphere_measure(n) * rho**n * _sin_power_integral(n - 1, r / rho)
    return out if out.ndim else float(out)


def cap_boundary(n: int, r, rho: float = 1.0):
    """L(r) = n C_n (rho sin(r/rho))^(n-1) = A'(r)."""
    r = _check_radius(r, rho)
    out = sphere_measure(n) * (rho * np.sin(r / rho)) ** (n - 1)
    return out if out.ndim else float(out)


def sphere_volume(n: int, rho: float = 1.0) -> float:
    return cap_volume(n, math.pi * rho, rho)


def theta_of_volume(n: int, s, rho: float = 1.0, tol: float = 1e-14):
    """Inverse of ``cap_volume``: closed form for n = 2, vectorised bisection otherwise."""
    s = np.asarray(s, dtype=float)
    total = sphere_volume(n, rho)
    if np.any(s < 0) or np.any(s > total * (1 + 1e-14)):
        raise ValueError("volume must lie in [0, |S^n(rho)|]")
    if n == 2:
        out = 2 * rho * np.arcsin(np.sqrt(np.clip(s / (4 * math.pi * rho**2), 0.0, 1.0)))
        return out if out.ndim else float(out)
    lo = np.zeros_like(s)
    hi = np.full_like(s, math.pi * rho)
    while np.max(hi - lo, initial=0.0) > tol * rho:
        mid = 0.5 * (lo + hi)
        below = cap_volume(n, mid, rho) < s
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    out = np.where(s == 0, 0.0, out)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class DomainMeasure:
    """A nonnegative function given by the measures of its level pieces."""

    values: np.ndarray
    measures: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        m = np.array(self.measures, dtype=float).ravel()
        if v.shape != m.shape or v.size == 0:
            raise ValueError("values and measures must be nonempty and of equal length")
        if np.any(~np.isfinite(v)) or np.any(v < 0):
            raise ValueError("values must be finite and nonnegative")
        if np.any(~np.isfinite(m)) or np.any(m <= 0):
            raise ValueError("measures must be positive")
        for name, arr in (("values", v), ("measures", m)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_pairs(cls, pairs) -> "DomainMeasure":
        arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def from_csv(cls, text: str) -> "DomainMeasure":
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"expected 'value,measure', got {line!r}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError:
                if rows:
                    raise
                continue  # header
        return cls.from_pairs(rows)

    def to_csv(self) -> str:
        lines = ["value,measure"] + [f"{v:.17g},{m:.17g}" for v, m in zip(self.values, self.measures)]
        return "\n".join(lines) + "\n"

    @property
    def total_measure(self) -> float:
        return math.fsum(self.measures)

    def distribution(self, t: float) -> float:
        """|{f > t}|."""
        return math.fsum(self.measures[self.values > t])

    def integral(self, power: float = 1.0) -> float:
        return math.fsum(self.values**power * self.measures)

    def scaled(self, factor: float) -> "DomainMeasure":
        return DomainMeasure(self.values * factor, self.measures)

    def mapped(self, func) -> "DomainMeasure":
        """Same pieces with values func(values); func must keep values nonnegative."""
        return DomainMeasure(func(self.values), self.measures)


@dataclass(frozen=True)
class RearrangedProfile:
    """Monotone step function: ``values[i]`` on [breaks[i], breaks[i+1])."""

    breaks: np.ndarray
    values: np.ndarray
    widths: np.ndarray
    decreasing: bool = True

    @property
    def total(self) -> float:
        return float(self.breaks[-1])

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.breaks[:-1] + self.breaks[1:])

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0) or np.any(s > self.total):
            raise ValueError("s outside [0, |Omega|]")
        idx = np.clip(np.searchsorted(self.breaks, s, side="right") - 1, 0, len(self.values) - 1)
        out = self.values[idx]
        return out if out.ndim else float(out)

    def distribution(self, t: float) -> float:
        return math.fsum(self.widths[self.values > t])

    def integral(self, power: float = 1.0) -> float:
        return math.fsum(self.values**power * self.widths)

    def is_monotone(self) -> bool:
        d = np.diff(self.values)
        return bool(np.all(d < 0) if self.decreasing else np.all(d > 0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        # one row per step: left end of the step and its value
        np.savetxt(buf, np.column_stack([self.breaks[:-1], self.values]), delimiter=",",
                   header="s,value", comments="", fmt="%.17g")
        buf.write(f"{self.total:.17g},{self.values[-1]:.17g}\n")
        return buf.getvalue()


def _rearrange(dm: DomainMeasure, decreasing: bool) -> RearrangedProfile:
    vals, inverse = np.unique(dm.values, return_inverse=True)
    inverse = inverse.ravel()
    # merge ties; fsum per group keeps the merge exact up to one rounding
    order = np.argsort(inverse, kind="stable")
    groups = np.split(dm.measures[order], np.cumsum(np.bincount(inverse))[:-1])
    widths = np.array([math.fsum(g) for g in groups])
    if decreasing:
        vals, widths = vals[::-1], widths[::-1]
    breaks = np.concatenate([[0.0], np.cumsum(widths)])
    for arr in (breaks, vals, widths):
        arr.setflags(write=False)
    return RearrangedProfile(breaks, vals, widths, decreasing)


def decreasing_rearrangement(dm: DomainMeasure) -> RearrangedProfile:
    return _rearrange(dm, True)


def increasing_rearrangement(dm: DomainMeasure) -> RearrangedProfile:
    return _rearrange(dm, False)


@dataclass(frozen=True)
class SymmetricRearrangement:
    """f*(r) = f#(A(r)) on the cap of volume |Omega| (radial, nonincreasing)."""

    profile: RearrangedProfile
    n: int
    rho: float = 1.0

    @property
    def support_radius(self) -> float:
        return theta_of_volume(self.n, self.profile.total, self.rho)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        s = np.atleast_1d(cap_volume(self.n, np.minimum(r, math.pi * self.rho), self.rho))
        inside = s < self.profile.total
        out = np.zeros_like(s)
        out[inside] = self.profile(s[inside])
        return out.reshape(r.shape) if r.ndim else float(out[0])


def symmetric_rearrangement(dm: DomainMeasure, n: int, rho: float = 1.0) -> SymmetricRearrangement:
    return SymmetricRearrangement(decreasing_rearrangement(dm), n, rho)


def step_product_integral(a: RearrangedProfile, b: RearrangedProfile) -> float:
    """int_0^T a(s) b(s) ds for two step functions on the same [0, T]."""
    if not math.isclose(a.total, b.total, rel_tol=1e-12):
        raise ValueError("profiles live on different intervals")
    cuts = np.union1d(a.breaks, b.breaks)
    cuts = cuts[cuts <= min(a.total, b.total)]
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    return math.fsum(a(mids) * b(mids) * np.diff(cuts))


def integrate_step_against(profile: RearrangedProfile, func, order: int = 3) -> float:
    """int_0^T func(s) profile(s) ds, with Gauss-Legendre on every step."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    left, width = profile.breaks[:-1], profile.widths
    s = left[:, None] + 0.5 * width[:, None] * (nodes[None, :] + 1)
    f = func(s.ravel()).reshape(s.shape)
    return math.fsum((0.5 * width * profile.values) * (f @ weights))


def isoperimetric_defect(length: float, area: float, curvature: float = 1.0) -> float:
    """L^2 - (4 pi A - kappa A^2); nonnegative on S^2, zero exactly for caps."""
    return length**2 - (4 * math.pi * area - curvature * area**2)


def cap_isoperimetric_defect(r: float) -> dict:
    A = cap_volume(2, r)
    L = cap_boundary(2, r)
    return {"length": L, "area": A, "defect": isoperimetric_defect(L, A)}


def isoperimetric_check_s2(mesh: SphericalDomainMesh) -> dict:
    """Boundary length, area and isoperimetric defect of a meshed domain on S^2."""
    A = mesh.area()
    L = mesh.boundary_length()
    if A <= 0 or L <= 0:
        raise ValueError("degenerate mesh")
    return {"length": L, "area": A, "defect": isoperimetric_defect(L, A)}


def cap_volume_quadrature(n: int, r: float, rho: float = 1.0) -> float:
    """A(r) by composite Gauss-Legendre, an independent check on the closed form."""
    if r == 0:
        return 0.0
    x, w = gauss_panels(0.0, r, 8, 20)
    return sphere_measure(n) * float(np.dot(w, (rho * np.sin(x / rho)) ** (n - 1)))
