"""First-order sensitivity of the cap eigenvalues to a radial dilation.

Write lam~(c) = c^2 lam(c theta1): the eigenvalue of the cap of radius
c theta1, rescaled to the fixed interval (0, theta1). Its c-derivative at
c = 1 has closed integral forms in terms of the eigenfunction

    v_m = u_m sin^((n-1)/2)

and two auxiliary profiles

    ell(t)  = cot t - t csc^2 t
    mfun(t) = -ell'(t) / 2 = csc^2 t (1 - t cot t)

Each analytic form is cross-checked by a central difference in c.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ball import lambda_shoot
from .quadrature import gauss_panels
from .radial import BallSpec, ModeParams, _trig_series, eval_um

SERIES_CUTOFF = 0.5
FD_STEP = 1e-4


def _as_interior(theta):
    t = np.asarray(theta, dtype=float)
    if np.any((t <= 0.0) | (t >= np.pi)):
        raise ValueError("theta must lie in (0, pi)")
    return t


def _series(t, coeffs):
    # sum_k coeffs[k] t^(2k) by Horner in t^2
    t2 = t * t
    acc = np.zeros_like(t)
    for c in coeffs[::-1]:
        acc = acc * t2 + c
    return acc


def ell(theta):
    """cot t - t csc^2 t; the series is used below ``SERIES_CUTOFF``."""
    t = _as_interior(theta)
    b, _ = _trig_series()
    j = np.arange(b.size)
    # ell = sum_{j>=1} 2 j b_j t^(2j-1)
    coeffs = (2 * j * b)[1:]
    small = t < SERIES_CUTOFF
    ts = np.where(small, t, 1.0)
    tl = np.where(small, 1.0, t)
    s = np.sin(tl)
    out = np.where(small, ts * _series(ts, coeffs), np.cos(tl) / s - tl / s**2)
    return out if out.ndim else float(out)


def mfun(theta):
    """csc^2 t (1 - t cot t); tends to 1/3 as t -> 0."""
    t = _as_interior(theta)
    b, _ = _trig_series()
    j = np.arange(b.size)
    # mfun = -sum_{j>=1} j (2j - 1) b_j t^(2j-2)
    coeffs = (-j * (2 * j - 1) * b)[1:]
    small = t < SERIES_CUTOFF
    ts = np.where(small, t, 1.0)
    tl = np.where(small, 1.0, t)
    s = np.sin(tl)
    out = np.where(small, _series(ts, coeffs), (1.0 - tl * np.cos(tl) / s) / s**2)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class _Eigenmode:
    lam: float
    nodes: np.ndarray
    weights: np.ndarray
    u: np.ndarray
    du: np.ndarray
    weight: np.ndarray  # sin^(n-1)

    def norm2(self) -> float:
        return float(np.dot(self.weights, self.u**2 * self.weight))


def _eigenmode(spec: BallSpec, m: int, panels: int, order: int, lam: float | None = None):
    if lam is None:
        lam = lambda_shoot(spec, m)
    nodes, weights = gauss_panels(0.0, spec.theta1, panels, order)
    u = eval_um(ModeParams(spec.n, m, lam), nodes)
    return _Eigenmode(lam, nodes, weights, np.asarray(u.values), np.asarray(u.derivs),
                      np.sin(nodes) ** (spec.n - 1))


def dlambda1_dc(spec: BallSpec, *, panels: int = 16, order: int = 20) -> float:
    """(n-1) int(-ell u0 u0' sin^(n-1)) / int(v0^2)."""
    e = _eigenmode(spec, 0, panels, order)
    num = np.dot(e.weights, -ell(e.nodes) * e.u * e.du * e.weight)
    return float((spec.n - 1) * num / e.norm2())


def dlambda1_dc_raw(spec: BallSpec, *, panels: int = 16, order: int = 20) -> float:
    """Same derivative in its undifferentiated form, for cross-validation.

    (n-1)/2 int([(n-3) mfun - (n-1)] v0^2) / int(v0^2)
    """
    n = spec.n
    e = _eigenmode(spec, 0, panels, order)
    num = np.dot(e.weights, ((n - 3) * mfun(e.nodes) - (n - 1)) * e.u**2 * e.weight)
    return float(0.5 * (n - 1) * num / e.norm2())


def dlambda2_dc(spec: BallSpec, *, panels: int = 16, order: int = 20) -> float:
    """(n-1)/2 int([(n+1) mfun - (n-1)] v1^2) / int(v1^2)."""
    n = spec.n
    e = _eigenmode(spec, 1, panels, order)
    num = np.dot(e.weights, ((n + 1) * mfun(e.nodes) - (n - 1)) * e.u**2 * e.weight)
    return float(0.5 * (n - 1) * num / e.norm2())


def fd_scaled_eigenvalue(spec: BallSpec, m: int, step: float = FD_STEP,
                         richardson: bool = False) -> float:
    """Central difference of c -> c^2 lam_m(c theta1) at c = 1."""
    if not 0.0 < step < 0.5:
        raise ValueError("step must lie in (0, 0.5)")
    if (1 + step) * spec.theta1 >= np.pi:
        raise ValueError("dilated radius leaves (0, pi)")

    def central(h):
        up = (1 + h) ** 2 * lambda_shoot(BallSpec(spec.n, (1 + h) * spec.theta1), m)
        down = (1 - h) ** 2 * lambda_shoot(BallSpec(spec.n, (1 - h) * spec.theta1), m)
        return (up - down) / (2 * h)

    d = central(step)
    if richardson:
        d = (4.0 * central(0.5 * step) - d) / 3.0
    return d


def crossing_count(spec: BallSpec, *, samples: int = 400, slack: float = 1e-10) -> int:
    """Sign changes of v1/|v1| - v0/|v0| on (0, theta1), L2-normalized."""
    p0 = _eigenmode(spec, 0, 16, 20)
    p1 = _eigenmode(spec, 1, 16, 20)
    grid = np.linspace(0.0, spec.theta1, samples + 2)[1:-1]
    half = 0.5 * (spec.n - 1)
    v0 = eval_um(ModeParams(spec.n, 0, p0.lam), grid).values * np.sin(grid) ** half
    v1 = eval_um(ModeParams(spec.n, 1, p1.lam), grid).values * np.sin(grid) ** half
    diff = v1 / np.sqrt(p1.norm2()) - v0 / np.sqrt(p0.norm2())
    sig = np.sign(np.where(np.abs(diff) > slack, diff, 0.0))
    sig = sig[sig != 0]
    return int(np.count_nonzero(sig[1:] != sig[:-1]))


@dataclass(frozen=True)
class PerturbationReport:
    spec: BallSpec
    lambda1: float
    lambda2: float
    d_lambda1_dc: float
    d_lambda1_dc_raw: float
    d_lambda2_dc: float
    fd1: float
    fd2: float

    @property
    def ratio_derivative(self) -> float:
        """d/dc log(lam2~/lam1~) at c = 1; positive means the ratio grows with theta1."""
        return self.d_lambda2_dc / self.lambda2 - self.d_lambda1_dc / self.lambda1

    def as_dict(self) -> dict:
        return {
            "n": self.spec.n,
            "theta1": self.spec.theta1,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "d_lambda1_dc": self.d_lambda1_dc,
            "d_lambda1_dc_raw": self.d_lambda1_dc_raw,
            "d_lambda2_dc": self.d_lambda2_dc,
            "fd1": self.fd1,
            "fd2": self.fd2,
            "ratio_derivative": self.ratio_derivative,
        }


def perturbation_report(spec: BallSpec, step: float = FD_STEP,
                        richardson: bool = False) -> PerturbationReport:
    return PerturbationReport(
        spec=spec,
        lambda1=lambda_shoot(spec, 0),
        lambda2=lambda_shoot(spec, 1),
        d_lambda1_dc=dlambda1_dc(spec),
        d_lambda1_dc_raw=dlambda1_dc_raw(spec),
        d_lambda2_dc=dlambda2_dc(spec),
        fd1=fd_scaled_eigenvalue(spec, 0, step, richardson),
        fd2=fd_scaled_eigenvalue(spec, 1, step, richardson),
    )
