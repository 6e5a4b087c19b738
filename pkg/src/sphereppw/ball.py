"""First two Dirichlet eigenvalues of polar caps by shooting.

lambda_1 of the cap is the lowest eigenvalue of the m = 0 radial problem and
lambda_2 the lowest of the m = 1 problem. Both are found by bracketing on the
number of sign changes of u_m on (0, theta1) (zeros move left as lam grows),
then Brent's method on lam -> u_m(theta1; lam).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .bessel import bessel_zero
from .radial import BallSpec, ModeParams, value_at, zeros_of

PI_GUARD = 1e-6
ZERO_TOL = 1e-12


class NoZeroInRange(ValueError):
    """u_m keeps one sign on (0, pi - guard)."""


class BracketError(RuntimeError):
    """No eigenvalue bracket could be established."""


@dataclass(frozen=True)
class SpectralPair:
    spec: BallSpec
    lambda1: float
    lambda2: float
    residuals: tuple[float, float]

    @property
    def ratio(self) -> float:
        return self.lambda2 / self.lambda1


def first_zero(mode: ModeParams, guard: float = PI_GUARD) -> float:
    """First positive zero of u_m(.; lam), refined to ``ZERO_TOL``."""
    zeros = zeros_of(mode, math.pi - guard, stop_at_first=True, tol=ZERO_TOL)
    if zeros.size == 0:
        raise NoZeroInRange(f"u_{mode.m}(.; {mode.lam}) has no zero on (0, pi - {guard})")
    return float(zeros[0])


def euclidean_guess(n: int, m: int, theta1: float) -> float:
    """j_{n/2-1+m,1}^2 / theta1^2, the small-cap asymptote."""
    return bessel_zero(n / 2.0 - 1.0 + m) ** 2 / theta1**2


def lambda_shoot(spec: BallSpec, m: int, *, max_expand: int = 200) -> float:
    """Lowest lam with u_m(theta1; lam) = 0."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    n, theta1 = spec.n, spec.theta1

    def probe(lam):
        val, _, count = value_at(ModeParams(n, m, lam), theta1)
        return val, count

    # u_m(.; m(m+n-1)) is c_m sin^m, which has no zero in (0, pi)
    lo = m * (m + n - 1.0)
    f_lo = 1.0 if m == 0 else probe(lo)[0]
    hi = max(euclidean_guess(n, m, theta1), lo + 1.0)
    f_hi, count = probe(hi)
    for _ in range(max_expand):
        if count >= 1:
            break
        lo, f_lo = hi, f_hi
        hi *= 2.0
        f_hi, count = probe(hi)
    else:
        raise BracketError(f"no sign change of u_{m} on (0, {theta1}) up to lam = {hi}")
    for _ in range(200):
        if count == 1:
            break
        mid = 0.5 * (lo + hi)
        f_mid, c_mid = probe(mid)
        if c_mid == 0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi, count = mid, f_mid, c_mid
    else:
        raise BracketError("could not isolate the first eigenvalue")
    if f_hi == 0.0:
        return hi
    if f_lo == 0.0:
        return lo
    return brentq(lambda lam: probe(lam)[0], lo, hi, xtol=1e-15 * hi, rtol=1e-15, maxiter=200)


def spectral_pair(spec: BallSpec) -> SpectralPair:
    lam1 = lambda_shoot(spec, 0)
    lam2 = lambda_shoot(spec, 1)
    r1 = value_at(ModeParams(spec.n, 0, lam1), spec.theta1)[0]
    r2 = value_at(ModeParams(spec.n, 1, lam2), spec.theta1)[0]
    return SpectralPair(spec, lam1, lam2, (abs(r1), abs(r2)))


def ball_radius_for_lambda1(n: int, lam: float, upper: float = math.pi / 2) -> float:
    """Radius theta1 <= ``upper`` of the cap whose lambda_1 equals ``lam``.

    lambda_1 decreases strictly with the radius, so the inverse exists only
    when lam >= lambda_1(upper) (= n for the hemisphere).
    """
    lam_upper = lambda_shoot(BallSpec(n, upper), 0)
    if lam < lam_upper * (1 - 1e-13):
        raise ValueError(f"lambda1 = {lam} is below lambda1({upper}) = {lam_upper}; "
                         "no cap of radius <= upper has it")
    if lam <= lam_upper:
        return upper
    # theta^2 lambda_1(theta) < j^2 gives theta < j / sqrt(lam)
    lo = min(0.5 * bessel_zero(n / 2.0 - 1.0) / math.sqrt(lam), 0.5 * upper)
    return brentq(lambda th: lambda_shoot(BallSpec(n, th), 0) - lam, lo, upper,
                  xtol=1e-14, rtol=1e-15)


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("SPHEREPPW_THREADS", "1")))
    except ValueError:
        return 1


def monotone_violation(x, y, increasing: bool, slack: float = 1e-9):
    """First adjacent pair breaking strict monotonicity beyond ``slack``, else None.

    ``slack`` is relative to max(1, |y|).
    """
    y = np.asarray(y, dtype=float)
    d = np.diff(y)
    tol = slack * np.maximum(1.0, np.abs(y[:-1]))
    # differences inside the noise floor are not counted against monotonicity
    bad = d < -tol if increasing else d > tol
    idx = np.flatnonzero(bad)
    if idx.size == 0:
        return None
    i = int(idx[0])
    return {"index": i, "x": (float(x[i]), float(x[i + 1])), "y": (float(y[i]), float(y[i + 1]))}


SCAN_COLUMNS = ("theta1", "lambda1", "lambda2", "ratio", "t2_lambda1", "t2_lambda2", "t2_gap")


@dataclass
class ScanTable:
    n: int
    rows: np.ndarray
    verdicts: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, SCAN_COLUMNS.index(name)]

    def to_csv(self) -> str:
        lines = [",".join(SCAN_COLUMNS)]
        lines += [",".join(repr(float(v)) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"


# column -> expected direction
SCAN_CHECKS = {
    "ratio-increasing": ("ratio", True),
    "t2-lambda1-decreasing": ("t2_lambda1", False),
    "t2-lambda2-increasing": ("t2_lambda2", True),
    "t2-gap-increasing": ("t2_gap", True),
    "lambda1-decreasing": ("lambda1", False),
    "lambda2-decreasing": ("lambda2", False),
}


def _scan_row(n, theta1):
    pair = spectral_pair(BallSpec(n, theta1))
    l1, l2, t2 = pair.lambda1, pair.lambda2, theta1 * theta1
    return [theta1, l1, l2, l2 / l1, t2 * l1, t2 * l2, t2 * (l2 - l1)]


def scan(n: int, thetas, checks=tuple(SCAN_CHECKS), *, slack: float = 1e-9,
         threads: int | None = None) -> ScanTable:
    """Tabulate the pair over increasing radii and judge monotonicity per column."""
    thetas = np.asarray(thetas, dtype=float)
    if np.any(np.diff(thetas) <= 0):
        raise ValueError("theta grid must be strictly increasing")
    threads = threads or default_threads()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(lambda t: _scan_row(n, t), thetas))
    else:
        rows = [_scan_row(n, t) for t in thetas]
    table = ScanTable(n, np.array(rows))
    for name in checks:
        col, increasing = SCAN_CHECKS[name]
        bad = monotone_violation(thetas, table.column(col), increasing, slack)
        table.verdicts[name] = {"passed": bad is None, "first_violation": bad}
    return table


def ratio_gap_checks(pair: SpectralPair, eq_tol: float = 1e-8) -> dict:
    """Check (lam2 - n)/lam1 against (n+2)/n and lam2 - lam1 against (n-1)/sin^2.

    Below the hemisphere the first inequality is strict, at it an equality,
    and beyond it reversed. The gap bound is asserted for theta1 <= pi/2.
    """
    n, theta1 = pair.spec.n, pair.spec.theta1
    lhs = (pair.lambda2 - n) / pair.lambda1
    rhs = (n + 2.0) / n
    delta = lhs - rhs
    at_hemisphere = abs(theta1 - math.pi / 2) < 1e-12
    equality = abs(delta) < eq_tol
    if at_hemisphere:
        ratio_ok = equality
        regime = "hemisphere"
    elif theta1 < math.pi / 2:
        ratio_ok = delta > 0 and not equality
        regime = "inside"
    else:
        ratio_ok = delta < 0 and not equality
        regime = "beyond"
    gap = pair.lambda2 - pair.lambda1
    gap_rhs = (n - 1.0) / math.sin(theta1) ** 2
    gap_ok = gap > gap_rhs if theta1 <= math.pi / 2 + 1e-12 else None
    return {
        "regime": regime,
        "ratio_lhs": lhs,
        "ratio_rhs": rhs,
        "ratio_delta": delta,
        "equality": equality,
        "ratio_ok": ratio_ok,
        "gap": gap,
        "gap_rhs": gap_rhs,
        "gap_ok": gap_ok,
        "passed": ratio_ok and gap_ok is not False,
    }


def interlace_check(n: int, lam: float, guard: float = PI_GUARD) -> bool:
    """Zeros of u_0 and sin^(n-1) u_1 alternate on [0, pi - guard)."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    end = math.pi - guard
    z0 = zeros_of(ModeParams(n, 0, lam), end)
    z1 = zeros_of(ModeParams(n, 1, lam), end)
    # sin^(n-1) u_1 vanishes at 0, so the merged list starts with type 1
    merged = sorted([(0.0, 1)] + [(z, 0) for z in z0] + [(z, 1) for z in z1])
    for (za, ka), (zb, kb) in zip(merged, merged[1:]):
        if ka == kb or zb - za < 1e-10:
            return False
    return True
