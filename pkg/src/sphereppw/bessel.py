"""Positive zeros of J_nu from the power series, for Euclidean-limit checks.

Kept independent of scipy.special on purpose: these values are used as an
oracle against the shooting solver.
"""

import math
from functools import lru_cache


def bessel_j(nu: float, x: float) -> float:
    """J_nu(x) = sum_k (-1)^k (x/2)^(2k+nu) / (k! Gamma(k+nu+1)), x >= 0."""
    if x == 0.0:
        return 1.0 if nu == 0 else 0.0
    half = 0.5 * x
    log_lead = nu * math.log(half) - math.lgamma(nu + 1.0)
    term = 1.0
    terms = [term]
    k = 0
    while True:
        k += 1
        term *= -(half * half) / (k * (k + nu))
        terms.append(term)
        if abs(term) < 1e-18 * max(1.0, abs(sum(terms[-4:]))) and k > half:
            break
        if k > 500:
            break
    return math.exp(log_lead) * math.fsum(terms)


@lru_cache(maxsize=None)
def bessel_zero(nu: float, k: int = 1, step: float = 0.05, tol: float = 1e-14) -> float:
    """k-th positive zero j_{nu,k} by a sign-change scan and bisection."""
    if k < 1:
        raise ValueError("k must be >= 1")
    x = step
    f = bessel_j(nu, x)
    found = 0
    while True:
        x_next = x + step
        f_next = bessel_j(nu, x_next)
        if f * f_next < 0.0:
            found += 1
            if found == k:
                break
        x, f = x_next, f_next
        if x > 200.0:
            raise RuntimeError("zero search ran past x = 200")
    lo, hi, flo = x, x_next, f
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        fm = bessel_j(nu, mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)
