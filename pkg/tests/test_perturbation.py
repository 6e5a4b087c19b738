import math

import numpy as np
import pytest

from sphereppw.perturbation import (SERIES_CUTOFF, crossing_count, dlambda1_dc, dlambda1_dc_raw,
                                    dlambda2_dc, ell, fd_scaled_eigenvalue, mfun,
                                    perturbation_report)
from sphereppw.radial import BallSpec


def test_auxiliary_limits():
    t = np.array([1e-6, 1e-3])
    np.testing.assert_allclose(ell(t), -2 * t / 3, rtol=1e-6)
    np.testing.assert_allclose(mfun(t), 1 / 3, rtol=1e-6)


def test_auxiliary_continuous_at_cutoff():
    below = np.nextafter(SERIES_CUTOFF, 0)
    for f in (ell, mfun):
        assert f(below) == pytest.approx(f(SERIES_CUTOFF), abs=1e-14)


def test_mfun_is_minus_half_derivative_of_ell():
    t = np.linspace(0.1, 3.0, 30)
    h = 1e-5
    deriv = (ell(t + h) - ell(t - h)) / (2 * h)
    np.testing.assert_allclose(mfun(t), -deriv / 2, atol=1e-8)


def test_auxiliary_domain():
    with pytest.raises(ValueError):
        ell(0.0)
    with pytest.raises(ValueError):
        mfun(math.pi)


@pytest.mark.parametrize("n, theta1", [(2, 0.8), (3, 1.2), (4, 0.5)])
def test_derivatives_match_finite_differences(n, theta1):
    spec = BallSpec(n, theta1)
    d1 = dlambda1_dc(spec)
    assert d1 == pytest.approx(fd_scaled_eigenvalue(spec, 0), abs=1e-6)
    assert dlambda2_dc(spec) == pytest.approx(fd_scaled_eigenvalue(spec, 1), abs=1e-6)
    assert d1 == pytest.approx(dlambda1_dc_raw(spec), abs=1e-8)
    assert d1 < 0


def test_three_sphere_closed_derivative():
    # lam~(c) = c^2 ((pi / (c t1))^2 - 1) = (pi / t1)^2 - c^2
    for t1 in (0.4, 1.1, 2.0):
        assert dlambda1_dc(BallSpec(3, t1)) == pytest.approx(-2.0, rel=1e-10)


def test_two_sphere_second_eigenvalue_grows():
    for t1 in (0.4, 1.0, 1.5):
        assert dlambda2_dc(BallSpec(2, t1)) > 0


def test_single_crossing():
    for spec in (BallSpec(2, 1.0), BallSpec(3, 0.6)):
        assert crossing_count(spec) == 1


def test_report_ratio_derivative_positive():
    rep = perturbation_report(BallSpec(2, 1.0))
    assert rep.ratio_derivative > 0
    assert set(rep.as_dict()) >= {"fd1", "fd2", "d_lambda1_dc", "ratio_derivative"}
