import math
import os
import subprocess
import sys

import numpy as np
import pytest

from sphereppw import _accel
from sphereppw.radial import (BallSpec, ModeParams, eval_um, frobenius_seed,
                              integral_identity_residual, leading_coefficient, lower_mode,
                              lowering_factor, raise_mode, recursion_residual, value_at,
                              zeros_of)

GRID = np.linspace(0.05, 2.5, 120)


def test_spec_validation():
    with pytest.raises(ValueError):
        BallSpec(1, 1.0)
    with pytest.raises(ValueError):
        BallSpec(2, 0.0)
    with pytest.raises(ValueError):
        BallSpec(2, math.pi)
    with pytest.raises(ValueError):
        ModeParams(2, -1, 1.0)
    with pytest.raises(ValueError):
        ModeParams(2, 0, float("nan"))
    assert BallSpec(3.0, 1).n == 3


def test_leading_coefficient_recursion():
    mode = ModeParams(3, 2, 10.0)
    # c_1 = lam / n, c_2 = c_1 (lam - n) / (n + 2)
    assert leading_coefficient(mode) == pytest.approx(10.0 / 3 * 7.0 / 5, rel=1e-15)


def test_hemisphere_modes_are_trigonometric():
    # on S^2 with lam = 2: u_0 = cos, u_1 = sin
    u0 = eval_um(ModeParams(2, 0, 2.0), GRID)
    u1 = eval_um(ModeParams(2, 1, 2.0), GRID)
    np.testing.assert_allclose(u0.values, np.cos(GRID), atol=1e-12)
    np.testing.assert_allclose(u0.derivs, -np.sin(GRID), atol=1e-12)
    np.testing.assert_allclose(u1.values, np.sin(GRID), atol=1e-12)


def test_three_sphere_closed_form():
    # n = 3: u_0 = sin(k t) / (k sin t) with lam = k^2 - 1
    k = 2.7
    u = eval_um(ModeParams(3, 0, k * k - 1), GRID)
    np.testing.assert_allclose(u.values, np.sin(k * GRID) / (k * np.sin(GRID)), atol=1e-12)


def test_seed_matches_solution_near_pole():
    mode = ModeParams(4, 1, 17.0)
    val, der = frobenius_seed(mode, theta_seed=1e-3)
    assert val == pytest.approx(leading_coefficient(mode) * 1e-3, rel=1e-5)
    assert der == pytest.approx(leading_coefficient(mode), rel=1e-5)
    with pytest.raises(ValueError):
        frobenius_seed(mode, theta_seed=0.1)
    with pytest.raises(ValueError):
        frobenius_seed(mode, order=1)


def test_seed_examples():
    t = 1e-3
    assert frobenius_seed(ModeParams(3, 0, 3.0))[0] == pytest.approx(math.cos(t), rel=1e-15)
    # c_1 = lam / n = 3, and 3 sin cos solves the m = 1 equation with lam = 6 on S^2
    val, der = frobenius_seed(ModeParams(2, 1, 6.0))
    assert val == pytest.approx(3 * math.sin(t) * math.cos(t), rel=1e-15)
    assert der == pytest.approx(3 * math.cos(2 * t), rel=1e-15)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_raising_and_lowering(n):
    lam = 12.5
    us = [eval_um(ModeParams(n, m, lam), GRID) for m in range(4)]
    for m in range(3):
        raised = raise_mode(us[m])
        np.testing.assert_allclose(raised.values, us[m + 1].values, atol=1e-10)
        lowered = lower_mode(us[m + 1])
        np.testing.assert_allclose(lowered.values,
                                   lowering_factor(us[m + 1].mode) * us[m].values, atol=1e-9)
    assert recursion_residual(us[0], us[1], us[2]) < 1e-10
    assert recursion_residual(us[1], us[2], us[3]) < 1e-10


def test_integral_identity():
    grid = np.linspace(1e-3, 2.0, 4001)
    u0 = eval_um(ModeParams(3, 0, 9.0), grid)
    u1 = eval_um(ModeParams(3, 1, 9.0), grid)
    assert integral_identity_residual(u0, u1) < 1e-9


def test_mismatched_modes_rejected():
    u0 = eval_um(ModeParams(2, 0, 5.0), GRID)
    u2 = eval_um(ModeParams(2, 2, 5.0), GRID)
    with pytest.raises(ValueError):
        recursion_residual(u0, u2, u0)
    with pytest.raises(ValueError):
        lower_mode(u0)


def test_zeros_and_sign_count():
    k = 3.0
    lam = k * k - 1
    zeros = zeros_of(ModeParams(3, 0, lam), 3.1)
    np.testing.assert_allclose(zeros, [math.pi / 3, 2 * math.pi / 3], atol=1e-12)
    _, _, count = value_at(ModeParams(3, 0, lam), 3.1)
    assert count == 2


def test_fallback_path_agrees():
    """The pure-Python kernels give the same eigenvalue as the compiled ones."""
    script = ("from sphereppw import _accel; from sphereppw.ball import lambda_shoot; "
              "from sphereppw.radial import BallSpec; "
              "print(_accel.NUMBA_ENABLED, repr(lambda_shoot(BallSpec(3, 1.0), 0)))")
    env = dict(os.environ, SPHEREPPW_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", script], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    assert out[0] == "False"
    assert float(out[1]) == pytest.approx(math.pi**2 - 1, rel=1e-12)
    if _accel.NUMBA_ENABLED:
        from sphereppw.ball import lambda_shoot
        assert float(out[1]) == pytest.approx(lambda_shoot(BallSpec(3, 1.0), 0), rel=1e-13)
