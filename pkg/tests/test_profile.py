import math

import numpy as np
import pytest

from sphereppw.profile import (PROFILE_COLUMNS, build_profile, g_from_q, hemisphere_deviation,
                               p_structure_check, q_bounds_check, riccati_residuals)
from sphereppw.radial import BallSpec

CASES = [(2, 1.0), (3, 0.8), (2, 0.3), (4, 1.4)]


@pytest.fixture(scope="module")
def profiles():
    return {case: build_profile(BallSpec(*case), 401) for case in CASES}


def test_hemisphere_is_explicit():
    prof = build_profile(BallSpec(2, math.pi / 2), 401)
    dev = hemisphere_deviation(prof)
    assert max(dev.values()) < 1e-9
    assert prof.g_theta1 == pytest.approx(1.0, abs=1e-10)
    assert p_structure_check(prof)["checks"]["r_identically_zero"]


@pytest.mark.parametrize("case", CASES)
def test_structure_checks(profiles, case):
    prof = profiles[case]
    p_check = p_structure_check(prof)
    q_check = q_bounds_check(prof)
    assert p_check["passed"], p_check
    assert q_check["passed"], q_check
    assert max(riccati_residuals(prof)) < 1e-6


@pytest.mark.parametrize("case", CASES)
def test_g_normalized_at_pole(profiles, case):
    prof = profiles[case]
    t = np.array([1e-6, 1e-5])
    np.testing.assert_allclose(prof.evaluate_inside(t)["g"] / t, 1.0, rtol=1e-8)
    np.testing.assert_allclose(g_from_q(prof), prof.g, rtol=1e-7)


@pytest.mark.parametrize("case", CASES)
def test_interpolant_matches_direct_evaluation(profiles, case, rng):
    prof = profiles[case]
    interp = prof.interpolant()
    t1 = prof.spec.theta1
    t = np.sort(rng.uniform(1e-4, t1 * (1 - 1e-4), 200))
    direct = prof.evaluate_inside(t)
    np.testing.assert_allclose(interp.g(t), direct["g"], rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(interp.B(t), direct["B"], rtol=1e-9, atol=1e-12)
    beyond = np.linspace(0.0, math.pi, 50)
    g_ext, B_ext = prof.extended(beyond)
    np.testing.assert_allclose(interp.g(beyond), g_ext, atol=1e-9)
    np.testing.assert_allclose(interp.B(beyond), B_ext, rtol=1e-8)
    np.testing.assert_allclose(interp.gtilde(beyond), prof.gtilde(beyond), atol=1e-8)


def test_extension_is_even_about_equator(profiles):
    prof = profiles[(2, 1.0)]
    t = np.linspace(0.0, math.pi / 2, 33)
    # pi - (pi - t) rounds, so equality is up to a few ulps
    np.testing.assert_allclose(prof.extended_g(t), prof.extended_g(math.pi - t), atol=1e-14)
    assert prof.gtilde(np.array([0.0, math.pi])).tolist() == [1.0, 1.0]
    with pytest.raises(ValueError):
        prof.extended([3.5])


def test_beyond_hemisphere_rejected():
    with pytest.raises(ValueError):
        build_profile(BallSpec(2, 1.8))
    with pytest.raises(ValueError):
        build_profile(BallSpec(2, 1.0), grid=[0.5, 0.4])


def test_csv_layout(profiles):
    lines = profiles[(2, 0.3)].to_csv().splitlines()
    assert lines[0] == ",".join(PROFILE_COLUMNS)
    assert len(lines) == 402
    assert len(lines[1].split(",")) == len(PROFILE_COLUMNS)
