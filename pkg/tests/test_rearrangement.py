import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphereppw.mesh import make_domain
from sphereppw.rearrangement import (DomainMeasure, cap_boundary, cap_isoperimetric_defect,
                                     cap_volume, cap_volume_quadrature, decreasing_rearrangement,
                                     increasing_rearrangement, integrate_step_against,
                                     isoperimetric_check_s2, sphere_volume,
                                     step_product_integral, symmetric_rearrangement,
                                     theta_of_volume, unit_ball_volume)

values = st.floats(0.0, 1e6, allow_nan=False, allow_infinity=False)
measures = st.floats(1e-6, 1e3, allow_nan=False, allow_infinity=False)
pairs = st.lists(st.tuples(values, measures), min_size=1, max_size=60)


@given(pairs)
@settings(max_examples=200, deadline=None)
def test_equimeasurable(data):
    dm = DomainMeasure.from_pairs(data)
    sharp = decreasing_rearrangement(dm)
    for t in {v for v, _ in data} | {-1.0, 0.5}:
        assert sharp.distribution(t) == pytest.approx(dm.distribution(t), rel=1e-14, abs=0)
    assert sharp.total == pytest.approx(dm.total_measure, rel=1e-14)
    assert sharp.is_monotone()


@given(pairs, st.sampled_from([1.0, 2.0, 0.5]))
@settings(max_examples=200, deadline=None)
def test_norms_preserved(data, power):
    dm = DomainMeasure.from_pairs(data)
    for profile in (decreasing_rearrangement(dm), increasing_rearrangement(dm)):
        assert profile.integral(power) == pytest.approx(dm.integral(power), rel=1e-14)


@given(st.integers(2, 6), st.floats(0.0, 1.0))
@settings(max_examples=200, deadline=None)
def test_volume_round_trip(n, frac):
    s = frac * sphere_volume(n)
    r = theta_of_volume(n, s)
    assert cap_volume(n, r) == pytest.approx(s, rel=1e-12, abs=1e-14)


def test_ties_merge():
    dm = DomainMeasure([1.0, 2.0, 1.0, 2.0], [0.25, 0.5, 0.75, 1.0])
    sharp = decreasing_rearrangement(dm)
    assert sharp.values.tolist() == [2.0, 1.0]
    assert sharp.widths.tolist() == [1.5, 1.0]
    assert sharp(0.0) == 2.0 and sharp(1.5) == 1.0
    with pytest.raises(ValueError):
        sharp(2.6)


def test_increasing_is_mirror_image():
    dm = DomainMeasure([3.0, 1.0, 2.0], [1.0, 2.0, 0.5])
    inc = increasing_rearrangement(dm)
    dec = decreasing_rearrangement(dm)
    assert inc.values.tolist() == dec.values[::-1].tolist()
    assert inc.is_monotone() and not inc.decreasing


def test_measure_validation():
    with pytest.raises(ValueError):
        DomainMeasure([-1.0], [1.0])
    with pytest.raises(ValueError):
        DomainMeasure([1.0], [0.0])
    with pytest.raises(ValueError):
        DomainMeasure([1.0, 2.0], [1.0])


def test_csv_round_trip(rng):
    dm = DomainMeasure(rng.uniform(0, 1, 50), rng.uniform(0.1, 1, 50))
    back = DomainMeasure.from_csv(dm.to_csv())
    np.testing.assert_array_equal(back.values, dm.values)
    np.testing.assert_array_equal(back.measures, dm.measures)
    with pytest.raises(ValueError):
        DomainMeasure.from_csv("value,measure\n1,2,3\n")


def test_profile_csv_ends_at_total():
    sharp = decreasing_rearrangement(DomainMeasure([1.0, 2.0], [0.5, 0.25]))
    last = sharp.to_csv().splitlines()[-1]
    assert last == "0.75,1"


@pytest.mark.parametrize("n", [2, 3, 4, 5, 7])
def test_cap_volume_against_quadrature(n):
    for r in (0.1, 1.0, 2.5, math.pi):
        assert cap_volume(n, r) == pytest.approx(cap_volume_quadrature(n, r), rel=1e-13)


def test_cap_volume_small_radius_and_derivative():
    n, r = 4, 1e-3
    assert cap_volume(n, r) == pytest.approx(unit_ball_volume(n) * r**n, rel=1e-6)
    h = 1e-6
    deriv = (cap_volume(n, 1.2 + h) - cap_volume(n, 1.2 - h)) / (2 * h)
    assert deriv == pytest.approx(cap_boundary(n, 1.2), rel=1e-8)
    assert sphere_volume(2) == pytest.approx(4 * math.pi)
    assert cap_volume(2, 1.0, rho=2.0) == pytest.approx(4 * cap_volume(2, 0.5))


def test_symmetric_rearrangement_is_radial_decreasing():
    dm = DomainMeasure([1.0, 3.0, 2.0], [0.5, 0.25, 0.75])
    star = symmetric_rearrangement(dm, 2)
    assert star.support_radius == pytest.approx(theta_of_volume(2, 1.5))
    assert star(0.0) == 3.0
    r = np.linspace(0, math.pi, 50)
    assert np.all(np.diff(star(r)) <= 0)
    assert star(math.pi) == 0.0


def test_step_integrals():
    a = decreasing_rearrangement(DomainMeasure([2.0, 1.0], [1.0, 1.0]))
    b = increasing_rearrangement(DomainMeasure([1.0, 3.0], [0.5, 1.5]))
    # a = 2 on [0,1), 1 on [1,2); b = 1 on [0,.5), 3 on [.5,2)
    assert step_product_integral(a, b) == pytest.approx(2 * 0.5 + 6 * 0.5 + 3 * 1.0)
    assert integrate_step_against(a, lambda s: s) == pytest.approx(2 * 0.5 + 1 * 1.5)
    with pytest.raises(ValueError):
        step_product_integral(a, decreasing_rearrangement(DomainMeasure([1.0], [3.0])))


def test_isoperimetric_defect():
    for r in (0.3, 1.0, 2.0):
        assert abs(cap_isoperimetric_defect(r)["defect"]) < 1e-12
    mesh = make_domain("perturbed_cap", 0.05, theta1=1.0, amplitude=0.1, wavenumber=3)
    iso = isoperimetric_check_s2(mesh)
    assert iso["defect"] > 0
