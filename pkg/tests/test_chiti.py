import json
import math

import numpy as np
import pytest

from sphereppw.chiti import (MultipleCrossings, chiti_crossing, chiti_inequality_residual,
                             radial_measure, v1_volume_profile)
from sphereppw.domain import ball_for
from sphereppw.radial import BallSpec, ModeParams, eval_um

SPEC = BallSpec(2, 1.0)


@pytest.fixture(scope="module")
def v1():
    return v1_volume_profile(SPEC)


def _mode(spec, lam):
    return lambda t: np.abs(eval_um(ModeParams(spec.n, 0, lam), t).values)


def test_volume_profile(v1):
    assert v1.residual < 1e-8
    assert v1(0.0) == 1.0
    assert v1(v1.volume) == 0.0 and v1(2 * v1.volume) == 0.0
    assert np.all(np.diff(v1(np.linspace(0, v1.volume, 200))) < 0)


def test_hemisphere_profile_is_linear_in_volume():
    # y1 = cos t and s = 2 pi (1 - cos t)
    spec = BallSpec(2, math.pi / 2)
    v = v1_volume_profile(spec)
    s = np.linspace(0, 2 * math.pi, 41)
    np.testing.assert_allclose(v(s), 1 - s / (2 * math.pi), atol=1e-12)
    assert v.l2_squared == pytest.approx(2 * math.pi / 3, rel=1e-12)


@pytest.mark.parametrize("spec", [SPEC, BallSpec(3, 0.7), BallSpec(2, 1.5)])
def test_ball_data_is_identical(spec):
    rep = chiti_crossing(radial_measure(spec), spec)
    assert rep.verdict == "identical" and rep.passed
    ineq = chiti_inequality_residual(radial_measure(spec), spec)
    assert abs(ineq.max_violation) < 1e-4


def test_steepened_profile_fails(v1):
    lam = v1.lambda1
    steep = radial_measure(SPEC, lambda t: _mode(SPEC, lam)(t) ** 2)
    rep = chiti_crossing(steep, SPEC, v=v1)
    assert rep.verdict == "wrong-pattern" and not rep.passed
    assert rep.u_sharp_at_zero > rep.v_at_zero
    assert chiti_inequality_residual(steep, SPEC, v=v1).max_violation > 1e-3


def test_flattened_profile_crosses_once(v1):
    lam = v1.lambda1
    flat = radial_measure(SPEC, lambda t: np.sqrt(_mode(SPEC, lam)(t)))
    rep = chiti_crossing(flat, SPEC, v=v1)
    assert rep.verdict == "one-crossing" and rep.crossings == 1
    assert 0 < rep.crossing_volume < v1.volume
    assert 0 < rep.crossing_radius < SPEC.theta1


def test_oscillation_gives_multiple_crossings(v1):
    lam = v1.lambda1
    wavy = radial_measure(SPEC, lambda t: _mode(SPEC, lam)(t)
                          * (1 + 0.05 * np.cos(8 * math.pi * t / SPEC.theta1)))
    with pytest.raises(MultipleCrossings) as info:
        chiti_crossing(wavy, SPEC, v=v1)
    assert info.value.report.verdict == "multiple"
    assert info.value.report.crossings > 1


def test_domain_eigenfunction_crosses_once(perturbed_spectrum):
    spec = ball_for(perturbed_spectrum).spec
    dm = perturbed_spectrum.u1_level_measure()
    rep = chiti_crossing(dm, spec)
    assert rep.verdict == "one-crossing" and rep.passed
    ineq = chiti_inequality_residual(dm, spec, lambda1=perturbed_spectrum.lambda1)
    assert len(ineq.violations) == 100 and ineq.edges[-1] == 1.0


def test_report_serialization(v1):
    rep = chiti_crossing(radial_measure(SPEC, cells=500), SPEC, v=v1)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "s,u_sharp,v1" and len(lines) == 501
    assert json.loads(rep.to_json())["verdict"] == rep.verdict
