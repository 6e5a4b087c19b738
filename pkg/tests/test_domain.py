import math

import numpy as np
import pytest

from sphereppw.ball import spectral_pair
from sphereppw.domain import (EigensolverError, NonConvergence, assemble, ball_for,
                              center_of_mass, domain_pair, gap_bound, ppw_check,
                              quadrature_cells, solve_dirichlet, study)
from sphereppw.mesh import (SphericalDomainMesh, make_domain, rotation_matrix,
                            spherical_to_cartesian)
from sphereppw.radial import BallSpec

ROTATION = rotation_matrix([0.3, -1.0, 0.5], 1.1)


def test_assembly_annihilates_constants():
    mesh = make_domain("cap", 0.1, theta1=1.0)
    K, M = assemble(mesh)
    assert abs(K @ np.ones(K.shape[0])).max() < 1e-12
    assert abs(K - K.T).max() < 1e-15
    assert M.sum() == pytest.approx(mesh.flat_areas().sum(), rel=1e-14)


def test_quadrature_cells_integrate_area():
    mesh = make_domain("perturbed_cap", 0.05, theta1=1.0, amplitude=0.1, wavenumber=2)
    cells = quadrature_cells(mesh)
    assert cells.weights.sum() == pytest.approx(mesh.area(), rel=1e-9)
    np.testing.assert_allclose(np.linalg.norm(cells.points, axis=1), 1.0, atol=1e-15)
    # linear interpolation reproduces the coordinate functions up to projection
    z = cells.interpolate(mesh, mesh.vertices[:, 2])
    assert np.max(np.abs(z - cells.points[:, 2])) < 0.05**2


def test_cap_eigenvalues_converge_at_second_order():
    exact = spectral_pair(BallSpec(2, 1.0))
    (_, fine), (_, coarse) = domain_pair("cap", 0.04, theta1=1.0)
    for name, ref in (("lambda1", exact.lambda1), ("lambda2", exact.lambda2)):
        st = study(getattr(fine, name), getattr(coarse, name))
        err_f = abs(st.fine - ref)
        err_c = abs(st.coarse - ref)
        assert 3.0 < err_c / err_f < 5.0
        assert abs(st.extrapolated - ref) < 0.2 * err_f


def test_first_eigenfunction(cap_spectrum):
    u = cap_spectrum.u1
    mesh = cap_spectrum.mesh
    assert np.all(u[mesh.interior] > 0) and np.all(u[mesh.boundary] == 0)
    assert cap_spectrum.cells.integrate(cap_spectrum.u1_cells() ** 2) == pytest.approx(1.0,
                                                                                       rel=1e-12)
    # radial: larger at the pole than near the rim
    z = mesh.vertices[:, 2]
    assert u[np.argmax(z)] == pytest.approx(u.max(), rel=1e-2)


def test_level_measure_is_equimeasurable(cap_spectrum):
    dm = cap_spectrum.u1_level_measure()
    assert dm.total_measure == pytest.approx(cap_spectrum.mesh.area(), rel=1e-12)
    assert dm.integral(2) == pytest.approx(1.0, rel=1e-3)


def test_rotation_invariance(cap_spectrum):
    rotated = solve_dirichlet(cap_spectrum.mesh.rotated(ROTATION))
    assert rotated.lambda1 == pytest.approx(cap_spectrum.lambda1, rel=1e-10)
    assert rotated.lambda2 == pytest.approx(cap_spectrum.lambda2, rel=1e-10)


def test_solver_guards():
    with pytest.raises(ValueError):
        solve_dirichlet(make_domain("cap", 0.2, theta1=1.0), k=3)
    # a hexagon fan has a single interior vertex
    rim = spherical_to_cartesian(np.full(6, 0.5), np.arange(6) * math.pi / 3)
    fan = SphericalDomainMesh(np.vstack([[0, 0, 1], rim]),
                              [[0, 1 + i, 1 + (i + 1) % 6] for i in range(6)], np.arange(1, 7))
    with pytest.raises(EigensolverError):
        solve_dirichlet(fan)


def test_center_of_cap_is_its_pole(cap_spectrum):
    gtilde = ball_for(cap_spectrum).interpolant().gtilde
    res = center_of_mass(cap_spectrum.cells, cap_spectrum.u1_cells(), gtilde)
    np.testing.assert_allclose(res.y0, [0, 0, 1], atol=1e-6)
    assert res.max_residual < 1e-8 * res.mass


def test_center_is_equivariant(perturbed_spectrum):
    spec = perturbed_spectrum
    gtilde = ball_for(spec).interpolant().gtilde
    u = spec.u1_cells()
    base = center_of_mass(spec.cells, u, gtilde)
    turned = center_of_mass(spec.cells.rotated(ROTATION), u, gtilde)
    np.testing.assert_allclose(turned.y0, ROTATION @ base.y0, atol=1e-8)


def test_center_methods_agree_on_asymmetric_domain():
    spec = solve_dirichlet(make_domain("perturbed_cap", 0.05, theta1=1.0, amplitude=0.1,
                                       wavenumber=1))
    gtilde = ball_for(spec).interpolant().gtilde
    u = spec.u1_cells()
    fixed = center_of_mass(spec.cells, u, gtilde, method="fixed-point")
    grid = center_of_mass(spec.cells, u, gtilde, method="grid-refine")
    assert fixed.method == "fixed-point" and grid.method == "grid-refine"
    assert np.linalg.norm(fixed.y0 - grid.y0) < 1e-6
    # the pole is pushed toward the bulge at phi = 0
    assert fixed.y0[0] > 1e-3


def test_center_nonconvergence_is_reported(perturbed_spectrum):
    spec = perturbed_spectrum
    gtilde = ball_for(spec).interpolant().gtilde
    with pytest.raises(NonConvergence) as info:
        center_of_mass(spec.cells, spec.u1_cells(), gtilde, method="fixed-point", max_iter=1,
                       start=[1.0, 0.0, 0.3])
    assert info.value.best.max_residual > 0


def test_gap_bound_chain_on_cap(cap_spectrum):
    rep = gap_bound(cap_spectrum)
    assert rep.theta1_ball == pytest.approx(1.0, abs=1e-3)
    reflection = [link for link in rep.links if link.relation == "=="]
    assert all(abs(link.margin) <= 1e-12 * abs(link.lhs) for link in reflection)
    assert rep.chain_holds(1e-3)
    assert abs(rep.ball_margin) < 0.05


def test_gap_bound_on_perturbed_cap(perturbed_spectrum):
    rep = gap_bound(perturbed_spectrum)
    assert rep.rayleigh_margin > 0
    assert rep.ball_margin > 0
    assert rep.chain_holds(1e-3)
    assert set(rep.as_dict()) >= {"bound", "y0", "chain", "center_of_mass"}


def test_ppw_margins_on_perturbed_cap(perturbed_spectrum):
    rep = ppw_check(perturbed_spectrum.mesh, perturbed_spectrum)
    margins = rep.margins
    assert margins["gap_vs_equal_lambda1_cap"] > 0.1
    assert margins["sperner"] > 0
    assert margins["ratio_vs_equal_area_cap"] > 0
    assert margins["radius_order"] > 0


def test_mesh_study_arithmetic():
    st = study(1.0, 1.3)
    assert st.error_estimate == pytest.approx(0.1)
    assert st.extrapolated == pytest.approx(0.9)
