import math

import numpy as np
import pytest

from sphereppw.mesh import (HemisphereViolation, MeshError, SphericalDomainMesh, arc_length,
                            make_domain, rotation_matrix, rotation_to_pole,
                            spherical_to_cartesian, triangle_excess)
from sphereppw.rearrangement import cap_boundary, cap_volume

TRIANGLE = spherical_to_cartesian([0.9, 0.7, 1.0], [0.0, 2.3, 4.0])


def test_octant_area_and_arcs():
    e = np.eye(3)
    assert triangle_excess(e[:1], e[1:2], e[2:])[0] == pytest.approx(math.pi / 2, rel=1e-15)
    assert arc_length(e[:1], e[1:2])[0] == pytest.approx(math.pi / 2)


def test_rotations():
    y = np.array([0.3, -0.5, 0.8])
    R = rotation_to_pole(y)
    np.testing.assert_allclose(R @ (y / np.linalg.norm(y)), [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-15)
    assert np.linalg.det(R) == pytest.approx(1.0)
    Q = rotation_matrix([0, 0, 1], math.pi / 2)
    np.testing.assert_allclose(Q @ [1, 0, 0], [0, 1, 0], atol=1e-15)


@pytest.mark.parametrize("theta1", [0.5, 1.0, 1.4])
def test_cap_geometry_converges(theta1):
    mesh = make_domain("cap", 0.04, theta1=theta1)
    # the polygonal boundary cuts a little off the cap
    assert mesh.area() == pytest.approx(cap_volume(2, theta1), rel=2e-3)
    assert mesh.area() < cap_volume(2, theta1)
    assert mesh.boundary_length() == pytest.approx(cap_boundary(2, theta1), rel=1e-3)
    assert mesh.max_edge() < 0.04 * 1.5


def test_zero_amplitude_is_the_cap():
    a = make_domain("cap", 0.08, theta1=1.0)
    b = make_domain("perturbed_cap", 0.08, theta1=1.0, amplitude=0.0, wavenumber=3)
    np.testing.assert_allclose(a.vertices, b.vertices, atol=1e-15)


def test_polygon_mesh():
    mesh = make_domain("geodesic_polygon", 0.05, corners=TRIANGLE)
    # corners are mesh vertices on the boundary
    for c in TRIANGLE:
        assert np.min(np.linalg.norm(mesh.vertices[mesh.boundary] - c, axis=1)) < 1e-12
    exact = triangle_excess(TRIANGLE[:1], TRIANGLE[1:2], TRIANGLE[2:])[0]
    assert mesh.area() == pytest.approx(exact, rel=1e-12)


def test_polygon_rejections():
    with pytest.raises(MeshError):
        make_domain("geodesic_polygon", 0.1, corners=TRIANGLE[::-1])
    with pytest.raises(MeshError):
        make_domain("geodesic_polygon", 0.1, corners=np.vstack([TRIANGLE, TRIANGLE[-1:]]))
    with pytest.raises(MeshError):
        make_domain("geodesic_polygon", 0.1, corners=TRIANGLE[:2])


def test_builder_rejections():
    with pytest.raises(MeshError):
        make_domain("cap", -1.0, theta1=1.0)
    with pytest.raises(MeshError):
        make_domain("torus", 0.1)
    with pytest.raises(MeshError):
        make_domain("perturbed_cap", 0.1, theta1=1.0, amplitude=1.2, wavenumber=2)


def test_hemisphere_check():
    with pytest.raises(HemisphereViolation):
        make_domain("cap", 0.2, theta1=1.8)
    mesh = make_domain("cap", 0.2, theta1=1.8, check_hemisphere=False)
    assert mesh.hemisphere_margin()[0] <= 0


def test_text_round_trip():
    mesh = make_domain("perturbed_cap", 0.1, theta1=0.8, amplitude=0.1, wavenumber=2)
    back = SphericalDomainMesh.from_text(mesh.to_text())
    np.testing.assert_array_equal(back.vertices, mesh.vertices)
    np.testing.assert_array_equal(back.triangles, mesh.triangles)
    np.testing.assert_array_equal(back.boundary, mesh.boundary)
    assert back.provenance == mesh.provenance
    with pytest.raises(MeshError):
        SphericalDomainMesh.from_text("v 0 0 1\nq 1 2 3\n")


def test_validation_catches_bad_meshes():
    mesh = make_domain("cap", 0.2, theta1=0.8)
    with pytest.raises(MeshError):
        SphericalDomainMesh(mesh.vertices, mesh.triangles[:, ::-1], mesh.boundary)
    with pytest.raises(MeshError):
        SphericalDomainMesh(mesh.vertices, mesh.triangles, mesh.boundary[:-1])
    with pytest.raises(MeshError):
        SphericalDomainMesh(2 * mesh.vertices, mesh.triangles, mesh.boundary)
    with pytest.raises(MeshError):
        mesh.rotated(np.diag([1.0, 1.0, -1.0]))


def test_rotation_preserves_geometry():
    mesh = make_domain("cap", 0.1, theta1=0.8, rotation=rotation_matrix([1, 2, 3], 0.7))
    assert mesh.area() == pytest.approx(make_domain("cap", 0.1, theta1=0.8).area(), rel=1e-13)
