"""Triangulated domains on the unit 2-sphere.

Caps and perturbed caps are polar-star domains: a Delaunay triangulation of
concentric rings in the unit disk is pushed forward by

    (rho, phi) -> (theta, phi) = (rho R(phi), phi),  R(phi) = theta1 (1 + a cos(k phi))

so boundary vertices sit exactly on the curve. Convex geodesic polygons are
meshed in the gnomonic chart, where great-circle arcs are straight lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import Delaunay

class MeshError(ValueError):
    """Invalid or degenerate mesh or domain description."""


class HemisphereViolation(MeshError):
    """Domain is not inside an open hemisphere."""


def spherical_to_cartesian(theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s = np.sin(theta)
    return np.stack([s * np.cos(phi), s * np.sin(phi), np.cos(theta)], axis=-1)


def triangle_excess(a, b, c):
    """Area of spherical triangles (rows of a, b, c) by the Van Oosterom-Strackee formula."""
    num = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) \
        + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(num, den)


def arc_length(a, b):
    """Great-circle distance between rows of a and b."""
    return np.arctan2(np.linalg.norm(np.cross(a, b), axis=-1), np.einsum("ij,ij->i", a, b))


def rotation_to_pole(y):
    """Rotation matrix whose last row is the unit vector y (so R y = e3)."""
    y = np.asarray(y, dtype=float)
    y = y / np.linalg.norm(y)
    helper = np.array([1.0, 0.0, 0.0]) if abs(y[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - np.dot(helper, y) * y
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(y, e1)
    return np.vstack([e1, e2, y])


def rotation_matrix(axis, angle):
    """Right-handed rotation about ``axis`` by ``angle`` (Rodrigues)."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K


@dataclass(frozen=True)
class SphericalDomainMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    provenance: str = ""
    _edges: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        t = np.array(self.triangles, dtype=np.int64)
        b = np.unique(np.asarray(self.boundary, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3 or t.ndim != 2 or t.shape[1] != 3 or len(t) == 0:
            raise MeshError("vertices must be (N, 3) and triangles (M, 3)")
        if t.min() < 0 or t.max() >= len(v):
            raise MeshError("triangle index out of range")
        norms = np.linalg.norm(v, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise MeshError("vertices must lie on the unit sphere")
        # rows already unit up to rounding are kept, so reloading a saved mesh is exact
        v = v / np.where(np.abs(norms - 1.0) > 4 * np.finfo(float).eps, norms, 1.0)[:, None]
        for name, arr in (("vertices", v), ("triangles", t), ("boundary", b)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        det = np.einsum("ij,ij->i", v[t[:, 0]], np.cross(v[t[:, 1]], v[t[:, 2]]))
        if np.any(det <= 0):
            raise MeshError("triangles must be non-degenerate and counterclockwise seen from outside")
        object.__setattr__(self, "_edges", self._edge_table())
        used = np.unique(np.array(self._edges["boundary"]).ravel()) \
            if self._edges["boundary"] else np.array([], dtype=np.int64)
        if not np.array_equal(used, b):
            raise MeshError("boundary flags disagree with the free edges of the triangulation")

    def _edge_table(self):
        t = self.triangles
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        key = np.sort(directed, axis=1)
        uniq, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        if np.any(counts > 2):
            raise MeshError("an edge is shared by more than two triangles")
        # interior edges must appear once in each direction
        inverse = inverse.ravel()
        forward = directed[:, 0] < directed[:, 1]
        per_edge_forward = np.bincount(inverse, weights=forward, minlength=len(uniq))
        interior = counts == 2
        if np.any(per_edge_forward[interior] != 1):
            raise MeshError("inconsistent triangle orientation")
        free = np.flatnonzero(counts == 1)
        first = np.full(len(uniq), -1)
        first[inverse[::-1]] = np.arange(len(inverse))[::-1]
        boundary = [tuple(directed[first[e]]) for e in free]
        return {"edges": uniq, "boundary": boundary}

    @property
    def interior(self) -> np.ndarray:
        mask = np.ones(len(self.vertices), dtype=bool)
        mask[self.boundary] = False
        return np.flatnonzero(mask)

    def boundary_edges(self) -> np.ndarray:
        """Directed boundary edges (domain on the left)."""
        return np.array(self._edges["boundary"], dtype=np.int64).reshape(-1, 2)

    def corners(self):
        v, t = self.vertices, self.triangles
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    def spherical_areas(self) -> np.ndarray:
        return triangle_excess(*self.corners())

    def flat_areas(self) -> np.ndarray:
        a, b, c = self.corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def area(self) -> float:
        return float(math.fsum(self.spherical_areas()))

    def boundary_length(self) -> float:
        e = self.boundary_edges()
        return float(math.fsum(arc_length(self.vertices[e[:, 0]], self.vertices[e[:, 1]])))

    def max_edge(self) -> float:
        e = self._edges["edges"]
        return float(np.max(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)))

    def rotated(self, R) -> "SphericalDomainMesh":
        """Mesh with every vertex mapped x -> R x (R proper orthogonal)."""
        R = np.asarray(R, dtype=float)
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-12) or np.linalg.det(R) < 0:
            raise MeshError("R must be a rotation")
        return SphericalDomainMesh(self.vertices @ R.T, self.triangles, self.boundary,
                                   self.provenance)

    def hemisphere_margin(self) -> tuple[float, np.ndarray]:
        """A direction d with the margin min_i d . x_i.

        The vertex centroid is tried first and a small linear program is the
        fallback. A positive margin means every vertex lies in the open
        hemisphere centred at d.
        """
        v = self.vertices
        d0 = v.mean(axis=0)
        if np.linalg.norm(d0) > 0:
            d0 = d0 / np.linalg.norm(d0)
            m0 = float(np.min(v @ d0))
            if m0 > 0:
                return m0, d0
        # maximize t subject to d . x_i >= t, |d_k| <= 1
        res = linprog(c=[0, 0, 0, -1.0], A_ub=np.hstack([-v, np.ones((len(v), 1))]),
                      b_ub=np.zeros(len(v)), bounds=[(-1, 1)] * 3 + [(None, 1)])
        d = res.x[:3]
        if res.status != 0 or np.linalg.norm(d) == 0:
            return -1.0, np.array([0.0, 0.0, 1.0])
        d = d / np.linalg.norm(d)
        return float(np.min(v @ d)), d

    def check_hemisphere(self):
        margin, _ = self.hemisphere_margin()
        if margin <= 0:
            raise HemisphereViolation("domain is not contained in an open hemisphere")

    def to_text(self) -> str:
        lines = [f"# {self.provenance}"] if self.provenance else []
        lines += [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in self.vertices]
        lines += [f"t {i} {j} {k}" for i, j, k in self.triangles]
        lines += [f"b {i}" for i in self.boundary]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SphericalDomainMesh":
        verts, tris, bnd, prov = [], [], [], ""
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                prov = prov or line[1:].strip()
                continue
            tag, *rest = line.split()
            try:
                if tag == "v" and len(rest) == 3:
                    verts.append([float(x) for x in rest])
                elif tag == "t" and len(rest) == 3:
                    tris.append([int(x) for x in rest])
                elif tag == "b" and len(rest) == 1:
                    bnd.append(int(rest[0]))
                else:
                    raise ValueError
            except ValueError:
                raise MeshError(f"line {lineno}: cannot parse {raw!r}") from None
        return cls(np.array(verts), np.array(tris), np.array(bnd, dtype=np.int64), prov)


def _orient(vertices, triangles):
    v = vertices
    det = np.einsum("ij,ij->i", v[triangles[:, 0]],
                    np.cross(v[triangles[:, 1]], v[triangles[:, 2]]))
    flip = det < 0
    triangles = triangles.copy()
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    return triangles


def _disk_rings(n_rings: int, boundary_points: int):
    """Unit-disk points on concentric rings, ring j holding about 2 pi j points."""
    pts = [np.zeros((1, 2))]
    rho_all, phi_all = [np.zeros(1)], [np.zeros(1)]
    for j in range(1, n_rings + 1):
        rho = j / n_rings
        count = boundary_points if j == n_rings else max(6, round(2 * math.pi * j))
        # stagger alternate rings to keep triangles well shaped
        phi = 2 * math.pi * (np.arange(count) + 0.5 * (j % 2)) / count
        rho_all.append(np.full(count, rho))
        phi_all.append(phi)
        pts.append(np.column_stack([rho * np.cos(phi), rho * np.sin(phi)]))
    return np.concatenate(rho_all), np.concatenate(phi_all), np.vstack(pts)


def star_domain(radius_fn, h: float, provenance: str, max_radius: float) -> SphericalDomainMesh:
    """Mesh of {theta < radius_fn(phi)} around the north pole with target edge ``h``."""
    n_rings = max(2, math.ceil(max_radius / h))
    phis = np.linspace(0, 2 * math.pi, 2048, endpoint=False)
    r = radius_fn(phis)
    dr = np.gradient(r, phis)
    perimeter = float(np.mean(np.sqrt(np.sin(r) ** 2 + dr**2)) * 2 * math.pi)
    boundary_points = max(8, math.ceil(perimeter / h))
    rho, phi, disk = _disk_rings(n_rings, boundary_points)
    tri = Delaunay(disk).simplices.astype(np.int64)
    theta = rho * radius_fn(phi)
    verts = spherical_to_cartesian(theta, phi)
    tris = _orient(verts, tri)
    boundary = np.flatnonzero(np.isclose(rho, 1.0))
    return SphericalDomainMesh(verts, tris, boundary, provenance)


def cap(theta1: float, h: float) -> SphericalDomainMesh:
    if not 0 < theta1 < math.pi:
        raise MeshError("cap radius must lie in (0, pi)")
    return star_domain(lambda phi: np.full_like(phi, theta1), h,
                       f"cap theta1={theta1!r} h={h!r}", theta1)


def perturbed_cap(theta1: float, amplitude: float, wavenumber: int, h: float) -> SphericalDomainMesh:
    if not 0 < theta1 < math.pi:
        raise MeshError("cap radius must lie in (0, pi)")
    if abs(amplitude) >= 1:
        raise MeshError("|amplitude| must be below 1")
    if wavenumber < 0 or int(wavenumber) != wavenumber:
        raise MeshError("wavenumber must be a nonnegative integer")
    rmax = theta1 * (1 + abs(amplitude))
    if rmax >= math.pi:
        raise MeshError("perturbed radius reaches the south pole")
    return star_domain(lambda phi: theta1 * (1 + amplitude * np.cos(wavenumber * phi)), h,
                       f"perturbed_cap theta1={theta1!r} amplitude={amplitude!r} "
                       f"wavenumber={wavenumber} h={h!r}", rmax)


def geodesic_polygon(corners, h: float) -> SphericalDomainMesh:
    """Convex geodesic polygon with the given unit-vector corners, counterclockwise."""
    c = np.asarray(corners, dtype=float)
    if c.ndim != 2 or c.shape[1] != 3 or len(c) < 3:
        raise MeshError("need at least three corners as 3-vectors")
    c = c / np.linalg.norm(c, axis=1)[:, None]
    if np.min(arc_length(c, np.roll(c, -1, axis=0))) < 1e-9:
        raise MeshError("repeated consecutive corners")
    centre = c.sum(axis=0)
    if np.linalg.norm(centre) < 1e-12 or np.min(c @ centre) <= 0:
        raise MeshError("polygon must lie in an open hemisphere around its centroid")
    centre /= np.linalg.norm(centre)
    R = rotation_to_pole(centre)
    local = c @ R.T
    plane = local[:, :2] / local[:, 2:3]
    edges = np.roll(plane, -1, axis=0) - plane
    cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
    if np.any(cross <= 0):
        raise MeshError("corners must form a strictly convex counterclockwise polygon")
    # chart distances never fall below geodesic ones, so spacing h in the chart suffices
    hp = h
    boundary = []
    for p, e in zip(plane, edges):
        k = max(1, math.ceil(np.linalg.norm(e) / hp))
        boundary.append(p + np.outer(np.arange(k) / k, e))
    boundary = np.vstack(boundary)
    lo, hi = plane.min(axis=0), plane.max(axis=0)
    gx = np.arange(lo[0], hi[0] + hp, hp)
    gy = np.arange(lo[1], hi[1] + hp * math.sqrt(3) / 2, hp * math.sqrt(3) / 2)
    X, Y = np.meshgrid(gx, gy)
    X = X + 0.5 * hp * (np.arange(len(gy))[:, None] % 2)
    cand = np.column_stack([X.ravel(), Y.ravel()])
    # keep lattice points at least ~h/2 inside every edge
    normals = np.column_stack([-edges[:, 1], edges[:, 0]]) / np.linalg.norm(edges, axis=1)[:, None]
    dist = np.min(np.einsum("pkj,kj->pk", cand[:, None, :] - plane[None, :, :], normals), axis=1)
    inner = cand[dist > 0.5 * hp]
    pts = np.vstack([boundary, inner])
    tri = Delaunay(pts).simplices.astype(np.int64)
    local3 = np.column_stack([pts, np.ones(len(pts))])
    verts = (local3 / np.linalg.norm(local3, axis=1)[:, None]) @ R
    tris = _orient(verts, tri)
    # drop slivers Delaunay may create along collinear boundary points
    a, b, cc = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    det = np.einsum("ij,ij->i", a, np.cross(b, cc))
    tris = tris[det > 1e-14 * h * h]
    return SphericalDomainMesh(verts, tris, np.arange(len(boundary)),
                               f"geodesic_polygon corners={len(c)} h={h!r}")


def make_domain(kind: str, h: float, *, check_hemisphere: bool = True, rotation=None,
                **params) -> SphericalDomainMesh:
    """Build a mesh of ``kind`` in {'cap', 'perturbed_cap', 'geodesic_polygon'}."""
    if h <= 0:
        raise MeshError("h must be positive")
    builders = {"cap": cap, "perturbed_cap": perturbed_cap, "geodesic_polygon": geodesic_polygon}
    if kind not in builders:
        raise MeshError(f"unknown domain kind {kind!r}")
    mesh = builders[kind](h=h, **params)
    if rotation is not None:
        mesh = mesh.rotated(rotation)
    if check_hemisphere:
        mesh.check_hemisphere()
    return mesh
