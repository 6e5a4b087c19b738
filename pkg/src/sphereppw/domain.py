"""Dirichlet eigenpairs of spherical domains and the gap-bound pipeline.

The discretization is P1 finite elements on the flat (chordal) triangles of a
``SphericalDomainMesh``. Integrals over the curved domain use a degree-4
triangle rule whose points are projected radially onto the sphere, each
weight carrying the exact Jacobian of that projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .ball import ball_radius_for_lambda1, spectral_pair
from .mesh import SphericalDomainMesh, make_domain, rotation_to_pole
from .profile import GapProfile, ProfileInterpolant, build_profile
from .quadrature import gauss_panels
from .radial import BallSpec
from .rearrangement import (DomainMeasure, cap_boundary, cap_volume, decreasing_rearrangement,
                            increasing_rearrangement, integrate_step_against,
                            step_product_integral, theta_of_volume)

DIM = 2

# Dunavant's 6-point rule, exact for degree 4: (a, a, 1 - 2a) orbits
_DUNAVANT_ORBITS = ((0.445948490915965, 0.223381589678011),
                    (0.091576213509771, 0.109951743655322))


def _dunavant():
    bary, weights = [], []
    for a, w in _DUNAVANT_ORBITS:
        b = 1 - 2 * a
        bary += [(a, a, b), (a, b, a), (b, a, a)]
        weights += [w] * 3
    return np.array(bary), np.array(weights)


class EigensolverError(RuntimeError):
    """The sparse eigensolver failed or the assembled problem is defective."""


class NonConvergence(RuntimeError):
    """Center-of-mass search did not reach its tolerance."""

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


class VanishingV(RuntimeError):
    """The moment vector vanished, so every pole satisfies the orthogonality."""


@dataclass(frozen=True)
class QuadratureCells:
    """Quadrature points on the sphere, one cell per point."""

    points: np.ndarray      # (N, 3) unit vectors
    weights: np.ndarray     # (N,) area of each cell
    triangle: np.ndarray    # (N,) owning triangle
    bary: np.ndarray        # (N, 3) barycentric coordinates in that triangle

    def interpolate(self, mesh: SphericalDomainMesh, nodal) -> np.ndarray:
        nodal = np.asarray(nodal, dtype=float)
        return np.einsum("ij,ij->i", nodal[mesh.triangles[self.triangle]], self.bary)

    def integrate(self, values) -> float:
        return math.fsum(np.asarray(values) * self.weights)

    def rotated(self, R) -> "QuadratureCells":
        return QuadratureCells(self.points @ np.asarray(R).T, self.weights, self.triangle,
                               self.bary)


def quadrature_cells(mesh: SphericalDomainMesh) -> QuadratureCells:
    bary, w = _dunavant()
    a, b, c = mesh.corners()
    flat = np.einsum("kj,tjd->tkd", bary, np.stack([a, b, c], axis=1))
    normal = np.cross(b - a, c - a)
    area2 = np.linalg.norm(normal, axis=1)
    normal /= area2[:, None]
    r = np.linalg.norm(flat, axis=2)
    # d(sigma) = |x . nu| / |x|^3 dA for the radial projection of a plane
    jac = np.abs(np.einsum("tkd,td->tk", flat, normal)) / r**3
    weights = 0.5 * area2[:, None] * w[None, :] * jac
    ntri = len(mesh.triangles)
    return QuadratureCells(
        points=(flat / r[:, :, None]).reshape(-1, 3),
        weights=weights.ravel(),
        triangle=np.repeat(np.arange(ntri), len(w)),
        bary=np.tile(bary, (ntri, 1)),
    )


def assemble(mesh: SphericalDomainMesh):
    """Stiffness and consistent mass matrices of P1 elements on the chordal triangles."""
    v, t = mesh.vertices, mesh.triangles
    p = v[t]
    # edge opposite local vertex i
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    area = 0.5 * np.linalg.norm(np.cross(e[:, 0], e[:, 1]), axis=1)
    if np.any(area <= 0):
        raise EigensolverError("degenerate triangle in assembly")
    Ke = np.einsum("tid,tjd->tij", e, e) / (4 * area)[:, None, None]
    Me = (np.ones((3, 3)) + np.eye(3))[None] * (area / 12)[:, None, None]
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    N = len(v)
    K = sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(N, N))
    M = sp.csr_matrix((Me.ravel(), (rows, cols)), shape=(N, N))
    return K, M


@dataclass(frozen=True)
class DomainSpectrum:
    lambda1: float
    lambda2: float
    u1: np.ndarray
    mesh_h: float
    mesh: SphericalDomainMesh = field(repr=False)
    cells: QuadratureCells = field(repr=False)

    def u1_cells(self) -> np.ndarray:
        return np.maximum(self.cells.interpolate(self.mesh, self.u1), 0.0)

    def u1_measure(self) -> DomainMeasure:
        """u1 as value/measure pairs, one per quadrature cell."""
        return DomainMeasure(self.u1_cells(), self.cells.weights)

    def u1_level_measure(self, levels: int = 4000, chunk: int = 4096) -> DomainMeasure:
        """u1 as value/measure pairs, one per band between equispaced levels.

        Band measures come from the exact distribution function of the P1
        interpolant on each triangle, scaled by the triangle's spherical to
        flat area ratio; each band carries its midpoint level as value.
        """
        return level_band_measure(self.mesh, self.u1, levels, chunk)

    @property
    def ratio(self) -> float:
        return self.lambda2 / self.lambda1


def _fraction_above(lo, mid, hi, t):
    """|{linear u > t}| / |T| for vertex values lo <= mid <= hi (broadcast over t)."""
    span = np.maximum(hi - lo, 1e-300)
    lower = 1 - (t - lo) ** 2 / (np.maximum(mid - lo, 1e-300) * span)
    upper = (hi - t) ** 2 / (span * np.maximum(hi - mid, 1e-300))
    return np.where(t <= lo, 1.0, np.where(t >= hi, 0.0, np.where(t <= mid, lower, upper)))


def level_band_measure(mesh: SphericalDomainMesh, nodal, levels: int = 4000,
                       chunk: int = 4096) -> DomainMeasure:
    nodal = np.asarray(nodal, dtype=float)
    vals = np.sort(nodal[mesh.triangles], axis=1)
    area = mesh.spherical_areas()
    t = np.linspace(0.0, float(nodal.max()), levels + 1)
    above = np.zeros(levels + 1)
    for start in range(0, len(vals), chunk):
        v = vals[start:start + chunk]
        frac = _fraction_above(v[:, 0:1], v[:, 1:2], v[:, 2:3], t[None, :])
        above += area[start:start + chunk] @ frac
    above[-1] = 0.0
    band = -np.diff(above)
    keep = band > 0
    return DomainMeasure(0.5 * (t[:-1] + t[1:])[keep], band[keep])


def solve_dirichlet(mesh: SphericalDomainMesh, k: int = 2) -> DomainSpectrum:
    """The two lowest Dirichlet eigenvalues and the positive, L2-normalized u1."""
    if k != 2:
        raise ValueError("only the two lowest eigenpairs are computed")
    K, M = assemble(mesh)
    inner = mesh.interior
    if inner.size < 4:
        raise EigensolverError("too few interior vertices")
    Kii = K[inner][:, inner].tocsc()
    Mii = M[inner][:, inner].tocsc()
    try:
        # one spare eigenpair keeps a double lambda2 from being split off
        vals, vecs = eigsh(Kii, k=3, M=Mii, sigma=0.0, which="LM", tol=1e-12)
    except ArpackNoConvergence as exc:
        raise EigensolverError(f"eigensolver did not converge: {exc}") from None
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    if vals[0] <= 0 or not vals[0] < vals[1]:
        raise EigensolverError(f"indefinite or degenerate spectrum {vals[:2]}")
    u = np.zeros(len(mesh.vertices))
    u[inner] = vecs[:, 0]
    if u[inner].sum() < 0:
        u = -u
    if np.any(u[inner] <= 0):
        raise EigensolverError("first eigenvector changes sign")
    cells = quadrature_cells(mesh)
    norm2 = cells.integrate(cells.interpolate(mesh, u) ** 2)
    u /= math.sqrt(norm2)
    u.setflags(write=False)
    return DomainSpectrum(float(vals[0]), float(vals[1]), u, mesh.max_edge(), mesh, cells)


# ---------------------------------------------------------------- center of mass

@dataclass(frozen=True)
class CenterOfMassResult:
    y0: np.ndarray
    orthogonality_residuals: np.ndarray
    iterations: int
    method: str
    mass: float
    multiplicity: int = 1

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.orthogonality_residuals)))

    def as_dict(self) -> dict:
        return {"y0": self.y0.tolist(), "residuals": self.orthogonality_residuals.tolist(),
                "iterations": self.iterations, "method": self.method, "mass": self.mass,
                "multiplicity": self.multiplicity}


class _MomentMap:
    """v(y) = sum mu_k x_k G(angle(x_k, y)) and w = v / |v|."""

    def __init__(self, points, mu, gtilde):
        self.points, self.mu, self.gtilde = points, mu, gtilde

    def v(self, y):
        cosang = np.clip(self.points @ y, -1.0, 1.0)
        return (self.mu * self.gtilde(np.arccos(cosang))) @ self.points

    def w(self, y):
        v = self.v(y)
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            raise VanishingV(f"|v(y)| = {nv:.3e} at y = {y}")
        return v / nv

    def defect(self, y):
        """min |w(y) -+ y|; a zero of either sign is a fixed point after y -> -+ y."""
        w = self.w(y)
        return min(np.linalg.norm(w - y), np.linalg.norm(w + y))

    def residuals(self, y):
        R = rotation_to_pole(y)
        return R[:2] @ self.v(y)


def _icosphere(level: int) -> np.ndarray:
    t = (1 + math.sqrt(5)) / 2
    v = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
         (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    f = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
         (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
         (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(p, dtype=float) / np.linalg.norm(p) for p in v]
    for _ in range(level):
        cache, faces = {}, []

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in f:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        f = faces
    return np.array(verts)


def _tangent_frame(y):
    R = rotation_to_pole(y)
    return R[0], R[1]


def _grid_refine(mm: _MomentMap, *, level=3, rounds=60, seeds=4, tol=1e-12):
    """Minimize |w(y) -+ y| over an icosahedral grid, then shrink a local stencil."""
    grid = _icosphere(level)
    defects = np.array([mm.defect(y) for y in grid])
    order = np.argsort(defects)
    found = []
    for idx in order[: seeds * 3]:
        if len(found) >= seeds:
            break
        y = grid[idx]
        if any(abs(abs(np.dot(y, z)) - 1) < 1e-6 or np.dot(y, z) ** 2 > np.cos(0.3) ** 2
               for z, _ in found):
            continue
        step, best = 0.3, defects[idx]
        for _ in range(rounds):
            e1, e2 = _tangent_frame(y)
            improved = False
            for a, b in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)):
                cand = y + step * (a * e1 + b * e2)
                cand /= np.linalg.norm(cand)
                d = mm.defect(cand)
                if d < best:
                    y, best, improved = cand, d, True
            if not improved:
                step *= 0.5
            if best < tol or step < 1e-14:
                break
        # an anti-fixed point becomes a fixed point at the antipode
        if np.linalg.norm(mm.w(y) - y) > np.linalg.norm(mm.w(y) + y):
            y = -y
        found.append((y, best))
    return found


def center_of_mass(cells: QuadratureCells, u1_cells, gtilde, *, alpha: float = 0.5,
                   max_iter: int = 500, tol: float = 1e-8, start=None,
                   method: str = "auto") -> CenterOfMassResult:
    """Pole y0 with the weighted moments sum mu x' G(theta) perpendicular to y0 vanishing.

    ``method`` is 'fixed-point', 'grid-refine' or 'auto' (fixed point first,
    grid refinement if it stagnates). ``tol`` is relative to the total mass.
    """
    mu = np.asarray(u1_cells) ** 2 * cells.weights
    mass = float(mu.sum())
    mm = _MomentMap(cells.points, mu, gtilde)
    y = np.asarray(start, dtype=float) if start is not None else mu @ cells.points
    if np.linalg.norm(y) < 1e-12:
        y = np.array([0.0, 0.0, 1.0])
    y = y / np.linalg.norm(y)

    def result(y, iters, how, mult=1):
        return CenterOfMassResult(y, mm.residuals(y), iters, how, mass, mult)

    best = None
    if method in ("auto", "fixed-point"):
        for it in range(1, max_iter + 1):
            w = mm.w(y)
            y_new = (1 - alpha) * y + alpha * w
            y_new /= np.linalg.norm(y_new)
            step = np.linalg.norm(y_new - y)
            y = y_new
            if step < 1e-15 or np.max(np.abs(mm.residuals(y))) < 1e-3 * tol * mass:
                break
        best = result(y, it, "fixed-point")
        if best.max_residual < tol * mass or method == "fixed-point":
            if best.max_residual >= tol * mass:
                raise NonConvergence("fixed-point iteration stagnated", best)
            return best
    found = _grid_refine(mm)
    cands = [result(z, 0, "grid-refine") for z, _ in found]
    good = [c for c in cands if c.max_residual < tol * mass]
    pick = min(cands, key=lambda c: c.max_residual)
    if best is not None and best.max_residual < pick.max_residual:
        pick = best
    if not good:
        raise NonConvergence("no candidate pole meets the orthogonality tolerance", pick)
    return CenterOfMassResult(pick.y0, pick.orthogonality_residuals, pick.iterations,
                              pick.method, mass, len(good))


# ---------------------------------------------------------------- gap bound

@dataclass(frozen=True)
class ChainLink:
    name: str
    lhs: float
    rhs: float
    relation: str  # "<=", ">=" or "=="

    @property
    def margin(self) -> float:
        """Nonnegative when the link holds."""
        if self.relation == ">=":
            return self.lhs - self.rhs
        if self.relation == "==":
            return -abs(self.lhs - self.rhs)
        return self.rhs - self.lhs

    def holds(self, tol: float = 0.0) -> bool:
        return self.margin >= -tol

    def as_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "relation": self.relation, "margin": self.margin}


@dataclass(frozen=True)
class BallIntegrals:
    """Integrals over B_lambda1 of B v^2, g^2 v^2 and v^2, with v the radial first mode."""

    B_v2: float
    g2_v2: float
    v2: float


def ball_integrals(profile: GapProfile, panels: int = 32, order: int = 20) -> BallIntegrals:
    n, t1 = profile.spec.n, profile.spec.theta1
    t, w = gauss_panels(0.0, t1, panels, order)
    vals = profile.evaluate_inside(t)
    dvol = w * cap_boundary(n, t)
    y2 = vals["y1"] ** 2
    return BallIntegrals(math.fsum(vals["B"] * y2 * dvol), math.fsum(vals["g"] ** 2 * y2 * dvol),
                         math.fsum(y2 * dvol))


@dataclass(frozen=True)
class GapBoundReport:
    lambda1: float
    lambda2: float
    theta1_ball: float
    lambda2_ball: float
    numerator: float
    denominator: float
    center: CenterOfMassResult
    numerator_chain: tuple
    denominator_chain: tuple
    ball_ratio: float

    @property
    def bound(self) -> float:
        return self.lambda1 + self.numerator / self.denominator

    @property
    def rayleigh_margin(self) -> float:
        """bound - lambda2(domain); nonnegative up to discretization error."""
        return self.bound - self.lambda2

    @property
    def ball_margin(self) -> float:
        """lambda2(ball) - bound."""
        return self.lambda2_ball - self.bound

    @property
    def links(self) -> tuple:
        return self.numerator_chain + self.denominator_chain

    def chain_holds(self, tol: float = 0.0) -> bool:
        return all(link.holds(tol * max(1.0, abs(link.rhs))) for link in self.links)

    def as_dict(self) -> dict:
        return {
            "lambda1": self.lambda1, "lambda2": self.lambda2, "bound": self.bound,
            "theta1_ball": self.theta1_ball, "lambda2_ball": self.lambda2_ball,
            "numerator": self.numerator, "denominator": self.denominator,
            "rayleigh_margin": self.rayleigh_margin, "ball_margin": self.ball_margin,
            "ball_ratio": self.ball_ratio, "y0": self.center.y0.tolist(),
            "center_of_mass": self.center.as_dict(),
            "chain": [link.as_dict() for link in self.links],
        }


def ball_for(spectrum: DomainSpectrum, points: int = 801) -> GapProfile:
    """Gap profile of the cap whose first eigenvalue equals lambda1 of the domain."""
    theta1 = ball_radius_for_lambda1(DIM, spectrum.lambda1)
    return build_profile(BallSpec(DIM, theta1), points)


def gap_bound(spectrum: DomainSpectrum, profile: GapProfile | None = None, *,
              center: CenterOfMassResult | None = None,
              interp: ProfileInterpolant | None = None) -> GapBoundReport:
    """Rayleigh-Ritz bound on lambda2 - lambda1 with trial functions g(theta) x_i / sin(theta).

    The rearrangement chain that compares it with the cap value is returned
    link by link.
    """
    if profile is None:
        profile = ball_for(spectrum)
    if interp is None:
        interp = profile.interpolant()
    n = profile.spec.n
    cells = spectrum.cells
    u = spectrum.u1_cells()
    if center is None:
        center = center_of_mass(cells, u, interp.gtilde)
    R = rotation_to_pole(center.y0)
    x = cells.points @ R.T
    theta = np.arccos(np.clip(x[:, 2], -1.0, 1.0))
    u2 = u * u
    a = cells.weights
    B = interp.B(theta)
    g2 = interp.g(theta) ** 2
    num0 = math.fsum(B * u2 * a)
    den0 = math.fsum(g2 * u2 * a)

    # reflect the lower half through the origin; values travel unchanged
    folded = np.where(theta > math.pi / 2, math.pi - theta, theta)
    B_f = interp.B(folded)
    g2_f = interp.g(folded) ** 2
    num1 = math.fsum(B_f * u2 * a)
    den1 = math.fsum(g2_f * u2 * a)

    u2_sharp = decreasing_rearrangement(DomainMeasure(u2, a))
    B_sharp = decreasing_rearrangement(DomainMeasure(B_f, a))
    g2_flat = increasing_rearrangement(DomainMeasure(g2_f, a))
    num2 = step_product_integral(B_sharp, u2_sharp)
    den2 = step_product_integral(g2_flat, u2_sharp)

    def radial(f):
        return lambda s: f(theta_of_volume(n, np.minimum(s, cap_volume(n, math.pi / 2))))

    num3 = integrate_step_against(u2_sharp, radial(interp.B))
    den3 = integrate_step_against(u2_sharp, radial(lambda t: interp.g(t) ** 2))

    ball = ball_integrals(profile)
    scale = u2_sharp.integral() / ball.v2
    num4, den4 = ball.B_v2 * scale, ball.g2_v2 * scale

    numerator_chain = (
        ChainLink("reflection (numerator)", num0, num1, "=="),
        ChainLink("Hardy-Littlewood", num1, num2, "<="),
        ChainLink("B# below B(theta(s))", num2, num3, "<="),
        ChainLink("one-crossing comparison (numerator)", num3, num4, "<="),
    )
    denominator_chain = (
        ChainLink("reflection (denominator)", den0, den1, "=="),
        ChainLink("reverse Hardy-Littlewood", den1, den2, ">="),
        ChainLink("g2_# above g(theta(s))^2", den2, den3, ">="),
        ChainLink("one-crossing comparison (denominator)", den3, den4, ">="),
    )
    return GapBoundReport(
        lambda1=spectrum.lambda1, lambda2=spectrum.lambda2, theta1_ball=profile.spec.theta1,
        lambda2_ball=profile.lambda2, numerator=num0, denominator=den0, center=center,
        numerator_chain=numerator_chain, denominator_chain=denominator_chain,
        ball_ratio=ball.B_v2 / ball.g2_v2,
    )


# ---------------------------------------------------------------- PPW verdicts

@dataclass(frozen=True)
class PPWReport:
    area: float
    lambda1: float
    lambda2: float
    theta1_ball: float
    lambda2_ball: float
    theta1_star: float
    lambda1_star: float
    lambda2_star: float

    @property
    def margins(self) -> dict:
        """Each margin is nonnegative when its inequality holds."""
        return {
            "gap_vs_equal_lambda1_cap": self.lambda2_ball - self.lambda2,
            "ratio_vs_equal_area_cap": self.lambda2_star / self.lambda1_star - self.lambda2 / self.lambda1,
            "sperner": self.lambda1 - self.lambda1_star,
            "radius_order": self.theta1_star - self.theta1_ball,
        }

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["ppw_margins"] = self.margins
        return d


def ppw_check(mesh: SphericalDomainMesh, spectrum: DomainSpectrum | None = None) -> PPWReport:
    """lambda2 against the equal-lambda1 cap, and lambda2/lambda1 against the equal-area cap."""
    mesh.check_hemisphere()
    if spectrum is None:
        spectrum = solve_dirichlet(mesh)
    area = mesh.area()
    theta_star = theta_of_volume(DIM, area)
    star = spectral_pair(BallSpec(DIM, theta_star))
    theta_ball = ball_radius_for_lambda1(DIM, spectrum.lambda1)
    lam2_ball = spectral_pair(BallSpec(DIM, theta_ball)).lambda2
    return PPWReport(area, spectrum.lambda1, spectrum.lambda2, theta_ball, lam2_ball,
                     theta_star, star.lambda1, star.lambda2)


# ---------------------------------------------------------------- mesh studies

@dataclass(frozen=True)
class MeshStudy:
    """A quantity on meshes of size h and 2h with the Richardson error estimate."""

    fine: float
    coarse: float

    @property
    def error_estimate(self) -> float:
        # X(2h) - X(h) ~ 3 C h^2 for a second-order method
        return abs(self.fine - self.coarse) / 3.0

    @property
    def extrapolated(self) -> float:
        return self.fine + (self.fine - self.coarse) / 3.0


def study(fine: float, coarse: float) -> MeshStudy:
    return MeshStudy(float(fine), float(coarse))


def domain_pair(kind: str, h: float, **params):
    """Meshes of the same domain at h and 2h, and their spectra."""
    fine = make_domain(kind, h, **params)
    coarse = make_domain(kind, 2 * h, **params)
    return (fine, solve_dirichlet(fine)), (coarse, solve_dirichlet(coarse))

