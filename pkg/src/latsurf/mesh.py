"""Half-edge grid mesh and its discrete differential operators.

The mesh is a k x k uniformly spaced grid over a rectangular domain, each
cell split along its lower-left-to-upper-right diagonal. Directed half-edges
trace every face counterclockwise; an interior undirected edge is stored as
a twin pair, a boundary edge as a single half-edge. xy positions are fixed,
heights z are the optimization variables.

Conventions fixed here (and relied on by the loss module):
  * Laplacian diagonals are minus the row sum of the off-diagonals, so the
    Neumann operator has zero row sums and both operators act like negative
    semidefinite stiffness forms.
  * theta_{i,j} is the angle opposite half-edge (i, j), i.e. at nxt(i, j).
  * Gaussian curvature is the angle defect over the barycentric vertex
    area; boundary vertices use a pi defect (full-turn defects mean nothing
    on the rim) and are excluded from curvature-loss sums downstream.
  * The principal-curvature discriminant is clamped at zero; at clamped
    vertices the derivative of kappa+/- falls back to the mean-curvature
    derivative (the square-root term is dropped).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

MIN_TRIANGLE_AREA = 1e-15


class DegenerateTriangleError(ValueError):
    pass


class HalfEdgeMesh:
    """Grid triangle mesh in doubly-connected-edge-list form."""

    def __init__(self, k: int, bounds, xy: np.ndarray, z: np.ndarray, faces: np.ndarray):
        self.k = int(k)
        self.bounds = ((float(bounds[0][0]), float(bounds[0][1])),
                       (float(bounds[1][0]), float(bounds[1][1])))
        self.xy = np.asarray(xy, dtype=float)
        self.z = np.asarray(z, dtype=float)
        self.faces = np.asarray(faces, dtype=np.int64)

        f = self.faces
        n_f = len(f)
        # Half-edge 3*f + s runs faces[f, s] -> faces[f, (s+1)%3].
        self.he_src = f[:, [0, 1, 2]].reshape(-1)
        self.he_dst = f[:, [1, 2, 0]].reshape(-1)
        self.he_opp = f[:, [2, 0, 1]].reshape(-1)
        self.he_face = np.repeat(np.arange(n_f), 3)

        index = {(int(s), int(d)): h
                 for h, (s, d) in enumerate(zip(self.he_src, self.he_dst))}
        self._nxt = {(int(s), int(d)): int(o)
                     for s, d, o in zip(self.he_src, self.he_dst, self.he_opp)}
        self.he_twin = np.array(
            [index.get((int(d), int(s)), -1)
             for s, d in zip(self.he_src, self.he_dst)], dtype=np.int64)

        self.boundary_vertex = np.zeros(len(self.xy), dtype=bool)
        rim = self.he_twin < 0
        self.boundary_vertex[self.he_src[rim]] = True
        self.boundary_vertex[self.he_dst[rim]] = True

    # -- connectivity queries -------------------------------------------------

    def nxt(self, i: int, j: int) -> int:
        """Successor vertex: (i, j, nxt(i, j)) is a counterclockwise face.
        Raises KeyError when (i, j) is not a stored half-edge."""
        return self._nxt[(i, j)]

    def has_halfedge(self, i: int, j: int) -> bool:
        return (i, j) in self._nxt

    @property
    def n_vertices(self) -> int:
        return len(self.xy)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_halfedges(self) -> int:
        return len(self.he_src)

    def undirected_edge_count(self) -> int:
        boundary = int(np.count_nonzero(self.he_twin < 0))
        return (self.n_halfedges - boundary) // 2 + boundary

    def boundary_halfedge_count(self) -> int:
        return int(np.count_nonzero(self.he_twin < 0))

    def vertices3(self, z: Optional[np.ndarray] = None) -> np.ndarray:
        zz = self.z if z is None else np.asarray(z, dtype=float)
        return np.column_stack([self.xy, zz])

    def grid_spacing(self) -> tuple[float, float]:
        (x0, y0), (x1, y1) = self.bounds
        return (x1 - x0) / (self.k - 1), (y1 - y0) / (self.k - 1)

    def cell_diagonal(self) -> float:
        """Longest edge of the flat mesh."""
        dx, dy = self.grid_spacing()
        return float(np.hypot(dx, dy))


def build_grid_mesh(k: int, bounds=((0.0, 0.0), (1.0, 1.0))) -> HalfEdgeMesh:
    """Uniform k x k grid over bounds, cells split along the (r, c) to
    (r+1, c+1) diagonal, counterclockwise faces, zero heights."""
    if k < 2:
        raise ValueError("grid needs at least 2 vertices per side")
    (x0, y0), (x1, y1) = bounds
    xs = np.linspace(x0, x1, k)
    ys = np.linspace(y0, y1, k)
    gx, gy = np.meshgrid(xs, ys)             # row-major: vertex r*k + c
    xy = np.column_stack([gx.reshape(-1), gy.reshape(-1)])

    faces = []
    for r in range(k - 1):
        for c in range(k - 1):
            a = r * k + c
            b = r * k + c + 1
            cc = (r + 1) * k + c
            d = (r + 1) * k + c + 1
            faces.append((a, b, d))
            faces.append((a, d, cc))
    return HalfEdgeMesh(k=k, bounds=bounds, xy=xy, z=np.zeros(k * k),
                        faces=np.array(faces, dtype=np.int64))


def init_sphere_cap(mesh: HalfEdgeMesh, apex_height_fraction: float = 0.1) -> np.ndarray:
    """Heights of a sphere cap over the grid's circumscribing disk.

    The apex height is the fraction times the domain's larger dimension;
    the sphere radius follows from the cap over the half-diagonal disk, so
    the grid corners land exactly on the rim (height zero).
    """
    if not 0.0 < apex_height_fraction <= 0.5:
        raise ValueError("apex_height_fraction must lie in (0, 0.5]")
    (x0, y0), (x1, y1) = mesh.bounds
    w, hgt = x1 - x0, y1 - y0
    h = apex_height_fraction * max(w, hgt)
    rho = 0.5 * float(np.hypot(w, hgt))
    radius = (rho * rho + h * h) / (2.0 * h)
    center = np.array([(x0 + x1) / 2.0, (y0 + y1) / 2.0])
    s2 = np.sum((mesh.xy - center) ** 2, axis=1)
    return np.sqrt(np.maximum(radius * radius - s2, 0.0)) - (radius - h)


@dataclass
class FaceGeometry:
    """Per-face normals/areas plus per-half-edge cotangents and angles."""

    v: np.ndarray            # (n, 3) vertex positions
    face_normal: np.ndarray  # (F, 3), counterclockwise orientation (z up when flat)
    face_area: np.ndarray    # (F,)
    dot: np.ndarray          # (H,) (v_i - v_m) . (v_j - v_m)
    cot: np.ndarray          # (H,) cot of the angle opposite the half-edge
    theta: np.ndarray        # (H,) that angle, in (0, pi)
    sin_sq: np.ndarray       # (H,) sin^2 theta
    vertex_area: np.ndarray  # (n,) barycentric: one third of incident face area

    mesh: HalfEdgeMesh

    @property
    def normal(self) -> np.ndarray:
        """Per-half-edge view of the owning triangle's normal."""
        return self.face_normal[self.mesh.he_face]

    @property
    def area(self) -> np.ndarray:
        """Per-half-edge view of the owning triangle's area."""
        return self.face_area[self.mesh.he_face]


def face_geometry(mesh: HalfEdgeMesh, z: Optional[np.ndarray] = None) -> FaceGeometry:
    v = mesh.vertices3(z)
    i0, i1, i2 = mesh.faces[:, 0], mesh.faces[:, 1], mesh.faces[:, 2]
    normal = np.cross(v[i0] - v[i2], v[i1] - v[i2])
    area = 0.5 * np.linalg.norm(normal, axis=1)
    if np.any(area < MIN_TRIANGLE_AREA):
        worst = int(np.argmin(area))
        raise DegenerateTriangleError(
            f"triangle {worst} has area {area[worst]:.3e} < {MIN_TRIANGLE_AREA}")

    src, dst, opp = mesh.he_src, mesh.he_dst, mesh.he_opp
    dot = np.einsum("ij,ij->i", v[src] - v[opp], v[dst] - v[opp])
    a_he = area[mesh.he_face]
    cot = dot / (2.0 * a_he)
    theta = np.arctan2(2.0 * a_he, dot)
    sin_sq = (2.0 * a_he) ** 2 / ((2.0 * a_he) ** 2 + dot * dot)
    vertex_area = np.bincount(mesh.faces.reshape(-1), weights=np.repeat(area, 3),
                              minlength=mesh.n_vertices) / 3.0
    return FaceGeometry(v=v, face_normal=normal, face_area=area, dot=dot, cot=cot,
                        theta=theta, sin_sq=sin_sq, vertex_area=vertex_area, mesh=mesh)


@dataclass
class LaplacianPair:
    """Cotangent operators: zero-Neumann and zero-Dirichlet boundary flavors.

    Off-diagonals carry half the sum of the opposite cotangents (a single
    cotangent on boundary edges); diagonals are minus the row sums. The
    Dirichlet flavor keeps only edges between interior vertices and zeroes
    boundary rows and columns entirely, so it annihilates constants as well.
    """

    neumann: sp.csr_matrix
    dirichlet: sp.csr_matrix


def laplacians(mesh: HalfEdgeMesh, geom: FaceGeometry) -> LaplacianPair:
    n = mesh.n_vertices
    src, dst = mesh.he_src, mesh.he_dst
    half_cot = 0.5 * geom.cot

    def build(mask) -> sp.csr_matrix:
        s, d, c = src[mask], dst[mask], half_cot[mask]
        rows = np.concatenate([s, d, s, d])
        cols = np.concatenate([d, s, s, d])
        vals = np.concatenate([c, c, -c, -c])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    interior = ~mesh.boundary_vertex
    l_n = build(np.ones(mesh.n_halfedges, dtype=bool))
    l_d = build(interior[src] & interior[dst])
    return LaplacianPair(neumann=l_n, dirichlet=l_d)


@dataclass
class VertexCurvatures:
    gaussian: np.ndarray         # (n,) angle defect / vertex area
    mean: np.ndarray             # (n,) signed mean curvature
    principal_plus: np.ndarray   # (n,)
    principal_minus: np.ndarray  # (n,)
    mean_normal: np.ndarray      # (n, 3) mean-curvature normal vector
    vertex_normal: np.ndarray    # (n, 3) sum of incident face normals
    gaussian_scaled: np.ndarray  # (n,) angle defect before dividing by area
    discriminant: np.ndarray     # (n,) mean^2 - gaussian, before clamping
    clamped: np.ndarray          # (n,) bool, discriminant clamped at zero


def vertex_curvatures(mesh: HalfEdgeMesh, geom: FaceGeometry,
                      lap: LaplacianPair) -> VertexCurvatures:
    n = mesh.n_vertices
    angle_sum = np.bincount(mesh.he_opp, weights=geom.theta, minlength=n)
    full_turn = np.where(mesh.boundary_vertex, np.pi, 2.0 * np.pi)
    gaussian_scaled = full_turn - angle_sum
    gaussian = gaussian_scaled / geom.vertex_area

    vertex_normal = np.zeros((n, 3))
    np.add.at(vertex_normal, mesh.he_src, geom.face_normal[mesh.he_face])

    mean_normal = -0.5 * (lap.neumann @ geom.v) / geom.vertex_area[:, None]
    norm = np.linalg.norm(mean_normal, axis=1)
    orient = np.sign(np.einsum("ij,ij->i", vertex_normal, mean_normal))
    mean = orient * norm

    disc = mean * mean - gaussian
    clamped = disc <= 0.0
    root = np.sqrt(np.maximum(disc, 0.0))
    return VertexCurvatures(gaussian=gaussian, mean=mean,
                            principal_plus=mean + root, principal_minus=mean - root,
                            mean_normal=mean_normal, vertex_normal=vertex_normal,
                            gaussian_scaled=gaussian_scaled, discriminant=disc,
                            clamped=clamped)


# -- partial derivatives with respect to heights ------------------------------

def _per_face_area_partials(mesh: HalfEdgeMesh, geom: FaceGeometry) -> np.ndarray:
    """d area_f / d z at each of the face's three corners, shape (F, 3).

    dN/dz_corner is a cross product with e3, so only the xy components of
    the opposite edge and the xy part of N survive.
    """
    v, normal, area = geom.v, geom.face_normal, geom.face_area
    out = np.empty((mesh.n_faces, 3))
    f = mesh.faces
    for s in range(3):
        u = v[f[:, (s + 2) % 3]] - v[f[:, (s + 1) % 3]]
        out[:, s] = (normal[:, 0] * u[:, 1] - normal[:, 1] * u[:, 0]) / (4.0 * area)
    return out


def _per_halfedge_partials(mesh: HalfEdgeMesh, geom: FaceGeometry):
    """(d_dot, d_cot, d_theta), each (H, 3) for derivatives with respect to
    z at the half-edge's (src, dst, opposite) vertices."""
    z = geom.v[:, 2]
    src, dst, opp, fidx = mesh.he_src, mesh.he_dst, mesh.he_opp, mesh.he_face
    slot = np.arange(mesh.n_halfedges) % 3
    d_area = _per_face_area_partials(mesh, geom)

    d_dot = np.column_stack([z[dst] - z[opp], z[src] - z[opp],
                             2.0 * z[opp] - z[src] - z[dst]])
    two_a = 2.0 * geom.face_area[fidx]
    da = np.column_stack([d_area[fidx, slot],
                          d_area[fidx, (slot + 1) % 3],
                          d_area[fidx, (slot + 2) % 3]])
    d_cot = (d_dot - 2.0 * geom.cot[:, None] * da) / two_a[:, None]
    d_theta = -geom.sin_sq[:, None] * d_cot
    return d_dot, d_cot, d_theta


@dataclass
class CurvaturePartials:
    """Analytic derivatives of the discrete operators with respect to each
    vertex height. Scalar fields are n x n sparse Jacobians (row: where the
    quantity lives, column: which height moves); a field at vertex i only
    responds to heights in its 2-ring."""

    d_area: np.ndarray                     # (F, 3) by face corner
    d_dot: np.ndarray                      # (H, 3) by (src, dst, opp)
    d_cot: np.ndarray                      # (H, 3)
    d_theta: np.ndarray                    # (H, 3)
    d_vertex_area: sp.csr_matrix           # (n, n)
    d_gaussian: sp.csr_matrix              # (n, n)
    d_mean: sp.csr_matrix                  # (n, n)
    d_mean_normal: tuple                   # 3 x (n, n), one per component
    d_principal_plus: sp.csr_matrix        # (n, n)
    d_principal_minus: sp.csr_matrix       # (n, n)

    mesh: HalfEdgeMesh
    geom: FaceGeometry

    def d_laplacian_neumann(self, ell: int) -> sp.csr_matrix:
        return self._d_laplacian(ell, np.ones(self.mesh.n_halfedges, dtype=bool))

    def d_laplacian_dirichlet(self, ell: int) -> sp.csr_matrix:
        interior = ~self.mesh.boundary_vertex
        mask = interior[self.mesh.he_src] & interior[self.mesh.he_dst]
        return self._d_laplacian(ell, mask)

    def _d_laplacian(self, ell: int, he_mask) -> sp.csr_matrix:
        mesh = self.mesh
        n = mesh.n_vertices
        rows, cols, vals = [], [], []
        verts = np.column_stack([mesh.he_src, mesh.he_dst, mesh.he_opp])
        for t in range(3):
            sel = he_mask & (verts[:, t] == ell)
            c = 0.5 * self.d_cot[sel, t]
            s, d = mesh.he_src[sel], mesh.he_dst[sel]
            rows.extend([s, d, s, d])
            cols.extend([d, s, s, d])
            vals.extend([c, c, -c, -c])
        if not rows:
            return sp.csr_matrix((n, n))
        return sp.csr_matrix((np.concatenate(vals),
                              (np.concatenate(rows), np.concatenate(cols))),
                             shape=(n, n))


def curvature_partials(mesh: HalfEdgeMesh, geom: FaceGeometry,
                       lap: LaplacianPair) -> CurvaturePartials:
    """Chain-rule derivatives of areas, cotangents, angles, vertex areas and
    all vertex curvature fields with respect to the heights."""
    curv = vertex_curvatures(mesh, geom, lap)
    n = mesh.n_vertices
    f = mesh.faces
    src, dst, opp = mesh.he_src, mesh.he_dst, mesh.he_opp
    d_area = _per_face_area_partials(mesh, geom)
    d_dot, d_cot, d_theta = _per_halfedge_partials(mesh, geom)

    # Vertex areas: D_ii = (1/3) sum of incident face areas.
    rows = f[:, [0, 0, 0, 1, 1, 1, 2, 2, 2]].reshape(-1)
    cols = f[:, [0, 1, 2, 0, 1, 2, 0, 1, 2]].reshape(-1)
    vals = d_area[:, [0, 1, 2, 0, 1, 2, 0, 1, 2]].reshape(-1) / 3.0
    d_vertex_area = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    # Scaled Gaussian curvature: minus the sum of angle derivatives at each
    # vertex; the angle opposite half-edge h sits at its opp vertex.
    he_verts = np.column_stack([src, dst, opp])
    rows = np.repeat(opp, 3)
    cols = he_verts.reshape(-1)
    vals = -d_theta.reshape(-1)
    d_gauss_scaled = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    inv_area = 1.0 / geom.vertex_area
    d_gaussian = sp.diags(inv_area) @ (d_gauss_scaled
                                       - sp.diags(curv.gaussian) @ d_vertex_area)

    # Mean-curvature normal, one Jacobian per component.
    lv = lap.neumann @ geom.v                      # (n, 3)
    d_mean_normal = []
    for c in range(3):
        dv_c = geom.v[dst, c] - geom.v[src, c]
        rr, cc, vv = [], [], []
        for t in range(3):
            ct = 0.5 * d_cot[:, t]
            rr.extend([src, dst])
            cc.extend([he_verts[:, t], he_verts[:, t]])
            vv.extend([ct * dv_c, -ct * dv_c])
        p_c = sp.csr_matrix((np.concatenate(vv),
                             (np.concatenate(rr), np.concatenate(cc))), shape=(n, n))
        term = p_c - sp.diags(lv[:, c] * inv_area) @ d_vertex_area
        if c == 2:
            term = term + lap.neumann
        d_mean_normal.append((sp.diags(-0.5 * inv_area) @ term).tocsr())

    norm = np.linalg.norm(curv.mean_normal, axis=1)
    orient = np.sign(np.einsum("ij,ij->i", curv.vertex_normal, curv.mean_normal))
    safe = np.where(norm > 0.0, norm, 1.0)
    d_mean = sum(sp.diags(np.where(norm > 0.0, orient * curv.mean_normal[:, c] / safe, 0.0))
                 @ d_mean_normal[c] for c in range(3)).tocsr()

    # Principal curvatures; clamped vertices keep only the mean term.
    delta = curv.principal_plus - curv.principal_minus
    safe_delta = np.where(curv.clamped, 1.0, delta)
    a_plus = np.where(curv.clamped, 1.0, 2.0 * curv.principal_plus / safe_delta)
    b_plus = np.where(curv.clamped, 0.0, -1.0 / safe_delta)
    a_minus = np.where(curv.clamped, 1.0, -2.0 * curv.principal_minus / safe_delta)
    b_minus = np.where(curv.clamped, 0.0, 1.0 / safe_delta)
    d_kplus = (sp.diags(a_plus) @ d_mean + sp.diags(b_plus) @ d_gaussian).tocsr()
    d_kminus = (sp.diags(a_minus) @ d_mean + sp.diags(b_minus) @ d_gaussian).tocsr()

    return CurvaturePartials(d_area=d_area, d_dot=d_dot, d_cot=d_cot, d_theta=d_theta,
                             d_vertex_area=d_vertex_area, d_gaussian=d_gaussian.tocsr(),
                             d_mean=d_mean, d_mean_normal=tuple(d_mean_normal),
                             d_principal_plus=d_kplus, d_principal_minus=d_kminus,
                             mesh=mesh, geom=geom)


def assemble_height_gradient(mesh: HalfEdgeMesh, geom: FaceGeometry, lap: LaplacianPair,
                             curv: VertexCurvatures,
                             gamma_gaussian: Optional[np.ndarray] = None,
                             c_mean: Optional[np.ndarray] = None,
                             w_cot_extra: Optional[np.ndarray] = None,
                             w_area_extra: Optional[np.ndarray] = None) -> np.ndarray:
    """Reverse-mode accumulation of d(loss)/d(z).

    gamma_gaussian weights d(gaussian curvature) per vertex, c_mean weights
    d(mean curvature), w_cot_extra weights d(cot) per half-edge directly and
    w_area_extra weights d(area) per face directly. Runs in O(n) for the
    mesh terms; Jacobians are never materialized.
    """
    n = mesh.n_vertices
    f = mesh.faces
    src, dst, opp, fidx = mesh.he_src, mesh.he_dst, mesh.he_opp, mesh.he_face
    grad = np.zeros(n)
    w_cot = np.zeros(mesh.n_halfedges) if w_cot_extra is None else w_cot_extra.astype(float).copy()
    w_area = np.zeros(mesh.n_faces) if w_area_extra is None else w_area_extra.astype(float).copy()

    if gamma_gaussian is not None and np.any(gamma_gaussian):
        g1 = gamma_gaussian / geom.vertex_area
        # d(angle defect): -d theta = +sin^2 d cot at the opposite vertex.
        w_cot += g1[opp] * geom.sin_sq
        gk = gamma_gaussian * curv.gaussian / geom.vertex_area
        w_area -= (gk[f[:, 0]] + gk[f[:, 1]] + gk[f[:, 2]]) / 3.0

    if c_mean is not None and np.any(c_mean):
        norm = np.linalg.norm(curv.mean_normal, axis=1)
        orient = np.sign(np.einsum("ij,ij->i", curv.vertex_normal, curv.mean_normal))
        safe = np.where(norm > 0.0, norm, 1.0)
        w = np.where(norm > 0.0, c_mean * orient / safe, 0.0)
        u = -0.5 * (w[:, None] * curv.mean_normal) / geom.vertex_area[:, None]
        # L_N column action: only the z component of dv is nonzero.
        grad += lap.neumann @ u[:, 2]
        beta = 2.0 * np.einsum("ij,ij->i", u, curv.mean_normal)
        w_area += (beta[f[:, 0]] + beta[f[:, 1]] + beta[f[:, 2]]) / 3.0
        # dL_N entries contract with u rows against positions.
        q = 0.5 * np.einsum("ij,ij->i", u[src] - u[dst], geom.v[dst] - geom.v[src])
        w_cot += q

    if np.any(w_cot):
        z = geom.v[:, 2]
        scale = w_cot / (2.0 * geom.face_area[fidx])
        grad += np.bincount(src, weights=scale * (z[dst] - z[opp]), minlength=n)
        grad += np.bincount(dst, weights=scale * (z[src] - z[opp]), minlength=n)
        grad += np.bincount(opp, weights=scale * (2.0 * z[opp] - z[src] - z[dst]),
                            minlength=n)
        w_area += np.bincount(fidx, weights=-w_cot * geom.cot / geom.face_area[fidx],
                              minlength=mesh.n_faces)

    if np.any(w_area):
        d_area = _per_face_area_partials(mesh, geom)
        for s in range(3):
            grad += np.bincount(f[:, s], weights=w_area * d_area[:, s], minlength=n)
    return grad
