"""Equilibrium density and capacity of a planar aperture.

The aperture Lambda is a bounded Lipschitz domain in the plane.  The
operator of interest is the Riesz potential

    L[mu](x) = integral over Lambda of mu(y) / (pi |x - y|) dy,

and the equilibrium density is the solution of L[mu] = 1 on Lambda.  The
capacity of the aperture is the pairing

    c_Lambda = (mu, 1) = integral of mu,

which for the unit disk has the closed form c = 2 with density
mu(x) = (1/pi) (1 - |x|^2)^(-1/2).  Rescaling the aperture by a factor
eps rescales the capacity linearly, c_{eps Lambda} = eps c_Lambda.

Discretisation is a panel Galerkin scheme with piecewise-constant
densities.  The aperture is cut into panels carrying one node (the
panel centroid) and one weight (the exact panel area), and the matrix
entry A_ij approximates the double integral of the kernel over the
panel pair:

* well-separated pairs use the midpoint rule with a second-moment
  correction,

      A_ij = (w_i w_j / pi) [1/d + (3 n.S n - tr S) / (2 d^3)],

  where d is the centroid distance, n the unit offset and S the sum of
  the exact panel covariance matrices, which makes the far error
  fourth order in panel size over distance;
* nearby pairs (centroid distance below a multiple of the panel
  diameters) are refined into subcell clusters of the same corrected
  rule, which restores accuracy and positive definiteness for the thin
  graded panels near the rim;
* the self-term of a panel uses the exact double integral over an
  equal-area disk,

      A_ii = (16 / 3) rho_i^3,   rho_i = sqrt(w_i / pi),

  (exact for disk panels since int int 1/|x-y| dx dy = (16 pi / 3) R^3
  over a disk of radius R, so a one-panel disk mesh of radius r has
  self-term (16/3) r^3 with no extra normalisation), with panels first
  split into near-isotropic subcells.

On polar meshes congruent panel pairs (same radial intervals and
angular offset) share one computed value, which keeps the near-field
cost linear in the node count.

With the load vector b_i = w_i the Galerkin solve A mu = b yields nodal
density values mu_i, the capacity b . mu, and the energy identity
mu^T A mu = (mu, 1) by construction.

Disk meshes are polar with radial grading r = sin(pi t / 2) towards the
rim, where the density blows up like (1 - r^2)^(-1/2).  Ellipses reuse
the disk mesh under the affine map (x, y) -> (a x, b y); polygons are
fan-triangulated from the vertex centroid and refined by edge midpoint
subdivision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial import cKDTree

__all__ = [
    "ApertureMesh",
    "EquilibriumDensity",
    "DegenerateMeshError",
    "NotPositiveDefiniteError",
    "DISK_CAPACITY",
    "disk_mesh",
    "ellipse_mesh",
    "polygon_mesh",
    "disk_panel_mesh",
    "assemble_riesz_matrix",
    "solve_equilibrium",
    "scaled_capacity",
    "disk_density_exact",
    "export_density_csv",
    "capacity_record",
    "save_capacity_json",
]

#: Capacity of the unit disk, (L^{-1}[1], 1) in closed form.
DISK_CAPACITY = 2.0

#: Self-term coefficient: int int 1/(pi |x-y|) over a disk panel pair
#: equals (16/3) R^3.
_DISK_SELF_COEFF = 16.0 / 3.0


class DegenerateMeshError(ValueError):
    """A panel has vanishing or negative area."""


class NotPositiveDefiniteError(ValueError):
    """The assembled Galerkin matrix is not positive definite."""


@dataclass(frozen=True)
class ApertureMesh:
    """Panel mesh of an aperture.

    nodes have shape (N, 2) and lie strictly inside the aperture;
    weights are the exact panel areas and sum to the aperture area.
    Panel geometry is kept for near-field subcell refinement:

    * kind "sector": panel_data rows (r0, r1, th0, th1) in reference
      disk coordinates, mapped by the affine stretch ``affine``;
    * kind "triangle": panel_data rows (x0, y0, x1, y1, x2, y2);
    * kind "disk": panel_data rows (cx, cy, R), self-term exact.
    """

    shape: str
    nodes: np.ndarray
    weights: np.ndarray
    resolution: int
    panel_kind: str
    panel_data: np.ndarray
    affine: Tuple[float, float] = (1.0, 1.0)
    params: tuple = field(default=())

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError("nodes must have shape (N, 2)")
        if weights.shape != (nodes.shape[0],):
            raise ValueError("weights must have shape (N,)")
        if np.any(weights <= 0.0):
            raise DegenerateMeshError("panel with non-positive area")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "panel_data", np.asarray(self.panel_data, dtype=float))

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def area(self) -> float:
        return float(self.weights.sum())

    def extents(self) -> np.ndarray:
        """Per-panel (N, 2) edge lengths along the two panel directions."""
        if self.panel_kind == "sector":
            stretch = max(self.affine)
            r0, r1, th0, th1 = self.panel_data.T
            return np.column_stack(
                [stretch * (r1 - r0), stretch * r1 * (th1 - th0)]
            )
        if self.panel_kind == "triangle":
            v = self.panel_data.reshape(-1, 3, 2)
            e = np.stack(
                [
                    np.linalg.norm(v[:, 1] - v[:, 0], axis=1),
                    np.linalg.norm(v[:, 2] - v[:, 1], axis=1),
                    np.linalg.norm(v[:, 0] - v[:, 2], axis=1),
                ],
                axis=1,
            ).max(axis=1)
            return np.column_stack([e, e])
        # disk panels
        d = 2.0 * self.panel_data[:, 2]
        return np.column_stack([d, d])

    def scaled(self, factor: float) -> "ApertureMesh":
        """Mesh of the aperture rescaled by ``factor`` about the origin."""
        if factor <= 0.0:
            raise ValueError("scale factor must be positive")
        if self.panel_kind == "sector":
            data = self.panel_data.copy()
            data[:, :2] *= factor
        elif self.panel_kind == "triangle":
            data = self.panel_data * factor
        else:
            data = self.panel_data * factor
        return ApertureMesh(
            shape=self.shape,
            nodes=self.nodes * factor,
            weights=self.weights * factor**2,
            resolution=self.resolution,
            panel_kind=self.panel_kind,
            panel_data=data,
            affine=self.affine,
            params=self.params + (("scale", factor),),
        )

    def rotated(self, angle: float) -> "ApertureMesh":
        """Mesh rigidly rotated about the origin (disk meshes only)."""
        if self.panel_kind != "sector" or self.affine != (1.0, 1.0):
            raise ValueError("rotation supported for unit-disk meshes only")
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        data = self.panel_data.copy()
        data[:, 2:] += angle
        return ApertureMesh(
            shape=self.shape,
            nodes=self.nodes @ rot.T,
            weights=self.weights,
            resolution=self.resolution,
            panel_kind="sector",
            panel_data=data,
            affine=self.affine,
            params=self.params + (("rotation", angle),),
        )


@dataclass(frozen=True)
class EquilibriumDensity:
    """Nodal values of the equilibrium density and the induced capacity."""

    mesh: ApertureMesh
    values: np.ndarray
    capacity: float


def _sector_cells(r0, r1, th0, th1, affine=(1.0, 1.0)):
    """Centroids, exact areas and covariances of sector cells, mapped.

    Inputs are arrays of equal length.  The centroid and covariance of
    the mapped cell follow from the sector moments because the map is
    affine: areas scale by a*b, centroids map directly, covariances
    conjugate with diag(a, b).
    """
    r0 = np.asarray(r0, dtype=float)
    r1 = np.asarray(r1, dtype=float)
    th0 = np.asarray(th0, dtype=float)
    th1 = np.asarray(th1, dtype=float)
    dth = th1 - th0
    thc = 0.5 * (th0 + th1)
    num = r1**3 - r0**3
    den = r1**2 - r0**2
    # Radial area centroid times the angular smearing factor sinc(dth/2).
    rc = (2.0 / 3.0) * num / den * np.sinc(0.5 * dth / math.pi)
    nodes = np.column_stack(
        [affine[0] * rc * np.cos(thc), affine[1] * rc * np.sin(thc)]
    )
    areas = 0.5 * den * dth * (affine[0] * affine[1])
    # Second moments in the bisector frame (x along the bisector):
    # Ixx = (r1^4 - r0^4)/4 * (dth + sin dth)/2, Iyy with the minus sign,
    # Ixy = 0; subtract the centroid term and rotate to global axes.
    quart = 0.25 * (r1**4 - r0**4)
    area_ref = 0.5 * den * dth
    ixx = quart * 0.5 * (dth + np.sin(dth)) / area_ref - rc**2
    iyy = quart * 0.5 * (dth - np.sin(dth)) / area_ref
    c, s = np.cos(thc), np.sin(thc)
    cxx = affine[0] ** 2 * (ixx * c * c + iyy * s * s)
    cyy = affine[1] ** 2 * (ixx * s * s + iyy * c * c)
    cxy = affine[0] * affine[1] * ((ixx - iyy) * c * s)
    cov = np.stack([cxx, cxy, cyy], axis=1)
    return nodes, areas, cov


def disk_mesh(resolution: int = 24) -> ApertureMesh:
    """Polar panel mesh of the unit disk, graded towards the rim.

    ``resolution`` is the number of radial rings; the node count grows
    roughly like 4.4 * resolution^2.  Radial edges follow
    r = sin(pi t / 2) with t uniform, so rings shrink quadratically near
    the rim where the equilibrium density behaves like
    (1 - r^2)^(-1/2).  Panels are annular sectors with exact areas and
    centroid nodes; the angular count per ring keeps panels near
    isotropic up to a cap of 8 * resolution.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    t_edges = np.linspace(0.0, 1.0, resolution + 1)
    r_edges = np.sin(0.5 * math.pi * t_edges)
    angular_cap = 8 * resolution
    nodes = []
    weights = []
    data = []
    for r0, r1 in zip(r_edges[:-1], r_edges[1:]):
        dr = r1 - r0
        if dr <= 0.0:
            raise DegenerateMeshError("empty radial ring")
        if r0 == 0.0:
            # Central cell: one full disk panel with exact self-term.
            n_ang = 1
        else:
            n_ang = int(math.ceil(math.pi * (r0 + r1) / dr))
            n_ang = min(max(n_ang, 8), angular_cap)
        th_edges = np.linspace(0.0, 2.0 * math.pi, n_ang + 1)
        th0, th1 = th_edges[:-1], th_edges[1:]
        cell_nodes, cell_areas, _ = _sector_cells(
            np.full(n_ang, r0), np.full(n_ang, r1), th0, th1
        )
        nodes.append(cell_nodes)
        weights.append(cell_areas)
        data.append(
            np.column_stack([np.full(n_ang, r0), np.full(n_ang, r1), th0, th1])
        )
    return ApertureMesh(
        shape="unit_disk",
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        resolution=resolution,
        panel_kind="sector",
        panel_data=np.concatenate(data),
    )


def ellipse_mesh(a: float, b: float, resolution: int = 24) -> ApertureMesh:
    """Mesh of the ellipse with semi-axes (a, b): affine image of the disk."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("semi-axes must be positive")
    disk = disk_mesh(resolution)
    return ApertureMesh(
        shape="ellipse",
        nodes=disk.nodes * np.array([a, b]),
        weights=disk.weights * (a * b),
        resolution=resolution,
        panel_kind="sector",
        panel_data=disk.panel_data,
        affine=(float(a), float(b)),
        params=(float(a), float(b)),
    )


def polygon_mesh(vertices: Sequence[Sequence[float]], resolution: int = 4) -> ApertureMesh:
    """Mesh of a polygon, fan-triangulated from the vertex centroid.

    ``resolution`` is the number of uniform edge-midpoint subdivisions of
    each fan triangle, so each contributes 4**resolution panels.  The
    polygon must be star shaped with respect to its vertex centroid
    (convex polygons always qualify); orientation does not matter.
    """
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
        raise ValueError("need at least three 2D vertices")
    centroid = verts.mean(axis=0)
    tris = []
    for i in range(verts.shape[0]):
        tris.extend(
            _subdivide(
                np.array([centroid, verts[i], verts[(i + 1) % verts.shape[0]]]),
                resolution,
            )
        )
    tri_arr = np.asarray(tris)
    areas = 0.5 * np.abs(
        (tri_arr[:, 1, 0] - tri_arr[:, 0, 0]) * (tri_arr[:, 2, 1] - tri_arr[:, 0, 1])
        - (tri_arr[:, 2, 0] - tri_arr[:, 0, 0]) * (tri_arr[:, 1, 1] - tri_arr[:, 0, 1])
    )
    if np.any(areas <= 0.0):
        raise DegenerateMeshError("degenerate triangle in polygon mesh")
    return ApertureMesh(
        shape="polygon",
        nodes=tri_arr.mean(axis=1),
        weights=areas,
        resolution=resolution,
        panel_kind="triangle",
        panel_data=tri_arr.reshape(-1, 6),
        params=tuple(map(tuple, verts)),
    )


def disk_panel_mesh(radius: float, center=(0.0, 0.0)) -> ApertureMesh:
    """One-panel mesh consisting of a single disk panel.

    The self-term of this panel is the exact value (16/3) radius^3.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    cx, cy = float(center[0]), float(center[1])
    return ApertureMesh(
        shape="disk_panel",
        nodes=np.array([[cx, cy]]),
        weights=np.array([math.pi * radius**2]),
        resolution=1,
        panel_kind="disk",
        panel_data=np.array([[cx, cy, float(radius)]]),
    )


def _subdivide(tri: np.ndarray, levels: int):
    tris = [tri]
    for _ in range(levels):
        nxt = []
        for t in tris:
            m01 = 0.5 * (t[0] + t[1])
            m12 = 0.5 * (t[1] + t[2])
            m20 = 0.5 * (t[2] + t[0])
            nxt.extend(
                [
                    np.array([t[0], m01, m20]),
                    np.array([m01, t[1], m12]),
                    np.array([m20, m12, t[2]]),
                    np.array([m01, m12, m20]),
                ]
            )
        tris = nxt
    return tris


def _panel_subcells(mesh: ApertureMesh, index: int, n1: int, n2: int):
    """Split panel ``index`` into subcells: (subnodes, subareas, subcovs)."""
    if mesh.panel_kind == "sector":
        r0, r1, th0, th1 = mesh.panel_data[index]
        r_edges = np.linspace(r0, r1, n1 + 1)
        th_edges = np.linspace(th0, th1, n2 + 1)
        rr0, tt0 = np.meshgrid(r_edges[:-1], th_edges[:-1], indexing="ij")
        rr1, tt1 = np.meshgrid(r_edges[1:], th_edges[1:], indexing="ij")
        return _sector_cells(
            rr0.ravel(), rr1.ravel(), tt0.ravel(), tt1.ravel(), mesh.affine
        )
    if mesh.panel_kind == "triangle":
        n = max(n1, n2)
        v = mesh.panel_data[index].reshape(3, 2)
        e1 = (v[1] - v[0]) / n
        e2 = (v[2] - v[0]) / n
        nodes = []
        for i in range(n):
            for j in range(n - i):
                base = v[0] + i * e1 + j * e2
                nodes.append(base + (e1 + e2) / 3.0)
                if i + j < n - 1:
                    # Downward subcell: point reflection leaves the
                    # covariance unchanged.
                    nodes.append(base + (2.0 / 3.0) * (e1 + e2))
        nodes = np.asarray(nodes)
        area = mesh.weights[index] / (n * n)
        covs = np.tile(_triangle_cov(e1, e2), (nodes.shape[0], 1))
        return nodes, np.full(nodes.shape[0], area), covs
    # disk panel: polar split
    cx, cy, radius = mesh.panel_data[index]
    r_edges = np.linspace(0.0, radius, n1 + 1)
    th_edges = np.linspace(0.0, 2.0 * math.pi, max(n2, 4) + 1)
    rr0, tt0 = np.meshgrid(r_edges[:-1], th_edges[:-1], indexing="ij")
    rr1, tt1 = np.meshgrid(r_edges[1:], th_edges[1:], indexing="ij")
    nodes, areas, covs = _sector_cells(rr0.ravel(), rr1.ravel(), tt0.ravel(), tt1.ravel())
    return nodes + np.array([cx, cy]), areas, covs


def _triangle_cov(e1, e2) -> np.ndarray:
    """Covariance (cxx, cxy, cyy) of a uniform triangle spanned by e1, e2.

    The reference right triangle has covariance [[1/18, -1/36],
    [-1/36, 1/18]]; a linear map B conjugates it to B C B^T, which is
    invariant under the point reflection used for downward subcells.
    """
    b = np.column_stack([e1, e2])
    c = b @ np.array([[1.0 / 18.0, -1.0 / 36.0], [-1.0 / 36.0, 1.0 / 18.0]]) @ b.T
    return np.array([c[0, 0], c[0, 1], c[1, 1]])


def _mesh_covariances(mesh: ApertureMesh) -> np.ndarray:
    """Exact per-panel covariances as rows (cxx, cxy, cyy)."""
    if mesh.panel_kind == "sector":
        r0, r1, th0, th1 = mesh.panel_data.T
        _, _, cov = _sector_cells(r0, r1, th0, th1, mesh.affine)
        return cov
    if mesh.panel_kind == "triangle":
        v = mesh.panel_data.reshape(-1, 3, 2)
        return np.array(
            [_triangle_cov(t[1] - t[0], t[2] - t[0]) for t in v]
        )
    # disk panels: isotropic covariance R^2/4.
    quarter = 0.25 * mesh.panel_data[:, 2] ** 2
    return np.column_stack([quarter, np.zeros(mesh.size), quarter])


def _pair_block(nodes_i, w_i, cov_i, nodes_j, w_j, cov_j):
    """Moment-corrected midpoint value of the pair double integral."""
    dx = nodes_i[:, 0, None] - nodes_j[None, :, 0]
    dy = nodes_i[:, 1, None] - nodes_j[None, :, 1]
    d2 = dx * dx + dy * dy
    d = np.sqrt(d2)
    q = (
        (cov_i[:, 0, None] + cov_j[None, :, 0]) * dx * dx
        + 2.0 * (cov_i[:, 1, None] + cov_j[None, :, 1]) * dx * dy
        + (cov_i[:, 2, None] + cov_j[None, :, 2]) * dy * dy
    )
    tr = (cov_i[:, 0] + cov_i[:, 2])[:, None] + (cov_j[:, 0] + cov_j[:, 2])[None, :]
    kern = (1.0 + (3.0 * q / d2 - tr) / (2.0 * d2)) / d
    return float(np.einsum("i,j,ij->", w_i, w_j, kern) / math.pi)


def _cluster_self(sub):
    """Cluster approximation of a panel self-term."""
    nodes, w, cov = sub
    if nodes.shape[0] == 1:
        return _DISK_SELF_COEFF * (w[0] / math.pi) ** 1.5
    dx = nodes[:, 0, None] - nodes[None, :, 0]
    dy = nodes[:, 1, None] - nodes[None, :, 1]
    d2 = dx * dx + dy * dy
    np.fill_diagonal(d2, 1.0)
    d = np.sqrt(d2)
    q = (
        (cov[:, 0, None] + cov[None, :, 0]) * dx * dx
        + 2.0 * (cov[:, 1, None] + cov[None, :, 1]) * dx * dy
        + (cov[:, 2, None] + cov[None, :, 2]) * dy * dy
    )
    tr = (cov[:, 0] + cov[:, 2])[:, None] + (cov[:, 0] + cov[:, 2])[None, :]
    kern = (1.0 + (3.0 * q / d2 - tr) / (2.0 * d2)) / d
    np.fill_diagonal(kern, 0.0)
    cross = float(np.einsum("i,j,ij->", w, w, kern) / math.pi)
    own = float(_DISK_SELF_COEFF * np.sum((w / math.pi) ** 1.5))
    return cross + own


def assemble_riesz_matrix(
    mesh: ApertureMesh,
    check: bool = True,
    near_factor: float = 4.0,
    sub_target: float = 4.0,
    sub_cap: int = 48,
    chunk: int = 1024,
) -> np.ndarray:
    """Galerkin matrix of the Riesz potential on a panel mesh.

    Well-separated pairs use the second-moment corrected midpoint rule;
    pairs whose centroid distance is below ``near_factor`` times the
    mean panel diameter are refined into subcell clusters sized so that
    subcells are at most distance / ``sub_target`` across (capped at
    ``sub_cap`` per direction).  Diagonal entries use the equal-area
    disk value (16/3) rho^3 on near-isotropic subcells; single disk
    panels keep the exact analytic value.  Congruent sector pairs on
    unstretched polar meshes share one computed value.  The matrix is
    symmetric by construction; with ``check`` a Cholesky factorisation
    verifies positive definiteness.
    """
    if np.any(mesh.weights <= 0.0):
        raise DegenerateMeshError("panel with non-positive area")
    w = mesh.weights
    x = mesh.nodes
    n = mesh.size
    cov = _mesh_covariances(mesh)
    tr = cov[:, 0] + cov[:, 2]

    # Far field: moment-corrected midpoint rule, assembled in row blocks.
    mat = np.empty((n, n))
    for s in range(0, n, chunk):
        sl = slice(s, min(s + chunk, n))
        dx = x[sl, 0, None] - x[None, :, 0]
        dy = x[sl, 1, None] - x[None, :, 1]
        d2 = dx * dx + dy * dy
        d2[d2 == 0.0] = 1.0
        q = (
            (cov[sl, 0, None] + cov[None, :, 0]) * dx * dx
            + 2.0 * (cov[sl, 1, None] + cov[None, :, 1]) * dx * dy
            + (cov[sl, 2, None] + cov[None, :, 2]) * dy * dy
        )
        trs = tr[sl, None] + tr[None, :]
        d = np.sqrt(d2)
        mat[sl] = (
            w[sl, None] * w[None, :] / math.pi
        ) * (1.0 + (3.0 * q / d2 - trs) / (2.0 * d2)) / d

    ext = mesh.extents()
    diam = np.hypot(ext[:, 0], ext[:, 1])
    subcache = {}
    valcache = {}
    dedup = mesh.panel_kind == "sector" and mesh.affine == (1.0, 1.0)

    def subcells(i, n1, n2):
        key = (i, n1, n2)
        if key not in subcache:
            subcache[key] = _panel_subcells(mesh, i, n1, n2)
        return subcache[key]

    def counts(i, scale):
        n1 = int(np.clip(math.ceil(sub_target * ext[i, 0] / scale), 1, sub_cap))
        n2 = int(np.clip(math.ceil(sub_target * ext[i, 1] / scale), 1, sub_cap))
        return n1, n2

    def sector_key(i):
        r0, r1, th0, th1 = mesh.panel_data[i]
        return (round(r0, 12), round(r1, 12), round(th1 - th0, 12))

    # Near field: subcell clusters, with congruence deduplication on
    # unstretched polar meshes (values depend only on the two radial
    # intervals, the angular widths and the absolute angular offset).
    if n > 1:
        tree = cKDTree(x)
        typical = float(np.percentile(diam, 99))
        pairs = [tree.query_pairs(near_factor * typical, output_type="ndarray")]
        # Panels with outlier diameters (such as the full-disk centre
        # cell) get their own wider neighbour search.
        for i in np.nonzero(diam > typical)[0]:
            radius = near_factor * 0.5 * (diam[i] + float(diam.max()))
            js = tree.query_ball_point(x[i], radius)
            js = [j for j in js if j > i]
            if js:
                pairs.append(np.column_stack([np.full(len(js), i), js]))
        pairs = np.unique(np.concatenate(pairs, axis=0), axis=0)
        for i, j in pairs:
            d = math.hypot(x[i, 0] - x[j, 0], x[i, 1] - x[j, 1])
            if d > near_factor * 0.5 * (diam[i] + diam[j]):
                continue
            ci = counts(i, d)
            cj = counts(j, d)
            if dedup:
                thci = 0.5 * (mesh.panel_data[i, 2] + mesh.panel_data[i, 3])
                thcj = 0.5 * (mesh.panel_data[j, 2] + mesh.panel_data[j, 3])
                dth = abs(
                    (thci - thcj + math.pi) % (2.0 * math.pi) - math.pi
                )
                key = (sector_key(i), sector_key(j), round(dth, 12), ci, cj)
                if key in valcache:
                    val = valcache[key]
                else:
                    val = _pair_block(*subcells(i, *ci), *subcells(j, *cj))
                    valcache[key] = val
            else:
                val = _pair_block(*subcells(i, *ci), *subcells(j, *cj))
            mat[i, j] = val
            mat[j, i] = val

    # Self-terms: disk panels are exact; other panel shapes are split
    # into near-isotropic subcells first.
    diag = _DISK_SELF_COEFF * (w / math.pi) ** 1.5
    if mesh.panel_kind != "disk":
        selfcache = {}
        full_disk = np.zeros(n, dtype=bool)
        if mesh.panel_kind == "sector" and mesh.affine == (1.0, 1.0):
            pd_ = mesh.panel_data
            full_disk = (pd_[:, 0] == 0.0) & (
                np.abs(pd_[:, 3] - pd_[:, 2] - 2.0 * math.pi) < 1e-12
            )
        for i in range(n):
            if full_disk[i]:
                # Full-disk sector: the equal-area value is exact.
                continue
            ci = counts(i, 0.5 * float(ext[i].min()))
            if dedup:
                key = (sector_key(i), ci)
                if key in selfcache:
                    diag[i] = selfcache[key]
                    continue
                diag[i] = _cluster_self(subcells(i, *ci))
                selfcache[key] = diag[i]
            else:
                diag[i] = _cluster_self(subcells(i, *ci))
    np.fill_diagonal(mat, diag)

    if check:
        try:
            np.linalg.cholesky(mat)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(
                "Riesz Galerkin matrix is not positive definite"
            ) from exc
    return mat


def solve_equilibrium(
    mesh: ApertureMesh, matrix: Optional[np.ndarray] = None
) -> EquilibriumDensity:
    """Solve L[mu] = 1 on the mesh; returns density values and capacity.

    Uses a dense Cholesky solve of the Galerkin system A mu = w.  The
    capacity is the discrete pairing (mu, 1) = w . mu and equals the
    quadratic form mu^T A mu exactly.
    """
    if matrix is None:
        matrix = assemble_riesz_matrix(mesh, check=False)
    try:
        factor = cho_factor(matrix, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            "Riesz Galerkin matrix is not positive definite"
        ) from exc
    mu = cho_solve(factor, mesh.weights)
    capacity = float(mesh.weights @ mu)
    return EquilibriumDensity(mesh=mesh, values=mu, capacity=capacity)


def scaled_capacity(unit_capacity: float, epsilon: float) -> float:
    """Capacity of the aperture rescaled by ``epsilon``: eps * c_Lambda."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    return epsilon * unit_capacity


def disk_density_exact(r) -> np.ndarray:
    """Equilibrium density of the unit disk, (1/pi)(1 - r^2)^(-1/2)."""
    r = np.asarray(r, dtype=float)
    return 1.0 / (math.pi * np.sqrt(1.0 - r**2))


def export_density_csv(density: EquilibriumDensity, path) -> None:
    """Write nodes, weights and density values as CSV (x1,x2,weight,density)."""
    from .serialize import write_csv

    rows = np.column_stack(
        [density.mesh.nodes, density.mesh.weights, density.values]
    )
    write_csv(path, ["x1", "x2", "weight", "density"], rows)


def capacity_record(density: EquilibriumDensity) -> dict:
    """JSON-ready record of a capacity computation."""
    return {
        "shape": density.mesh.shape,
        "resolution": density.mesh.resolution,
        "nodes": density.mesh.size,
        "capacity": density.capacity,
    }


def save_capacity_json(density: EquilibriumDensity, path) -> None:
    with open(path, "w") as fh:
        json.dump(capacity_record(density), fh, indent=2, sort_keys=True)
        fh.write("\n")
