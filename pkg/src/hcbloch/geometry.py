"""Unit-cell geometry: inclusion shapes, snapped triangulation, periodic map.

The cell is Q = [0, 1]^2 with an inclusion P strictly inside it. Meshes are a
structured "union-jack" triangulation of Q (alternating diagonals, so a
centred inclusion keeps the square's full symmetry group) whose nodes next to
the inclusion boundary are projected onto it. After snapping no edge crosses
the boundary, so every triangle sits entirely in P or in its complement.
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import GeometryError, ResolutionError

REGION_PC = 0
REGION_P = 1

TAG_INTERIOR_P = 0
TAG_INTERFACE = 1
TAG_INTERIOR_PC = 2
TAG_CELL_EDGE = 3

TAG_NAMES = {
    TAG_INTERIOR_P: "interior_P",
    TAG_INTERFACE: "interface",
    TAG_INTERIOR_PC: "interior_Pc",
    TAG_CELL_EDGE: "cell_edge",
}

MIN_INTERFACE_NODES = 16
# area floors (fraction of h^2) tried in turn when snapping
AREA_FLOORS = (0.05, 1e-4)


@dataclass(frozen=True)
class Disk:
    radius: float
    center: tuple = (0.5, 0.5)

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("disk radius must be positive")
        cx, cy = self.center
        if self.radius + max(abs(cx - 0.5), abs(cy - 0.5)) >= 0.5:
            raise GeometryError("inclusion not strictly interior to the unit cell")

    @property
    def area(self):
        return np.pi * self.radius**2

    def margin(self):
        cx, cy = self.center
        return 0.5 - self.radius - max(abs(cx - 0.5), abs(cy - 0.5))

    def signed_distance(self, pts):
        c = np.asarray(self.center)
        return np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) - self.radius

    def project(self, pts):
        c = np.asarray(self.center)
        d = pts - c
        rho = np.hypot(d[:, 0], d[:, 1])
        if np.any(rho == 0.0):
            raise ResolutionError("cannot project the disk center onto its boundary")
        return c + d * (self.radius / rho)[:, None]

    def corners(self):
        return np.empty((0, 2))


@dataclass(frozen=True)
class Polygon:
    """Simple polygon given by its vertices (either orientation)."""

    vertices: tuple

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise GeometryError("polygon needs at least three 2-D vertices")
        if np.any(v <= 0.0) or np.any(v >= 1.0):
            raise GeometryError("inclusion not strictly interior to the unit cell")
        object.__setattr__(self, "vertices", tuple(map(tuple, v)))
        if self.area <= 0:
            raise GeometryError("polygon is degenerate")

    @property
    def _v(self):
        return np.asarray(self.vertices)

    @property
    def area(self):
        x, y = self._v.T
        return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    def margin(self):
        v = self._v
        return float(min(v.min(), (1 - v).min()))

    def _nearest(self, pts):
        v = self._v
        a, b = v, np.roll(v, -1, axis=0)
        ab = b - a
        # (n_pts, n_edges) closest points on every edge
        t = ((pts[:, None, :] - a[None]) * ab[None]).sum(-1) / (ab**2).sum(-1)[None]
        t = np.clip(t, 0.0, 1.0)
        q = a[None] + t[..., None] * ab[None]
        dist = np.linalg.norm(pts[:, None, :] - q, axis=-1)
        k = dist.argmin(axis=1)
        idx = np.arange(len(pts))
        return q[idx, k], dist[idx, k]

    def _inside(self, pts):
        v = self._v
        x, y = pts[:, 0:1], pts[:, 1:2]
        x0, y0 = v[:, 0][None], v[:, 1][None]
        x1, y1 = np.roll(v[:, 0], -1)[None], np.roll(v[:, 1], -1)[None]
        cond = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        return (cond & (x < xi)).sum(axis=1) % 2 == 1

    def signed_distance(self, pts):
        _, dist = self._nearest(pts)
        return np.where(self._inside(pts), -dist, dist)

    def project(self, pts):
        q, _ = self._nearest(pts)
        return q

    def corners(self):
        return self._v


@dataclass(frozen=True, eq=False)
class CellGeometry:
    """Triangulated unit cell with the inclusion resolved by the mesh.

    Nodes live on an ``(n + 1) x (n + 1)`` grid (some moved onto the inclusion
    boundary). Degrees of freedom are the ``n * n`` periodic classes; ``dof``
    maps every node to its class.
    """

    inclusion: object
    h: float
    n: int
    nodes: np.ndarray
    triangles: np.ndarray
    region: np.ndarray
    boundary_tag: np.ndarray
    periodic_map: np.ndarray
    dof: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_dofs(self):
        return self.n * self.n

    @property
    def areas(self):
        if "areas" not in self._cache:
            p = self.nodes[self.triangles]
            e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
            self._cache["areas"] = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        return self._cache["areas"]

    def area(self, region="Q"):
        return float(self.areas[self.triangle_mask(region)].sum())

    def triangle_mask(self, region):
        if region == "Q":
            return np.ones(len(self.triangles), dtype=bool)
        if region == "P":
            return self.region == REGION_P
        if region == "Pc":
            return self.region == REGION_PC
        raise ValueError(f"unknown region {region!r}; expected 'P', 'Pc' or 'Q'")

    def _dof_set(self, key, nodes_mask):
        if key not in self._cache:
            self._cache[key] = np.unique(self.dof[nodes_mask])
        return self._cache[key]

    @property
    def interior_p_dofs(self):
        """Dofs strictly inside P (the Dirichlet unknowns)."""
        return self._dof_set("pi", self.boundary_tag == TAG_INTERIOR_P)

    @property
    def interface_dofs(self):
        return self._dof_set("gamma", self.boundary_tag == TAG_INTERFACE)

    @property
    def pc_dofs(self):
        """Dofs touched by complement triangles (interface included)."""
        if "pc" not in self._cache:
            tri = self.triangles[self.region == REGION_PC]
            self._cache["pc"] = np.unique(self.dof[tri.ravel()])
        return self._cache["pc"]

    @property
    def p_dofs(self):
        """Dofs touched by inclusion triangles (interface included)."""
        if "p" not in self._cache:
            tri = self.triangles[self.region == REGION_P]
            self._cache["p"] = np.unique(self.dof[tri.ravel()])
        return self._cache["p"]

    def dof_coordinates(self):
        """Coordinates of one representative node per dof."""
        xy = np.empty((self.n_dofs, 2))
        xy[self.dof] = self.nodes
        # masters are written last for corner/edge classes
        masters = self.periodic_map == np.arange(len(self.nodes))
        xy[self.dof[masters]] = self.nodes[masters]
        return xy

    def to_text(self):
        """Plain-text export: header, node lines, triangle lines."""
        lines = [f"nodes {len(self.nodes)} triangles {len(self.triangles)}"]
        for (x, y), tag in zip(self.nodes, self.boundary_tag):
            lines.append(f"{x:.17g} {y:.17g} {TAG_NAMES[int(tag)]}")
        for (i, j, k), reg in zip(self.triangles, self.region):
            lines.append(f"{i} {j} {k} {'P' if reg == REGION_P else 'Pc'}")
        return "\n".join(lines) + "\n"


def _grid_triangles(n):
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)  # idx[j, i]
    tris = []
    for j in range(n):
        for i in range(n):
            a, b = idx[j, i], idx[j, i + 1]
            c, d = idx[j + 1, i + 1], idx[j + 1, i]
            if (i + j) % 2 == 0:
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
    return np.array(tris, dtype=np.int64)


def _signed_areas(nodes, tris):
    p = nodes[tris]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _snap_nodes(inclusion, nodes, tris, phi, hh, on_edge):
    """Move endpoints of boundary-crossing edges onto the inclusion boundary.

    Candidates are visited in order of distance to the boundary, with equal
    distances handled together so symmetric inputs give symmetric meshes. A
    snap is refused when it would put all three vertices of a triangle on the
    boundary or shrink a triangle below a floor times ``h^2``; the farther
    endpoint of that edge then gets its turn. Sharp polygon corners may need
    a second sweep with the smaller floor. ``nodes`` and ``phi`` are updated
    in place.
    """
    for floor in AREA_FLOORS:
        _snap_sweep(inclusion, nodes, tris, phi, hh, on_edge, floor * hh * hh)


def _snap_sweep(inclusion, nodes, tris, phi, hh, on_edge, min_area):
    edges = np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [0, 2]]])
    edges = np.unique(np.sort(edges, axis=1), axis=0)
    edges = edges[phi[edges[:, 0]] * phi[edges[:, 1]] < 0]
    if len(edges) == 0:
        return
    level = np.round(np.abs(phi) / hh, 10)
    near = np.unique(edges)
    touching = np.isin(tris, near).any(axis=1)
    local = tris[touching]
    # outside nodes go first within a level: when the boundary passes midway
    # between two nodes, snapping both would collapse their edge
    for lev, side in ((lev, side) for lev in np.unique(level[near]) for side in (1, -1)):
        live = edges[phi[edges[:, 0]] * phi[edges[:, 1]] < 0]
        if len(live) == 0:
            break
        cand = np.unique(live)
        cand = cand[(level[cand] == lev) & (np.sign(phi[cand]) == side)]
        if len(cand) == 0:
            continue
        if np.any(on_edge[cand]):
            raise ResolutionError("snapping would move nodes on the cell boundary")
        trial_phi = phi.copy()
        trial_phi[cand] = 0.0
        trial_nodes = nodes.copy()
        trial_nodes[cand] = inclusion.project(nodes[cand])
        hit = local[np.isin(local, cand).any(axis=1)]
        bad = ((trial_phi[hit] == 0).all(axis=1)) | (_signed_areas(trial_nodes, hit) < min_area)
        cand = cand[~np.isin(cand, hit[bad])]
        nodes[cand] = trial_nodes[cand]
        phi[cand] = 0.0


def _flip_straddling_cells(nodes, tris, phi):
    """Swap the diagonal of grid cells whose triangles still straddle the boundary.

    Triangles ``2c`` and ``2c + 1`` always share grid cell ``c``; the
    opposite diagonal is used when it removes the straddle.
    """
    sgn = np.sign(phi[tris])
    straddle = (sgn > 0).any(axis=1) & (sgn < 0).any(axis=1)
    for c in np.unique(np.nonzero(straddle)[0] // 2):
        t1, t2 = tris[2 * c], tris[2 * c + 1]
        diag = np.intersect1d(t1, t2)
        other = np.setdiff1d(np.union1d(t1, t2), diag)
        new = []
        for v in diag:
            t = np.array([other[0], other[1], v])
            if _signed_areas(nodes, t[None])[0] < 0:
                t = t[[1, 0, 2]]
            new.append(t)
        new = np.array(new)
        s = np.sign(phi[new])
        if not np.any((s > 0).any(axis=1) & (s < 0).any(axis=1)):
            tris[2 * c], tris[2 * c + 1] = new


def build_mesh(inclusion, h):
    """Triangulate the unit cell and snap nodes onto the inclusion boundary.

    Parameters
    ----------
    inclusion : Disk or Polygon
    h : float
        Target edge length; the grid uses ``n = round(1 / h)`` cells per side.

    Returns
    -------
    CellGeometry
    """
    if not h > 0:
        raise ResolutionError("mesh size h must be positive")
    n = max(int(round(1.0 / h)), 2)
    if n % 2:
        n += 1  # even n keeps the union-jack pattern symmetric about the centre
    hh = 1.0 / n
    if inclusion.margin() <= hh:
        raise ResolutionError(
            f"inclusion lies within one mesh cell of the cell boundary (h={hh:.4g})"
        )

    g = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(g, g)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    tris = _grid_triangles(n)
    on_edge = (nodes == 0.0).any(axis=1) | (nodes == 1.0).any(axis=1)

    tol = 1e-12
    fixed = np.zeros(len(nodes), dtype=bool)
    for corner in inclusion.corners():
        k = np.argmin(np.linalg.norm(nodes - corner, axis=1))
        nodes[k] = corner
        fixed[k] = True

    phi = inclusion.signed_distance(nodes)
    phi[fixed] = 0.0
    phi[np.abs(phi) <= tol] = 0.0

    _snap_nodes(inclusion, nodes, tris, phi, hh, on_edge)
    _flip_straddling_cells(nodes, tris, phi)

    sgn = np.sign(phi[tris])
    has_in = (sgn < 0).any(axis=1)
    has_out = (sgn > 0).any(axis=1)
    if np.any(has_in & has_out):
        raise ResolutionError("a triangle still straddles the inclusion boundary")
    centroid = nodes[tris].mean(axis=1)
    all_on = ~has_in & ~has_out
    region = np.where(has_in, REGION_P, REGION_PC)
    if np.any(all_on):
        region[all_on] = np.where(inclusion.signed_distance(centroid[all_on]) < 0, REGION_P, REGION_PC)

    p = nodes[tris]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    if areas.min() <= 1e-6 * hh * hh:
        raise ResolutionError("snapping produced a degenerate or inverted triangle")

    in_p = np.zeros(len(nodes), dtype=bool)
    in_pc = np.zeros(len(nodes), dtype=bool)
    in_p[tris[region == REGION_P].ravel()] = True
    in_pc[tris[region == REGION_PC].ravel()] = True
    tag = np.full(len(nodes), TAG_INTERIOR_PC, dtype=np.int64)
    tag[in_p & ~in_pc] = TAG_INTERIOR_P
    tag[in_p & in_pc] = TAG_INTERFACE
    tag[on_edge] = TAG_CELL_EDGE
    if np.count_nonzero(tag == TAG_INTERFACE) < MIN_INTERFACE_NODES:
        raise ResolutionError(
            f"only {np.count_nonzero(tag == TAG_INTERFACE)} interface nodes; refine h"
        )

    ii = np.tile(np.arange(n + 1), n + 1)
    jj = np.repeat(np.arange(n + 1), n + 1)
    periodic_map = (jj % n) * (n + 1) + (ii % n)
    dof = (jj % n) * n + (ii % n)

    return CellGeometry(
        inclusion=inclusion,
        h=hh,
        n=n,
        nodes=nodes,
        triangles=tris,
        region=region,
        boundary_tag=tag,
        periodic_map=periodic_map,
        dof=dof,
    )


def quadrature_points(geom, region="Q"):
    """Centroid rule per triangle; exact for piecewise-affine integrands.

    Returns ``(points, weights)`` restricted to the triangles of ``region``.
    """
    mask = geom.triangle_mask(region)
    pts = geom.nodes[geom.triangles[mask]].mean(axis=1)
    return pts, geom.areas[mask].copy()
