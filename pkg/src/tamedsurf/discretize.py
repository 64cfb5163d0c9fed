"""Structured triangulations of chart windows, level-set clipping, and graph distances."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components, dijkstra

from .surface import ParametricImmersion, PointGeometry, point_geometry, radial_split

Window = Tuple[float, float, float, float]


class WindowTruncation(ValueError):
    """A requested radius reaches the edge of the sampled window.

    ``safe_radius`` is the largest radius whose extrinsic ball stays inside,
    and ``partial`` holds whatever result could be computed below it.
    """

    def __init__(self, msg, safe_radius=None, partial=None):
        super().__init__(msg)
        self.safe_radius = safe_radius
        self.partial = partial


# ---------------------------------------------------------------------------
# windows
# ---------------------------------------------------------------------------


def _window_boundary(imm, win, n=400):
    u0, u1, v0, v1 = win
    s = np.linspace(0, 1, n)
    pts = [np.stack([u0 + (u1 - u0) * s, np.full(n, v0)], 1),
           np.stack([u0 + (u1 - u0) * s, np.full(n, v1)], 1)]
    if not imm.periodic_u:
        pts += [np.stack([np.full(n, u0), v0 + (v1 - v0) * s], 1),
                np.stack([np.full(n, u1), v0 + (v1 - v0) * s], 1)]
    return np.concatenate(pts)


def window_for_radius(imm: ParametricImmersion, r: float, margin: float = 1.15) -> Window:
    """Smallest chart square (or band, for periodic charts) around the basepoint
    whose boundary stays outside the ambient ball of radius ``margin * r``.

    Compact charts whose boundary never gets that far return the full domain
    minus a sliver at the coordinate singularities.
    """
    du0, du1, dv0, dv1 = imm.domain
    bu, bv = imm.basepoint

    def win(s):
        if imm.periodic_u:
            u = (du0, du1)
        else:
            u = (max(du0, bu - s), min(du1, bu + s))
        return (*u, max(dv0 + 1e-3, bv - s), min(dv1 - 1e-3, bv + s))

    def ok(s):
        b = _window_boundary(imm, win(s))
        return np.linalg.norm(imm.position(b[:, 0], b[:, 1]), axis=-1).min() >= margin * r

    lo, hi = 0.0, 0.5
    while not ok(hi):
        lo, hi = hi, 2 * hi
        if hi > 1e6 or win(hi) == win(lo):
            return win(hi)
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return win(hi)


# ---------------------------------------------------------------------------
# triangle regions
# ---------------------------------------------------------------------------


def _tri_areas(X: np.ndarray, tris: np.ndarray) -> np.ndarray:
    a = X[tris[:, 1]] - X[tris[:, 0]]
    b = X[tris[:, 2]] - X[tris[:, 0]]
    aa, bb, ab = (a * a).sum(1), (b * b).sum(1), (a * b).sum(1)
    return 0.5 * np.sqrt(np.maximum(aa * bb - ab * ab, 0.0))


def _unique_edges(tris: np.ndarray):
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0, return_counts=True)


@dataclass
class TriRegion:
    """A triangle set on the chart: vertices carry chart coordinates, ambient
    positions and the level values used to cut them."""

    imm: ParametricImmersion
    uv: np.ndarray
    X: np.ndarray
    R: np.ndarray
    triangles: np.ndarray
    touches_window: bool = False

    @property
    def area(self) -> float:
        return float(_tri_areas(self.X, self.triangles).sum())

    def triangle_areas(self) -> np.ndarray:
        return _tri_areas(self.X, self.triangles)

    def centroids_uv(self) -> np.ndarray:
        P = self.imm.period
        a, b, c = (self.uv[self.triangles[:, k]] for k in range(3))
        if P is not None:
            b = a + _wrap(b - a, P)
            c = a + _wrap(c - a, P)
        return (a + b + c) / 3

    def integrate(self, fn: Callable[[PointGeometry], np.ndarray]) -> float:
        """Centroid-rule integral of a pointwise geometric quantity."""
        if len(self.triangles) == 0:
            return 0.0
        c = self.centroids_uv()
        g = point_geometry(self.imm, c[:, 0], c[:, 1])
        return float(np.sum(fn(g) * self.triangle_areas()))

    def used_vertices(self) -> np.ndarray:
        return np.unique(self.triangles)

    def boundary_vertices(self) -> np.ndarray:
        if len(self.triangles) == 0:
            return np.zeros(0, int)
        edges, counts = _unique_edges(self.triangles)
        return np.unique(edges[counts == 1])

    def euler_characteristic(self) -> int:
        if len(self.triangles) == 0:
            raise ValueError("empty region")
        edges, _ = _unique_edges(self.triangles)
        return int(len(self.used_vertices()) - len(edges) + len(self.triangles))


def _wrap(d: np.ndarray, P: float) -> np.ndarray:
    d = d.copy()
    d[..., 0] = (d[..., 0] + P / 2) % P - P / 2
    return d


def _edge_roots(imm, uv_a, uv_b, sa, sb, level, value_fn, iters=52):
    """Parameter t in (0, 1) where the level function crosses zero on each edge."""
    t = sa / (sa - sb)
    if value_fn is None:
        return t
    lo, hi = np.zeros_like(t), np.ones_like(t)
    d = uv_b - uv_a
    # +1 when the level value increases from a to b; decided by both ends so a
    # vertex lying exactly on the level keeps its root at that vertex
    orient = np.where(sb >= sa, 1.0, -1.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        p = uv_a + mid[:, None] * d
        f = orient * (value_fn(p) - level)
        neg = f <= 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return 0.5 * (lo + hi)


def radial_value(imm):
    return lambda p: np.linalg.norm(imm.position(p[:, 0], p[:, 1]), axis=-1)


def _crossings(region: TriRegion, edges: np.ndarray, vals: np.ndarray, level: float, value_fn):
    a, b = edges[:, 0], edges[:, 1]
    uv_a, uv_b = region.uv[a], region.uv[b]
    P = region.imm.period
    if P is not None:
        uv_b = uv_a + _wrap(uv_b - uv_a, P)
    t = _edge_roots(region.imm, uv_a, uv_b, vals[a] - level, vals[b] - level, level, value_fn)
    p = uv_a + t[:, None] * (uv_b - uv_a)
    return p, region.imm.position(p[:, 0], p[:, 1])


def clip_region(region: TriRegion, level: float, values: Optional[np.ndarray] = None,
                exact: bool = True, keep: str = "below") -> TriRegion:
    """Restrict ``region`` to ``values <= level`` (or ``>=`` with ``keep='above'``).

    Cut triangles are split at the crossing points on their edges. With
    ``exact`` (and ``values`` left as the extrinsic distance) crossings are
    root-found on the immersion itself; otherwise the vertex values are
    interpolated linearly along edges.
    """
    vals = region.R if values is None else np.asarray(values, float)
    value_fn = radial_value(region.imm) if (exact and values is None) else None
    sign = 1.0 if keep == "below" else -1.0
    s = sign * (vals - level)
    tris = region.triangles
    inside = s[tris] <= 0
    cnt = inside.sum(1)
    full = tris[cnt == 3]
    cut_mask = (cnt == 1) | (cnt == 2)
    cut = tris[cut_mask]
    ins = inside[cut_mask]
    n0 = len(region.uv)
    if len(cut) == 0:
        return TriRegion(region.imm, region.uv, region.X, region.R, full, region.touches_window)

    # roll so the odd vertex (lone inside or lone outside) comes first
    odd = np.where(ins.sum(1) == 1, np.argmax(ins, 1), np.argmin(ins, 1))
    idx = (odd[:, None] + np.arange(3)[None, :]) % 3
    rolled = np.take_along_axis(cut, idx, 1)
    lone_inside = ins.sum(1) == 1
    o, n1, n2 = rolled[:, 0], rolled[:, 1], rolled[:, 2]
    need = np.concatenate([np.stack([o, n1], 1), np.stack([n2, o], 1)])
    key = np.sort(need, 1)
    edges, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    puv, pX = _crossings(region, edges, vals, level, value_fn)
    m = len(cut)

    # a crossing at a vertex lying exactly on the level is that vertex; the
    # zero-area pieces this creates are dropped so the boundary stays open
    on_a, on_b = vals[edges[:, 0]] == level, vals[edges[:, 1]] == level
    snap = np.where(on_a, edges[:, 0], np.where(on_b, edges[:, 1], n0 + np.arange(len(edges))))
    p_on1, p_n2o = snap[inv[:m]], snap[inv[m:]]

    a = lone_inside
    t1 = np.stack([o[a], p_on1[a], p_n2o[a]], 1)
    b = ~lone_inside
    t2 = np.stack([n1[b], n2[b], p_n2o[b]], 1)
    t3 = np.stack([n1[b], p_n2o[b], p_on1[b]], 1)
    pieces = np.concatenate([t1, t2, t3])
    distinct = (pieces[:, 0] != pieces[:, 1]) & (pieces[:, 1] != pieces[:, 2]) & (pieces[:, 0] != pieces[:, 2])
    uv = np.concatenate([region.uv, puv])
    X = np.concatenate([region.X, pX])
    R = np.concatenate([region.R, np.linalg.norm(pX, axis=-1)])
    return TriRegion(region.imm, uv, X, R, np.concatenate([full, pieces[distinct]]), region.touches_window)


# ---------------------------------------------------------------------------
# sampled surfaces
# ---------------------------------------------------------------------------


@dataclass
class SampledSurface:
    imm: ParametricImmersion
    window: Window
    resolution: Tuple[int, int]
    shape: Tuple[int, int]          # vertex grid (nu, nv), u fastest
    periodic: bool
    uv: np.ndarray
    geometry: PointGeometry
    R: np.ndarray
    grad_R_norm: np.ndarray
    normal_defect: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray = field(repr=False, default=None)
    edge_lengths: np.ndarray = field(repr=False, default=None)

    @property
    def X(self) -> np.ndarray:
        return self.geometry.position

    @property
    def n_vertices(self) -> int:
        return len(self.uv)

    def region(self) -> TriRegion:
        return TriRegion(self.imm, self.uv, self.X, self.R, self.triangles)

    @property
    def base_vertex(self) -> int:
        """Vertex nearest the ambient origin."""
        return int(np.argmin(self.R))

    def window_boundary_vertices(self) -> np.ndarray:
        nu, nv = self.shape
        grid = np.arange(nu * nv).reshape(nv, nu)
        sides = [grid[0], grid[-1]]
        if not self.periodic:
            sides += [grid[:, 0], grid[:, -1]]
        return np.unique(np.concatenate(sides))

    @property
    def safe_radius(self) -> float:
        """Largest radius whose extrinsic ball avoids the window boundary."""
        return float(self.R[self.window_boundary_vertices()].min())

    def ball(self, r: float, check: bool = True) -> TriRegion:
        """The extrinsic ball ``R <= r`` with exact boundary crossings."""
        if check and r >= self.safe_radius:
            raise WindowTruncation(
                f"radius {r:g} reaches the window edge (safe radius {self.safe_radius:g})",
                safe_radius=self.safe_radius,
            )
        return clip_region(self.region(), r)

    def annulus(self, r1: float, r2: float, check: bool = True) -> TriRegion:
        return clip_region(self.ball(r2, check), r1, keep="above")

    def export(self, path) -> None:
        """Plain-text dump: vertex lines ``u v x y z ...`` then face lines ``i j k``."""
        with open(path, "w") as fh:
            fh.write(f"# vertices {self.n_vertices} faces {len(self.triangles)}\n")
            for (u, v), x in zip(self.uv, self.X):
                fh.write(" ".join(f"{t:.17g}" for t in (u, v, *x)) + "\n")
            for t in self.triangles:
                fh.write(f"{t[0]} {t[1]} {t[2]}\n")


def triangulate(imm: ParametricImmersion, window: Window, resolution) -> SampledSurface:
    """Two triangles per grid cell; the u-direction wraps when the chart is
    periodic and the window spans the full period."""
    if np.isscalar(resolution):
        resolution = (int(resolution), int(resolution))
    cu, cv = resolution
    if cu < 2 or cv < 2:
        raise ValueError("resolution must be at least 2x2")
    u0, u1, v0, v1 = window
    d0, d1, e0, e1 = imm.domain
    if u0 < d0 or u1 > d1 or v0 < e0 or v1 > e1:
        raise ValueError("window is not inside the chart domain")
    periodic = bool(imm.periodic_u and np.isclose(u1 - u0, imm.period))
    if periodic:
        us = u0 + (u1 - u0) * np.arange(cu) / cu
    else:
        us = np.linspace(u0, u1, cu + 1)
    vs = np.linspace(v0, v1, cv + 1)
    nu, nv = len(us), len(vs)
    U, V = np.meshgrid(us, vs)          # shape (nv, nu)
    uv = np.stack([U.ravel(), V.ravel()], 1)
    geom = point_geometry(imm, uv[:, 0], uv[:, 1], allow_degenerate=True)
    interior = np.ones((nv, nu), bool)
    interior[[0, -1], :] = False
    if not periodic:
        interior[:, [0, -1]] = False
    if np.any(np.isnan(geom.K.reshape(nv, nu)[interior])):
        raise ValueError("degenerate metric inside window")
    R, grad, defect, _ = radial_split(geom)

    idx = np.arange(nu * nv).reshape(nv, nu)
    i_hi = cu if periodic else cu
    a = idx[:-1, :i_hi]
    b = np.roll(idx, -1, axis=1)[:-1, :i_hi] if periodic else idx[:-1, 1:]
    c = np.roll(idx, -1, axis=1)[1:, :i_hi] if periodic else idx[1:, 1:]
    d = idx[1:, :i_hi]
    tris = np.concatenate([
        np.stack([a.ravel(), b.ravel(), c.ravel()], 1),
        np.stack([a.ravel(), c.ravel(), d.ravel()], 1),
    ])
    edges, _ = _unique_edges(tris)
    lengths = np.linalg.norm(geom.position[edges[:, 0]] - geom.position[edges[:, 1]], axis=1)
    return SampledSurface(imm, tuple(window), (cu, cv), (nu, nv), periodic, uv, geom,
                          R, grad, defect, tris, edges, lengths)


def sample_for_radius(imm, r_max: float, resolution=256, margin: float = 1.15) -> SampledSurface:
    return triangulate(imm, window_for_radius(imm, r_max, margin), resolution)


# ---------------------------------------------------------------------------
# intrinsic distance
# ---------------------------------------------------------------------------

# 16-neighbour stencil: grid axes, both diagonals, and knight moves
_STENCIL = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2)]


@dataclass
class IntrinsicDistanceField:
    base_vertex: int
    rho: np.ndarray
    method: str = "edge-graph dijkstra, 16-neighbour stencil, chord weights"


def distance_graph(mesh: SampledSurface) -> sparse.csr_matrix:
    nu, nv = mesh.shape
    idx = np.arange(nu * nv).reshape(nv, nu)
    rows, cols = [], []
    for di, dj in _STENCIL:
        if mesh.periodic:
            src = idx[max(0, -dj): nv - max(0, dj), :]
            dst = np.roll(idx, -di, axis=1)[max(0, -dj) + dj: nv - max(0, dj) + dj, :]
        else:
            if di >= nu:
                continue
            src = idx[max(0, -dj): nv - max(0, dj), : nu - di]
            dst = idx[max(0, -dj) + dj: nv - max(0, dj) + dj, di:]
        rows.append(src.ravel())
        cols.append(dst.ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    w = np.linalg.norm(mesh.X[rows] - mesh.X[cols], axis=1)
    g = sparse.coo_matrix((w, (rows, cols)), shape=(nu * nv, nu * nv)).tocsr()
    return g


def intrinsic_distance(mesh: SampledSurface, base_vertex: Optional[int] = None) -> IntrinsicDistanceField:
    """Shortest-path distance over the stencil graph (an upper envelope of the
    geodesic distance). Unreachable vertices get ``inf``."""
    if base_vertex is None:
        base_vertex = mesh.base_vertex
    g = distance_graph(mesh)
    rho = dijkstra(g, directed=False, indices=base_vertex)
    return IntrinsicDistanceField(int(base_vertex), rho)


# ---------------------------------------------------------------------------
# areas
# ---------------------------------------------------------------------------


def region_area(mesh: SampledSurface, predicate: Optional[Callable] = None,
                level: Optional[np.ndarray] = None) -> float:
    """Area of the vertex set where ``predicate`` holds.

    With a per-vertex ``level`` array (region = ``level <= 0``), boundary
    triangles contribute the sliver obtained by linear interpolation of the
    level along edges. Without it, only triangles whose three vertices satisfy
    the predicate count.
    """
    reg = mesh.region()
    if level is not None:
        return clip_region(reg, 0.0, values=level, exact=False).area
    if predicate is None:
        return reg.area
    mask = np.asarray(predicate(mesh), bool)
    keep = mask[mesh.triangles].all(1)
    return float(_tri_areas(mesh.X, mesh.triangles[keep]).sum())


def components(region: TriRegion) -> int:
    """Number of edge-connected components of a region's triangles."""
    if len(region.triangles) == 0:
        return 0
    edges, _ = _unique_edges(region.triangles)
    n = len(region.uv)
    g = sparse.coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    ncomp, lab = connected_components(g, directed=False)
    return len(np.unique(lab[region.used_vertices()]))
