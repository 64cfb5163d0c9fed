"""Extrinsic-distance analysis: gradient split, level sets, growth, tamedness, flow."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .comparison import ComparisonProfile, default_delta, kasue_bound
from .discretize import (SampledSurface, WindowTruncation, _crossings, _unique_edges, _wrap,
                         intrinsic_distance, radial_value, triangulate)
from .surface import GeometryError, ParametricImmersion, PointGeometry, grad_R_chart, point_geometry, radial_split

NUDGE = 1e-6
CRITICAL_TOL = 1e-6


class CriticalPointError(ArithmeticError):
    """The gradient of the extrinsic distance vanished (to tolerance)."""


class HypothesisRefused(ValueError):
    """A check was asked for on an input that does not meet its hypotheses."""

    def __init__(self, hypothesis: str, detail: str = ""):
        super().__init__(f"hypothesis not met: {hypothesis}" + (f" ({detail})" if detail else ""))
        self.hypothesis = hypothesis


# ---------------------------------------------------------------------------
# pointwise
# ---------------------------------------------------------------------------


def gradient_decomposition(imm: ParametricImmersion, u, v, tol: float = 1e-12):
    """``(|grad R|, |grad-perp rho|)`` at chart points: the tangential and normal
    lengths of the ambient radial unit vector."""
    geom = point_geometry(imm, u, v)
    R, grad, defect, _ = radial_split(geom)
    if np.any(R <= tol):
        raise GeometryError("pole neighborhood: R vanishes at the requested point")
    if np.ndim(grad) == 0:
        return float(grad), float(defect)
    return grad, defect


# ---------------------------------------------------------------------------
# level sets
# ---------------------------------------------------------------------------


@dataclass
class LevelSet:
    """Piecewise-linear level set ``R = r`` of a sampled surface.

    ``seg_uv`` / ``seg_X`` hold the two endpoints of each segment (chart
    coordinates unwrapped per segment, ambient positions); ``polylines`` are
    ordered chart-point chains, one per connected component.
    """

    level: float
    seg_uv: np.ndarray
    seg_X: np.ndarray
    polylines: List[np.ndarray]
    closed: List[bool]
    nudged: bool = False

    @property
    def seg_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.seg_X[:, 1] - self.seg_X[:, 0], axis=-1)

    @property
    def total_length(self) -> float:
        return float(self.seg_lengths.sum())

    @property
    def n_components(self) -> int:
        return len(self.polylines)

    def midpoint_geometry(self, imm: ParametricImmersion) -> PointGeometry:
        mid = self.seg_uv.mean(axis=1)
        return point_geometry(imm, mid[:, 0], mid[:, 1])

    def integrate(self, imm: ParametricImmersion, fn) -> float:
        """Midpoint-rule line integral of a pointwise geometric quantity."""
        if len(self.seg_uv) == 0:
            return 0.0
        return float(np.sum(fn(self.midpoint_geometry(imm)) * self.seg_lengths))

    def __iter__(self):
        yield self.polylines
        yield self.total_length


def _nudged_level(values: np.ndarray, r: float, tol: float = 1e-9):
    if np.any(np.abs(values - r) <= tol * max(abs(r), 1.0)):
        return r + NUDGE * r, True
    return r, False


def _chain(n_nodes: int, seg: np.ndarray, coords: np.ndarray):
    """Order segment endpoints (node ids) into polylines per component."""
    if len(seg) == 0:
        return [], []
    g = sparse.coo_matrix((np.ones(len(seg)), (seg[:, 0], seg[:, 1])), shape=(n_nodes, n_nodes)).tocsr()
    g = g + g.T
    _, lab = connected_components(g, directed=False)
    adj = [[] for _ in range(n_nodes)]
    for a, b in seg:
        adj[a].append(b)
        adj[b].append(a)
    polylines, closed = [], []
    for comp in np.unique(lab[np.unique(seg)]):
        nodes = np.flatnonzero(lab == comp)
        ends = [n for n in nodes if len(adj[n]) == 1]
        start = ends[0] if ends else nodes[0]
        order, prev, cur = [start], -1, start
        while True:
            nxt = [n for n in adj[cur] if n != prev]
            if not nxt or nxt[0] == start:
                break
            prev, cur = cur, nxt[0]
            order.append(cur)
            if len(order) > len(nodes):
                break
        is_closed = not ends
        if is_closed:
            order.append(start)
        polylines.append(coords[order])
        closed.append(is_closed)
    return polylines, closed


def level_set(mesh: SampledSurface, r: float, exact: bool = True) -> LevelSet:
    """Contour ``R = r`` triangle by triangle; crossings are root-found on the
    immersion when ``exact`` and linearly interpolated otherwise."""
    r, nudged = _nudged_level(mesh.R, r)
    s = mesh.R - r
    tris = mesh.triangles
    below = s[tris] <= 0
    cnt = below.sum(1)
    cut = tris[(cnt == 1) | (cnt == 2)]
    if len(cut) == 0:
        e = np.zeros((0, 2, 2))
        return LevelSet(r, e, np.zeros((0, 2, mesh.X.shape[1])), [], [], nudged)
    region = mesh.region()
    ins = s[cut] <= 0
    odd = np.where(ins.sum(1) == 1, np.argmax(ins, 1), np.argmin(ins, 1))
    idx = (odd[:, None] + np.arange(3)[None, :]) % 3
    rolled = np.take_along_axis(cut, idx, 1)
    o, n1, n2 = rolled[:, 0], rolled[:, 1], rolled[:, 2]
    key = np.sort(np.concatenate([np.stack([o, n1], 1), np.stack([o, n2], 1)]), 1)
    edges, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    puv, pX = _crossings(region, edges, mesh.R, r, radial_value(mesh.imm) if exact else None)
    m = len(cut)
    seg = np.stack([inv[:m], inv[m:]], 1)
    a, b = puv[seg[:, 0]], puv[seg[:, 1]]
    P = mesh.imm.period
    if P is not None:
        b = a + _wrap(b - a, P)
    polylines, closed = _chain(len(edges), seg, puv)
    return LevelSet(r, np.stack([a, b], 1), np.stack([pX[seg[:, 0]], pX[seg[:, 1]]], 1),
                    polylines, closed, nudged)


# ---------------------------------------------------------------------------
# growth
# ---------------------------------------------------------------------------


@dataclass
class GrowthCurve:
    radii: np.ndarray
    area: np.ndarray
    perimeter: np.ndarray
    curvature_integral: np.ndarray
    min_grad_R_outside: np.ndarray

    HEADER = ("r", "area", "perimeter", "total_curvature", "min_grad_R")

    def rows(self):
        return zip(self.radii, self.area, self.perimeter, self.curvature_integral, self.min_grad_R_outside)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.HEADER)
            for row in self.rows():
                w.writerow([f"{x:.17g}" for x in row])

    @classmethod
    def read_csv(cls, path) -> "GrowthCurve":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(*(data[:, k] for k in range(5)))

    def subset(self, mask) -> "GrowthCurve":
        return GrowthCurve(*(np.asarray(x)[mask] for x in
                             (self.radii, self.area, self.perimeter, self.curvature_integral,
                              self.min_grad_R_outside)))


def _check_radii(mesh: SampledSurface, radii):
    radii = np.asarray(radii, float)
    if radii.ndim != 1 or len(radii) == 0 or np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ValueError("radii must be a positive increasing grid")
    return radii, radii < mesh.safe_radius


def _growth_on(mesh: SampledSurface, radii: np.ndarray) -> GrowthCurve:
    area, perim, curv, mg = [], [], [], []
    for r in radii:
        ball = mesh.ball(r, check=False)
        area.append(ball.area)
        curv.append(ball.integrate(lambda g: g.K))
        perim.append(level_set(mesh, r).total_length)
        out = mesh.R > r
        mg.append(float(mesh.grad_R_norm[out].min()) if out.any() else np.nan)
    return GrowthCurve(radii, np.array(area), np.array(perim), np.array(curv), np.array(mg))


def growth_curve(imm: ParametricImmersion, window, resolution, radii,
                 mesh: Optional[SampledSurface] = None) -> GrowthCurve:
    """Area, perimeter, total curvature and min |grad R| outside for each
    extrinsic ball ``D_r``. Radii beyond the window's safe radius raise
    :class:`WindowTruncation` carrying the curve on the safe sub-grid."""
    if mesh is None:
        mesh = triangulate(imm, window, resolution)
    radii, ok = _check_radii(mesh, radii)
    if not ok.all():
        partial = _growth_on(mesh, radii[ok]) if ok.any() else None
        raise WindowTruncation(
            f"radius {radii[~ok][0]:g} exceeds the window's safe radius {mesh.safe_radius:g}",
            safe_radius=mesh.safe_radius, partial=partial)
    return _growth_on(mesh, radii)


class GrowthFit(NamedTuple):
    area_exponent: float
    area_upper: float       # max A/r^2 over the tail
    area_lower: float       # min A/r^2 over the tail
    perimeter_exponent: float
    perimeter_upper: float  # max L/r over the tail
    perimeter_lower: float  # min L/r over the tail


def fit_growth(curve: GrowthCurve, tail_fraction: float = 0.5) -> GrowthFit:
    """Log-log least-squares exponents and the extreme quadratic/linear
    growth ratios over the last ``tail_fraction`` of the radius grid."""
    n = len(curve.radii)
    k = max(4, int(round(tail_fraction * n)))
    if k > n:
        raise ValueError("need at least 4 tail points")
    r, A, L = curve.radii[-k:], curve.area[-k:], curve.perimeter[-k:]
    if np.any(r <= 0) or np.any(A <= 0) or np.any(L <= 0):
        raise ValueError("non-positive tail values")
    lr = np.log(r)
    p = np.polyfit(lr, np.log(A), 1)[0]
    q = np.polyfit(lr, np.log(L), 1)[0]
    a2, l1 = A / r ** 2, L / r
    return GrowthFit(float(p), float(a2.max()), float(a2.min()),
                     float(q), float(l1.max()), float(l1.min()))


# ---------------------------------------------------------------------------
# tamedness
# ---------------------------------------------------------------------------


@dataclass
class TamednessReport:
    exhaustion_radii: np.ndarray
    a_i: np.ndarray
    a_estimate: float
    verdict: str
    t_c: Optional[float]
    c: float
    slack: float
    strong_epsilon: Optional[float] = None
    strong_tail_sup: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "radii": [float(x) for x in self.exhaustion_radii],
            "a_i": [float(x) for x in self.a_i],
            "a_estimate": float(self.a_estimate),
            "verdict": self.verdict,
            "t_c": None if self.t_c is None else float(self.t_c),
            "c": float(self.c),
            "slack": float(self.slack),
            "strong": {"epsilon": self.strong_epsilon, "tail_sup": self.strong_tail_sup},
        }


def tail_sups(values: np.ndarray, R: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """``max(values[R > r])`` for each ``r`` (0 for an empty set)."""
    order = np.argsort(R)
    Rs, vs = R[order], values[order]
    suffix = np.maximum.accumulate(vs[::-1])[::-1]
    pos = np.searchsorted(Rs, radii, side="right")
    return np.array([suffix[p] if p < len(Rs) else 0.0 for p in pos])


def tamedness_verdict(a_i: np.ndarray, slack: float = 0.05) -> str:
    n = len(a_i)
    third = a_i[n - max(1, n // 3):]
    half = a_i[n - max(1, n // 2):]
    if np.all(third < 1 - slack):
        return "tamed"
    if np.all(half >= 1):
        return "not_tamed"
    return "inconclusive"


def tamedness_estimate(imm: ParametricImmersion, window, resolution, exhaustion_radii, c: float,
                       slack: float = 0.05, epsilon: Optional[float] = None,
                       mesh: Optional[SampledSurface] = None, rho: Optional[np.ndarray] = None) -> TamednessReport:
    """Bracket the tail supremum of ``rho_M * ||alpha||`` over complements of
    extrinsic balls.

    ``rho`` defaults to the graph distance from the vertex nearest the origin;
    only vertices inside the window are seen, so each ``a_i`` is a lower
    bracket of the true supremum over the whole surface.
    """
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    if mesh is None:
        mesh = triangulate(imm, window, resolution)
    radii, ok = _check_radii(mesh, exhaustion_radii)
    if not ok.all():
        raise WindowTruncation(
            f"exhaustion radius {radii[~ok][0]:g} exceeds the safe radius {mesh.safe_radius:g}",
            safe_radius=mesh.safe_radius)
    if rho is None:
        rho = intrinsic_distance(mesh).rho
    # stay off the window edge, where neither quantity is resolved
    inner = mesh.R < mesh.safe_radius
    prod = np.where(inner, rho * mesh.geometry.alpha_norm, 0.0)
    a_i = tail_sups(prod, mesh.R, radii)
    verdict = tamedness_verdict(a_i, slack)
    below = np.flatnonzero(a_i < c)
    t_c = float(radii[below[0]]) if len(below) else None
    strong = None
    if epsilon is not None:
        sp = np.where(inner, rho ** (1 + epsilon) * mesh.geometry.alpha_norm, 0.0)
        strong = float(tail_sups(sp, mesh.R, radii)[-1])
    return TamednessReport(radii, a_i, float(a_i[-1]), verdict, t_c, c, slack, epsilon, strong)


def kasue_envelope_check(mesh: SampledSurface, t_c: float, c: float, tol: float = 1e-9):
    """Compare ``|grad-perp rho|`` outside ``D_{t_c}`` with the flat-ambient
    comparison envelope for ``k(s) = c/s`` and the default delta built from
    the largest defect on ``R = t_c``. Returns ``(holds, max_excess)``."""
    ls = level_set(mesh, t_c)
    sbm = float(radial_split(ls.midpoint_geometry(mesh.imm))[2].max())
    delta = default_delta(sbm, t_c)
    out = (mesh.R > t_c * (1 + 1e-9)) & (mesh.R < mesh.safe_radius)
    if not out.any():
        return True, 0.0
    env = kasue_bound(0.0, lambda s: c / s, t_c, mesh.R[out], delta=delta)
    excess = float(np.max(mesh.normal_defect[out] - env))
    return excess <= tol, excess


# ---------------------------------------------------------------------------
# integral identities
# ---------------------------------------------------------------------------


def _level_integral(mesh, s, fn):
    ls = level_set(mesh, s)
    g = ls.midpoint_geometry(mesh.imm) if len(ls.seg_uv) else None
    if g is not None:
        grad = radial_split(g)[1]
        if grad.min() < CRITICAL_TOL:
            warnings.warn(f"critical level near r={s:g}; nudging", RuntimeWarning)
            ls = level_set(mesh, s + NUDGE * s)
    return ls.integrate(mesh.imm, fn), ls


def coarea_check(imm: ParametricImmersion, mesh: SampledSurface, r1: float, r2: float,
                 n_sub: int = 16) -> float:
    """Relative gap between ``A(D_r2) - A(D_r1)`` and the radial integral of
    ``int_{R=s} 1/|grad R| dL`` (Gauss-Legendre in ``s``)."""
    if not r1 < r2:
        raise ValueError("need r1 < r2")
    A2 = mesh.ball(r2).area
    A1 = mesh.ball(r1).area
    x, w = np.polynomial.legendre.leggauss(n_sub)
    s = r1 + (r2 - r1) * (x + 1) / 2
    inner = [_level_integral(mesh, si, lambda g: 1.0 / radial_split(g)[1])[0] for si in s]
    total = float(np.dot(w, inner)) * (r2 - r1) / 2
    return abs(A2 - A1 - total) / A2


def laplacian_R2(geom: PointGeometry) -> np.ndarray:
    """``Delta R^2 = 4 (1 + <x, H>)`` for a surface."""
    return 4.0 * (1.0 + np.sum(geom.position * geom.H, axis=-1))


def divergence_check(imm: ParametricImmersion, mesh: SampledSurface, t: float) -> float:
    """Relative gap between ``int_{D_t} Delta R^2`` and the boundary flux ``2t int |grad R|``."""
    left = mesh.ball(t).integrate(laplacian_R2)
    flux, ls = _level_integral(mesh, t, lambda g: radial_split(g)[1])
    right = 2 * t * flux
    return abs(left - right) / (2 * t * ls.total_length)


# ---------------------------------------------------------------------------
# radial flow
# ---------------------------------------------------------------------------


@dataclass
class FlowTrajectory:
    t: np.ndarray
    points: np.ndarray
    R: np.ndarray
    psi: np.ndarray
    sin_beta: np.ndarray
    r0: float

    @property
    def samples(self):
        return list(zip(self.t, map(tuple, self.points), self.R, self.psi, self.sin_beta))

    def invariant_errors(self):
        """``(max |psi^2 + sin^2 beta - 1|, max |R - (t + r0)|)``."""
        return (float(np.max(np.abs(self.psi ** 2 + self.sin_beta ** 2 - 1))),
                float(np.max(np.abs(self.R - (self.t + self.r0)))))


def point_on_level(imm: ParametricImmersion, r: float, direction=(1.0, 0.0), origin=None,
                   max_param: float = 1e6) -> np.ndarray:
    """First chart point along a ray from ``origin`` (default: basepoint) with ``R = r``."""
    p0 = np.asarray(imm.basepoint if origin is None else origin, float)
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    Rf = lambda s: float(np.linalg.norm(imm.position(*(p0 + s * d))))
    if Rf(0.0) >= r:
        raise ValueError("origin already outside the requested level")
    lo, hi = 0.0, 0.25
    while Rf(hi) < r:
        lo, hi = hi, 2 * hi
        if hi > max_param:
            raise ValueError("level not reached along the ray")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if Rf(mid) < r else (lo, mid)
        if hi - lo < 1e-15 * max(1.0, hi):
            break
    return p0 + 0.5 * (lo + hi) * d


def level_starts(imm: ParametricImmersion, r: float, n: int) -> List[np.ndarray]:
    """``n`` points on the level ``R = r`` spread around the chart.

    Periodic charts walk along ``v`` from evenly spaced ``u`` with alternating
    sign (one start per end); otherwise rays fan out from the basepoint.
    """
    if imm.periodic_u:
        u0, v0 = imm.domain[0], imm.basepoint[1]
        return [point_on_level(imm, r, direction=(0.0, 1.0 if k % 2 == 0 else -1.0),
                               origin=(u0 + imm.period * k / n, v0)) for k in range(n)]
    angles = 2 * np.pi * np.arange(n) / n
    return [point_on_level(imm, r, direction=(np.cos(a), np.sin(a))) for a in angles]


def _flow_field(imm, p, tol):
    g = point_geometry(imm, p[:, 0], p[:, 1])
    a, b, n2 = grad_R_chart(g)
    if np.any(n2 < tol * tol):
        raise CriticalPointError("critical point encountered: |grad R| vanished along the flow")
    return np.stack([a, b], 1) / n2[:, None]


def radial_flows(imm: ParametricImmersion, starts, t_end: float, step: float = 1e-2,
                 tol: float = 1e-8) -> List[FlowTrajectory]:
    """Integrate ``grad R / |grad R|^2`` in the chart with fixed-step RK4 for a
    batch of starting points; along each trajectory ``R`` grows at unit rate."""
    p = np.atleast_2d(np.asarray(starts, float)).copy()
    n = int(np.ceil(t_end / step - 1e-9))
    h = t_end / n
    u0, u1, v0, v1 = imm.domain
    P = imm.period
    pts = [p.copy()]
    for _ in range(n):
        k1 = _flow_field(imm, p, tol)
        k2 = _flow_field(imm, p + h / 2 * k1, tol)
        k3 = _flow_field(imm, p + h / 2 * k2, tol)
        k4 = _flow_field(imm, p + h * k3, tol)
        p = p + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if P is not None:
            p[:, 0] = u0 + (p[:, 0] - u0) % P
        elif np.any((p[:, 0] < u0) | (p[:, 0] > u1)):
            raise GeometryError("flow left the chart domain")
        if np.any((p[:, 1] < v0) | (p[:, 1] > v1)):
            raise GeometryError("flow left the chart domain")
        pts.append(p.copy())
    pts = np.stack(pts, 1)                       # (batch, n+1, 2)
    t = h * np.arange(n + 1)
    out = []
    for q in pts:
        geom = point_geometry(imm, q[:, 0], q[:, 1])
        R, psi, sb, _ = radial_split(geom)
        if psi.min() < tol:
            raise CriticalPointError("critical point encountered: |grad R| vanished along the flow")
        out.append(FlowTrajectory(t, q, R, psi, sb, float(R[0])))
    return out


def radial_flow(imm: ParametricImmersion, start, t_end: float, step: float = 1e-2,
                tol: float = 1e-8) -> FlowTrajectory:
    """Single-trajectory form of :func:`radial_flows`."""
    return radial_flows(imm, np.asarray(start, float)[None, :], t_end, step, tol)[0]


def flow_bound(t, sin_beta0: float, c: float, r0: float, h: Optional[ComparisonProfile] = None):
    """``h(r0)/h(t + r0) (sin_beta0 - c) + c``; flat ambient uses ``h(t) = t``."""
    t = np.asarray(t, float)
    ratio = r0 / (t + r0) if h is None else float(h(r0)) / h(t + r0)
    return ratio * (sin_beta0 - c) + c


def flow_bound_check(traj: FlowTrajectory, c: float, r0: Optional[float] = None,
                     h_profile: Optional[ComparisonProfile] = None, tol: float = 1e-6):
    """Pointwise comparison of ``sin beta`` along a trajectory with the decay
    bound. Returns ``(holds, max_violation)``."""
    r0 = traj.r0 if r0 is None else r0
    bound = flow_bound(traj.t, traj.sin_beta[0], c, r0, h_profile)
    viol = float(np.max(traj.sin_beta - bound))
    return viol <= tol, max(viol, 0.0)


def critical_point_scan(mesh: SampledSurface, r0: float):
    """``(min |grad R|, chart point)`` over vertices with ``R > r0``."""
    out = np.flatnonzero(mesh.R > r0)
    if len(out) == 0:
        raise ValueError("no sampled vertices beyond r0")
    k = out[np.argmin(mesh.grad_R_norm[out])]
    return float(mesh.grad_R_norm[k]), tuple(mesh.uv[k])
