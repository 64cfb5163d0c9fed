"""Total curvature, Gauss-Bonnet on extrinsic annuli, geodesic curvature of
extrinsic spheres, and the Chern-Osserman pipeline."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numpy as np

from .discretize import SampledSurface, TriRegion, intrinsic_distance, region_area
from .extrinsic import (CRITICAL_TOL, GrowthCurve, HypothesisRefused, LevelSet, TamednessReport,
                        critical_point_scan, fit_growth, level_set)
from .surface import GeometryError, ParametricImmersion, PointGeometry, alpha_on, grad_R_chart, point_geometry, radial_split

TWO_PI = 2 * np.pi


# ---------------------------------------------------------------------------
# convergence of exhaustion sequences
# ---------------------------------------------------------------------------


class SequenceVerdict(NamedTuple):
    sequence: np.ndarray
    verdict: str
    value: float
    ratio: float


def classify_sequence(seq, shrink: float = 0.9, atol: float = 1e-9) -> SequenceVerdict:
    """Cauchy-tail classification of an exhaustion sequence.

    Increments over the second half of the grid are compared: geometric
    shrinking (median ratio below ``shrink``) means a finite limit, which is
    extrapolated by summing the geometric remainder; monotone increments that
    do not shrink mean divergence to the corresponding infinity.
    """
    seq = np.asarray(seq, float)
    if len(seq) < 4:
        raise ValueError("need at least 4 exhaustion radii")
    d = np.diff(seq)
    tail = d[len(d) // 2:] if len(d) >= 4 else d
    scale = max(1.0, float(np.max(np.abs(seq))))
    if np.all(np.abs(tail) <= atol * scale):
        return SequenceVerdict(seq, "finite", float(seq[-1]), 0.0)
    same_sign = np.all(tail > 0) or np.all(tail < 0)
    nz = np.abs(tail[:-1]) > 0
    ratios = np.abs(tail[1:][nz] / tail[:-1][nz])
    rho = float(np.median(ratios)) if len(ratios) else 0.0
    if same_sign and rho < shrink:
        value = float(seq[-1] + tail[-1] * rho / (1 - rho))
        return SequenceVerdict(seq, "finite", value, rho)
    if same_sign:
        return SequenceVerdict(seq, "plus_infinity" if tail[-1] > 0 else "minus_infinity",
                               float(np.sign(tail[-1]) * np.inf), rho)
    return SequenceVerdict(seq, "oscillating", float("nan"), rho)


def total_curvature(imm: Optional[ParametricImmersion], growth: GrowthCurve) -> SequenceVerdict:
    """Verdict and extrapolated value of ``int_{D_r} K dA`` along the growth radii."""
    return classify_sequence(growth.curvature_integral)


def alpha_l2_integral(imm: ParametricImmersion, mesh: SampledSurface, radii) -> SequenceVerdict:
    """``int_{D_r} ||alpha||^2 dA`` along ``radii``; verdict is finite or infinite."""
    seq = np.array([mesh.ball(r).integrate(lambda g: g.alpha_norm ** 2) for r in radii])
    res = classify_sequence(seq)
    verdict = "finite" if res.verdict == "finite" else "infinite"
    return SequenceVerdict(seq, verdict, res.value, res.ratio)


def white_multiple_check(value: float):
    """Nearest integer multiple of 2 pi and the distance to it."""
    if not np.isfinite(value):
        raise ValueError("total curvature must be finite")
    n = int(np.round(value / TWO_PI))
    return n, abs(value - TWO_PI * n)


def euler_characteristic(region: TriRegion) -> int:
    return region.euler_characteristic()


def count_ends(mesh: SampledSurface, r: float) -> int:
    """Number of components of the extrinsic sphere of radius ``r``."""
    return level_set(mesh, r).n_components


# ---------------------------------------------------------------------------
# geodesic curvature of extrinsic spheres
# ---------------------------------------------------------------------------


def level_tangent(geom: PointGeometry):
    """Chart components of a unit tangent to the level set of ``R``."""
    e = geom.position / np.linalg.norm(geom.position, axis=-1)[..., None]
    Ru = np.sum(e * geom.Fu, axis=-1)
    Rv = np.sum(e * geom.Fv, axis=-1)
    du, dv = Rv, -Ru
    n = np.sqrt(du * du * geom.g11 + 2 * du * dv * geom.g12 + dv * dv * geom.g22)
    return du / n, dv / n


def kg_formula(geom: PointGeometry, tol: float = CRITICAL_TOL) -> np.ndarray:
    """Geodesic curvature of the extrinsic sphere through each point, with
    respect to the inward conormal: ``(1/s + <normal defect, alpha(e,e)>) / |grad R|``."""
    R, grad, _, nvec = radial_split(geom)
    if np.any(grad <= tol):
        raise GeometryError("critical point: |grad R| vanishes at a level sample")
    du, dv = level_tangent(geom)
    aee = alpha_on(geom, du, dv)
    return (1.0 / R + np.sum(nvec * aee, axis=-1)) / grad


def project_to_level(imm: ParametricImmersion, p: np.ndarray, r: float, iters: int = 30) -> np.ndarray:
    """Newton steps along the chart gradient of ``R`` onto ``R = r``."""
    p = np.array(p, float)
    for _ in range(iters):
        g = point_geometry(imm, p[:, 0], p[:, 1])
        a, b, n2 = grad_R_chart(g)
        f = np.linalg.norm(g.position, axis=-1) - r
        p[:, 0] -= f * a / n2
        p[:, 1] -= f * b / n2
        if np.max(np.abs(f)) < 1e-14 * max(r, 1.0):
            break
    return p


def level_samples(mesh: SampledSurface, r: float, n: Optional[int] = None) -> np.ndarray:
    """Chart points on ``R = r``: segment midpoints pushed onto the level,
    optionally thinned to ``n`` evenly spaced samples."""
    ls = level_set(mesh, r)
    mid = ls.seg_uv.mean(axis=1)
    if n is not None and n < len(mid):
        mid = mid[np.linspace(0, len(mid) - 1, n).astype(int)]
    return project_to_level(mesh.imm, mid, ls.level)


def geodesic_curvature_level(imm: ParametricImmersion, r: float, samples) -> np.ndarray:
    """``k_g`` of the extrinsic sphere ``R = r`` at chart ``samples`` (projected onto the level)."""
    p = project_to_level(imm, np.atleast_2d(np.asarray(samples, float)), r)
    return kg_formula(point_geometry(imm, p[:, 0], p[:, 1]))


def geodesic_curvature_curve(imm: ParametricImmersion, r: float, samples, step: Optional[float] = None) -> np.ndarray:
    """Curve-based ``k_g``: neighbours at arclength ``+-step`` along the level,
    curvature vector from the three-point second difference, projected on the
    inward conormal ``-grad R / |grad R|``."""
    p = project_to_level(imm, np.atleast_2d(np.asarray(samples, float)), r)
    step = 1e-3 * r if step is None else step
    g = point_geometry(imm, p[:, 0], p[:, 1])
    du, dv = level_tangent(g)

    def walk(sign):
        q = p + sign * step * np.stack([du, dv], 1)
        return project_to_level(imm, q, r)

    Xm = point_geometry(imm, *walk(-1.0).T).position
    Xp = point_geometry(imm, *walk(+1.0).T).position
    X0 = g.position
    # circumscribed-circle curvature vector of the three points
    a, b = Xm - X0, Xp - X0
    axb2 = np.sum(a * a, -1) * np.sum(b * b, -1) - np.sum(a * b, -1) ** 2
    num = (np.sum(b * b, -1)[:, None] * (np.sum(a * b, -1)[:, None] * a - np.sum(a * a, -1)[:, None] * b)
           + np.sum(a * a, -1)[:, None] * (np.sum(a * b, -1)[:, None] * b - np.sum(b * b, -1)[:, None] * a))
    center_off = -num / (2 * axb2[:, None])
    kvec = center_off / np.sum(center_off ** 2, -1)[:, None]
    _, grad, _, nvec = radial_split(g)
    e = X0 / np.linalg.norm(X0, axis=-1)[:, None]
    tang_out = (e - nvec) / grad[:, None]
    return -np.sum(kvec * tang_out, -1)


def kg_sandwich(r: float, c: float, lam: float):
    """Lower and upper envelopes for ``k_g`` on ``R = r`` given ``Lambda``."""
    if lam >= 1:
        raise ValueError("Lambda must be below 1")
    return (1 - c * lam) / r, (1 + c * lam) / (r * np.sqrt(1 - lam * lam))


def kg_sandwich_check(imm: ParametricImmersion, r: float, c: float, delta, samples, tol: float = 1e-9):
    """Every sampled ``k_g`` on ``R = r`` against the envelopes built from
    ``Lambda = delta(r) + c``. Returns ``(holds, (min lower margin, min upper margin))``."""
    lam = float(delta(r)) + c if callable(delta) else float(delta) + c
    if lam >= 1:
        raise ValueError("Lambda_c >= 1: envelope undefined")
    lo, hi = kg_sandwich(r, c, lam)
    kg = geodesic_curvature_level(imm, r, samples)
    margins = (float(np.min(kg - lo)), float(np.min(hi - kg)))
    return margins[0] >= -tol and margins[1] >= -tol, margins


def kg_pointwise_sandwich(imm: ParametricImmersion, r: float, samples, tol: float = 1e-9):
    """Algebraic sandwich with the measured defect in place of ``Lambda``:
    ``(1 - |alpha| s)/r <= k_g <= (1 + |alpha| s)/(r sqrt(1 - s^2))`` where ``s``
    is the local normal defect and ``|alpha|`` the local norm times ``r``."""
    p = project_to_level(imm, np.atleast_2d(np.asarray(samples, float)), r)
    g = point_geometry(imm, p[:, 0], p[:, 1])
    kg = kg_formula(g)
    s = radial_split(g)[2]
    ca = g.alpha_norm * r
    lo = (1 - ca * s) / r
    hi = (1 + ca * s) / (r * np.sqrt(1 - s * s))
    return bool(np.all(kg >= lo - tol) and np.all(kg <= hi + tol)), kg, lo, hi


# ---------------------------------------------------------------------------
# Gauss-Bonnet on annuli
# ---------------------------------------------------------------------------


def kg_line_integral(mesh: SampledSurface, r: float) -> float:
    ls = level_set(mesh, r)
    return ls.integrate(mesh.imm, kg_formula)


@dataclass
class AnnulusReport:
    r1: float
    r2: float
    curvature_integral: float
    kg_inner: float
    kg_outer: float
    gb_residual: float
    euler_char: int
    critical_inside: bool = False

    def to_dict(self) -> dict:
        return {k: (bool(v) if isinstance(v, (bool, np.bool_)) else v) for k, v in asdict(self).items()}


def gauss_bonnet_annulus(imm: ParametricImmersion, mesh: SampledSurface, r1: float, r2: float) -> AnnulusReport:
    """``int_A K + int_{outer} k_g - int_{inner} k_g = 2 pi chi(A)`` on ``r1 <= R <= r2``.

    ``k_g`` is taken with respect to the conormal pointing into the ball
    bounded by each sphere. The residual uses the mesh ``chi``; when a
    critical point lies inside, a warning flag is set.
    """
    if not r1 < r2:
        raise ValueError("need r1 < r2")
    region = mesh.annulus(r1, r2)
    K = region.integrate(lambda g: g.K)
    inner = kg_line_integral(mesh, r1)
    outer = kg_line_integral(mesh, r2)
    chi = region.euler_characteristic()
    inside = (mesh.R > r1) & (mesh.R < r2)
    crit = bool(inside.any() and mesh.grad_R_norm[inside].min() < CRITICAL_TOL * 1e3)
    if crit:
        warnings.warn("critical value inside the annulus", RuntimeWarning)
    res = abs(K + outer - inner - TWO_PI * chi)
    return AnnulusReport(float(r1), float(r2), float(K), float(inner), float(outer), float(res), int(chi), crit)


# ---------------------------------------------------------------------------
# Chern-Osserman
# ---------------------------------------------------------------------------


@dataclass
class ChernOssermanReport:
    chi: int
    total_curvature: float
    middle: float
    lower_bound: float
    upper_bound: float      # tail of A(D_t) / (t^2 / 2)
    shiohama_limit: float
    white_nearest: int
    white_residual: float
    slack: float
    mesh_chi: Optional[int] = None

    @property
    def sandwich_holds(self) -> bool:
        s = self.slack
        return (self.lower_bound <= self.middle * (1 + s) + 1e-12
                and self.middle <= self.upper_bound * (1 + s) + 1e-12)

    @property
    def shiohama_gap(self) -> float:
        return abs(self.shiohama_limit - self.middle) / abs(self.middle)

    def to_dict(self) -> dict:
        return {
            "chi": int(self.chi), "total_curvature": self.total_curvature, "middle": self.middle,
            "lower": self.lower_bound, "upper": self.upper_bound, "shiohama": self.shiohama_limit,
            "white_nearest": int(self.white_nearest), "white_residual": self.white_residual,
            "slack": self.slack, "mesh_chi": self.mesh_chi,
            "upper_convention": "A(D_t)/(t^2/2)",
        }


def shiohama_limit(mesh: SampledSurface, rho: Optional[np.ndarray] = None, n: int = 8,
                   fraction=(0.4, 0.9)) -> float:
    """Limit of ``A(t)/(t^2/2)`` for intrinsic balls, from a least-squares fit
    ``L + b/t`` over intrinsic radii strictly inside the sampled window."""
    if rho is None:
        rho = intrinsic_distance(mesh).rho
    t_max = float(np.min(rho[mesh.window_boundary_vertices()]))
    ts = np.linspace(fraction[0] * t_max, fraction[1] * t_max, n)
    ratios = np.array([region_area(mesh, level=rho - t) / (t * t / 2) for t in ts])
    A = np.stack([np.ones_like(ts), 1 / ts], 1)
    return float(np.linalg.lstsq(A, ratios, rcond=None)[0][0])


def chern_osserman_check(imm: ParametricImmersion, chi: int, growth: GrowthCurve, tamed: TamednessReport,
                         mesh: Optional[SampledSurface] = None, rho: Optional[np.ndarray] = None,
                         slack: float = 0.05, tail_fraction: float = 0.5,
                         require_tamed: bool = True) -> ChernOssermanReport:
    """Both sides of the Chern-Osserman sandwich and the intrinsic-ball limit.

    Refuses (``HypothesisRefused``) unless the total curvature is finite and
    the tamedness verdict is ``tamed``.
    """
    tc = total_curvature(imm, growth)
    if tc.verdict != "finite":
        raise HypothesisRefused("finite total curvature", f"verdict {tc.verdict}")
    if require_tamed and tamed.verdict != "tamed":
        raise HypothesisRefused("tamed second fundamental form",
                                f"verdict {tamed.verdict}, a_estimate {tamed.a_estimate:.4g}")
    fit = fit_growth(growth, tail_fraction)
    middle = TWO_PI * chi - tc.value
    lower = (1 - tamed.a_estimate ** 2) * fit.perimeter_lower
    upper = 2 * fit.area_upper
    shio = shiohama_limit(mesh, rho) if mesh is not None else float("nan")
    wn, wr = white_multiple_check(tc.value)
    mesh_chi = None
    if mesh is not None:
        mesh_chi = mesh.ball(growth.radii[-1]).euler_characteristic()
    return ChernOssermanReport(int(chi), tc.value, float(middle), float(lower), float(upper), shio,
                               wn, float(wr), slack, mesh_chi)
