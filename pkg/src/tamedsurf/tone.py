"""Dirichlet eigenvalues of extrinsic balls and the Barta transplant bound."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from .comparison import default_delta, dirichlet_eigen_ball, lambda_c
from .discretize import SampledSurface, TriRegion, _tri_areas
from .extrinsic import HypothesisRefused, TamednessReport, level_set
from .surface import ParametricImmersion, radial_split


# ---------------------------------------------------------------------------
# P1 assembly
# ---------------------------------------------------------------------------


def assemble(region: TriRegion, lumped: bool = False, min_area_ratio: float = 1e-12):
    """Piecewise-linear stiffness and mass matrices over all region vertices.

    Stiffness entries are ``<e_i, e_j> / (4A)`` with ``e_i`` the edge opposite
    vertex ``i``; consistent mass is ``A/12 (1 + delta_ij)``, lumped mass
    ``A/3`` on the diagonal. Triangles of negligible area are skipped.
    """
    X, T = region.X, region.triangles
    A = _tri_areas(X, T)
    keep = A > min_area_ratio * max(A.max(initial=0.0), 1e-300)
    T, A = T[keep], A[keep]
    n = len(X)
    E = [X[T[:, (k + 2) % 3]] - X[T[:, (k + 1) % 3]] for k in range(3)]
    rows, cols, kv, mv = [], [], [], []
    for i in range(3):
        for j in range(3):
            rows.append(T[:, i])
            cols.append(T[:, j])
            kv.append(np.sum(E[i] * E[j], -1) / (4 * A))
            if lumped:
                mv.append(A / 3 if i == j else np.zeros_like(A))
            else:
                mv.append(A / 12 * (2.0 if i == j else 1.0))
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    K = sparse.coo_matrix((np.concatenate(kv), (rows, cols)), shape=(n, n)).tocsr()
    M = sparse.coo_matrix((np.concatenate(mv), (rows, cols)), shape=(n, n)).tocsr()
    return K, M


def interior_vertices(region: TriRegion) -> np.ndarray:
    return np.setdiff1d(region.used_vertices(), region.boundary_vertices())


@dataclass
class MeshEigen:
    lambda1: float
    rayleigh_residual: float
    interior: np.ndarray
    vector: np.ndarray                      # on ``interior``, positive, max-normalized
    component_values: List[float] = field(default_factory=list)
    iterations: int = 0

    def __iter__(self):
        yield self.lambda1
        yield self.rayleigh_residual


def _inverse_iteration(K, M, rtol: float = 1e-8, max_iter: int = 2000):
    lu = splu(K.tocsc())
    x = np.ones(K.shape[0])
    lam_old = np.inf
    for it in range(1, max_iter + 1):
        y = lu.solve(M @ x)
        y /= np.sqrt(y @ (M @ y))
        lam = float(y @ (K @ y))
        x = y
        if abs(lam - lam_old) <= rtol * 1e-2 * abs(lam):
            break
        lam_old = lam
    Mx = M @ x
    res = float(np.linalg.norm(K @ x - lam * Mx) / np.linalg.norm(lam * Mx))
    if x.sum() < 0:
        x = -x
    return lam, res, x, it


def dirichlet_lambda1_mesh(region: TriRegion, lumped: bool = False, rtol: float = 1e-8) -> MeshEigen:
    """Smallest eigenvalue of the discrete Dirichlet problem on ``region``:
    boundary vertices are clamped to zero, and inverse iteration from the
    all-ones vector is run per connected component of the interior."""
    inner = interior_vertices(region)
    if len(inner) < 10:
        raise ValueError("region has fewer than 10 interior vertices")
    K, M = assemble(region, lumped)
    K, M = K[inner][:, inner], M[inner][:, inner]
    ncomp, lab = connected_components(K, directed=False)
    best = None
    values = []
    for comp in range(ncomp):
        idx = np.flatnonzero(lab == comp)
        if len(idx) < 3:
            continue
        lam, res, x, it = _inverse_iteration(K[idx][:, idx], M[idx][:, idx], rtol)
        values.append(lam)
        if best is None or lam < best[0]:
            best = (lam, res, idx, x, it)
    lam, res, idx, x, it = best
    vec = np.zeros(len(inner))
    vec[idx] = x / np.abs(x).max()
    return MeshEigen(float(lam), res, inner, vec, sorted(values), it)


# ---------------------------------------------------------------------------
# Barta
# ---------------------------------------------------------------------------


def regular_interior(region: TriRegion, n_grid: int) -> np.ndarray:
    """Interior vertices whose incident triangles are all uncut grid triangles
    (every vertex index below ``n_grid``)."""
    inner = interior_vertices(region)
    T = region.triangles
    cut = T[(T >= n_grid).any(1)]
    return np.setdiff1d(inner, np.unique(cut))


def barta_ratios(region: TriRegion, trial: Union[np.ndarray, Callable[[TriRegion], np.ndarray]],
                 lumped: bool = False, vertices: Optional[np.ndarray] = None):
    """``(K f)_i / (M f)_i`` at interior vertices (or the given subset) for a
    trial ``f`` positive inside and zero on the boundary."""
    f = np.asarray(trial(region) if callable(trial) else trial, float).copy()
    inner = interior_vertices(region)
    if np.any(f[inner] <= 0):
        raise ValueError("trial function must be positive at interior vertices")
    f[np.setdiff1d(np.arange(len(f)), inner)] = 0.0
    K, M = assemble(region, lumped)
    idx = inner if vertices is None else vertices
    return (K @ f)[idx] / (M @ f)[idx]


@dataclass
class BartaCheck:
    inf_ratio: float
    sup_ratio: float
    lambda1_mesh: float
    regular_inf: float      # over vertices away from the cut boundary
    regular_sup: float

    @property
    def contains(self) -> bool:
        return self.inf_ratio <= self.lambda1_mesh <= self.sup_ratio

    def __iter__(self):
        yield self.inf_ratio
        yield self.sup_ratio
        yield self.lambda1_mesh


def barta_sandwich_check(region: TriRegion, trial, lumped: bool = False, eig: Optional[MeshEigen] = None,
                         n_grid: Optional[int] = None) -> BartaCheck:
    """Discrete Barta containment. The eigenvalue is the mean of the ratios
    weighted by ``phi_i (M f)_i`` (positive principal vector), so it lies
    between their extremes. ``n_grid`` (vertex count of the uncut mesh)
    enables the regular-vertex extremes used for equality-case checks."""
    f = np.asarray(trial(region) if callable(trial) else trial, float)
    q = barta_ratios(region, f, lumped)
    if eig is None:
        eig = dirichlet_lambda1_mesh(region, lumped)
    reg_inf = reg_sup = float("nan")
    if n_grid is not None:
        reg = regular_interior(region, n_grid)
        if len(reg):
            qr = barta_ratios(region, f, lumped, reg)
            reg_inf, reg_sup = float(qr.min()), float(qr.max())
    return BartaCheck(float(q.min()), float(q.max()), eig.lambda1, reg_inf, reg_sup)


def transplant_trial(l: int, r: float, n: int = 4000):
    """Trial function ``f = v(R)`` from the radial Dirichlet eigenfunction of
    the Euclidean ``l``-ball of radius ``r``."""
    ef = dirichlet_eigen_ball(l, r, n=n)

    def f(region: TriRegion):
        return np.asarray(ef(np.minimum(region.R, r)), float)
    return f


# ---------------------------------------------------------------------------
# transplant bound
# ---------------------------------------------------------------------------


@dataclass
class SpectralEstimate:
    r: float
    lambda1_mesh: float
    lambda1_barta: float
    l_used: int
    t_c: float
    H0: float
    v_at_tc: float
    prefactor: float

    HEADER = ("r", "lambda1_mesh", "lambda1_barta", "l_used", "H0", "v_at_tc", "prefactor")

    def row(self):
        return (self.r, self.lambda1_mesh, self.lambda1_barta, self.l_used, self.H0, self.v_at_tc, self.prefactor)


def smallest_dimension(c: float, lam: float, m: int = 2, l_max: int = 10_000) -> int:
    """Smallest integer ``l >= 2`` with ``2m - (l - 1)(1 - lam^2) + c <= 0``."""
    if lam >= 1:
        raise ValueError("Lambda_c(t_c) must be below 1")
    l = max(2, int(np.ceil(1 + (2 * m + c) / (1 - lam * lam))) - 1)
    while 2 * m - (l - 1) * (1 - lam * lam) + c > 0:
        l += 1
        if l > l_max:
            raise ValueError("no admissible dimension")
    return l


def tail_radius(tamed: TamednessReport, c: float) -> float:
    below = np.flatnonzero(np.asarray(tamed.a_i) < c)
    if not len(below):
        raise HypothesisRefused("tail supremum below c", f"no exhaustion radius with a_i < {c}")
    return float(tamed.exhaustion_radii[below[0]])


def barta_transplant_bound(tamed: TamednessReport, c: float, H0: float, r: float, m: int = 2,
                           delta: Optional[Callable] = None, sin_beta_max: float = 0.0,
                           t_c: Optional[float] = None, require_tamed: bool = True) -> SpectralEstimate:
    """``[1 + (2m + H0) / v(t_c)] lambda_{1,l}(r)`` with the smallest admissible
    ``l``; ``lambda1_mesh`` is left as NaN for the caller to fill."""
    if require_tamed and tamed.verdict != "tamed":
        raise HypothesisRefused("tamed second fundamental form", f"verdict {tamed.verdict}")
    if not tamed.a_estimate < c < 1:
        raise HypothesisRefused("c in (a_estimate, 1)", f"c={c}, a_estimate={tamed.a_estimate:.4g}")
    if t_c is None:
        t_c = tail_radius(tamed, c)
    if t_c >= r:
        raise HypothesisRefused("ball radius beyond the tail radius", f"t_c={t_c:.4g} >= r={r:.4g}")
    if delta is None:
        delta = default_delta(sin_beta_max, t_c)
    lam, ok = lambda_c(c, delta, t_c)
    if not ok:
        raise HypothesisRefused("Lambda_c(t_c) < 1", f"Lambda_c={lam:.4g}")
    l = smallest_dimension(c, lam, m)
    ef = dirichlet_eigen_ball(l, r)
    v_tc = float(ef(t_c))
    pref = 1 + (2 * m + H0) / v_tc
    return SpectralEstimate(float(r), float("nan"), pref * ef.lambda1, l, float(t_c), float(H0), v_tc, float(pref))


def mean_curvature_bound(mesh: SampledSurface, t_c: float) -> float:
    """``max R |H|`` over the sampled ``D_{t_c}``; exactly 0 for minimal charts."""
    if mesh.imm.minimal:
        return 0.0
    inside = mesh.R <= t_c
    return float(np.max(mesh.R[inside] * mesh.geometry.H_norm[inside])) if inside.any() else 0.0


def max_defect_on_level(mesh: SampledSurface, r: float) -> float:
    ls = level_set(mesh, r)
    return float(radial_split(ls.midpoint_geometry(mesh.imm))[2].max())


@dataclass
class ToneReport:
    estimates: List[SpectralEstimate]
    decay_exponent: float
    c: float

    @property
    def dominated(self) -> bool:
        return all(e.lambda1_mesh <= e.lambda1_barta for e in self.estimates)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SpectralEstimate.HEADER)
            for e in self.estimates:
                w.writerow([str(x) if isinstance(x, (int, np.integer)) else f"{x:.17g}" for x in e.row()])


def tone_decay_report(imm: ParametricImmersion, radii: Sequence[float], tamed: TamednessReport, c: float,
                      mesh: SampledSurface, lumped: bool = False, require_tamed: bool = True,
                      sin_beta_max: Optional[float] = None) -> ToneReport:
    """Mesh eigenvalue and transplant bound per radius, plus the log-log decay
    exponent of the mesh eigenvalue. ``sin_beta_max`` defaults to the largest
    normal defect measured on ``R = t_c``; pass 0 for a vanishing delta."""
    t_c = tail_radius(tamed, c)
    H0 = mean_curvature_bound(mesh, t_c)
    sbm = max_defect_on_level(mesh, t_c) if sin_beta_max is None else sin_beta_max
    out = []
    for r in radii:
        est = barta_transplant_bound(tamed, c, H0, r, sin_beta_max=sbm, t_c=t_c, require_tamed=require_tamed)
        est.lambda1_mesh = dirichlet_lambda1_mesh(mesh.ball(r), lumped).lambda1
        out.append(est)
    rs = np.array([e.r for e in out])
    lam = np.array([e.lambda1_mesh for e in out])
    p = float(np.polyfit(np.log(rs), np.log(lam), 1)[0]) if len(out) >= 2 else float("nan")
    return ToneReport(out, p, c)
