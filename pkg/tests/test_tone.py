import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import jn_zeros

from tamedsurf.comparison import dirichlet_eigen_ball
from tamedsurf.discretize import clip_region, sample_for_radius, triangulate
from tamedsurf.extrinsic import HypothesisRefused, TamednessReport, tamedness_estimate
from tamedsurf.surface import catalog
from tamedsurf.tone import (assemble, barta_ratios, barta_sandwich_check, barta_transplant_bound,
                            dirichlet_lambda1_mesh, interior_vertices, mean_curvature_bound, smallest_dimension,
                            tone_decay_report, transplant_trial)

J01_SQ = jn_zeros(0, 1)[0] ** 2


@pytest.fixture(scope="module")
def plane_mesh():
    return triangulate(catalog("plane"), (-5, 5, -5, 5), 96)


def square(n):
    return triangulate(catalog("plane"), (0, np.pi, 0, np.pi), n).region()


def test_assembly_identities():
    K, M = assemble(square(8))
    assert abs(K.sum()) < 1e-10                     # constants are in the kernel
    assert M.sum() == pytest.approx(np.pi**2)       # mass integrates 1
    Kl, Ml = assemble(square(8), lumped=True)
    assert Ml.sum() == pytest.approx(np.pi**2)
    assert (Ml - Ml.T).nnz == 0 and abs(K - K.T).max() < 1e-14


def test_square_eigenvalue_converges():
    errs = [dirichlet_lambda1_mesh(square(n)).lambda1 - 2.0 for n in (8, 16, 32)]
    assert all(e > 0 for e in errs)                 # conforming P1 bounds from above
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)
    eig = dirichlet_lambda1_mesh(square(32))
    assert eig.rayleigh_residual < 1e-6 and np.all(eig.vector > 0)


def test_disc_eigenvalue(plane_mesh):
    lam = dirichlet_lambda1_mesh(plane_mesh.ball(4.0)).lambda1
    assert lam == pytest.approx(J01_SQ / 16, rel=1e-2)


def test_disconnected_region_reports_each_component():
    reg = triangulate(catalog("plane"), (-3, 3, -1, 1), (48, 16)).region()
    two = clip_region(reg, 0.0, values=1.0 - np.abs(reg.uv[:, 0]), exact=False, keep="below")
    eig = dirichlet_lambda1_mesh(two)
    assert len(eig.component_values) == 2
    assert eig.component_values[0] == pytest.approx(eig.component_values[1], rel=1e-6)
    assert eig.lambda1 == pytest.approx(np.pi**2 / 2, rel=2e-2)


def test_small_region_rejected():
    with pytest.raises(ValueError):
        dirichlet_lambda1_mesh(square(3))


@given(st.floats(0.0, 0.99), st.floats(0.0, 1.0), st.integers(1, 4))
def test_smallest_dimension_brute_force(lam, c, m):
    l = smallest_dimension(c, lam, m)
    assert 2 * m - (l - 1) * (1 - lam**2) + c <= 0
    assert l == 2 or 2 * m - (l - 2) * (1 - lam**2) + c > 0


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_barta_containment_random_bumps(seed):
    reg = square(16)
    rng = np.random.default_rng(seed)
    x, y = reg.uv[:, 0], reg.uv[:, 1]
    f = np.sin(x) * np.sin(y)
    for _ in range(3):
        cx, cy = rng.uniform(0.3, 2.8, 2)
        f = f * (1 + rng.uniform(0, 0.5) * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / rng.uniform(0.1, 1)))
    inner = interior_vertices(reg)
    f[np.setdiff1d(np.arange(len(f)), inner)] = 0
    chk = barta_sandwich_check(reg, f)
    assert chk.contains


def test_barta_equality_for_eigenvector():
    reg = square(24)
    eig = dirichlet_lambda1_mesh(reg)
    f = np.zeros(len(reg.uv))
    f[eig.interior] = eig.vector
    q = barta_ratios(reg, f)
    # ratios are flat to the eigenvector's own residual
    assert np.allclose(q, eig.lambda1, rtol=10 * eig.rayleigh_residual)
    with pytest.raises(ValueError):
        barta_ratios(reg, -f)


def test_transplant_trial_on_disc(plane_mesh):
    ball = plane_mesh.ball(4.0)
    chk = barta_sandwich_check(ball, transplant_trial(2, 4.0), n_grid=plane_mesh.n_vertices)
    inf, sup, lam = chk
    assert chk.contains
    # away from the cut boundary the planar ratios pin the eigenvalue
    assert chk.regular_inf == pytest.approx(lam, rel=3e-2) and chk.regular_sup == pytest.approx(lam, rel=3e-2)


def _plane_tamed(mesh, c=0.5):
    return tamedness_estimate(mesh.imm, None, None, np.linspace(1, 4, 6), c, mesh=mesh)


def test_transplant_bound_refusals(plane_mesh):
    t = _plane_tamed(plane_mesh)
    untamed = TamednessReport(t.exhaustion_radii, np.ones(6), 1.0, "not_tamed", None, 0.5, 0.05)
    with pytest.raises(HypothesisRefused):
        barta_transplant_bound(untamed, 0.5, 0.0, 4.0)
    with pytest.raises(HypothesisRefused):
        barta_transplant_bound(t, 0.5, 0.0, 0.5)            # ball inside the compact core
    high = TamednessReport(t.exhaustion_radii, np.full(6, 0.6), 0.6, "tamed", 1.0, 0.5, 0.05)
    with pytest.raises(HypothesisRefused):
        barta_transplant_bound(high, 0.5, 0.0, 4.0)          # c must exceed a
    with pytest.raises(HypothesisRefused):
        barta_transplant_bound(t, 0.5, 0.0, 4.0, sin_beta_max=0.9)   # Lambda_c >= 1


def test_transplant_bound_formula(plane_mesh):
    t = _plane_tamed(plane_mesh)
    est = barta_transplant_bound(t, 0.5, 0.0, 4.0)
    l = smallest_dimension(0.5, 0.5)
    assert est.l_used == l and est.t_c == 1.0
    ef = dirichlet_eigen_ball(l, 4.0)
    assert est.v_at_tc == pytest.approx(float(ef(1.0)))
    assert est.lambda1_barta == pytest.approx((1 + 4 / est.v_at_tc) * ef.lambda1)
    # the transplanted eigenvalue scales like r^-2 at fixed dimension
    assert dirichlet_eigen_ball(l, 8.0).lambda1 == pytest.approx(ef.lambda1 / 4, rel=1e-9)


def test_tone_report_on_plane(plane_mesh, tmp_path):
    t = _plane_tamed(plane_mesh)
    rep = tone_decay_report(plane_mesh.imm, [2.0, 3.0, 4.0], t, 0.5, plane_mesh)
    assert rep.dominated
    assert rep.decay_exponent == pytest.approx(-2.0, abs=0.05)
    rep.write_csv(tmp_path / "tone.csv")
    lines = (tmp_path / "tone.csv").read_text().splitlines()
    assert lines[0].startswith("r,lambda1_mesh") and len(lines) == 4


def test_mean_curvature_bound():
    cat = sample_for_radius(catalog("catenoid"), 6.0, 48)
    assert mean_curvature_bound(cat, 4.0) == 0.0
    par = sample_for_radius(catalog("paraboloid"), 6.0, 48)
    assert mean_curvature_bound(par, 4.0) > 0
