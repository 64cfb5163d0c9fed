import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from tamedsurf.discretize import WindowTruncation, sample_for_radius, triangulate
from tamedsurf.extrinsic import (CriticalPointError, GrowthCurve, HypothesisRefused, coarea_check,
                                 critical_point_scan, divergence_check, fit_growth, flow_bound, flow_bound_check,
                                 gradient_decomposition, growth_curve, kasue_envelope_check, laplacian_R2,
                                 level_set, level_starts, point_on_level, radial_flow, radial_flows, tail_sups,
                                 tamedness_estimate, tamedness_verdict)
from tamedsurf.surface import GeometryError, catalog, point_geometry


@pytest.fixture(scope="module")
def plane():
    imm = catalog("plane")
    return imm, triangulate(imm, (-10, 10, -10, 10), 128)


@pytest.fixture(scope="module")
def catenoid():
    imm = catalog("catenoid")
    return imm, sample_for_radius(imm, 20.0, 160)


def catenoid_v(r):
    return brentq(lambda v: np.cosh(v) ** 2 + v * v - r * r, 0, 10)


def test_gradient_decomposition_plane_and_pole():
    assert gradient_decomposition(catalog("plane"), 1.0, 2.0) == pytest.approx((1.0, 0.0))
    with pytest.raises(GeometryError):
        gradient_decomposition(catalog("plane"), 0.0, 0.0)


@given(st.floats(0.1, 6.2), st.floats(-1.2, 1.2), st.floats(0.5, 3.0))
def test_sphere_through_origin_defect(u, v, a):
    # on the sphere |x - a e1| = a:  <x/|x|, normal> = |x| / (2a)
    imm = catalog("sphere", a=a, center=(a, 0.0, 0.0))
    R = np.linalg.norm(imm.position(u, v))
    if R < 1e-3:
        return
    grad, defect = gradient_decomposition(imm, u, v)
    assert defect == pytest.approx(R / (2 * a), abs=1e-12)
    assert grad**2 + defect**2 == pytest.approx(1.0, abs=1e-12)


def test_plane_level_set(plane):
    _, mesh = plane
    ls = level_set(mesh, 5.0)
    assert ls.n_components == 1 and ls.closed == [True]
    assert ls.total_length == pytest.approx(10 * np.pi, rel=1e-3)
    polylines, length = ls
    assert length == ls.total_length


def test_catenoid_level_set_two_circles(catenoid):
    imm, mesh = catenoid
    r = 10.0
    ls = level_set(mesh, r)
    assert ls.n_components == 2 and all(ls.closed)
    assert ls.total_length == pytest.approx(2 * 2 * np.pi * np.cosh(catenoid_v(r)), rel=2e-3)


def test_plane_growth_and_fit(plane):
    imm, mesh = plane
    radii = np.linspace(1, 9, 9)
    g = growth_curve(imm, None, None, radii, mesh=mesh)
    # inscribed-polygon deficit, largest at the smallest radius
    assert np.allclose(g.area, np.pi * radii**2, rtol=3e-3)
    assert np.allclose(g.perimeter, 2 * np.pi * radii, rtol=2e-3)
    assert np.allclose(g.curvature_integral, 0)
    fit = fit_growth(g)
    assert fit.area_exponent == pytest.approx(2, abs=1e-3)
    assert fit.perimeter_exponent == pytest.approx(1, abs=1e-3)
    assert fit.area_lower <= np.pi * 1.001 and fit.area_upper >= np.pi * 0.999


def test_growth_truncation_keeps_partial(plane):
    imm, mesh = plane
    with pytest.raises(WindowTruncation) as exc:
        growth_curve(imm, None, None, [2.0, 4.0, 12.0], mesh=mesh)
    assert list(exc.value.partial.radii) == [2.0, 4.0]
    with pytest.raises(ValueError):
        growth_curve(imm, None, None, [3.0, 2.0], mesh=mesh)


def test_growth_csv_roundtrip(tmp_path, plane):
    imm, mesh = plane
    g = growth_curve(imm, None, None, [1.0, 2.0, 3.0], mesh=mesh)
    g.write_csv(tmp_path / "g.csv")
    back = GrowthCurve.read_csv(tmp_path / "g.csv")
    for a, b in zip(g.rows(), back.rows()):
        assert tuple(map(float, a)) == tuple(map(float, b))


def test_catenoid_growth_closed_form(catenoid):
    imm, mesh = catenoid
    radii = np.array([4.0, 8.0, 16.0])
    g = growth_curve(imm, None, None, radii, mesh=mesh)
    v1 = np.array([catenoid_v(r) for r in radii])
    assert np.allclose(g.area, 2 * np.pi * (v1 + np.sinh(2 * v1) / 2), rtol=3e-3)
    # total curvature of |v| <= v1 is -4 pi tanh(v1)
    assert np.allclose(g.curvature_integral, -4 * np.pi * np.tanh(v1), rtol=3e-3)


def test_tamedness_verdict_rules():
    assert tamedness_verdict(np.array([2, 1, 0.5, 0.4, 0.3, 0.3])) == "tamed"
    assert tamedness_verdict(np.array([2, 1.5, 1.2, 1.1, 1.0, 1.0])) == "not_tamed"
    assert tamedness_verdict(np.array([2, 1.5, 0.97, 0.96, 0.99, 0.98])) == "inconclusive"


@given(st.lists(st.floats(0, 10), min_size=1, max_size=30), st.lists(st.floats(0, 10), min_size=1, max_size=5))
def test_tail_sups_brute_force(vals, radii):
    vals = np.array(vals)
    R = np.linspace(0, 10, len(vals))
    radii = np.sort(np.array(radii))
    got = tail_sups(vals, R, radii)
    want = [vals[R > r].max() if (R > r).any() else 0.0 for r in radii]
    assert np.allclose(got, want)
    assert np.all(np.diff(got) <= 0)


def test_plane_tamed(plane):
    imm, mesh = plane
    rep = tamedness_estimate(imm, None, None, np.linspace(1, 8, 8), 0.5, mesh=mesh)
    assert rep.verdict == "tamed" and rep.a_estimate == 0 and rep.t_c == 1.0
    assert rep.to_dict()["strong"] == {"epsilon": None, "tail_sup": None}
    with pytest.raises(ValueError):
        tamedness_estimate(imm, None, None, [1.0, 2.0], 1.5, mesh=mesh)


def test_catenoid_tamed_and_decaying(catenoid):
    imm, mesh = catenoid
    rep = tamedness_estimate(imm, None, None, np.geomspace(4, 18, 6), 0.3, mesh=mesh, epsilon=0.5)
    assert rep.verdict == "tamed"
    assert np.all(np.diff(rep.a_i) <= 0)
    assert rep.a_estimate < 0.3 and rep.t_c is not None
    assert rep.strong_tail_sup is not None


def test_kasue_envelope_holds(plane, catenoid):
    assert kasue_envelope_check(plane[1], 2.0, 0.1)[0]
    imm, mesh = catenoid
    rep = tamedness_estimate(imm, None, None, np.geomspace(4, 18, 6), 0.3, mesh=mesh)
    assert kasue_envelope_check(mesh, rep.t_c, 0.3)[0]


def test_coarea_and_divergence(catenoid):
    imm, mesh = catenoid
    assert coarea_check(imm, mesh, 3.0, 12.0) < 2e-2
    assert divergence_check(imm, mesh, 8.0) < 2e-2
    with pytest.raises(ValueError):
        coarea_check(imm, mesh, 5.0, 4.0)


@given(st.sampled_from(["catenoid", "helicoid", "enneper"]), st.floats(-2, 2), st.floats(-2, 2))
def test_laplacian_R2_minimal(name, u, v):
    assert laplacian_R2(point_geometry(catalog(name), u, v)) == pytest.approx(4.0)


def test_plane_flow_is_radial():
    imm = catalog("plane")
    starts = level_starts(imm, 1.0, 6)
    for tr in radial_flows(imm, starts, 5.0, 0.05):
        assert np.allclose(tr.R, 1.0 + tr.t, atol=1e-12)
        assert np.allclose(tr.sin_beta, 0.0, atol=1e-12)
        assert flow_bound_check(tr, 0.1)[0]


def test_catenoid_flow_invariants():
    imm = catalog("catenoid")
    starts = level_starts(imm, 4.0, 4)
    assert np.allclose([np.linalg.norm(imm.position(*p)) for p in starts], 4.0)
    for tr in radial_flows(imm, starts, 10.0, 0.02):
        psi_err, r_err = tr.invariant_errors()
        assert psi_err < 1e-12 and r_err < 1e-7
        assert np.all(tr.sin_beta < 1)


def test_flow_bound_formula():
    assert flow_bound(0.0, 0.4, 0.2, 3.0) == pytest.approx(0.4)
    assert flow_bound(1e9, 0.4, 0.2, 3.0) == pytest.approx(0.2, abs=1e-8)
    assert flow_bound(3.0, 0.4, 0.2, 3.0) == pytest.approx(0.3)


def test_sphere_flow_meets_critical_point():
    a = 1.0
    imm = catalog("sphere", a=a, center=(a, 0, 0))
    start = point_on_level(imm, 0.5, direction=(0.0, 1.0))
    with pytest.raises((CriticalPointError, GeometryError)):
        radial_flow(imm, start, 3.0, 0.01)
    mesh = triangulate(imm, (0, 2 * np.pi, -np.pi / 2 + 1e-3, np.pi / 2 - 1e-3), 64)
    gmin, uv = critical_point_scan(mesh, 1.0)
    assert gmin < 0.1
    assert np.linalg.norm(imm.position(*uv)) == pytest.approx(2 * a, abs=0.05)


def test_point_on_level_errors():
    imm = catalog("plane")
    with pytest.raises(ValueError):
        point_on_level(imm, 1.0, origin=(3.0, 0.0))
    assert issubclass(HypothesisRefused, ValueError)
    assert HypothesisRefused("x", "y").hypothesis == "x"
