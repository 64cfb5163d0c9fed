import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tamedsurf.discretize import (WindowTruncation, clip_region, components, intrinsic_distance, region_area,
                                  sample_for_radius, triangulate, window_for_radius)
from tamedsurf.surface import catalog

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def plane_mesh():
    return triangulate(catalog("plane"), (-6, 6, -6, 6), 96)


@pytest.fixture(scope="module")
def catenoid_mesh():
    return sample_for_radius(catalog("catenoid"), 12.0, 128)


def test_plane_disc_area_and_length(plane_mesh):
    ball = plane_mesh.ball(4.0)
    assert ball.area == pytest.approx(np.pi * 16, rel=1e-3)
    assert ball.euler_characteristic() == 1
    assert components(ball) == 1


def test_disc_area_converges():
    errs = [abs(triangulate(catalog("plane"), (-3, 3, -3, 3), n).ball(2.5).area - np.pi * 6.25) for n in (16, 32, 64)]
    assert errs[2] < errs[1] < errs[0]


@pytest.mark.parametrize("level", [2.0, 2.01])
def test_clip_with_vertices_on_level(plane_mesh, level):
    # r = 2 passes through grid vertices exactly
    reg = plane_mesh.region()
    below, above = clip_region(reg, level), clip_region(reg, level, keep="above")
    assert below.area + above.area == pytest.approx(reg.area, rel=1e-9)


def test_vertices_on_level_stay_on_boundary(plane_mesh):
    ball = plane_mesh.ball(2.0)
    T = ball.triangles
    assert np.all((T[:, 0] != T[:, 1]) & (T[:, 1] != T[:, 2]) & (T[:, 0] != T[:, 2]))
    on_level = np.flatnonzero(plane_mesh.R == 2.0)
    assert len(on_level) == 4 and set(on_level) <= set(ball.boundary_vertices())
    assert ball.euler_characteristic() == 1


def test_ball_plus_annulus_is_ball(plane_mesh):
    inner, ann, outer = plane_mesh.ball(2.0), plane_mesh.annulus(2.0, 5.0), plane_mesh.ball(5.0)
    assert inner.area + ann.area == pytest.approx(outer.area, rel=1e-9)
    assert ann.euler_characteristic() == 0
    assert ann.area == pytest.approx(np.pi * 21, rel=2e-3)


def test_window_truncation(plane_mesh):
    assert plane_mesh.safe_radius == pytest.approx(6.0)
    with pytest.raises(WindowTruncation) as exc:
        plane_mesh.ball(7.0)
    assert exc.value.safe_radius == pytest.approx(6.0)


def test_window_for_radius_contains_ball():
    for name in ("plane", "catenoid", "helicoid", "enneper", "paraboloid"):
        imm = catalog(name)
        mesh = triangulate(imm, window_for_radius(imm, 10.0), 64)
        assert mesh.safe_radius > 10.0


def test_sphere_full_chart_area():
    a = 1.5
    mesh = triangulate(catalog("sphere", a=a), (0, TWO_PI, -np.pi / 2, np.pi / 2), 128)
    assert mesh.periodic
    assert mesh.region().area == pytest.approx(4 * np.pi * a * a, rel=1e-3)


def test_degenerate_interior_rejected():
    from tamedsurf.surface import ParametricImmersion, _stack
    cusp = ParametricImmersion("cusp", 3, (-np.inf, np.inf, -np.inf, np.inf),
                               F=lambda u, v: _stack(u**3, v, 0 * u))
    with pytest.raises(ValueError):
        triangulate(cusp, (-1, 1, -1, 1), 8)
    with pytest.raises(ValueError):
        triangulate(catalog("plane"), (0, 1, 0, 1), 1)


def test_catenoid_topology(catenoid_mesh):
    assert catenoid_mesh.periodic
    ball = catenoid_mesh.ball(8.0)
    assert ball.euler_characteristic() == 0
    assert components(ball) == 1
    assert len(catenoid_mesh.ball(0.9, check=False).triangles) == 0


def test_catenoid_ball_area_closed_form(catenoid_mesh):
    # area of |v| <= v1 is 2 pi (v1 + sinh(2 v1)/2); R^2 = cosh^2 v + v^2
    from scipy.optimize import brentq
    r = 8.0
    v1 = brentq(lambda v: np.cosh(v) ** 2 + v * v - r * r, 0, 5)
    exact = 2 * np.pi * (v1 + np.sinh(2 * v1) / 2)
    assert catenoid_mesh.ball(r).area == pytest.approx(exact, rel=2e-3)


def test_intrinsic_distance_on_plane(plane_mesh):
    field = intrinsic_distance(plane_mesh)
    eu = np.linalg.norm(plane_mesh.X - plane_mesh.X[field.base_vertex], axis=1)
    assert np.all(field.rho >= eu - 1e-9)
    assert np.max((field.rho - eu)[eu > 1] / eu[eu > 1]) < 0.03


def test_linear_level_area(plane_mesh):
    level = plane_mesh.R - 3.0
    assert region_area(plane_mesh, level=level) == pytest.approx(9 * np.pi, rel=2e-3)
    inside = region_area(plane_mesh, predicate=lambda m: m.R <= 3.0)
    assert inside < 9 * np.pi


def test_export(tmp_path, plane_mesh):
    small = triangulate(catalog("plane"), (-1, 1, -1, 1), 4)
    p = tmp_path / "mesh.txt"
    small.export(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "# vertices 25 faces 32"
    assert len(lines) == 1 + 25 + 32


@settings(max_examples=15)
@given(st.sampled_from(["plane", "catenoid", "enneper", "paraboloid"]), st.floats(1.5, 6.0), st.floats(0.05, 2.0))
def test_ball_area_monotone(name, r, dr):
    mesh = _cached(name)
    assert mesh.ball(r).area <= mesh.ball(r + dr).area + 1e-12


@settings(max_examples=15)
@given(st.floats(1.0, 4.0))
def test_clip_keep_above_complement(level):
    reg = _cached("plane").region()
    below = clip_region(reg, level)
    above = clip_region(reg, level, keep="above")
    assert below.area + above.area == pytest.approx(reg.area, rel=1e-9)


_MESHES = {}


def _cached(name):
    if name not in _MESHES:
        _MESHES[name] = sample_for_radius(catalog(name), 8.5, 64)
    return _MESHES[name]
