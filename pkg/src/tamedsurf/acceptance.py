"""Acceptance criteria as plain functions over a shared, lazily built workbench.

Each ``criterion_N`` returns a :class:`CriterionResult` whose sub-checks carry
the measured values; the test suite and ``verify-all`` both call these.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional

import numpy as np

from . import comparison, surface
from .discretize import SampledSurface, intrinsic_distance, sample_for_radius, triangulate
from .extrinsic import (GrowthCurve, HypothesisRefused, TamednessReport, coarea_check, divergence_check,
                        fit_growth, flow_bound_check, growth_curve, kasue_envelope_check, level_starts, point_on_level,
                        radial_flows, tamedness_estimate)
from .integrals import (alpha_l2_integral, chern_osserman_check, count_ends, gauss_bonnet_annulus,
                        total_curvature, white_multiple_check)
from .tone import (barta_sandwich_check, dirichlet_lambda1_mesh, tone_decay_report, transplant_trial)

TWO_PI = 2 * np.pi


@dataclass
class Check:
    label: str
    passed: bool
    value: object = None

    def __str__(self):
        v = self.value
        if isinstance(v, float):
            v = f"{v:.6g}"
        return f"{'ok ' if self.passed else 'FAIL'} {self.label}" + ("" if v is None else f" = {v}")


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: List[Check] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, label, passed, value=None):
        self.checks.append(Check(label, bool(passed), value))

    def line(self) -> str:
        failed = [c.label for c in self.checks if not c.passed]
        status = "PASS" if self.passed else "FAIL"
        tail = f" [failed: {'; '.join(failed)}]" if failed else ""
        return f"criterion {self.number:2d} {status} {self.title} ({self.seconds:.1f}s){tail}"

    def report(self) -> str:
        return "\n".join([self.line()] + [f"    {c}" for c in self.checks])

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "checks": [{"label": c.label, "passed": c.passed,
                            "value": c.value if isinstance(c.value, (int, float, str, bool)) or c.value is None
                            else str(c.value)} for c in self.checks]}


def _rel(a, b):
    return abs(a - b) / abs(b)


# ---------------------------------------------------------------------------
# workbench: per-surface meshes, growth curves and tamedness reports
# ---------------------------------------------------------------------------


@dataclass
class Setup:
    imm: surface.ParametricImmersion
    radii: np.ndarray
    chi: int
    c: float


def _setups() -> Dict[str, Setup]:
    return {
        "plane": Setup(surface.plane(), np.linspace(1.0, 8.0, 8), 1, 0.1),
        "catenoid": Setup(surface.catenoid(), np.geomspace(4.0, 40.0, 8), 0, 0.3),
        "helicoid": Setup(surface.helicoid(1.0), np.geomspace(4.0, 32.0, 8), 1, 0.5),
        "enneper": Setup(surface.enneper(), np.geomspace(100.0, 3000.0, 10), 1, 0.5),
        "hyperboloid_sheet": Setup(surface.hyperboloid_sheet(1.0), np.geomspace(4.0, 100.0, 10), 1, 0.75),
        "paraboloid": Setup(surface.paraboloid(), np.geomspace(4.0, 100.0, 8), 1, 0.5),
    }


class Bench:
    """Lazily computed, cached artifacts shared between criteria."""

    def __init__(self, resolution: int = 256, slack: float = 0.05):
        self.resolution = resolution
        self.slack = slack
        self.setups = _setups()
        self._cache: Dict[tuple, object] = {}

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def mesh(self, name: str, r_max: Optional[float] = None, resolution: Optional[int] = None) -> SampledSurface:
        s = self.setups[name]
        r_max = float(s.radii[-1] if r_max is None else r_max)
        res = self.resolution if resolution is None else resolution
        return self._memo(("mesh", name, r_max, res), lambda: sample_for_radius(s.imm, r_max, res))

    def rho(self, name: str) -> np.ndarray:
        return self._memo(("rho", name), lambda: intrinsic_distance(self.mesh(name)).rho)

    def growth(self, name: str) -> GrowthCurve:
        s = self.setups[name]
        return self._memo(("growth", name), lambda: growth_curve(s.imm, None, None, s.radii, mesh=self.mesh(name)))

    def tamed(self, name: str, c: Optional[float] = None) -> TamednessReport:
        s = self.setups[name]
        c = s.c if c is None else c
        return self._memo(("tamed", name, c), lambda: tamedness_estimate(
            s.imm, None, None, s.radii, c, slack=self.slack, mesh=self.mesh(name), rho=self.rho(name)))

    def sphere_mesh(self, resolution: Optional[int] = None) -> SampledSurface:
        res = self.resolution if resolution is None else resolution
        imm = surface.sphere(1.0, center=(1.0, 0.0, 0.0))
        return self._memo(("sphere", res), lambda: triangulate(imm, imm.domain[:2] + (imm.domain[2] + 1e-3, imm.domain[3] - 1e-3), res))


def _timed(fn):
    def run(bench: Optional[Bench] = None) -> CriterionResult:
        bench = bench or Bench()
        t0 = time.time()
        res = fn(bench)
        res.seconds = time.time() - t0
        return res
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


@_timed
def criterion_1(b: Bench) -> CriterionResult:
    """Catenoid total curvature and helicoid divergence."""
    res = CriterionResult(1, "total curvature: catenoid -4pi, helicoid minus_infinity")
    tc = total_curvature(None, b.growth("catenoid"))
    res.add("catenoid verdict finite", tc.verdict == "finite", tc.verdict)
    res.add("catenoid extrapolated within 1% of -4pi", tc.verdict == "finite" and _rel(tc.value, -4 * np.pi) <= 0.01, tc.value)
    th = total_curvature(None, b.growth("helicoid"))
    res.add("helicoid verdict minus_infinity", th.verdict == "minus_infinity", th.verdict)
    res.add("helicoid partial sums below -20pi", th.sequence.min() < -20 * np.pi, float(th.sequence.min()))
    return res


@_timed
def criterion_2(b: Bench) -> CriterionResult:
    """Plane growth ratios and fitted exponents."""
    res = CriterionResult(2, "plane growth A/r^2 = pi, L/r = 2pi, exponents (2, 1)")
    g = b.growth("plane")
    a_err = np.max(np.abs(g.area / g.radii ** 2 / np.pi - 1))
    l_err = np.max(np.abs(g.perimeter / g.radii / TWO_PI - 1))
    fit = fit_growth(g)
    res.add("max |A/(pi r^2) - 1| <= 0.005", a_err <= 5e-3, float(a_err))
    res.add("max |L/(2 pi r) - 1| <= 0.005", l_err <= 5e-3, float(l_err))
    res.add("area exponent 2 +- 0.01", abs(fit.area_exponent - 2) <= 0.01, fit.area_exponent)
    res.add("perimeter exponent 1 +- 0.01", abs(fit.perimeter_exponent - 1) <= 0.01, fit.perimeter_exponent)
    return res


@_timed
def criterion_3(b: Bench) -> CriterionResult:
    """Area growth versus total curvature, both directions."""
    res = CriterionResult(3, "catenoid quadratic area growth; helicoid super-quadratic, non-linear perimeter")
    fc = fit_growth(b.growth("catenoid"))
    res.add("catenoid area exponent 2 +- 0.1", abs(fc.area_exponent - 2) <= 0.1, fc.area_exponent)
    res.add("catenoid lower area constant > 0", fc.area_lower > 0, fc.area_lower)
    gh = b.growth("helicoid")
    fh = fit_growth(gh)
    res.add("helicoid area exponent >= 2.7", fh.area_exponent >= 2.7, fh.area_exponent)
    k = max(4, len(gh.radii) // 2)
    lr = gh.perimeter[-k:] / gh.radii[-k:]
    growth = float(lr[-1] / lr[0])
    res.add("helicoid L/r increases >= 2x across the tail", growth >= 2.0 and np.all(np.diff(lr) > 0), growth)
    return res


_CO_MIDDLE = {"plane": TWO_PI, "catenoid": 4 * np.pi, "enneper": 6 * np.pi, "hyperboloid_sheet": TWO_PI / np.sqrt(2)}


@_timed
def criterion_4(b: Bench) -> CriterionResult:
    """Chern-Osserman sandwich and intrinsic-ball limit."""
    res = CriterionResult(4, "Chern-Osserman sandwich on plane, catenoid, Enneper, hyperboloid_sheet(1)")
    for name, middle in _CO_MIDDLE.items():
        s = b.setups[name]
        tamed = b.tamed(name)
        # the criterion asserts the inequalities themselves; a surface whose
        # tamedness verdict is not "tamed" is still evaluated, and labelled
        override = tamed.verdict != "tamed"
        try:
            rep = chern_osserman_check(s.imm, s.chi, b.growth(name), tamed, mesh=b.mesh(name), rho=b.rho(name),
                                       slack=b.slack, require_tamed=not override)
        except HypothesisRefused as exc:
            res.add(f"{name}: hypotheses for the sandwich", False, str(exc))
            continue
        if override:
            name = f"{name} [verdict {tamed.verdict}, a={tamed.a_estimate:.3g}; evaluated without the tamed premise]"
        res.add(f"{name}: lower <= middle <= upper (5% slack)", rep.sandwich_holds,
                f"{rep.lower_bound:.5g} <= {rep.middle:.5g} <= {rep.upper_bound:.5g}")
        res.add(f"{name}: middle within 5% of closed form", _rel(rep.middle, middle) <= b.slack, rep.middle)
        res.add(f"{name}: intrinsic-ball limit within 10% of middle", rep.shiohama_gap <= 0.10, rep.shiohama_limit)
    return res


def _growth_verdicts(g: GrowthCurve, tol: float = 0.1):
    fit = fit_growth(g)
    return fit.area_exponent <= 2 + tol, fit.perimeter_exponent <= 1 + tol


@_timed
def criterion_5(b: Bench) -> CriterionResult:
    """Linear perimeter growth iff quadratic area growth."""
    res = CriterionResult(5, "perimeter/area growth equivalence")
    expected = {"plane": True, "catenoid": True, "enneper": True, "hyperboloid_sheet": True, "helicoid": False}
    for name, exp in expected.items():
        quad, lin = _growth_verdicts(b.growth(name))
        res.add(f"{name}: quadratic area == linear perimeter == {exp}", quad == lin == exp, f"area {quad}, perimeter {lin}")
    return res


def _annuli(b: Bench):
    return [
        ("plane", (1.0, 2.0)), ("catenoid", (3.0, 12.0)), ("helicoid", (4.0, 8.0)),
        ("enneper", (50.0, 200.0)), ("hyperboloid_sheet", (3.0, 12.0)), ("paraboloid", (2.0, 6.0)),
        ("sphere", (0.5, 1.2)),
    ]


@_timed
def criterion_6(b: Bench) -> CriterionResult:
    """Gauss-Bonnet on annuli at the reference resolution and under refinement."""
    res = CriterionResult(6, "Gauss-Bonnet annulus residuals <= 2e-2 and halving under refinement")
    half = max(16, b.resolution // 2)
    for name, (r1, r2) in _annuli(b):
        reps = []
        for n in (half, b.resolution):
            if name == "sphere":
                mesh = b.sphere_mesh(n)
            else:
                mesh = b.mesh(name, r_max=2 * r2 if name != "enneper" else 1.5 * r2, resolution=n)
            reps.append(gauss_bonnet_annulus(mesh.imm, mesh, r1, r2))
        coarse, fine = reps
        res.add(f"{name} ({r1:g},{r2:g}): residual <= 2e-2", fine.gb_residual <= 2e-2, fine.gb_residual)
        res.add(f"{name}: residual halves ({coarse.gb_residual:.3g} -> {fine.gb_residual:.3g})",
                fine.gb_residual <= 0.5 * coarse.gb_residual + 1e-10, fine.gb_residual / max(coarse.gb_residual, 1e-300))
    return res


@_timed
def criterion_7(b: Bench) -> CriterionResult:
    """Coarea and divergence identities."""
    res = CriterionResult(7, "coarea and divergence residuals <= 2e-2")
    plane_m = b.mesh("plane", r_max=4.0)
    cat_m = b.mesh("catenoid", r_max=20.0)
    sph = b.sphere_mesh()
    for label, imm, mesh, rr in [("plane (1,2)", plane_m.imm, plane_m, (1.0, 2.0)),
                                 ("catenoid (5,10)", cat_m.imm, cat_m, (5.0, 10.0)),
                                 ("sphere (0.5,1.3)", sph.imm, sph, (0.5, 1.3))]:
        r = coarea_check(imm, mesh, *rr)
        res.add(f"coarea {label}", r <= 2e-2, r)
    par_m = b.mesh("paraboloid", r_max=12.0)
    for label, mesh, t in [("plane t=2", plane_m, 2.0), ("catenoid t=10", cat_m, 10.0), ("paraboloid t=6", par_m, 6.0)]:
        r = divergence_check(mesh.imm, mesh, t)
        res.add(f"divergence {label}", r <= 2e-2, r)
    return res


@_timed
def criterion_8(b: Bench) -> CriterionResult:
    """Tamedness verdicts."""
    res = CriterionResult(8, "tamedness estimates and verdicts")
    for name in ("plane", "catenoid", "enneper"):
        t = b.tamed(name)
        res.add(f"{name}: a_estimate <= 0.05", t.a_estimate <= 0.05, t.a_estimate)
    t = b.tamed("hyperboloid_sheet")
    res.add("hyperboloid_sheet(1): a_estimate = 0.707 +- 0.05", abs(t.a_estimate - 1 / np.sqrt(2)) <= 0.05, t.a_estimate)
    for name in ("helicoid", "paraboloid"):
        t = b.tamed(name)
        res.add(f"{name}: not_tamed", t.verdict == "not_tamed", t.verdict)
    return res


@_timed
def criterion_9(b: Bench) -> CriterionResult:
    """Radial eigenvalue oracles and mesh flat-disk eigenvalues."""
    res = CriterionResult(9, "eigenvalue oracles and flat-disk mesh eigenvalues")
    e3 = comparison.dirichlet_eigen_ball(3, 1.0).lambda1
    res.add("ball(3,1) = pi^2 +- 1e-6", abs(e3 - np.pi ** 2) <= 1e-6, e3)
    e2 = comparison.dirichlet_eigen_ball(2, 1.0).lambda1
    res.add("ball(2,1) = 5.7832 +- 1e-3", abs(e2 - 5.7832) <= 1e-3, e2)
    m = b.mesh("plane", r_max=2.0)
    l1 = dirichlet_lambda1_mesh(m.ball(1.0)).lambda1
    l2 = dirichlet_lambda1_mesh(m.ball(2.0)).lambda1
    res.add("mesh disk r=1 within 3% of the radial value", _rel(l1, e2) <= 0.03, l1)
    res.add("scaling ratio 0.25 +- 0.02", abs(l2 / l1 - 0.25) <= 0.02, l2 / l1)
    return res


def _random_bump(seed: int, r: float):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-0.5 * r, 0.5 * r, size=(3, 2))
    widths = rng.uniform(0.2 * r, 0.6 * r, size=3)
    weights = rng.uniform(0.2, 1.0, size=3)

    def f(region):
        X = region.X[:, :2]
        base = np.clip(1 - (region.R / r) ** 2, 0.0, None)
        bump = sum(w * np.exp(-np.sum((X - c) ** 2, 1) / wd ** 2) for c, w, wd in zip(centers, weights, widths))
        return base * (0.1 + bump)
    return f


@_timed
def criterion_10(b: Bench) -> CriterionResult:
    """Fundamental-tone decay with the transplant bound and Barta containment."""
    res = CriterionResult(10, "tone decay exponent <= -1.8, transplant bound dominates, Barta containment")
    radii = [5.0, 10.0, 20.0]
    for name in ("plane", "catenoid", "hyperboloid_sheet"):
        s = b.setups[name]
        mesh = b.mesh(name, r_max=20.0) if name == "plane" else b.mesh(name)
        tamed = b.tamed(name) if name != "plane" else tamedness_estimate(
            s.imm, None, None, np.linspace(1.0, 4.0, 6), s.c, mesh=mesh)
        c = 0.7 if name == "catenoid" else s.c
        try:
            rep = tone_decay_report(s.imm, radii, tamed, c, mesh)
        except HypothesisRefused as exc:
            lam = [dirichlet_lambda1_mesh(mesh.ball(r)).lambda1 for r in radii]
            p = float(np.polyfit(np.log(radii), np.log(lam), 1)[0])
            res.add(f"{name}: mesh decay exponent <= -1.8", p <= -1.8, p)
            res.add(f"{name}: transplant bound", False, str(exc))
            continue
        res.add(f"{name}: mesh decay exponent <= -1.8", rep.decay_exponent <= -1.8, rep.decay_exponent)
        res.add(f"{name}: transplant bound dominates at every radius", rep.dominated,
                ", ".join(f"{e.lambda1_mesh:.3g}<={e.lambda1_barta:.3g}" for e in rep.estimates))
        contained = True
        for k, r in enumerate(radii):
            region = mesh.ball(r)
            eig = dirichlet_lambda1_mesh(region)
            trials = [transplant_trial(rep.estimates[k].l_used, r), transplant_trial(2, r),
                      lambda g, r=r: 1 - (g.R / r) ** 2, _random_bump(k, r)]
            for f in trials:
                contained &= barta_sandwich_check(region, f, eig=eig).contains
        res.add(f"{name}: Barta containment for all trials", contained)
    return res


@_timed
def criterion_11(b: Bench) -> CriterionResult:
    """Lemma-level suites."""
    res = CriterionResult(11, "comparison lemmas, Kasue envelope, flow bound")
    rng = np.random.default_rng(20240611)
    worst, ok = 0.0, True
    for _ in range(50):
        a, c0 = rng.uniform(-2.0, 2.0), rng.uniform(0.2, 3.0)
        prof = comparison.solve_jacobi(lambda t, a=a, c0=c0: a / (c0 + t) ** 2, 20.0, step=1e-2, richardson=False)
        premise, m = comparison.quadratic_decay_lemma_check(prof)
        ok &= premise and m <= 2 + 1e-9
        worst = max(worst, m)
    res.add("t h'/h <= 2 over 50 random admissible profiles", ok, worst)
    ok, worst = True, 0.0
    for l in range(2, 9):
        for r in (1.0, 2.0, 5.0):
            ef = comparison.dirichlet_eigen_ball(l, r)
            holds, m = comparison.v_slope_lemma_check(ef)
            ok &= holds
            worst = max(worst, m / ef.lambda1)
    res.add("-v'/t <= lambda1 over all eigenprofiles", ok, worst)
    for name in ("plane", "catenoid", "enneper"):
        t = b.tamed(name)
        if t.t_c is None:
            res.add(f"{name}: Kasue envelope", False, "no tail radius")
            continue
        holds, excess = kasue_envelope_check(b.mesh(name), t.t_c, t.c)
        res.add(f"{name}: Kasue envelope dominates |grad-perp rho|", holds, excess)
    # catenoid from the reported tail radius, both ends
    t = b.tamed("catenoid")
    imm = b.setups["catenoid"].imm
    starts = level_starts(imm, t.t_c, 20)
    checks = [flow_bound_check(tr, t.c, t.t_c) for tr in radial_flows(imm, starts, 30.0, 2e-2)]
    res.add("catenoid: flow bound along 20 trajectories", all(h for h, _ in checks), max(v for _, v in checks))
    imm = b.setups["hyperboloid_sheet"].imm
    starts = [point_on_level(imm, 2.0, direction=(np.cos(a), np.sin(a))) for a in TWO_PI * np.arange(20) / 20]
    checks = [flow_bound_check(tr, 0.75, 2.0) for tr in radial_flows(imm, starts, 18.0, 2e-2)]
    res.add("hyperboloid_sheet: flow bound along 20 trajectories (c=0.75, r0=2)",
            all(h for h, _ in checks), max(v for _, v in checks))
    return res


@_timed
def criterion_12(b: Bench) -> CriterionResult:
    """Integrated squared second fundamental form, quantized total curvature, and topology."""
    res = CriterionResult(12, "catenoid |alpha|^2 integral, White residual, K>=0 topology")
    s = b.setups["catenoid"]
    al = alpha_l2_integral(s.imm, b.mesh("catenoid"), s.radii)
    res.add("catenoid int |alpha|^2 = 8pi +- 2%", al.verdict == "finite" and _rel(al.value, 8 * np.pi) <= 0.02, al.value)
    tc = total_curvature(None, b.growth("catenoid"))
    n, r = white_multiple_check(tc.value)
    res.add("catenoid White residual <= 1% of 2pi (nearest -2)", n == -2 and r <= 0.01 * TWO_PI, r)
    for name in ("plane", "paraboloid", "hyperboloid_sheet"):
        t = b.tamed(name)
        if t.verdict != "tamed":
            continue
        mesh = b.mesh(name)
        rr = b.setups[name].radii[-1]
        chi = mesh.ball(rr).euler_characteristic()
        ends = count_ends(mesh, rr)
        res.add(f"{name} (K >= 0, tamed): chi = 1 and one end", chi == 1 and ends == 1, f"chi {chi}, ends {ends}")
    return res


CRITERIA: List[Callable[[Optional[Bench]], CriterionResult]] = [
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
    criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12,
]


def run_all(bench: Optional[Bench] = None, echo: Callable[[str], None] = None) -> List[CriterionResult]:
    bench = bench or Bench()
    out = []
    for crit in CRITERIA:
        r = crit(bench)
        if echo is not None:
            echo(r.report())
        out.append(r)
    return out
