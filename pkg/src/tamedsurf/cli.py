"""Command-line batch runner.

Exit codes:
  0  success
  1  a verify-all assertion failed
  2  usage or config schema error
  3  window truncation (a radius reaches the sampled window edge)
  4  hypothesis refusal (input does not meet a check's premises)
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import config as cfgmod
from .acceptance import Bench, run_all
from .discretize import WindowTruncation, triangulate, window_for_radius
from .extrinsic import (CriticalPointError, HypothesisRefused, fit_growth, flow_bound_check, growth_curve,
                        level_starts, radial_flows, tamedness_estimate)
from .integrals import chern_osserman_check, gauss_bonnet_annulus
from .reports import config_hash, write_csv, write_json
from .surface import CATALOG_NAMES, GeometryError, catalog, point_geometry, radial_split
from .tone import SpectralEstimate, tone_decay_report

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_TRUNCATION, EXIT_REFUSED = 0, 1, 2, 3, 4

KNOWN_CHI = {"plane": 1, "catenoid": 0, "helicoid": 1, "enneper": 1, "sphere": 2,
             "paraboloid": 1, "hyperboloid_sheet": 1, "graph": 1}

log = logging.getLogger("tamedsurf")


class Run:
    """A resolved configuration plus lazily built mesh."""

    def __init__(self, cfg: cfgmod.RunConfig):
        self.cfg = cfg
        self.imm = catalog(cfg.surface.name, **cfg.surface.params)
        self.radii = cfg.radii.grid()
        self.out = Path(cfg.output.dir)
        self._mesh = None

    def mesh(self, r_max: Optional[float] = None):
        if self._mesh is None:
            r_max = float(max(self.radii[-1], max(self.cfg.tone.radii), self.cfg.annulus[1])) if r_max is None else r_max
            window = self.cfg.window or window_for_radius(self.imm, r_max)
            log.info("triangulating %s on %s at %d", self.imm.name, window, self.cfg.resolution)
            self._mesh = triangulate(self.imm, window, self.cfg.resolution)
        return self._mesh

    @property
    def tolerances(self) -> dict:
        return self.cfg.tolerances.__dict__

    def config_dict(self) -> dict:
        # the output location does not change results, so it stays out of the hash
        d = self.cfg.to_dict()
        d.pop("output")
        return d

    def wants(self, fmt: str) -> bool:
        return fmt in self.cfg.output.formats

    def json(self, name: str, kind: str, payload: dict) -> None:
        if self.wants("json"):
            p = write_json(self.out / name, kind, payload, self.config_dict(), self.tolerances)
            print(p)

    def csv(self, name: str, header, rows) -> None:
        if self.wants("csv"):
            p = write_csv(self.out / name, header, rows, comment=f"config {_hash(self)}")
            print(p)

    def tamed(self):
        return tamedness_estimate(self.imm, None, None, self.radii, self.cfg.c, slack=self.cfg.tolerances.slack,
                                  epsilon=self.cfg.epsilon, mesh=self.mesh())


def _hash(run: Run) -> str:
    return config_hash(run.config_dict())


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_list(run: Optional[Run], args) -> int:
    for name in CATALOG_NAMES:
        print(f"{name}\tchi={KNOWN_CHI.get(name, '?')}")
    return EXIT_OK


def cmd_geometry(run: Run, args) -> int:
    u0, u1, v0, v1 = run.cfg.window or window_for_radius(run.imm, run.radii[-1])
    n = args.points
    uu, vv = np.meshgrid(np.linspace(u0, u1, n), np.linspace(v0, v1, n))
    g = point_geometry(run.imm, uu.ravel(), vv.ravel())
    R, grad, defect, _ = radial_split(g)
    dim = g.position.shape[-1]
    header = ["u", "v"] + [f"x{k}" for k in range(dim)] + ["K", "H_norm", "alpha_norm", "R", "grad_R", "normal_defect"]
    rows = [[a, b, *x, k, h, al, r, gr, d] for a, b, x, k, h, al, r, gr, d in
            zip(uu.ravel(), vv.ravel(), g.position, g.K, g.H_norm, g.alpha_norm, R, grad, defect)]
    run.csv("geometry.csv", header, rows)
    return EXIT_OK


def cmd_growth(run: Run, args) -> int:
    g = growth_curve(run.imm, None, None, run.radii, mesh=run.mesh())
    run.csv("growth.csv", g.HEADER, g.rows())
    fit = fit_growth(g, run.cfg.tail_fraction)
    run.json("growth_fit.json", "growth_fit", {**fit._asdict(), "tail_fraction": run.cfg.tail_fraction})
    return EXIT_OK


def cmd_tamed(run: Run, args) -> int:
    run.json("tamed.json", "tamedness", run.tamed().to_dict())
    return EXIT_OK


def cmd_gauss_bonnet(run: Run, args) -> int:
    r1, r2 = run.cfg.annulus
    rep = gauss_bonnet_annulus(run.imm, run.mesh(), r1, r2)
    run.json("annulus.json", "annulus", rep.to_dict())
    return EXIT_OK


def cmd_chern_osserman(run: Run, args) -> int:
    chi = run.cfg.chi if run.cfg.chi is not None else KNOWN_CHI[run.cfg.surface.name]
    mesh = run.mesh()
    g = growth_curve(run.imm, None, None, run.radii, mesh=mesh)
    rep = chern_osserman_check(run.imm, chi, g, run.tamed(), mesh=mesh,
                               slack=run.cfg.tolerances.slack, tail_fraction=run.cfg.tail_fraction)
    run.json("chern_osserman.json", "chern_osserman",
             {**rep.to_dict(), "sandwich_holds": rep.sandwich_holds, "shiohama_gap": rep.shiohama_gap})
    return EXIT_OK


def cmd_tone(run: Run, args) -> int:
    rep = tone_decay_report(run.imm, run.cfg.tone.radii, run.tamed(), run.cfg.c, run.mesh(),
                            lumped=run.cfg.tone.lumped, sin_beta_max=0.0 if run.cfg.delta == "zero" else None)
    run.csv("tone.csv", SpectralEstimate.HEADER, (e.row() for e in rep.estimates))
    run.json("tone.json", "tone", {"decay_exponent": rep.decay_exponent, "dominated": rep.dominated, "c": rep.c})
    return EXIT_OK


def cmd_flow(run: Run, args) -> int:
    f = run.cfg.flow
    r0 = f.r0
    if r0 is None:
        t = run.tamed()
        if t.t_c is None:
            raise HypothesisRefused("tail radius for c", "no exhaustion radius has a_i < c")
        r0 = t.t_c
    starts = level_starts(run.imm, r0, f.trajectories)
    trajs = radial_flows(run.imm, starts, f.t_end, f.step)
    rows, checks = [], []
    for k, tr in enumerate(trajs):
        holds, viol = flow_bound_check(tr, run.cfg.c, r0, tol=run.cfg.tolerances.flow_bound)
        checks.append({"trajectory": k, "holds": holds, "max_violation": viol,
                       "invariant_errors": list(tr.invariant_errors())})
        rows += [[k, t, p[0], p[1], R, psi, sb] for t, p, R, psi, sb in zip(tr.t, tr.points, tr.R, tr.psi, tr.sin_beta)]
    run.csv("flow.csv", ["trajectory", "t", "u", "v", "R", "psi", "sin_beta"], rows)
    run.json("flow.json", "flow", {"r0": r0, "c": run.cfg.c, "all_hold": all(c["holds"] for c in checks),
                                   "trajectories": checks})
    return EXIT_OK


def cmd_verify_all(run: Run, args) -> int:
    bench = Bench(resolution=run.cfg.resolution, slack=run.cfg.tolerances.slack)
    results = run_all(bench, echo=print)
    run.json("acceptance.json", "acceptance", {"all_passed": all(r.passed for r in results),
                                                "criteria": [r.to_dict() for r in results]})
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    return EXIT_OK if n_fail == 0 else EXIT_FAILED


COMMANDS = {
    "list": (cmd_list, "list catalog surfaces"),
    "geometry": (cmd_geometry, "pointwise geometry table (CSV)"),
    "growth": (cmd_growth, "growth curve CSV and fitted constants JSON"),
    "tamed": (cmd_tamed, "tamedness report JSON"),
    "gauss-bonnet": (cmd_gauss_bonnet, "Gauss-Bonnet annulus report JSON"),
    "chern-osserman": (cmd_chern_osserman, "Chern-Osserman report JSON"),
    "tone": (cmd_tone, "fundamental-tone decay CSV"),
    "flow": (cmd_flow, "radial-flow trajectories CSV and bound check JSON"),
    "verify-all": (cmd_verify_all, "full acceptance suite; nonzero exit on failure"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tamedsurf", description=__doc__.split("\n")[0],
                                epilog=__doc__[__doc__.index("Exit codes"):],
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("command", choices=list(COMMANDS), help="; ".join(f"{k}: {v[1]}" for k, v in COMMANDS.items()))
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("--surface", choices=CATALOG_NAMES, help="override surface.name")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=["csv", "json"], help="write only this format")
    p.add_argument("--resolution", type=int, help="grid cells per chart direction")
    p.add_argument("--radii", help="START:STOP:COUNT[:log]")
    p.add_argument("--seed", type=int, help="seed recorded in the config (all iterations are deterministic)")
    p.add_argument("--points", type=int, default=9, help="geometry: samples per chart direction")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.RunConfig()
    if args.surface:
        cfg.surface = cfgmod.SurfaceSpec(args.surface, {})
    if args.out:
        cfg.output.dir = args.out
    if args.format:
        cfg.output.formats = [args.format]
    if args.resolution is not None:
        cfg.resolution = args.resolution
    if args.radii:
        cfg.radii = cfgmod.RadiiSpec.parse(args.radii)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg.validate()


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", RuntimeWarning)
    fn = COMMANDS[args.command][0]
    try:
        cfg = resolve_config(args)
        run = Run(cfg)
        return fn(run, args)
    except (cfgmod.ConfigError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WindowTruncation as exc:
        print(f"window truncation: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except (HypothesisRefused, CriticalPointError, GeometryError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED


if __name__ == "__main__":
    sys.exit(main())
