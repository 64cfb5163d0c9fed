import json
from pathlib import Path

import pytest

from tamedsurf.cli import EXIT_OK, EXIT_REFUSED, EXIT_TRUNCATION, EXIT_USAGE, build_parser, main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_help_documents_exit_codes(capsys):
    assert main(["--help"]) == EXIT_OK
    out = capsys.readouterr().out
    for code in ("0  success", "2  usage", "3  window truncation", "4  hypothesis refusal"):
        assert code in out


def test_list(capsys):
    assert main(["list"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "catenoid\tchi=0" in out and "sphere\tchi=2" in out


def test_usage_errors(tmp_path):
    assert main(["nonsense"]) == EXIT_USAGE
    assert run(tmp_path, "growth", "--radii", "3:1:4") == EXIT_USAGE
    bad = tmp_path / "bad.yaml"
    bad.write_text("resolution: [1]\n")
    assert run(tmp_path, "growth", "--config", str(bad)) == EXIT_USAGE


def test_growth_outputs_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, "growth", "--surface", "plane", "--radii", "1:4:5", "--resolution", "48") == EXIT_OK
    for name in ("growth.csv", "growth_fit.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    fit = json.loads((a / "growth_fit.json").read_text())["result"]
    assert fit["area_exponent"] == pytest.approx(2.0, abs=0.05)   # coarse 48-cell grid


def test_format_filter(tmp_path):
    assert run(tmp_path, "growth", "--surface", "plane", "--radii", "1:4:5", "--resolution", "32",
               "--format", "json") == EXIT_OK
    assert (tmp_path / "growth_fit.json").exists() and not (tmp_path / "growth.csv").exists()


def test_truncation_exit_code(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("surface: {name: plane}\nwindow: [-2, 2, -2, 2]\nresolution: 32\n"
                   "radii: {start: 1, stop: 5, count: 4}\n")
    assert run(tmp_path, "tamed", "--config", str(cfg)) == EXIT_TRUNCATION


def test_refusal_exit_code(tmp_path):
    # the helicoid's total curvature diverges, so the sandwich check refuses
    assert run(tmp_path, "chern-osserman", "--surface", "helicoid", "--radii", "3:24:8:log",
               "--resolution", "64") == EXIT_REFUSED


def test_tamed_gauss_bonnet_and_flow(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("surface: {name: catenoid}\nresolution: 96\nradii: {start: 4, stop: 24, count: 6, log: true}\n"
                   "c: 0.3\nannulus: [3, 12]\nflow: {t_end: 5, step: 0.05, trajectories: 4}\n")
    for cmd in ("tamed", "gauss-bonnet", "flow", "geometry"):
        assert run(tmp_path, cmd, "--config", str(cfg)) == EXIT_OK, cmd
    tamed = json.loads((tmp_path / "tamed.json").read_text())["result"]
    assert tamed["verdict"] == "tamed"
    gb = json.loads((tmp_path / "annulus.json").read_text())["result"]
    assert gb["euler_char"] == 0 and gb["gb_residual"] < 2e-2
    flow = json.loads((tmp_path / "flow.json").read_text())["result"]
    assert flow["all_hold"] and len(flow["trajectories"]) == 4
    header = (tmp_path / "geometry.csv").read_text().splitlines()[1]
    assert header.startswith("u,v,x0,x1,x2,K")


def test_parser_lists_all_subcommands():
    actions = {a.dest: a for a in build_parser()._actions}
    assert set(actions["command"].choices) == {"list", "geometry", "growth", "tamed", "gauss-bonnet",
                                               "chern-osserman", "tone", "flow", "verify-all"}
