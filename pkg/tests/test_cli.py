import math
import re
from pathlib import Path

import pytest

from dublaser import cli
from dublaser import planner as planner_mod
from dublaser.cli import (EXIT_NO_PLAN, EXIT_SCENARIO, EXIT_UNSUPPORTED, ScenarioError,
                          parse_scenario, plan_from_result, read_pairs, run)
from dublaser.model import capture_check, simulate

SCEN = Path(__file__).resolve().parents[1] / "scenarios"


def write(tmp_path, text, name="s.scenario"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_defaults_and_expressions():
    params, start, cfg = parse_scenario("x0 = 3\ny0 = -1  # comment\ntheta0 = pi/2\n"
                                        "psi0 = 2*pi - 0.5\nomega_max = 0.3\n")
    assert (params.rho, params.r, params.omega_max) == (1.0, 1.0, 0.3)
    assert start.theta == pytest.approx(math.pi / 2)
    assert start.psi == pytest.approx(2 * math.pi - 0.5)
    assert cfg.duration_grid_resolution > 0


def test_parse_degrees():
    _, start, _ = parse_scenario("x0=3\ny0=0\ntheta0=90\npsi0=180\nomega_max=0.3\n", degrees=True)
    assert start.theta == pytest.approx(math.pi / 2)
    assert start.psi == pytest.approx(math.pi)


def test_parse_oracle_override():
    _, _, cfg = parse_scenario("x0=3\ny0=0\ntheta0=0\npsi0=0\nomega_max=0.3\n"
                               "oracle.duration_grid_resolution = 0.05\n")
    assert cfg.duration_grid_resolution == 0.05


@pytest.mark.parametrize("text,field", [
    ("x0=3\ny0=abc\ntheta0=0\npsi0=0\nomega_max=0.3\n", "y0"),
    ("x0=3\ny0=0\ntheta0=0\nomega_max=0.3\n", "psi0"),
    ("x0=3\ny0=0\ntheta0=0\npsi0=0\nomega_max=0.3\nspeed=2\n", "speed"),
    ("x0=3\ny0=0\ntheta0=0\npsi0=0\nomega_max=-1\n", "omega_max"),
    ("x0=3\ny0=0\ntheta0=__import__('os')\npsi0=0\nomega_max=1\n", "theta0"),
])
def test_malformed_names_field(text, field):
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(text)
    assert field in str(exc.value)


def test_malformed_exit_code(tmp_path, capsys):
    path = write(tmp_path, "x0 = 3\ny0 = oops\ntheta0 = 0\npsi0 = 0\nomega_max = 0.3\n")
    assert run(["plan", path]) == EXIT_SCENARIO
    assert "y0" in capsys.readouterr().err
    assert run(["plan", str(tmp_path / "missing.scenario")]) == EXIT_SCENARIO


def test_plan_is_deterministic_and_round_trips(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert run(["plan", str(SCEN / "fig7.scenario"), "--out", str(a)]) == 0
    assert run(["plan", str(SCEN / "fig7.scenario"), str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    pairs = read_pairs(a.read_text())
    assert sum(k.endswith(".status") and k.startswith("candidate.") for k in pairs) == 16
    params, start, plan = plan_from_result(a.read_text())
    assert plan.t_final == pytest.approx(float(pairs["t_final"]), abs=1e-12)
    end = simulate(params, start, plan, 0.05)[-1][1]
    assert capture_check(params, end)
    assert end.x == pytest.approx(float(pairs["final.x"]), abs=1e-9)
    assert end.y == pytest.approx(float(pairs["final.y"]), abs=1e-9)


def test_render_svg(tmp_path):
    out = tmp_path / "fig7.svg"
    assert run(["render", str(SCEN / "fig7.scenario"), str(out)]) == 0
    svg = out.read_text()
    assert svg.startswith("<?xml") and 'version="1.1"' in svg
    dashed = re.findall(r"<circle[^>]*stroke-dasharray[^>]*>", svg)
    assert len(dashed) == 1 and 'r="1.0"' in dashed[0]
    poly = re.findall(r'<polyline[^>]*points="([^"]*)"', svg)
    assert len(poly) == 1
    x, y = map(float, poly[0].split()[-1].split(","))
    assert abs(x * x + y * y - 1.0) <= 1e-6
    assert svg.count('class="laser"') >= 2
    assert 'class="start"' in svg and 'class="end"' in svg and 'class="target"' in svg


def test_compare_figure(tmp_path):
    out = tmp_path / "cmp.txt"
    assert run(["compare", str(SCEN / "fig9.scenario"), "--out", str(out)]) == 0
    pairs = read_pairs(out.read_text())
    assert abs(float(pairs["t_final"]) - float(pairs["oracle.time"])) <= 0.04
    assert float(pairs["gap"]) == pytest.approx(float(pairs["t_final"]) - float(pairs["oracle.time"]))


def test_oracle_subcommand(tmp_path, capsys):
    path = write(tmp_path, "x0=3\ny0=0\ntheta0=pi\npsi0=pi\nomega_max=0.3\n")
    assert run(["oracle", path, "--oracle-resolution", "0.05"]) == 0
    pairs = read_pairs(capsys.readouterr().out)
    assert float(pairs["oracle.time"]) == pytest.approx(2.0, abs=0.05)


def test_no_plan_exit_code(monkeypatch, capsys):
    monkeypatch.setattr(planner_mod, "_raw_plans", lambda *a: ([], ["no root"]))
    assert run(["plan", str(SCEN / "fig7.scenario")]) == EXIT_NO_PLAN
    assert capsys.readouterr().err


def test_unsupported_start_exit_code(monkeypatch, tmp_path):
    def refuse(*a, **k):
        raise planner_mod.UnsupportedStart("start inside the range disk")
    monkeypatch.setattr(cli, "plan", refuse)
    path = write(tmp_path, "x0=0.5\ny0=0\ntheta0=0\npsi0=0\nomega_max=0.3\n")
    assert run(["plan", path]) == EXIT_UNSUPPORTED
