"""Command-line front end: plan, oracle, compare and render.

Scenario files are UTF-8 text with one ``key = value`` pair per line and
``#`` comments. Keys: x0, y0, theta0, psi0, omega_max, and optionally rho and
r (both default to 1) plus ``oracle.<field>`` overrides of OracleConfig.
Values are numbers or simple expressions in ``pi`` such as ``4*pi/3``.

Result documents use the same syntax with fixed 17-digit float formatting so
they re-parse to the exact plan.
"""
from __future__ import annotations

import argparse
import ast
import math
import operator
import sys
from dataclasses import fields

from .model import (CandidateType, ModelError, State, SystemParams, build_plan,
                    simulate)
from .oracle import OracleConfig, oracle_min_time
from .planner import PlanningError, UnsupportedStart, plan

EXIT_OK = 0
EXIT_SCENARIO = 2
EXIT_NO_PLAN = 3
EXIT_UNSUPPORTED = 4

REQUIRED = ("x0", "y0", "theta0", "psi0", "omega_max")
DEFAULTS = {"rho": 1.0, "r": 1.0}
ANGLES = ("theta0", "psi0")

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow,
        ast.USub: operator.neg, ast.UAdd: operator.pos}


class ScenarioError(ModelError):
    def __init__(self, field, msg):
        super().__init__(f"{field}: {msg}")
        self.field = field


def _number(text):
    """Evaluate a numeric literal or arithmetic expression in pi."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in ("pi", "tau"):
            return math.pi if node.id == "pi" else 2 * math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError("unsupported expression")
    return ev(ast.parse(text.strip(), mode="eval"))


def read_pairs(text):
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {n}", f"expected 'key = value', got {line!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        if not k:
            raise ScenarioError(f"line {n}", "empty key")
        out[k] = v
    return out


def parse_scenario(text, degrees=False):
    """Scenario text to (SystemParams, State, OracleConfig)."""
    pairs = read_pairs(text)
    vals = dict(DEFAULTS)
    oracle_kw = {}
    known = {f.name: f.type for f in fields(OracleConfig)}
    for k, v in pairs.items():
        if k.startswith("oracle."):
            name = k[len("oracle."):]
            if name not in known:
                raise ScenarioError(k, "unknown oracle setting")
            if name == "senses":
                oracle_kw[name] = v
                continue
            try:
                num = _number(v)
            except (ValueError, SyntaxError, ZeroDivisionError):
                raise ScenarioError(k, f"not a number: {v!r}") from None
            oracle_kw[name] = int(num) if name in ("refine_iterations", "max_segments",
                                                   "keep_cells") else num
            continue
        if k not in REQUIRED and k not in DEFAULTS:
            raise ScenarioError(k, "unknown key")
        try:
            vals[k] = _number(v)
        except (ValueError, SyntaxError, ZeroDivisionError):
            raise ScenarioError(k, f"not a number: {v!r}") from None
        if not math.isfinite(vals[k]):
            raise ScenarioError(k, "must be finite")
    for k in REQUIRED:
        if k not in vals:
            raise ScenarioError(k, "missing")
    if degrees:
        for k in ANGLES:
            vals[k] = math.radians(vals[k])
    for k in ("rho", "r", "omega_max"):
        if not vals[k] > 0:
            raise ScenarioError(k, "must be positive")
    try:
        cfg = OracleConfig(**oracle_kw)
    except (ValueError, TypeError) as exc:
        raise ScenarioError("oracle", str(exc)) from None
    params = SystemParams(vals["rho"], vals["r"], vals["omega_max"])
    start = State(vals["x0"], vals["y0"], vals["theta0"], vals["psi0"])
    return params, start, cfg


def fmt(v):
    if isinstance(v, float):
        return repr(float(f"{v:.17g}")) if math.isfinite(v) else str(v)
    return str(v)


def _doc(pairs):
    return "".join(f"{k} = {fmt(v)}\n" for k, v in pairs)


def _scenario_pairs(params, start):
    return [("x0", start.x), ("y0", start.y), ("theta0", start.theta), ("psi0", start.psi),
            ("rho", params.rho), ("r", params.r), ("omega_max", params.omega_max)]


def plan_pairs(report):
    best = report.best
    cert = report.certificates
    out = [("candidate", best.candidate.label), ("word", best.word or "-"),
           ("laser_sense", best.laser.sense.value),
           ("t_switch_on", best.laser.t_switch_on), ("t_final", best.t_final),
           ("regime", best.info.get("regime", "")),
           ("segment.count", len(best.segments))]
    for i, seg in enumerate(best.segments):
        out += [(f"segment.{i}.kind", seg.kind.value), (f"segment.{i}.duration", seg.duration)]
    fs = best.final_state
    out += [("final.x", fs.x), ("final.y", fs.y), ("final.theta", fs.theta), ("final.psi", fs.psi)]
    if cert is not None:
        out += [("certificate.c_x", cert.c_x), ("certificate.c_y", cert.c_y),
                ("certificate.c_psi", cert.c_psi), ("certificate.p0", cert.p0),
                ("certificate.hamiltonian_residual", cert.hamiltonian_residual),
                ("certificate.collinearity_residual", cert.collinearity_residual),
                ("certificate.status", cert.status)]
    for cand, o in report.per_candidate:
        key = f"candidate.{cand.label}"
        out.append((f"{key}.status", o.status))
        if o.status == "solved":
            out.append((f"{key}.t_final", o.t_final))
        else:
            out.append((f"{key}.reason", o.reason))
    return out


def oracle_pairs(res):
    out = [("oracle.time", res.time), ("oracle.word", res.word or "-"),
           ("oracle.laser_sense", res.sense), ("oracle.t_switch_on", res.t_switch_on)]
    for i, (k, d) in enumerate(zip(res.word, res.durations)):
        out += [(f"oracle.segment.{i}.kind", k), (f"oracle.segment.{i}.duration", float(d))]
    return out


def plan_from_result(text):
    """Rebuild (params, start, plan) from a result document."""
    pairs = read_pairs(text)
    params = SystemParams(float(pairs["rho"]), float(pairs["r"]), float(pairs["omega_max"]))
    start = State(*(float(pairs[k]) for k in ("x0", "y0", "theta0", "psi0")))
    n = int(pairs["segment.count"])
    word = "".join(pairs[f"segment.{i}.kind"] for i in range(n))
    durs = [float(pairs[f"segment.{i}.duration"]) for i in range(n)]
    cand = CandidateType.parse(pairs["candidate"])
    return params, start, build_plan(params, start, cand, word, durs,
                                     float(pairs["t_switch_on"]))


# ------------------------------------------------------------------- render

def render_svg(params, start, best, samples=400, ticks=12):
    """SVG 1.1 drawing: path, dashed range circle, target, start/end, laser ticks."""
    T = best.t_final
    traj = simulate(params, start, best, T / samples) if best.segments else [(0.0, start)]
    pts = [(s.x, s.y) for _, s in traj]
    r = params.r
    xs = [p[0] for p in pts] + [-r, r]
    ys = [p[1] for p in pts] + [-r, r]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    span = max(x1 - x0, y1 - y0)
    m = 0.1 * span
    vb = (x0 - m, -(y1 + m), x1 - x0 + 2 * m, y1 - y0 + 2 * m)
    sw = 0.004 * span
    tick = 0.06 * span
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{vb[0]:.6f} {vb[1]:.6f} {vb[2]:.6f} {vb[3]:.6f}" width="600" '
        f'height="{600 * vb[3] / vb[2]:.1f}">',
        f'<title>{best.candidate.label} t_f={T:.6f}</title>',
        '<g transform="scale(1,-1)">',
        f'<circle class="range" cx="0" cy="0" r="{fmt(r)}" fill="none" stroke="gray" '
        f'stroke-width="{sw:.6g}" stroke-dasharray="{4 * sw:.6g},{3 * sw:.6g}"/>',
        f'<circle class="target" cx="0" cy="0" r="{2.5 * sw:.6g}" fill="black"/>',
    ]
    if ticks and T > 0:
        from .model import state_at
        for k in range(ticks + 1):
            s = state_at(params, best, T * k / ticks)
            ex, ey = s.x + tick * math.cos(s.psi), s.y + tick * math.sin(s.psi)
            lines.append(f'<line class="laser" x1="{s.x:.9g}" y1="{s.y:.9g}" x2="{ex:.9g}" '
                         f'y2="{ey:.9g}" stroke="red" stroke-width="{0.6 * sw:.6g}"/>')
    poly = " ".join(f"{fmt(x)},{fmt(y)}" for x, y in pts)
    lines += [
        f'<polyline class="path" points="{poly}" fill="none" stroke="blue" '
        f'stroke-width="{sw:.6g}"/>',
        f'<rect class="start" x="{pts[0][0] - 2 * sw:.9g}" y="{pts[0][1] - 2 * sw:.9g}" '
        f'width="{4 * sw:.6g}" height="{4 * sw:.6g}" fill="green"/>',
        f'<circle class="end" cx="{fmt(pts[-1][0])}" cy="{fmt(pts[-1][1])}" r="{2 * sw:.6g}" '
        'fill="orange"/>',
        '</g>',
        '</svg>',
    ]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------- main

def build_parser():
    ap = argparse.ArgumentParser(prog="dublaser",
                                 description="Minimum-time capture planner for a Dubins "
                                             "vehicle carrying a rotating laser.")
    ap.add_argument("command", choices=("plan", "oracle", "compare", "render"))
    ap.add_argument("scenario", help="scenario file (key = value lines)")
    ap.add_argument("out_pos", nargs="?", metavar="OUT", help="output path (same as --out)")
    ap.add_argument("--out", help="output path; stdout when omitted")
    ap.add_argument("--degrees", action="store_true", help="angles in the scenario are degrees")
    ap.add_argument("--oracle-resolution", type=float,
                    help="oracle duration grid step (overrides the scenario)")
    return ap


def run(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with open(args.scenario, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"dublaser: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    try:
        params, start, cfg = parse_scenario(text, args.degrees)
        if args.oracle_resolution is not None:
            cfg = OracleConfig(**{**cfg.__dict__, "duration_grid_resolution":
                                  args.oracle_resolution})
    except (ScenarioError, ValueError) as exc:
        print(f"dublaser: malformed scenario: {exc}", file=sys.stderr)
        return EXIT_SCENARIO

    pairs = _scenario_pairs(params, start)
    try:
        if args.command == "oracle":
            doc = _doc(pairs + oracle_pairs(oracle_min_time(params, start, cfg)))
        else:
            report = plan(params, start)
            if args.command == "render":
                doc = render_svg(params, start, report.best)
            else:
                pairs += plan_pairs(report)
                if args.command == "compare":
                    res = oracle_min_time(params, start, cfg)
                    pairs += oracle_pairs(res) + [("gap", report.best.t_final - res.time)]
                doc = _doc(pairs)
    except UnsupportedStart as exc:
        print(f"dublaser: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except PlanningError as exc:
        print(f"dublaser: {exc}", file=sys.stderr)
        return EXIT_NO_PLAN

    out = args.out or args.out_pos
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(doc)
    else:
        sys.stdout.write(doc)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
