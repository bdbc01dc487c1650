"""Candidates whose laser has slack, plus single-segment first-capture solves.

When the laser can afford to wait (t_l > 0) the pose problem reduces to the
shortest Dubins path to the range circle with free final heading: a turn
followed by a straight line aimed at the target, a single turn, or a single
straight line. The laser requirement then only fixes the switch-on time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _geom as g
from .model import (TWO_PI, CandidateType, LaserSense, ModelError, SegmentKind,
                    State, SystemParams, TrajectoryPlan, build_plan, capture_check,
                    wrap_pi)


@dataclass(frozen=True)
class Infeasible:
    reason: str

    def __bool__(self):
        return False


@dataclass(frozen=True)
class RelaxedSolution:
    plan: TrajectoryPlan
    theta_f: float
    final_point: tuple
    t_l_star: float
    T_D: float
    first_switch_time: float

    def __bool__(self):
        return True


def _sense(sense):
    return sense if isinstance(sense, LaserSense) else LaserSense.parse(sense)


def _turn(turn):
    u = SegmentKind.from_letter(turn if isinstance(turn, str) else turn.value).u
    if u == 0:
        raise ModelError("turn must be L or R")
    return u


def _solution(plan, first_switch):
    s = plan.final_state
    return RelaxedSolution(plan, s.theta, (s.x, s.y), plan.laser.t_switch_on,
                           plan.t_final, first_switch)


def _finish(params, start, word, durations, sense, info):
    """Build the plan and place the laser switch-on as late as possible."""
    T = float(sum(durations))
    th, x, y = start.theta, start.x, start.y
    for ch, d in zip(word, durations):
        x, y, th = g.positions(x, y, th, SegmentKind.from_letter(ch).u, d, params.rho)
        x, y, th = float(x), float(y), float(th)
    phi0 = start.psi - start.theta
    rot = g.rotation_needed(phi0, g.bearing(x, y, th), sense.sign)
    if rot > TWO_PI - 1e-10:
        rot = 0.0
    t_l = T - rot / params.omega_max
    if t_l < -1e-9 * max(1.0, T):
        return Infeasible(f"needs t_l={t_l:.6g} < 0")
    cand = CandidateType(word if word else "S", sense)
    plan = build_plan(params, start, cand, word, durations, max(t_l, 0.0), info)
    return plan


# ------------------------------------------------------------------ CS, S, C

def solve_cs(params: SystemParams, start: State, turn, sense):
    """Turn then straight along a radial line, ending on the range circle."""
    sense = _sense(sense)
    u = _turn(turn)
    rho, r = params.rho, params.r
    p0 = np.array([start.x, start.y])
    if p0 @ p0 <= r * r:
        raise ModelError("start must lie outside the capture disk")
    c = g.center_of(p0, start.theta, u, rho)
    dc = math.hypot(*c)
    if dc < rho:
        return Infeasible("turning circle encloses the target")
    gc = math.atan2(c[1], c[0])
    best = None
    s0 = math.asin(max(-1.0, min(1.0, -u * rho / dc)))
    for th1 in (gc + s0, gc + math.pi - s0):
        X = g.point_on(c, th1, u, rho)
        e = g.unit(th1)
        if X @ e >= 0:
            continue  # heading away from the target
        dist = math.hypot(*X)
        if dist < r:
            continue  # the turn already entered the disk
        alpha = g.arc_angle(start.theta, th1, u)
        durs = [rho * alpha, dist - r]
        if best is None or sum(durs) < sum(best[0]):
            best = (durs, th1)
    if best is None:
        return Infeasible("no radial tangent toward the target")
    durs, th1 = best
    word = ("L" if u > 0 else "R") + "S"
    plan = _finish(params, start, word, durs, sense, {"regime": "relaxed"})
    if not plan:
        return plan
    return _solution(plan, durs[0])


def solve_s(params: SystemParams, start: State, sense):
    """Straight line from the start up to the earliest capture."""
    sense = _sense(sense)
    tau = first_capture(params, start, 0, 0.0, start.x, start.y, start.theta,
                        _horizon(params, start), sense)
    if tau is None:
        return Infeasible("straight line never captures")
    plan = _finish(params, start, "S", [tau], sense, {"regime": "scan"})
    if not plan:
        return plan
    return _solution(plan, 0.0)


def solve_c(params: SystemParams, start: State, turn, sense):
    """Single turn (less than a full loop) up to the earliest capture."""
    sense = _sense(sense)
    u = _turn(turn)
    tau = first_capture(params, start, u, 0.0, start.x, start.y, start.theta,
                        TWO_PI * params.rho * (1 - 1e-12), sense)
    if tau is None:
        return Infeasible("no arc angle in [0, 2pi) captures")
    plan = _finish(params, start, "L" if u > 0 else "R", [tau], sense, {"regime": "scan"})
    if not plan:
        return plan
    return _solution(plan, 0.0)


def _horizon(params, start):
    return math.hypot(start.x, start.y) + params.r + 1.0


# ------------------------------------------------------------ capture scans

def _sample_grid(a, b, ca, dmin, h0):
    pts = [np.linspace(a, b, max(2, int(math.ceil((b - a) / h0)) + 1))]
    for t0 in ca:
        if a - h0 < t0 < b + h0:
            off = max(dmin, 1e-13) * 1.25 ** np.arange(0, 400)
            off = off[off < 4 * h0]
            pts.append(t0 + off)
            pts.append(t0 - off)
            pts.append([t0])
    t = np.concatenate(pts)
    t = t[(t >= a) & (t <= b)]
    return np.unique(t)


def first_capture(params, start, u, T0, x, y, th, tmax, sense):
    """Earliest tau in [0, tmax] at which the segment (u) started at
    (x, y, th) at time T0 captures; laser sense fixed, switch-on free.

    psi - theta only changes through the laser, so capture at tau needs a
    laser travel rot(tau) in [0, 2pi) not exceeding w * (T0 + tau).
    """
    rho, w = params.rho, params.omega_max
    phi0 = start.psi - start.theta
    sg = sense.sign

    def state(tau):
        X, Y, TH = g.positions(x, y, th, u, tau, rho)
        a = g.bearing_v(X, Y, TH) - phi0
        a = (a + np.pi) % TWO_PI - np.pi
        return a

    def feasible(tau, a):
        rot = (sg * a) % TWO_PI
        return rot <= w * (T0 + tau) + 1e-13

    def crossing(a0, a1):
        # the offset passes through zero (either way): no laser travel needed
        # there, and the feasible window next to it may be narrower than a step
        return (np.sign(a0) != np.sign(a1)) & (np.abs(a0) < 1.5) & (np.abs(a1) < 1.5)

    ca, dmin = g.closest_approach(x, y, th, u, rho)
    for lo, hi in g.disk_intervals(x, y, th, u, rho, params.r, tmax):
        ts = _sample_grid(lo, hi, ca, dmin, 0.01)
        A = state(ts)
        ok = feasible(ts, A)
        cr = np.zeros_like(ok)
        cr[1:] = crossing(A[:-1], A[1:])
        hit = np.nonzero(ok | cr)[0]
        if len(hit) == 0:
            continue
        k = hit[0]
        if k == 0:
            return float(ts[0])
        a_, b_ = float(ts[k - 1]), float(ts[k])
        a_lo = float(A[k - 1])
        for _ in range(200):
            m = 0.5 * (a_ + b_)
            if m <= a_ or m >= b_:
                break
            am = float(state(np.array([m]))[0])
            if feasible(m, am) or crossing(a_lo, am):
                b_ = m
            else:
                a_, a_lo = m, am
        return b_
    return None


# -------------------------------------------------------- through the target

def _choose_bearing(phi0, sign, side, budget):
    """Final bearing with the requested side reachable with laser travel x <= budget.

    Returns (bearing, x) or None. The bearing is kept away from 0 and pi so the
    capture happens within a tiny distance of the target.
    """
    for margin in (0.3, 0.1, 1e-2, 1e-3):
        lo, hi = margin, math.pi - margin
        b0 = wrap_pi(phi0)
        if lo <= side * b0 <= hi:
            return b0, 0.0
        xs = []
        for tgt in (side * lo, side * hi, side * 0.5 * math.pi):
            xs.append(g.rotation_needed(phi0, tgt, sign))
        x = min(xs)
        if x <= budget:
            return wrap_pi(phi0 + sign * x), x
    return None


def through_target(params: SystemParams, start: State, word: str, sense, offset=1e-8):
    """Limit plan that drives past the target at a tiny offset and captures there.

    The time tends to the relaxed Dubins distance from the start to the
    target itself. Handles turn-straight ("RS", "LS") and turn-turn ("RL", "LR")
    approaches.
    """
    sense = _sense(sense)
    word = word.upper()
    rho = params.rho
    u1 = SegmentKind.from_letter(word[0]).u
    p0 = np.array([start.x, start.y])
    c1 = g.center_of(p0, start.theta, u1, rho)
    phi0 = start.psi - start.theta
    m = offset * max(params.r, rho)
    best = None
    for side in (1, -1):
        if word[1] == "S":
            cands = _cs_through(params, start, u1, c1, side * m)
        else:
            cands = _cc_through(params, start, u1, c1, side, m)
        for durs, T_reach in cands:
            ch = _choose_bearing(phi0, sense.sign, side,
                                 0.999 * params.omega_max * T_reach)
            if ch is None:
                continue
            beta, x = ch
            sol = _place_capture(params, start, word, durs, beta)
            if sol is None:
                continue
            T = sum(sol)
            if best is None or T < best[0]:
                best = (T, sol, x)
    if best is None:
        return Infeasible("no pass near the target with a reachable aim")
    T, durs, x = best
    t_l = T - x / params.omega_max
    cand = CandidateType(word, sense)
    plan = build_plan(params, start, cand, word, durs, t_l, {"regime": "through-target"})
    if not capture_check(params, plan.final_state):
        return Infeasible("through-target capture failed numerically")
    return plan


def _cs_through(params, start, u, c, m):
    rho = params.rho
    dc = math.hypot(*c)
    k = (m - u * rho) / dc
    if abs(k) > 1:
        return []
    gc = math.atan2(c[1], c[0])
    out = []
    for th1 in (gc + math.asin(k), gc + math.pi - math.asin(k)):
        X = g.point_on(c, th1, u, rho)
        e = g.unit(th1)
        if X @ e >= 0:
            continue
        alpha = g.arc_angle(start.theta, th1, u)
        out.append(([rho * alpha, -(X @ e)], rho * alpha - X @ e))
    return out


def _cc_through(params, start, u1, c1, side, m):
    rho = params.rho
    d1 = math.hypot(*c1)
    g1 = math.atan2(c1[1], c1[0])
    out = []
    for R2 in (rho + m, rho - m):
        if d1 < 1e-15:
            continue
        k = (R2 * R2 - d1 * d1 - 4 * rho * rho) / (4 * rho * d1)
        if abs(k) > 1:
            continue
        for kap in (g1 + math.acos(k), g1 - math.acos(k)):
            th1 = kap + u1 * 0.5 * math.pi
            c2 = c1 + 2 * rho * g.unit(kap)
            X1 = c1 + rho * g.unit(kap)
            alpha = g.arc_angle(start.theta, th1, u1)
            mu1 = math.atan2(X1[1] - c2[1], X1[0] - c2[0])
            mu_ca = math.atan2(-c2[1], -c2[0])
            gam = rho * g.arc_angle(mu1, mu_ca, -u1)
            # which side the target passes on at closest approach
            xq, yq, tq = g.positions(X1[0], X1[1], th1, -u1, gam, rho)
            b = g.bearing(float(xq), float(yq), float(tq))
            if (b > 0) != (side > 0):
                continue
            out.append(([rho * alpha, gam], rho * alpha + gam))
    return out


def _place_capture(params, start, word, durs, beta):
    """Adjust the last duration so the final bearing equals beta near the target."""
    rho = params.rho
    x, y, th = start.x, start.y, start.theta
    for ch, d in zip(word[:-1], durs[:-1]):
        x, y, th = (float(v) for v in g.positions(x, y, th, SegmentKind.from_letter(ch).u, d, rho))
    u = SegmentKind.from_letter(word[-1]).u
    t_ca = durs[-1]

    def f(t):
        X, Y, TH = g.positions(x, y, th, u, t, rho)
        return wrap_pi(g.bearing(float(X), float(Y), float(TH)) - beta)

    for w in (1e-4, 1e-3, 1e-2):
        a, b = max(0.0, t_ca - w), t_ca + w
        fa, fb = f(a), f(b)
        if fa * fb < 0 and abs(fa) < math.pi - 1e-9 and abs(fb) < math.pi - 1e-9:
            t = brentq(f, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
            X, Y, _ = g.positions(x, y, th, u, t, rho)
            if math.hypot(float(X), float(Y)) > params.r:
                return None
            return list(durs[:-1]) + [t]
    return None
