"""Turn-turn and turn-straight-turn candidates with the laser spinning from t = 0.

Unknowns are the final point (polar angle eta, on the range circle unless the
interior branch is used), the terminal multiplier lambda1, the final heading
and the costate constant c0 (c_psi = -c0). The costate direction is

    c = lambda1 * q + (c0 / |q|^2) * perp(q),   q = final point,

with lambda1 = 0 and |q| free on the interior branch. Each family is a square
system of four residuals:

    CC  : H on arc 1, H on arc 2, circle tangency, aim
    CSC : H on arc 1, H on the line, line through the target, aim
    SC  : H on the line, switching function at the switch, line continuity, aim

The aim residual compares the laser angle reached after spinning for the
whole trajectory with the one required at the final point. Equal H values on
neighbouring pieces are equivalent to the switching function vanishing at
the switch between them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _geom as g
from .model import (TWO_PI, CandidateType, ModelError, SegmentKind, State,
                    SystemParams, build_plan, capture_check, pmp_verify, wrap_pi)

TOL_ROOT = 1e-9
_BAD = 1e3


@dataclass(frozen=True)
class CoupledUnknowns:
    eta: float
    lambda1: float
    theta_f: float
    c0: float
    radius: float | None = None  # None: final point on the range circle

    @property
    def interior(self):
        return self.radius is not None

    def vector(self):
        second = self.radius if self.interior else self.lambda1
        return np.array([self.eta, second, self.theta_f, self.c0])

    @classmethod
    def from_vector(cls, v, interior):
        if interior:
            return cls(float(v[0]), 0.0, float(v[2]), float(v[3]), float(v[1]))
        return cls(float(v[0]), float(v[1]), float(v[2]), float(v[3]))

    def final_point(self, params):
        R = self.radius if self.interior else params.r
        return np.array([R * math.cos(self.eta), R * math.sin(self.eta)])

    def costate(self, params):
        q = self.final_point(params)
        R2 = q @ q
        lam = 0.0 if self.interior else self.lambda1
        return lam * q + (self.c0 / R2) * g.perp(q)


@dataclass(frozen=True)
class ResidualVector:
    values: tuple
    labels: tuple = ()
    geometry: dict = field(default_factory=dict, compare=False)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    @property
    def norm(self):
        return float(np.linalg.norm(self.values))

    @property
    def evaluable(self):
        return self.geometry.get("evaluable", True)


def _parts(word):
    return [SegmentKind.from_letter(ch).u for ch in word]


def _aim(params, start, sense, T, q, theta_f):
    phi0 = start.psi - start.theta
    phi_f = math.atan2(q[1], q[0]) + math.pi - theta_f
    return wrap_pi(phi0 + sense.sign * params.omega_max * T - phi_f)


def _h_arc(params, c, center, u, c0, sense):
    return 1.0 + u * g.cross(c, center) / params.rho - c0 * sense.sign * params.omega_max


def _h_line(params, c, theta, c0, sense):
    return 1.0 + c @ g.unit(theta) - c0 * sense.sign * params.omega_max


def _check_word(word, sense, allowed):
    if word not in allowed:
        raise ModelError(f"word {word} not handled here")
    cand = CandidateType(word, sense)
    return cand.laser_sense


def residuals_cc(params: SystemParams, start: State, word, sense, z: CoupledUnknowns) -> ResidualVector:
    sense = _check_word(word, sense, ("RL", "LR"))
    rho = params.rho
    u1, u2 = _parts(word)
    q = z.final_point(params)
    c = z.costate(params)
    c1 = g.center_of((start.x, start.y), start.theta, u1, rho)
    c2 = g.center_of(q, z.theta_f, u2, rho)
    D = c2 - c1
    dD = math.hypot(*D)
    if dD < 1e-12:
        return ResidualVector((_BAD,) * 4, ("H0", "Hf", "tangency", "aim"), {"evaluable": False})
    kap = math.atan2(D[1], D[0])
    th1 = kap + u1 * 0.5 * math.pi
    X1 = 0.5 * (c1 + c2)
    alpha = g.arc_angle(start.theta, th1, u1)
    beta = g.arc_angle(th1, z.theta_f, u2)
    T = rho * (alpha + beta)
    res = (_h_arc(params, c, c1, u1, z.c0, sense),
           _h_arc(params, c, c2, u2, z.c0, sense),
           (dD - 2 * rho) / rho,
           _aim(params, start, sense, T, q, z.theta_f))
    geo = {"durations": [rho * alpha, rho * beta], "switch": X1, "theta1": th1}
    return ResidualVector(res, ("H0", "Hf", "tangency", "aim"), geo)


def _tangent_heading(c1, c2, u1, u2, rho):
    D = c2 - c1
    dD = math.hypot(*D)
    gD = math.atan2(D[1], D[0])
    if u1 == u2:
        return gD if dD > 1e-12 else None
    k = -2 * u2 * rho / dD if dD > 0 else 2.0
    if abs(k) > 1:
        return None
    return gD + math.asin(k)


def residuals_csc(params: SystemParams, start: State, word, sense, z: CoupledUnknowns) -> ResidualVector:
    sense = _check_word(word, sense, ("RSR", "RSL", "LSL", "LSR"))
    rho = params.rho
    u1, _, u2 = _parts(word)
    q = z.final_point(params)
    c = z.costate(params)
    c1 = g.center_of((start.x, start.y), start.theta, u1, rho)
    c2 = g.center_of(q, z.theta_f, u2, rho)
    labels = ("H0", "H_line", "line_through_target", "aim")
    ths = _tangent_heading(c1, c2, u1, u2, rho)
    if ths is None:
        return ResidualVector((_BAD,) * 4, labels, {"evaluable": False})
    e = g.unit(ths)
    X1 = g.point_on(c1, ths, u1, rho)
    X2 = g.point_on(c2, ths, u2, rho)
    L = (X2 - X1) @ e
    alpha = g.arc_angle(start.theta, ths, u1)
    gam = g.arc_angle(ths, z.theta_f, u2)
    T = rho * alpha + L + rho * gam
    res = (_h_arc(params, c, c1, u1, z.c0, sense),
           _h_line(params, c, ths, z.c0, sense),
           g.cross(X1, e) / rho,
           _aim(params, start, sense, T, q, z.theta_f))
    geo = {"durations": [rho * alpha, L, rho * gam], "switch": X1, "switch2": X2,
           "theta1": ths}
    return ResidualVector(res, labels, geo)


def residuals_sc(params: SystemParams, start: State, word, sense, z: CoupledUnknowns) -> ResidualVector:
    sense = _check_word(word, sense, ("SR", "SL"))
    rho = params.rho
    u2 = _parts(word)[1]
    q = z.final_point(params)
    c = z.costate(params)
    p0 = np.array([start.x, start.y])
    e = g.unit(start.theta)
    c2 = g.center_of(q, z.theta_f, u2, rho)
    X2 = g.point_on(c2, start.theta, u2, rho)
    L = (X2 - p0) @ e
    gam = g.arc_angle(start.theta, z.theta_f, u2)
    T = L + rho * gam
    res = (_h_line(params, c, start.theta, z.c0, sense),
           g.cross(c, X2) / rho,
           g.cross(X2 - p0, e) / rho,
           _aim(params, start, sense, T, q, z.theta_f))
    geo = {"durations": [L, rho * gam], "switch": X2, "theta1": start.theta}
    return ResidualVector(res, ("H_line", "switching", "continuity", "aim"), geo)


def residual_function(word):
    if len(word) == 3:
        return residuals_csc
    if word[0] == "S":
        return residuals_sc
    return residuals_cc


# ------------------------------------------------------------ Newton solver

def fd_jacobian(f, x, h=1e-7):
    f0 = f(x)
    J = np.empty((len(f0), len(x)))
    for j in range(len(x)):
        s = h * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += s
        xm[j] -= s
        J[:, j] = (f(xp) - f(xm)) / (2 * s)
    return J


def damped_newton(f, x0, tol=1e-12, max_iter=100):
    """Newton with central-difference Jacobian and backtracking on |f|."""
    x = np.array(x0, dtype=float)
    fx = f(x)
    nf = np.linalg.norm(fx)
    for _ in range(max_iter):
        if nf <= tol:
            break
        J = fd_jacobian(f, x)
        try:
            dx = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -fx, rcond=None)[0]
        t = 1.0
        while t > 1e-6:
            xn = x + t * dx
            fn = f(xn)
            nn = np.linalg.norm(fn)
            if nn < (1 - 1e-4 * t) * nf:
                break
            t *= 0.5
        else:
            break
        x, fx, nf = xn, fn, nn
    return x, nf


# ------------------------------------------------------- geometric seeding

def _linear_multipliers(params, sense, rows, interior):
    """Solve for (lambda1, c0) (or c0 alone) from H conditions linear in them.

    rows: list of (a_lambda, a_c0, const) with residual = const + a_lambda*l + a_c0*c0.
    """
    A = np.array([[r[0], r[1]] for r in rows])
    b = -np.array([r[2] for r in rows])
    if interior:
        a = A[:, 1]
        if abs(a[-1]) < 1e-14:
            return None
        return 0.0, b[-1] / a[-1]
    if abs(np.linalg.det(A)) < 1e-14:
        return None
    lam, c0 = np.linalg.solve(A, b)
    return lam, c0


def _arc_row(params, sense, q, R2, center, u):
    # H = 1 + u (c x C)/rho - c0 s w,   c = lam q + (c0/R2) perp(q)
    rho, w = params.rho, params.omega_max
    return (u * g.cross(q, center) / rho,
            u * g.cross(g.perp(q), center) / (rho * R2) - sense.sign * w,
            1.0)


def _line_row(params, sense, q, R2, theta):
    e = g.unit(theta)
    return (q @ e, (g.perp(q) @ e) / R2 - sense.sign * params.omega_max, 1.0)


def _radial_tangents(params, start, u1):
    """Headings where the first turning circle touches a line through the target."""
    rho = params.rho
    c1 = g.center_of((start.x, start.y), start.theta, u1, rho)
    dc = math.hypot(*c1)
    if dc < rho:
        return []
    gc = math.atan2(c1[1], c1[0])
    s0 = math.asin(-u1 * rho / dc)
    return [gc + s0, gc + math.pi - s0]


def _forward(params, start, word, ths, p1, p2):
    """End point, end heading, time and switch data for a grid of parameters.

    CC : p1 = polar angle of the switch on the first circle, p2 = last turn
    CSC: p1 = line length, p2 = last turn (ths fixes the radial line)
    SC : p1 = line length, p2 = last turn
    """
    rho = params.rho
    us = _parts(word)
    u2 = us[-1]
    if len(word) == 2 and word[0] != "S":
        u1 = us[0]
        c1 = g.center_of((start.x, start.y), start.theta, u1, rho)
        X = c1[0] + rho * np.cos(p1)
        Y = c1[1] + rho * np.sin(p1)
        th1 = p1 + u1 * 0.5 * math.pi
        alpha = (u1 * (th1 - start.theta)) % TWO_PI
        T0 = rho * alpha
        dirx, diry = X, Y
    else:
        if word[0] == "S":
            X1, th1, T0 = np.array([start.x, start.y]), start.theta, 0.0
        else:
            c1 = g.center_of((start.x, start.y), start.theta, us[0], rho)
            X1 = g.point_on(c1, ths, us[0], rho)
            th1, T0 = ths, rho * g.arc_angle(start.theta, ths, us[0])
        X = X1[0] + p1 * math.cos(th1)
        Y = X1[1] + p1 * math.sin(th1)
        T0 = T0 + p1
        dirx, diry = math.cos(th1) + 0 * p1, math.sin(th1) + 0 * p1
    thf = th1 + u2 * p2
    qx = X + u2 * rho * (np.sin(thf) - np.sin(th1))
    qy = Y - u2 * rho * (np.cos(thf) - np.cos(th1))
    T = T0 + rho * p2
    return qx, qy, thf, T, dirx, diry


def _conditions(params, start, word, sense, ths, p1, p2, interior):
    qx, qy, thf, T, dx, dy = _forward(params, start, word, ths, p1, p2)
    r = params.r
    if interior:
        C = (qx * dx + qy * dy) / (r * np.hypot(dx, dy))
    else:
        C = (qx * qx + qy * qy - r * r) / (r * r)
    phi0 = start.psi - start.theta
    A = phi0 + sense.sign * params.omega_max * T - (np.arctan2(qy, qx) + math.pi - thf)
    A = (A + math.pi) % TWO_PI - math.pi
    return C, A, qx, qy, thf


def _contour_roots(F, g1, g2):
    """Common zeros of (C, A) found from grid cells where both change sign."""
    P1, P2 = np.meshgrid(g1, g2, indexing="ij")
    C, A = F(P1, P2)[:2]
    cs = [C[:-1, :-1], C[1:, :-1], C[:-1, 1:], C[1:, 1:]]
    as_ = [A[:-1, :-1], A[1:, :-1], A[:-1, 1:], A[1:, 1:]]
    cmin, cmax = np.minimum.reduce(cs), np.maximum.reduce(cs)
    amin, amax = np.minimum.reduce(as_), np.maximum.reduce(as_)
    amag = np.maximum.reduce([np.abs(v) for v in as_])
    cells = np.argwhere((cmin <= 0) & (cmax >= 0) & (amin <= 0) & (amax >= 0) & (amag < 1.0))
    out = []
    for i, j in cells:
        x0 = np.array([0.5 * (g1[i] + g1[i + 1]), 0.5 * (g2[j] + g2[j + 1])])
        fun = lambda v: np.array([float(w) for w in F(np.array(v[0]), np.array(v[1]))[:2]])
        x, nf = damped_newton(fun, x0, tol=1e-14, max_iter=50)
        if nf > 1e-11:
            continue
        if any(abs(x[0] - y[0]) < 1e-7 and abs(x[1] - y[1]) < 1e-7 for y in out):
            continue
        out.append(x)
    return out


def _geometric_seeds(params, start, word, sense, interior, n=241):
    rho, r = params.rho, params.r
    us = _parts(word)
    gam = np.linspace(0.0, TWO_PI, n)
    seeds = []
    if len(word) == 2 and word[0] != "S":
        tangents = [None]
    elif word[0] == "S":
        p0 = np.array([start.x, start.y])
        if abs(g.cross(p0, g.unit(start.theta))) > 1e-9 * max(1.0, math.hypot(*p0)):
            return []
        tangents = [start.theta]
    else:
        tangents = _radial_tangents(params, start, us[0])
    for ths in tangents:
        if ths is None:
            g1 = np.linspace(0.0, TWO_PI, n)
        else:
            if word[0] == "S":
                X1 = np.array([start.x, start.y])
            else:
                c1 = g.center_of((start.x, start.y), start.theta, us[0], rho)
                X1 = g.point_on(c1, ths, us[0], rho)
            Lmax = math.hypot(*X1) + r + 2 * rho
            g1 = np.linspace(0.0, Lmax, max(n, int(Lmax / 0.02)))
        F = lambda a, b, ths=ths: _conditions(params, start, word, sense, ths, a, b, interior)
        for p1, p2 in _contour_roots(F, g1, gam):
            if ths is not None and p1 < -1e-12:
                continue
            p2 = p2 % TWO_PI
            C, A, qx, qy, thf = F(np.array(p1), np.array(p2))
            q = np.array([float(qx), float(qy)])
            if interior and q @ q > r * r * (1 + 1e-12):
                continue
            seeds.append((q, float(thf)))
    return seeds


def _unknowns_from_seed(params, start, word, sense, q, thf, interior):
    rho = params.rho
    R2 = q @ q
    us = _parts(word)
    if len(word) == 3:
        c1 = g.center_of((start.x, start.y), start.theta, us[0], rho)
        c2 = g.center_of(q, thf, us[2], rho)
        ths = _tangent_heading(c1, c2, us[0], us[2], rho)
        if ths is None:
            return None
        rows = [_arc_row(params, sense, q, R2, c1, us[0]), _line_row(params, sense, q, R2, ths)]
    elif word[0] == "S":
        # line row and the switching condition c x X2 = 0
        c2 = g.center_of(q, thf, us[1], rho)
        X2 = g.point_on(c2, start.theta, us[1], rho)
        sw = (g.cross(q, X2), g.cross(g.perp(q), X2) / R2, 0.0)
        rows = [sw, _line_row(params, sense, q, R2, start.theta)]
    else:
        c1 = g.center_of((start.x, start.y), start.theta, us[0], rho)
        c2 = g.center_of(q, thf, us[1], rho)
        rows = [_arc_row(params, sense, q, R2, c1, us[0]), _arc_row(params, sense, q, R2, c2, us[1])]
    lm = _linear_multipliers(params, sense, rows, interior)
    if lm is None:
        return None
    lam, c0 = lm
    eta = math.atan2(q[1], q[0])
    if interior:
        return CoupledUnknowns(eta, 0.0, thf, c0, math.sqrt(R2))
    return CoupledUnknowns(eta, lam, thf, c0)


def _grid_seeds(params, start, word, sense, interior):
    """Deterministic multistart: eta, theta_f on multiples of pi/8."""
    rho, r = params.rho, params.r
    us = _parts(word)
    ks = np.arange(16) * math.pi / 8
    f = residual_function(word)
    out = []
    radii = (0.5 * r,) if interior else (r,)
    for eta in ks:
        for thf in ks:
            for R in radii:
                def geo(v):
                    z = CoupledUnknowns(v[0], 0.0, v[2], 0.0, v[1] if interior else None)
                    res = f(params, start, word, sense, z)
                    vals = np.array(res.values)
                    if interior:
                        # third condition: q orthogonal to the switch point
                        X = res.geometry.get("switch")
                        if X is None:
                            return np.full(3, _BAD)
                        q = z.final_point(params)
                        return np.array([vals[2], vals[3], (q @ X) / rho])
                    return vals[2:]
                if interior:
                    x0 = np.array([eta, R, thf])
                    x, nf = damped_newton(geo, x0, tol=1e-13, max_iter=100)
                    if nf > 1e-9 or not 0 < x[1] <= r:
                        continue
                    q = x[1] * g.unit(x[0])
                    out.append((q, x[2]))
                else:
                    g2 = lambda v: geo(np.array([v[0], r, v[1]]))
                    x, nf = damped_newton(g2, np.array([eta, thf]), tol=1e-13, max_iter=100)
                    if nf > 1e-9:
                        continue
                    out.append((r * g.unit(x[0]), x[1]))
    return out


# ---------------------------------------------------------- family solver

@dataclass(frozen=True)
class CoupledRoot:
    unknowns: CoupledUnknowns
    residual_norm: float
    jacobian_cond: float
    plan: object


def solve_family(params: SystemParams, start: State, candidate, seeding="scan",
                 branches=("boundary", "interior"), return_roots=False):
    """All admissible roots of one family as plans, fastest first."""
    if isinstance(candidate, str):
        candidate = CandidateType.parse(candidate)
    word, sense = candidate.pose_word, candidate.laser_sense
    if not (len(word) == 3 or (len(word) == 2 and (word[0] == "S" or "S" not in word))):
        raise ModelError(f"{candidate.label} is not a coupled family")
    f = residual_function(word)
    roots = []
    for branch in branches:
        interior = branch == "interior"
        if seeding == "grid":
            seeds = _grid_seeds(params, start, word, sense, interior)
        else:
            seeds = _geometric_seeds(params, start, word, sense, interior)
        for q, thf in seeds:
            z0 = _unknowns_from_seed(params, start, word, sense, q, thf, interior)
            if z0 is None:
                continue
            fun = lambda v: np.array(f(params, start, word, sense,
                                       CoupledUnknowns.from_vector(v, interior)).values)
            v, nf = damped_newton(fun, z0.vector(), tol=1e-13)
            if nf > 1e-8:
                continue
            z = CoupledUnknowns.from_vector(v, interior)
            if interior and not 0 < z.radius <= params.r * (1 + 1e-12):
                continue
            if any(np.linalg.norm(v - r_.unknowns.vector()) < 1e-6
                   and r_.unknowns.interior == interior for r_ in roots):
                continue
            J = fd_jacobian(fun, v)
            cond = float(np.linalg.cond(J))
            plan = _materialize(params, start, candidate, f, z, nf, cond)
            if plan is not None:
                roots.append(CoupledRoot(z, nf, cond, plan))
    roots.sort(key=lambda r_: (r_.plan.t_final, r_.unknowns.eta))
    if return_roots:
        return roots
    return [r_.plan for r_ in roots]


def _materialize(params, start, candidate, f, z, nf, cond):
    res = f(params, start, candidate.pose_word, candidate.laser_sense, z)
    durs = res.geometry.get("durations")
    if durs is None or min(durs) < -1e-9:
        return None
    durs = [max(0.0, d) for d in durs]
    info = {"regime": "coupled-interior" if z.interior else "coupled-boundary",
            "unknowns": z, "residual_norm": nf, "jacobian_cond": cond}
    plan = build_plan(params, start, candidate, candidate.pose_word, durs, 0.0, info)
    if plan.word != candidate.pose_word:
        return None  # degenerate: a zero-length piece makes it another family
    cap = capture_check(params, plan.final_state)
    if not cap:
        return None
    # maximum principle signs: laser sense from c_psi, turn directions from
    # the switching function along both arcs
    if candidate.laser_sense.sign * z.c0 <= 0:
        return None
    c = z.costate(params)
    for seg in plan.segments:
        u = seg.kind.u
        if u == 0:
            continue
        for frac in np.linspace(0.0, 1.0, 9):
            s = _state_along(params, seg, frac * seg.duration)
            sw = c[0] * s[1] - c[1] * s[0]
            if u * sw > 1e-7:
                return None
    return plan


def _state_along(params, seg, tau):
    st = seg.start_state
    x, y, _ = g.positions(st.x, st.y, st.theta, seg.kind.u, tau, params.rho)
    return float(x), float(y)
