"""Domain types, closed-form kinematics, capture test and PMP certificate.

State is (x, y, theta, psi): vehicle position, heading and laser orientation.
The vehicle moves at unit speed with turn input u in [-1, 1] (radius rho),
the laser turns with the vehicle plus its own rate omega in [-w, w].
The laser is idle (omega = 0) until t_switch_on, then spins at the full
rate in one fixed sense until the end.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

TOL_GEOM = 1e-9
TOL_H = 1e-7
TOL_ANGLE = 1e-6


class ModelError(ValueError):
    """Base class for structured errors raised by the library."""


class InconsistentPlanError(ModelError):
    pass


class CaptureError(ModelError):
    pass


def wrap_2pi(a):
    return a % TWO_PI


def wrap_pi(a):
    """Signed angle in (-pi, pi]."""
    b = math.fmod(a + math.pi, TWO_PI)
    if b <= 0.0:
        b += TWO_PI
    return b - math.pi


def angle_dist(a, b):
    return abs(wrap_pi(a - b))


@dataclass(frozen=True)
class SystemParams:
    rho: float = 1.0
    r: float = 1.0
    omega_max: float = 1.0

    def __post_init__(self):
        for name in ("rho", "r", "omega_max"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ModelError(f"{name} must be a positive finite number, got {v!r}")


@dataclass(frozen=True)
class State:
    x: float
    y: float
    theta: float
    psi: float

    def __post_init__(self):
        for name in ("x", "y", "theta", "psi"):
            if not math.isfinite(getattr(self, name)):
                raise ModelError(f"state field {name} is not finite")
        object.__setattr__(self, "theta", wrap_2pi(float(self.theta)))
        object.__setattr__(self, "psi", wrap_2pi(float(self.psi)))
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))

    @property
    def position(self):
        return np.array([self.x, self.y])

    def mirrored(self):
        """Reflection across the X axis."""
        return State(self.x, -self.y, -self.theta, -self.psi)

    def rotated(self, delta):
        c, s = math.cos(delta), math.sin(delta)
        return State(c * self.x - s * self.y, s * self.x + c * self.y,
                     self.theta + delta, self.psi + delta)


@dataclass(frozen=True)
class ControlSample:
    u: float
    omega: float

    def check(self, params: SystemParams):
        if abs(self.u) > 1.0 + 1e-12 or abs(self.omega) > params.omega_max * (1 + 1e-12):
            raise ModelError(f"control out of bounds: {self}")


class SegmentKind(enum.Enum):
    LEFT = "L"
    RIGHT = "R"
    STRAIGHT = "S"

    @property
    def u(self) -> int:
        return {"L": 1, "R": -1, "S": 0}[self.value]

    @classmethod
    def from_letter(cls, ch):
        return cls(ch.upper())

    def mirrored(self):
        return {SegmentKind.LEFT: SegmentKind.RIGHT,
                SegmentKind.RIGHT: SegmentKind.LEFT}.get(self, self)


class LaserSense(enum.Enum):
    """'+' is clockwise (omega = -w), '-' counter-clockwise (omega = +w)."""
    CLOCKWISE = "+"
    COUNTERCLOCKWISE = "-"

    @property
    def sign(self) -> int:
        return -1 if self is LaserSense.CLOCKWISE else 1

    @classmethod
    def parse(cls, s):
        s = s.strip().replace("−", "-")
        return cls(s)

    def flipped(self):
        if self is LaserSense.CLOCKWISE:
            return LaserSense.COUNTERCLOCKWISE
        return LaserSense.CLOCKWISE


PLUS = LaserSense.CLOCKWISE
MINUS = LaserSense.COUNTERCLOCKWISE


@dataclass(frozen=True)
class PoseSegment:
    kind: SegmentKind
    duration: float
    start_state: State

    def __post_init__(self):
        if not (self.duration >= 0.0 and math.isfinite(self.duration)):
            raise ModelError(f"segment duration must be >= 0, got {self.duration!r}")


@dataclass(frozen=True)
class LaserSchedule:
    sense: LaserSense
    t_switch_on: float

    def __post_init__(self):
        if not self.t_switch_on >= 0.0:
            raise ModelError("laser switch-on time must be >= 0")

    def omega(self, params: SystemParams, t: float) -> float:
        if t < self.t_switch_on:
            return 0.0
        return self.sense.sign * params.omega_max


CANDIDATE_TABLE = (
    ("RS", "+"), ("RS", "-"), ("LS", "+"), ("LS", "-"),
    ("S", "+"), ("S", "-"), ("R", "+"), ("L", "-"),
    ("RSR", "+"), ("RSL", "-"), ("LSL", "-"), ("LSR", "+"),
    ("RL", "-"), ("LR", "+"), ("SR", "+"), ("SL", "-"),
)


@dataclass(frozen=True, order=True)
class CandidateType:
    pose_word: str
    laser_sense: LaserSense = field(compare=False)

    def __post_init__(self):
        w = self.pose_word.upper()
        object.__setattr__(self, "pose_word", w)
        if not isinstance(self.laser_sense, LaserSense):
            object.__setattr__(self, "laser_sense", LaserSense.parse(self.laser_sense))
        if not 1 <= len(w) <= 3 or set(w) - set("LRS"):
            raise ModelError(f"bad pose word {w!r}")
        if w[-1] == "L" and self.laser_sense is not MINUS:
            raise ModelError(f"{w}: a final left arc needs sense '-'")
        if w[-1] == "R" and self.laser_sense is not PLUS:
            raise ModelError(f"{w}: a final right arc needs sense '+'")
        if (w, self.laser_sense.value) not in CANDIDATE_TABLE:
            raise ModelError(f"{self.label} is not an admissible candidate")

    @property
    def label(self):
        return f"{self.pose_word}|{self.laser_sense.value}"

    @property
    def sort_key(self):
        return (self.pose_word, self.laser_sense.value)

    @classmethod
    def parse(cls, label):
        word, sense = label.split("|")
        return cls(word.strip(), LaserSense.parse(sense))

    def mirrored(self):
        w = self.pose_word.translate(str.maketrans("LR", "RL"))
        return CandidateType(w, self.laser_sense.flipped())

    def __hash__(self):
        return hash(self.sort_key)

    def __eq__(self, other):
        return isinstance(other, CandidateType) and self.sort_key == other.sort_key

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class TrajectoryPlan:
    candidate: CandidateType
    segments: tuple
    laser: LaserSchedule
    t_final: float
    final_state: State
    info: dict = field(default_factory=dict, compare=False)

    @property
    def word(self):
        return "".join(s.kind.value for s in self.segments)

    @property
    def start_state(self):
        return self.segments[0].start_state if self.segments else self.final_state

    @property
    def switch_times(self):
        out, t = [], 0.0
        for s in self.segments[:-1]:
            t += s.duration
            out.append(t)
        return out

    @property
    def durations(self):
        return [s.duration for s in self.segments]


# ---------------------------------------------------------------- kinematics

def pose_step(x, y, theta, u, d, rho):
    """Exact pose after moving a distance d with constant turn input u."""
    if u == 0:
        return x + d * math.cos(theta), y + d * math.sin(theta), theta
    th2 = theta + u * d / rho
    x2 = x + u * rho * (math.sin(th2) - math.sin(theta))
    y2 = y - u * rho * (math.cos(th2) - math.cos(theta))
    return x2, y2, th2


def turn_center(x, y, theta, u, rho):
    """Center of the turning circle for u = +1 (left) or -1 (right)."""
    return x - u * rho * math.sin(theta), y + u * rho * math.cos(theta)


def _advance(params, state, kind, d, t0, laser):
    """State after segment of length d started at absolute time t0."""
    u = kind.u
    x, y, th = pose_step(state.x, state.y, state.theta, u, d, params.rho)
    psi = state.psi + u * d / params.rho
    if laser is not None:
        active = max(0.0, min(t0 + d, math.inf) - max(t0, laser.t_switch_on))
        psi += laser.sense.sign * params.omega_max * active
    return State(x, y, th, psi)


def build_plan(params: SystemParams, start: State, candidate: CandidateType,
               word, durations, t_switch_on, info=None, zero_tol=0.0):
    """Assemble a plan from a pose word and durations.

    Segments not longer than zero_tol are dropped.
    """
    laser = LaserSchedule(candidate.laser_sense, max(0.0, float(t_switch_on)))
    segs, s, t = [], start, 0.0
    for ch, d in zip(word, durations):
        d = float(d)
        if d < -1e-12:
            raise ModelError(f"negative segment duration {d}")
        d = max(d, 0.0)
        if d <= zero_tol:
            continue
        kind = SegmentKind.from_letter(ch)
        segs.append(PoseSegment(kind, d, s))
        s = _advance(params, s, kind, d, t, laser)
        t += d
    t_l = min(laser.t_switch_on, t)
    laser = LaserSchedule(laser.sense, t_l)
    return TrajectoryPlan(candidate, tuple(segs), laser, t, s, dict(info or {}))


def laser_angle_swept(params: SystemParams, segment: PoseSegment, sense, active_fraction) -> float:
    """Signed change of psi over a segment whose trailing part has the laser on."""
    if not 0.0 <= active_fraction <= 1.0:
        raise ModelError("active_fraction must lie in [0, 1]")
    d = segment.duration
    dpsi = segment.kind.u * d / params.rho
    if active_fraction > 0:
        if not isinstance(sense, LaserSense):
            sense = LaserSense.parse(sense)
        dpsi += sense.sign * params.omega_max * active_fraction * d
    return dpsi


def _state_close(a: State, b: State, tol):
    return (math.hypot(a.x - b.x, a.y - b.y) <= tol
            and angle_dist(a.theta, b.theta) <= tol
            and angle_dist(a.psi, b.psi) <= tol)


def check_consistency(params, start, plan, tol=TOL_GEOM):
    s, t = start, 0.0
    for i, seg in enumerate(plan.segments):
        if not _state_close(s, seg.start_state, max(tol, 1e-12 * (1 + abs(s.x) + abs(s.y)))):
            raise InconsistentPlanError(
                f"segment {i} start {seg.start_state} does not match propagated state {s}")
        s = _advance(params, s, seg.kind, seg.duration, t, plan.laser)
        t += seg.duration
    if abs(t - plan.t_final) > 1e-9 * max(1.0, t):
        raise InconsistentPlanError(f"t_final {plan.t_final} differs from total duration {t}")
    if not _state_close(s, plan.final_state, 1e-8):
        raise InconsistentPlanError("final_state does not match propagated state")
    return s


def state_at(params, plan, t):
    tt = 0.0
    for seg in plan.segments:
        if t <= tt + seg.duration:
            return _advance(params, seg.start_state, seg.kind, max(0.0, t - tt), tt, plan.laser)
        tt += seg.duration
    return plan.final_state


def simulate(params: SystemParams, start: State, plan: TrajectoryPlan, dt: float):
    """Sample the trajectory at multiples of dt plus every breakpoint."""
    if not dt > 0:
        raise ModelError("dt must be positive")
    check_consistency(params, start, plan)
    T = plan.t_final
    times = set(np.arange(0.0, T, dt).tolist())
    times.add(0.0)
    times.add(T)
    tt = 0.0
    for seg in plan.segments:
        tt += seg.duration
        times.add(min(tt, T))
    if plan.laser.t_switch_on <= T:
        times.add(plan.laser.t_switch_on)
    out = []
    for t in sorted(times):
        out.append((t, state_at(params, plan, t) if plan.segments else start))
    return out


@dataclass(frozen=True)
class CaptureResult:
    captured: bool
    range_slack: float
    aim_error: float

    def __bool__(self):
        return self.captured


def aim_angle(x, y):
    """Laser orientation that points from (x, y) at the origin."""
    return math.pi + math.atan2(y, x)


def capture_check(params: SystemParams, s: State, tol_angle=TOL_ANGLE) -> CaptureResult:
    if s.x == 0.0 and s.y == 0.0:
        raise CaptureError("state at the target: aim direction undefined")
    slack = s.x * s.x + s.y * s.y - params.r * params.r
    err = angle_dist(aim_angle(s.x, s.y), s.psi)
    return CaptureResult(slack <= TOL_GEOM and err <= tol_angle, slack, err)


# ------------------------------------------------------------ PMP certificate

@dataclass(frozen=True)
class PmpCertificate:
    c_x: float
    c_y: float
    c_psi: float
    c_0: float
    p0: int
    hamiltonian_residual: float
    collinearity_residual: float
    status: str = "ok"
    sign_consistent: bool = True

    @property
    def phi(self):
        return math.atan2(self.c_y, self.c_x)

    @property
    def certified(self):
        return (self.status in ("ok", "rank-deficient")
                and self.hamiltonian_residual <= TOL_H
                and self.collinearity_residual <= TOL_GEOM)


def _sample_rows(params, plan):
    """Rows a with H = p0 + a . (c_x, c_y, c0) at sample points."""
    rows, pts = [], []
    t = 0.0
    tl = plan.laser.t_switch_on
    wl = plan.laser.sense.sign * params.omega_max
    for seg in plan.segments:
        u = seg.kind.u
        d = seg.duration
        samples = [(f * d, 1) for f in (0.0, 0.25, 0.5, 0.75)] + [(d, -1)]
        if t < tl < t + d:
            samples += [(tl - t, -1), (tl - t, 1)]
        for tau, side in samples:
            s = _advance(params, seg.start_state, seg.kind, tau, t, plan.laser)
            on = (t + tau > tl) if side < 0 else (t + tau >= tl)
            w = wl if on else 0.0
            # H = p0 + c.e(theta) + (c_x y - c_y x) u/rho - c0 w
            rows.append([math.cos(s.theta) + s.y * u / params.rho,
                         math.sin(s.theta) - s.x * u / params.rho,
                         -w])
            pts.append((t + tau, s, u, w))
        t += d
    return np.array(rows), pts


def _switch_points(plan):
    return [seg.start_state for seg in plan.segments[1:]]


def _line_points(plan):
    out = []
    for i, seg in enumerate(plan.segments):
        if seg.kind is SegmentKind.STRAIGHT:
            out.append(seg.start_state)
            end = plan.segments[i + 1].start_state if i + 1 < len(plan.segments) else plan.final_state
            out.append(end)
    return out


def _collinearity(c, points):
    n = math.hypot(c[0], c[1])
    if not points:
        return 0.0
    if n < 1e-14:
        # no direction available; best line through origin
        P = np.array([[p.x, p.y] for p in points])
        if len(P) == 1:
            return 0.0
        return float(np.linalg.svd(P, compute_uv=False)[-1])
    return max(abs(c[0] * p.y - c[1] * p.x) / n for p in points)


def pmp_verify(params: SystemParams, start: State, plan: TrajectoryPlan) -> PmpCertificate:
    """Fit the costate constants to the plan and report residuals.

    Unknowns are (c_x, c_y, c0) with c_psi = -c0. Conditions are the switching
    function c_x y - c_y x = 0 at every switch and H = 0 sampled along the plan.
    """
    if not plan.segments:
        return PmpCertificate(0, 0, 0, 0, 1, 0.0, 0.0, "empty")
    A, pts = _sample_rows(params, plan)
    sw = _switch_points(plan)
    scale = 10.0
    S = np.array([[scale * p.y, -scale * p.x, 0.0] for p in sw]).reshape(-1, 3)
    M = np.vstack([A, S])
    rhs = np.concatenate([-np.ones(len(A)), np.zeros(len(S))])
    sol, _, rank, sv = np.linalg.lstsq(M, rhs, rcond=None)
    status = "ok" if rank == 3 else "rank-deficient"
    res_h = float(np.max(np.abs(A @ sol + 1.0)))
    p0 = 1
    if res_h > TOL_H:
        # abnormal: nontrivial null vector of the homogeneous system
        _, svals, vt = np.linalg.svd(M)
        v = vt[-1]
        nrm = np.linalg.norm(v[:2]) or 1.0
        v = v / nrm
        res0 = float(np.max(np.abs(A @ v)))
        if res0 <= TOL_H and rank == 3:
            sol, res_h, p0 = v, res0, 0
            status = "abnormal"
    cx, cy, c0 = (float(v) for v in sol)
    sw_res = max([abs(cx * p.y - cy * p.x) for p in sw], default=0.0)
    col = max(_collinearity((cx, cy), _switch_points(plan) + _line_points(plan)),
              sw_res / max(math.hypot(cx, cy), 1e-300) if sw else 0.0)
    signs = _signs_ok(params, plan, cx, cy, c0, pts)
    return PmpCertificate(cx, cy, -c0, c0, p0, res_h, float(col), status, signs)


def _signs_ok(params, plan, cx, cy, c0, pts, tol=1e-7):
    """Maximum-principle sign checks on arcs and on the active laser."""
    ok = True
    for t, s, u, w in pts:
        sfun = cx * s.y - cy * s.x  # p_theta + p_psi
        if u != 0 and sfun * u > tol:
            ok = False
    if abs(c0) > 1e-6 and plan.laser.t_switch_on < plan.t_final:
        # p_psi = -c0 > 0 requires omega = -w
        if (-c0 > 0) != (plan.laser.sense.sign < 0):
            ok = False
    return ok


def plan_residual_summary(params, start, plan):
    cap = capture_check(params, plan.final_state)
    return {"range_slack": cap.range_slack, "aim_error": cap.aim_error}
