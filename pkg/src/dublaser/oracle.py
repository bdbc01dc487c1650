"""Brute-force minimum-time reference.

Searches control sequences of at most three constant pieces, u in {-1, 0, 1}
per piece. All durations except the last are gridded; along the last piece
the earliest capture is located directly (dense sampling inside the disk,
extra samples where the piece passes closest to the target, then bisection).
The laser switch-on time is not gridded: since psi - theta only changes while
the laser spins, a pose reached at time T can be captured iff the wrapped
angle between the required and the initial laser offset is at most w * T,
and the latest admissible switch-on is then explicit.

The best cells of every word are refined by coordinate descent with a
golden-section search per coordinate.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import State, SystemParams

TWO_PI = 2.0 * math.pi
_NO = -1.0
# grid cells more than this many grid steps above the best refined time are
# not refined
_MARGIN = 3.0


@dataclass(frozen=True)
class OracleConfig:
    duration_grid_resolution: float = 0.02
    refine_iterations: int = 30
    max_segments: int = 3
    senses: str = "both"
    tol_capture: float = 1e-12
    keep_cells: int = 6

    def __post_init__(self):
        if not self.duration_grid_resolution > 0:
            raise ValueError("duration_grid_resolution must be positive")
        if self.max_segments not in (1, 2, 3):
            raise ValueError("max_segments must be 1, 2 or 3")


@dataclass(frozen=True)
class OracleResult:
    time: float
    word: str
    durations: tuple
    sense: str
    t_switch_on: float

    def __iter__(self):
        yield self.time
        yield self

    @property
    def description(self):
        segs = ", ".join(f"{k}{d:.6f}" for k, d in zip(self.word, self.durations))
        return f"{self.word}|{self.sense} [{segs}] t_l={self.t_switch_on:.6f}"


# ------------------------------------------------------------------ kernels

@njit(cache=True)
def _step(x, y, th, u, d, rho):
    if u == 0:
        return x + d * math.cos(th), y + d * math.sin(th), th
    th2 = th + u * d / rho
    return (x + u * rho * (math.sin(th2) - math.sin(th)),
            y - u * rho * (math.cos(th2) - math.cos(th)), th2)


@njit(cache=True)
def _wrap(a):
    return (a + math.pi) % TWO_PI - math.pi


@njit(cache=True)
def _offset(x, y, th, u, tau, rho, phi0):
    """Wrapped difference between the required and the initial laser offset."""
    X, Y, TH = _step(x, y, th, u, tau, rho)
    return _wrap(math.atan2(-Y, -X) - TH - phi0), X, Y


@njit(cache=True)
def _inside_window(x, y, th, u, rho, r, tmax, out):
    """Fill out[k] = (lo, hi) travel intervals inside the disk; return count."""
    n = 0
    if u == 0:
        c, s = math.cos(th), math.sin(th)
        pe = x * c + y * s
        m = x * s - y * c
        disc = r * r - m * m
        if disc < 0:
            return 0
        h = math.sqrt(disc)
        lo = max(0.0, -pe - h)
        hi = min(tmax, -pe + h)
        if lo <= hi:
            out[0, 0] = lo
            out[0, 1] = hi
            n = 1
        return n
    cx = x - u * rho * math.sin(th)
    cy = y + u * rho * math.cos(th)
    dc = math.hypot(cx, cy)
    if dc < 1e-15:
        if rho <= r:
            out[0, 0] = 0.0
            out[0, 1] = tmax
            return 1
        return 0
    k = (r * r - dc * dc - rho * rho) / (2 * rho * dc)
    if k >= 1.0:
        out[0, 0] = 0.0
        out[0, 1] = tmax
        return 1
    if k < -1.0:
        return 0
    A = math.acos(k)
    nu0 = (u * (math.atan2(y - cy, x - cx) - math.atan2(cy, cx))) % TWO_PI
    j = -1
    while n < out.shape[0]:
        lo = (A + TWO_PI * j - nu0) * rho
        hi = (TWO_PI - A + TWO_PI * j - nu0) * rho
        if lo > tmax:
            break
        lo = max(lo, 0.0)
        hi = min(hi, tmax)
        if lo <= hi:
            out[n, 0] = lo
            out[n, 1] = hi
            n += 1
        j += 1
    return n


@njit(cache=True)
def _ok(a, w, T, tol):
    return abs(a) <= w * T + tol


@njit(cache=True)
def _cross(a0, a1):
    return a0 * a1 <= 0.0 and abs(a0) < 1.0 and abs(a1) < 1.0 and a0 != a1


@njit(cache=True)
def last_capture(x, y, th, u, T0, phi0, rho, r, w, tmax, tol, buf):
    """Earliest travel in [0, tmax] along one piece that captures, or -1."""
    if tmax < 0:
        return _NO
    n = _inside_window(x, y, th, u, rho, r, tmax, buf)
    for k in range(n):
        lo = buf[k, 0]
        hi = buf[k, 1]
        a0, X, Y = _offset(x, y, th, u, lo, rho, phi0)
        if _ok(a0, w, T0 + lo, tol):
            return lo
        t0 = lo
        while t0 < hi:
            dist = math.hypot(X, Y)
            rate = 1.0 / dist
            if u != 0:
                rate += 1.0 / rho
            st = min(0.1 / rate, 0.02)
            st = max(st, 1e-13)
            t1 = min(t0 + st, hi)
            a1, X, Y = _offset(x, y, th, u, t1, rho, phi0)
            if _ok(a1, w, T0 + t1, tol) or _cross(a0, a1):
                # bisect on: captured at b, or offset crossed zero in (a, b)
                aa, bb, al = t0, t1, a0
                for _ in range(100):
                    mid = 0.5 * (aa + bb)
                    if mid <= aa or mid >= bb:
                        break
                    am, _x, _y = _offset(x, y, th, u, mid, rho, phi0)
                    if _ok(am, w, T0 + mid, tol) or _cross(al, am):
                        bb = mid
                    else:
                        aa = mid
                        al = am
                ab, _x, _y = _offset(x, y, th, u, bb, rho, phi0)
                if _ok(ab, w, T0 + bb, 1e-9):
                    return bb
            t0 = t1
            a0 = a1
    return _NO


@njit(cache=True)
def evaluate(word, durs, x0, y0, th0, phi0, rho, r, w, limit, tol, buf):
    """Capture time of a word whose pieces except the last are fixed."""
    x, y, th = x0, y0, th0
    T = 0.0
    n = len(word)
    for i in range(n - 1):
        d = durs[i]
        if d < 0:
            return math.inf
        x, y, th = _step(x, y, th, word[i], d, rho)
        T += d
    if T >= limit:
        return math.inf
    if word[n - 1] != 0:
        tmax = min(TWO_PI * rho, limit - T)
    else:
        tmax = limit - T
    tau = last_capture(x, y, th, word[n - 1], T, phi0, rho, r, w, tmax, tol, buf)
    if tau < 0:
        return math.inf
    return T + tau


@njit(cache=True)
def grid_search(word, x0, y0, th0, phi0, rho, r, w, h, limit, tol, keep):
    """Scan the prefix grid, keeping the best `keep` cells (time, d1, d2)."""
    buf = np.empty((8, 2))
    best = np.full((keep, 3), math.inf)
    n = len(word)
    m1 = 1
    m2 = 1
    if n >= 2:
        ext = TWO_PI * rho if word[0] != 0 else limit
        m1 = int(math.ceil(ext / h))
    if n >= 3:
        ext = TWO_PI * rho if word[1] != 0 else limit
        m2 = int(math.ceil(ext / h))
    durs = np.zeros(3)
    for i in range(m1):
        d1 = i * h
        if n >= 2:
            x1, y1, t1 = _step(x0, y0, th0, word[0], d1, rho)
            if d1 + max(0.0, math.hypot(x1, y1) - r) >= limit:
                if word[0] == 0:
                    break
                continue
        for j in range(m2):
            d2 = j * h
            durs[0] = d1
            durs[1] = d2
            if n >= 3:
                x2, y2, t2 = _step(x1, y1, t1, word[1], d2, rho)
                if d1 + d2 + max(0.0, math.hypot(x2, y2) - r) >= min(limit, best[keep - 1, 0]) + 2 * h:
                    if word[1] == 0:
                        break
                    continue
            T = evaluate(word, durs, x0, y0, th0, phi0, rho, r, w, limit, tol, buf)
            if T < best[keep - 1, 0]:
                # one kept cell per neighbourhood so distinct basins survive
                k = -1
                for q in range(keep):
                    if (math.isfinite(best[q, 0]) and abs(best[q, 1] - d1) < 2.5 * h
                            and abs(best[q, 2] - d2) < 2.5 * h):
                        k = q
                        break
                if k < 0:
                    k = keep - 1
                elif T >= best[k, 0]:
                    continue
                best[k, 0] = T
                best[k, 1] = d1
                best[k, 2] = d2
                while k > 0 and best[k, 0] < best[k - 1, 0]:
                    for c in range(3):
                        tmp = best[k, c]
                        best[k, c] = best[k - 1, c]
                        best[k - 1, c] = tmp
                    k -= 1
    return best


# --------------------------------------------------------------- refinement

_WORDS = [w for n in (1, 2, 3) for w in
          ("".join(p) for p in itertools.product("LRS", repeat=n))
          if all(a != b for a, b in zip(w, w[1:]))]
_U = {"L": 1, "R": -1, "S": 0}


def _golden(f, a, b, iters=40):
    gr = (math.sqrt(5) - 1) / 2
    c, d = b - gr * (b - a), a + gr * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _edge(g, good, bad, xtol=1e-12):
    """Bisect to the last feasible point between a feasible and an infeasible one."""
    fg = g(good)
    iters = max(1, math.ceil(math.log2(max(abs(bad - good), xtol) / xtol)))
    for _ in range(iters):
        mid = 0.5 * (good + bad)
        fm = g(mid)
        if math.isfinite(fm):
            good, fg = mid, fm
        else:
            bad = mid
    return good, fg


def _line_min(g, lo, hi, n=7, xtol=1e-11):
    """1-D minimum on [lo, hi] that copes with infeasible (infinite) regions.

    Minima often sit where the capture is about to disappear, so besides a
    golden-section search between feasible samples the edge next to the best
    sample is located by bisection.
    """
    xs = np.linspace(lo, hi, n)
    fs = [g(v) for v in xs]
    i = int(np.argmin(fs))
    if not math.isfinite(fs[i]):
        return None, math.inf
    best = (xs[i], fs[i])
    for j in (i - 1, i + 1):
        if not 0 <= j < n:
            continue
        if math.isfinite(fs[j]):
            width = abs(xs[j] - xs[i])
            iters = max(1, math.ceil(math.log(max(width, xtol) / xtol) / 0.4812))
            v, fv = _golden(g, min(xs[i], xs[j]), max(xs[i], xs[j]), iters)
        else:
            v, fv = _edge(g, xs[i], xs[j])
        if fv < best[1]:
            best = (v, fv)
    return best


def _refine(fun, x, fx, step, iters):
    """Coordinate descent with an edge-aware line search per coordinate."""
    x = list(x)
    for _ in range(iters):
        improved = False
        for k in range(len(x)):
            def g1(v, k=k):
                if v < 0:
                    return math.inf
                y = list(x)
                y[k] = v
                return fun(y)
            v, fv = _line_min(g1, max(0.0, x[k] - step), x[k] + step)
            if v is not None and fv < fx - 1e-13:
                x[k], fx, improved = v, fv, True
        if not improved:
            step *= 0.5
            if step < 1e-8:
                break
    return x, fx


def _profile_refine(fun, x, fx, width, rounds=3):
    """Nested search for two durations: the inner one is minimized for each
    value of the outer one. Follows optima lying on a curved feasibility edge
    where coordinate moves alone stall."""
    x = list(x)
    for _ in range(rounds):
        inner = {}

        def prof(a):
            if a < 0:
                return math.inf
            v, fv = _line_min(lambda b: fun([a, b]) if b >= 0 else math.inf,
                              max(0.0, x[1] - width), x[1] + width)
            inner[a] = v
            return fv

        a, fa = _line_min(prof, max(0.0, x[0] - width), x[0] + width)
        if a is None or not fa < fx - 1e-13:
            break
        x, fx = [a, inner[a] if a in inner else x[1]], fa
        width *= 0.25
    return x, fx


def horizon_bound(params: SystemParams, start: State):
    rho = params.rho
    return (TWO_PI * rho + math.hypot(start.x, start.y)
            + 4 * math.pi * rho / min(1.0, params.omega_max * rho))


def oracle_min_time(params: SystemParams, start: State, cfg: OracleConfig | None = None,
                    words=None, return_all=False):
    """Minimum capture time found by the structured search, with its controls."""
    cfg = cfg or OracleConfig()
    rho, r, w = params.rho, params.r, params.omega_max
    x0, y0, th0 = start.x, start.y, start.theta
    phi0 = start.psi - start.theta
    h = cfg.duration_grid_resolution
    tol = cfg.tol_capture
    if x0 * x0 + y0 * y0 <= r * r:
        a = (math.atan2(-y0, -x0) - th0 - phi0 + math.pi) % TWO_PI - math.pi
        if abs(a) <= tol:
            return _result(params, start, 0.0, "", [])
    limit = horizon_bound(params, start)
    words = words or [wd for wd in _WORDS if len(wd) <= cfg.max_segments]
    words = sorted(words, key=len)
    buf = np.empty((8, 2))
    funs, cells = {}, []
    incumbent = math.inf
    for wd in words:
        code = np.array([_U[ch] for ch in wd], dtype=np.int64)
        lim = min(limit, incumbent + 4 * h) if math.isfinite(incumbent) else limit
        found = grid_search(code, x0, y0, th0, phi0, rho, r, w, h, lim, tol, cfg.keep_cells)
        npre = len(wd) - 1

        def fun(pre, code=code, npre=npre):
            d = np.zeros(3)
            d[:npre] = pre
            return evaluate(code, d, x0, y0, th0, phi0, rho, r, w, limit, tol, buf)

        funs[wd] = fun
        for T, d1, d2 in found:
            if math.isfinite(T):
                cells.append((T, wd, [d1, d2][:npre]))
                incumbent = min(incumbent, T)

    # refine cells from the best grid value up; cells that start far above
    # the best refined time cannot win
    per_word = {wd: (math.inf, None) for wd in words}
    seen = {wd: [] for wd in words}
    lead = math.inf
    for T, wd, pre in sorted(cells, key=lambda c: (c[0], c[1])):
        if T > lead + _MARGIN * h:
            if T < per_word[wd][0]:
                per_word[wd] = (T, pre)
            continue
        if pre and any(max(abs(a - b) for a, b in zip(pre, q)) < 2.5 * h for q in seen[wd]):
            continue
        seen[wd].append(pre)
        if pre:
            pre, T = _refine(funs[wd], pre, T, h, cfg.refine_iterations)
        if T < per_word[wd][0]:
            per_word[wd] = (T, list(pre))
        lead = min(lead, T)
    if math.isfinite(lead):
        for k, (T, pre) in per_word.items():
            if pre is not None and len(pre) == 2 and T <= lead + 2 * h:
                pre, T = _profile_refine(funs[k], pre, T, 2 * h)
                per_word[k] = (T, pre)
    wd = min(per_word, key=lambda k: (per_word[k][0], len(k), k))
    T, pre = per_word[wd][:2]
    if not math.isfinite(T):
        res = OracleResult(math.inf, "", (), "+", 0.0)
    else:
        res = _result(params, start, T, wd, pre)
    if return_all:
        return res, {k: v[0] for k, v in per_word.items()}
    return res


def _result(params, start, T, wd, pre):
    durs = list(pre) + [T - sum(pre)] if wd else []
    x, y, th = start.x, start.y, start.theta
    for ch, d in zip(wd, durs):
        x, y, th = _step(x, y, th, _U[ch], d, params.rho)
    if not wd:
        return OracleResult(0.0, "", (), "+", 0.0)
    a = (math.atan2(-y, -x) - th - (start.psi - start.theta) + math.pi) % TWO_PI - math.pi
    # laser travel: a > 0 needs counter-clockwise ('-'), a < 0 clockwise ('+')
    sense = "-" if a >= 0 else "+"
    t_l = max(0.0, T - abs(a) / params.omega_max)
    return OracleResult(T, wd, tuple(durs), sense, t_l)
