"""Small planar helpers shared by the solvers."""
import math

import numpy as np

from .model import TWO_PI, wrap_pi, wrap_2pi


def unit(theta):
    return np.array([math.cos(theta), math.sin(theta)])


def cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def perp(v):
    return np.array([-v[1], v[0]])


def center_of(p, theta, u, rho):
    return np.array([p[0] - u * rho * math.sin(theta), p[1] + u * rho * math.cos(theta)])


def point_on(c, theta, u, rho):
    """Point of the turning circle (center c, sense u) where the heading is theta."""
    return np.array([c[0] + u * rho * math.sin(theta), c[1] - u * rho * math.cos(theta)])


def arc_angle(th0, th1, u):
    """Turn angle in [0, 2pi) carrying heading th0 to th1 with sense u."""
    a = wrap_2pi(u * (th1 - th0))
    if a > TWO_PI - 1e-13:
        a = 0.0
    return a


def bearing(x, y, theta):
    """Direction of the origin relative to the heading, in (-pi, pi]."""
    return wrap_pi(math.atan2(-y, -x) - theta)


def bearing_v(x, y, theta):
    return (np.arctan2(-y, -x) - theta + np.pi) % TWO_PI - np.pi


def rotation_needed(phi0, phi_f, sign):
    """Laser travel in [0, 2pi) (at rate sign*w) taking psi-theta from phi0 to phi_f."""
    return wrap_2pi(sign * (phi_f - phi0))


def positions(x, y, th, u, tau, rho):
    """Vectorized exact pose after travelling tau along one segment."""
    tau = np.asarray(tau, dtype=float)
    if u == 0:
        return x + tau * math.cos(th), y + tau * math.sin(th), np.full_like(tau, th)
    th2 = th + u * tau / rho
    return (x + u * rho * (np.sin(th2) - math.sin(th)),
            y - u * rho * (np.cos(th2) - math.cos(th)), th2)


def disk_intervals(x, y, th, u, rho, r, tmax):
    """Sub-intervals of [0, tmax] where one segment lies inside the disk."""
    if u == 0:
        pe = x * math.cos(th) + y * math.sin(th)
        m = x * math.sin(th) - y * math.cos(th)
        disc = r * r - m * m
        if disc < 0:
            return []
        h = math.sqrt(disc)
        a, b = max(0.0, -pe - h), min(tmax, -pe + h)
        return [(a, b)] if a <= b else []
    c = center_of((x, y), th, u, rho)
    dc = math.hypot(c[0], c[1])
    if dc < 1e-15:
        return [(0.0, tmax)] if rho <= r else []
    k = (r * r - dc * dc - rho * rho) / (2 * rho * dc)
    if k >= 1.0:
        return [(0.0, tmax)]
    if k < -1.0:
        return []
    A = math.acos(k)
    gc = math.atan2(c[1], c[0])
    mu0 = math.atan2(y - c[1], x - c[0])
    nu0 = wrap_2pi(u * (mu0 - gc))
    out = []
    # inside while nu in [A, 2pi - A] modulo 2pi, nu = nu0 + tau/rho
    n = -1
    while True:
        lo = (A + TWO_PI * n - nu0) * rho
        hi = (TWO_PI - A + TWO_PI * n - nu0) * rho
        if lo > tmax:
            break
        a, b = max(lo, 0.0), min(hi, tmax)
        if a <= b:
            out.append((a, b))
        n += 1
    return out


def closest_approach(x, y, th, u, rho):
    """Travel distances along a segment where it passes nearest the origin, with that distance."""
    if u == 0:
        pe = x * math.cos(th) + y * math.sin(th)
        m = x * math.sin(th) - y * math.cos(th)
        return [-pe], abs(m)
    c = center_of((x, y), th, u, rho)
    dc = math.hypot(c[0], c[1])
    mu0 = math.atan2(y - c[1], x - c[0])
    mu_ca = math.atan2(-c[1], -c[0])
    t0 = rho * wrap_2pi(u * (mu_ca - mu0))
    return [t0, t0 + TWO_PI * rho], abs(dc - rho)
