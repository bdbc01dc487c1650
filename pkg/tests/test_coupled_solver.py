import dataclasses
import math

import numpy as np
import pytest

from dublaser.coupled_solver import (CoupledUnknowns, damped_newton, fd_jacobian,
                                     residual_function, residuals_cc, residuals_csc,
                                     residuals_sc, solve_family)
from dublaser.model import (MINUS, PLUS, CandidateType, ModelError, State, SystemParams,
                            capture_check, pmp_verify)
from dublaser.oracle import oracle_min_time

from conftest import random_scenarios

# brute-force search restricted to the word RSR on the slow-laser figure scenario
FIG9_RSR_TIME = 7.8637380708533895


def test_newton_on_simple_system():
    f = lambda v: np.array([v[0] ** 2 + v[1] ** 2 - 4.0, v[0] - v[1]])
    x, nf = damped_newton(f, np.array([1.0, 0.5]))
    assert nf <= 1e-12
    assert x == pytest.approx([math.sqrt(2), math.sqrt(2)], abs=1e-12)


def test_fd_jacobian_matches_analytic():
    f = lambda v: np.array([math.sin(v[0]) * v[1], v[0] ** 3])
    x = np.array([0.3, 2.0])
    J = fd_jacobian(f, x)
    assert J == pytest.approx(np.array([[math.cos(0.3) * 2.0, math.sin(0.3)],
                                        [3 * 0.09, 0.0]]), abs=1e-8)


def test_word_checks():
    p = SystemParams(1.0, 1.0, 0.3)
    s = State(3, 0, 0, 0)
    z = CoupledUnknowns(0.0, 0.1, 0.0, 0.5)
    with pytest.raises(ModelError):
        residuals_cc(p, s, "RSR", PLUS, z)
    with pytest.raises(ModelError):
        residuals_csc(p, s, "RSR", MINUS, z)
    with pytest.raises(ModelError):
        residuals_sc(p, s, "RS", PLUS, z)
    with pytest.raises(ModelError):
        solve_family(p, s, "RS|+")


def test_figure_three_piece_root(figures):
    params, start = figures["fig9"]
    roots = solve_family(params, start, "RSR|+", return_roots=True)
    assert roots
    best = roots[0]
    assert best.plan.t_final == pytest.approx(FIG9_RSR_TIME, abs=1e-6)
    res = residuals_csc(params, start, "RSR", PLUS, best.unknowns)
    assert max(abs(v) for v in res.values) <= 1e-9
    fs = best.plan.final_state
    assert abs(fs.x ** 2 + fs.y ** 2 - 1.0) <= 1e-9
    assert pmp_verify(params, start, best.plan).collinearity_residual <= 1e-9
    # sorted by time, no duplicates
    times = [r.plan.t_final for r in roots]
    assert times == sorted(times)
    vs = [r.unknowns.vector() for r in roots]
    for i in range(len(vs)):
        for j in range(i):
            assert np.linalg.norm(vs[i] - vs[j]) > 1e-6


def test_perturbed_root_has_large_residual(figures):
    params, start = figures["fig9"]
    z = solve_family(params, start, "RSR|+", return_roots=True)[0].unknowns
    res = residuals_csc(params, start, "RSR", PLUS, dataclasses.replace(z, eta=z.eta + 0.05))
    assert max(abs(v) for v in res.values) > 1e-4


@pytest.mark.parametrize("label", ["RSR|+", "LSR|+", "LR|+"])
def test_residuals_mirror(figures, label):
    params, start = figures["fig7"]
    cand = CandidateType.parse(label)
    mc = cand.mirrored()
    f = residual_function(cand.pose_word)
    fm = residual_function(mc.pose_word)
    rng = np.random.default_rng(3)
    for _ in range(5):
        z = CoupledUnknowns(*rng.uniform(-2, 2, 4))
        zm = CoupledUnknowns(-z.eta, z.lambda1, -z.theta_f, -z.c0)
        a = np.array(f(params, start, cand.pose_word, cand.laser_sense, z).values)
        b = np.array(fm(params, start.mirrored(), mc.pose_word, mc.laser_sense, zm).values)
        assert np.abs(np.abs(a) - np.abs(b)).max() <= 1e-9


def test_two_arc_roots_near_fold(figures):
    # the optimal switch sits close to where two circle-intersection branches
    # merge; the seeding must still find it
    params, start = figures["fig8"]
    roots = solve_family(params, start, "LR|+")
    assert roots and roots[0].t_final == pytest.approx(4.285269004447698, abs=1e-6)


@pytest.mark.parametrize("params,start", random_scenarios(8, 5))
def test_roots_are_sound(params, start):
    labels = ["RSR|+", "RSL|-", "LSL|-", "LSR|+", "RL|-", "LR|+", "SR|+", "SL|-"]
    for label in labels:
        cand = CandidateType.parse(label)
        f = residual_function(cand.pose_word)
        roots = solve_family(params, start, cand, return_roots=True)
        for r in roots:
            res = f(params, start, cand.pose_word, cand.laser_sense, r.unknowns)
            assert res.norm <= 1e-8
            assert np.isfinite(r.jacobian_cond)
            assert capture_check(params, r.plan.final_state)
            assert r.plan.word == cand.pose_word
            assert r.plan.laser.t_switch_on == 0.0
            if not r.unknowns.interior:
                fs = r.plan.final_state
                assert abs(fs.x ** 2 + fs.y ** 2 - params.r ** 2) <= 1e-9
        if roots and len(cand.pose_word) > 1:
            # no root can beat the brute-force search over the same word
            ref = oracle_min_time(params, start, words=[cand.pose_word]).time
            assert roots[0].plan.t_final >= ref - 1e-3


def test_grid_seeding_agrees_on_figure(figures):
    params, start = figures["fig9"]
    a = solve_family(params, start, "RSR|+")
    b = solve_family(params, start, "RSR|+", seeding="grid")
    assert b and b[0].t_final >= a[0].t_final - 1e-9
