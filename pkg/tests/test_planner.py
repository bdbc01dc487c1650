import math

import pytest
from hypothesis import given, settings, strategies as st

from dublaser import planner as planner_mod
from dublaser.model import CandidateType, State, SystemParams, capture_check
from dublaser.oracle import oracle_min_time
from dublaser.planner import (PlanOptions, PlanningError, UnsupportedStart, admit,
                              enumerate_candidates, plan)

# brute-force minimum times (oracle, default resolution, refined)
ORACLE_TIMES = {
    "fig7": 4.146312051927117,
    "fig9": 5.141592653589794,
    "fig8": 4.285269004447698,
    "fig8_alt": 4.438681007416848,
}

EXPECTED = {"RS|+", "RS|-", "LS|+", "LS|-", "S|+", "S|-", "R|+", "L|-", "RSR|+", "RSL|-",
            "LSL|-", "LSR|+", "RL|-", "LR|+", "SR|+", "SL|-"}


def test_enumerate_candidates():
    cands = enumerate_candidates()
    assert len(cands) == 16
    assert {c.label for c in cands} == EXPECTED
    for c in cands:
        w = c.pose_word
        assert not (len(w) == 3 and "S" not in w)
        if w[-1] in "LR":
            assert c.laser_sense.value == ("+" if w[-1] == "R" else "-")


@pytest.mark.parametrize("name", sorted(ORACLE_TIMES))
def test_figure_scenarios_match_oracle(figures, name):
    params, start = figures[name]
    rep = plan(params, start)
    assert rep.best.t_final == pytest.approx(ORACLE_TIMES[name], abs=1e-6)
    assert capture_check(params, rep.best.final_state)


def test_report_is_complete(figures):
    params, start = figures["fig7"]
    rep = plan(params, start)
    labels = [c.label for c, _ in rep.per_candidate]
    assert len(labels) == 16 and set(labels) == EXPECTED
    solved = [o.t_final for _, o in rep.per_candidate if o.status == "solved"]
    assert rep.best.t_final == min(solved)
    for _, o in rep.per_candidate:
        assert o.status in ("solved", "infeasible", "no_root")
        if o.status != "solved":
            assert o.reason and o.plan is None
    cert, reason = admit(params, start, rep.best)
    assert reason == ""
    assert rep.certificates.hamiltonian_residual <= 1e-6


def test_tie_break_is_lexicographic(figures):
    # both laser senses reach the same through-target time here
    params, start = figures["fig9"]
    rep = plan(params, start)
    assert rep.outcome("LS|+").t_final == pytest.approx(rep.outcome("LS|-").t_final, abs=1e-12)
    assert rep.best.candidate.label == "LS|+"


def test_start_already_capturing():
    rep = plan(SystemParams(1.0, 1.0, 0.3), State(0.5, 0, 0, math.pi))
    assert rep.best.t_final == 0.0 and rep.best.segments == ()
    assert rep.best.laser.t_switch_on == 0.0
    assert len(rep.per_candidate) == 16


def test_inside_start_misaimed():
    params = SystemParams(1.0, 1.0, 0.3)
    start = State(0.5, 0, 0, 0.0)
    with pytest.raises(UnsupportedStart):
        plan(params, start, PlanOptions(allow_inside_start=False))
    rep = plan(params, start)
    assert capture_check(params, rep.best.final_state)
    assert rep.best.t_final <= oracle_min_time(params, start).time + 0.04


def test_no_plan_found(monkeypatch, figures):
    params, start = figures["fig7"]
    monkeypatch.setattr(planner_mod, "_raw_plans", lambda *a: ([], ["no root"]))
    with pytest.raises(PlanningError) as exc:
        plan(params, start)
    assert len(exc.value.report.per_candidate) == 16


def test_oracle_gap(figures):
    params, start = figures["fig7"]
    rep = plan(params, start, PlanOptions(run_oracle=True))
    assert abs(rep.oracle_gap) <= 0.04


def test_plan_outside_candidate_table():
    # with a laser faster than the turn rate, a left turn with the laser
    # spinning clockwise captures before every listed candidate; the search
    # finds it, the planner cannot represent it
    params = SystemParams(1.0, 1.0, 2.0)
    start = State(-0.4718035694359237, 1.3107291216003265, 3.46044515218263, 0.46596792017063965)
    res = oracle_min_time(params, start)
    assert (res.word, res.sense) == ("L", "+")
    with pytest.raises(ValueError):
        CandidateType("L", "+")
    assert plan(params, start).best.t_final > res.time + 0.1


scenario = st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 6.28), st.floats(0, 6.28))


@settings(max_examples=8, deadline=None)
@given(scenario, st.floats(0, 6.28))
def test_rotation_equivariance(sc, delta):
    x, y, th, ps = sc
    if x * x + y * y <= 1.05:
        return
    params = SystemParams(1.0, 1.0, 0.3)
    a = plan(params, State(x, y, th, ps)).best
    b = plan(params, State(x, y, th, ps).rotated(delta)).best
    assert abs(a.t_final - b.t_final) <= 1e-9
    fa, fb = a.final_state, b.final_state
    c, s = math.cos(delta), math.sin(delta)
    assert math.hypot(c * fa.x - s * fa.y - fb.x, s * fa.x + c * fa.y - fb.y) <= 1e-6


@settings(max_examples=8, deadline=None)
@given(scenario)
def test_mirror_equivariance(sc):
    x, y, th, ps = sc
    if x * x + y * y <= 1.05:
        return
    params = SystemParams(1.0, 1.0, 0.3)
    a = plan(params, State(x, y, th, ps))
    b = plan(params, State(x, y, th, ps).mirrored())
    assert abs(a.best.t_final - b.best.t_final) <= 1e-9
    assert b.best.word == a.best.word.translate(str.maketrans("LR", "RL"))


@settings(max_examples=6, deadline=None)
@given(scenario)
def test_faster_laser_never_slower(sc):
    x, y, th, ps = sc
    if x * x + y * y <= 1.05:
        return
    times = [plan(SystemParams(1.0, 1.0, w), State(x, y, th, ps)).best.t_final
             for w in (0.01, 0.3, 2.0)]
    assert times[1] <= times[0] + 1e-9 and times[2] <= times[1] + 1e-9
