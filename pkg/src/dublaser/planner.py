"""Minimum-time planner over the sixteen admissible candidate structures.

Every candidate is solved on its own, each resulting plan is re-simulated,
capture-checked and given a costate certificate, and the fastest admitted
plan wins. Ties are broken on (pose word, laser sense).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import coupled_solver, relaxed_solver
from .model import (CANDIDATE_TABLE, TOL_ANGLE, CandidateType, ModelError, PmpCertificate,
                    State, SystemParams, TrajectoryPlan, build_plan, capture_check,
                    check_consistency, pmp_verify, simulate)

# admission thresholds for the certificate; through-target limits carry an
# offset of 1e-8 relative to the range, so collinearity is held to 1e-6
ADMIT_H = 1e-6
ADMIT_COLLINEAR = 1e-6


class PlanningError(ModelError):
    """No candidate produced an admissible plan."""

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class UnsupportedStart(ModelError):
    pass


@dataclass(frozen=True)
class PlanOptions:
    run_oracle: bool = False
    oracle_config: object = None
    seeding: str = "scan"
    through_target: bool = True
    allow_inside_start: bool = True
    simulate_dt: float = 0.05


@dataclass(frozen=True)
class Outcome:
    status: str  # solved | infeasible | no_root
    t_final: float = math.inf
    reason: str = ""
    plan: TrajectoryPlan | None = None
    certificate: PmpCertificate | None = None

    def __post_init__(self):
        if self.status not in ("solved", "infeasible", "no_root"):
            raise ValueError(self.status)


@dataclass
class SolveReport:
    best: TrajectoryPlan
    per_candidate: list
    certificates: PmpCertificate | None
    oracle_gap: float | None = None
    oracle: object = None
    rejected: list = field(default_factory=list)

    @property
    def t_final(self):
        return self.best.t_final

    def outcome(self, label):
        for cand, out in self.per_candidate:
            if cand.label == label:
                return out
        raise KeyError(label)


def enumerate_candidates():
    return [CandidateType(w, s) for w, s in CANDIDATE_TABLE]


def _raw_plans(params, start, cand, opts, inside):
    """Plans proposed by the solvers for one candidate, plus failure reasons."""
    w, sense = cand.pose_word, cand.laser_sense
    plans, why = [], []

    def take(res):
        if isinstance(res, relaxed_solver.Infeasible):
            why.append(res.reason)
        elif isinstance(res, relaxed_solver.RelaxedSolution):
            plans.append(res.plan)
        elif isinstance(res, TrajectoryPlan):
            plans.append(res)

    if w in ("RS", "LS"):
        if inside:
            why.append("turn-straight to the range circle needs an outside start")
        else:
            take(relaxed_solver.solve_cs(params, start, w[0], sense))
        if opts.through_target:
            take(relaxed_solver.through_target(params, start, w, sense))
    elif w == "S":
        take(relaxed_solver.solve_s(params, start, sense))
    elif w in ("R", "L"):
        take(relaxed_solver.solve_c(params, start, w, sense))
    else:
        roots = coupled_solver.solve_family(params, start, cand, seeding=opts.seeding)
        plans.extend(roots)
        if not roots:
            why.append("no root")
        if w in ("RL", "LR") and opts.through_target:
            take(relaxed_solver.through_target(params, start, w, sense))
    return plans, why


def admit(params, start, plan, dt=0.05):
    """Re-simulate, capture-check and certify; returns (certificate, reason)."""
    try:
        check_consistency(params, start, plan)
        traj = simulate(params, start, plan, dt)
    except ModelError as exc:
        return None, f"simulation: {exc}"
    end = traj[-1][1]
    cap = capture_check(params, end)
    if not cap:
        return None, f"no capture (slack {cap.range_slack:.3g}, aim {cap.aim_error:.3g})"
    cert = pmp_verify(params, start, plan)
    if cert.hamiltonian_residual > ADMIT_H:
        return cert, f"Hamiltonian residual {cert.hamiltonian_residual:.3g}"
    if cert.collinearity_residual > ADMIT_COLLINEAR:
        return cert, f"switch points off the target line ({cert.collinearity_residual:.3g})"
    if not cert.sign_consistent:
        return cert, "maximum-principle signs violated"
    return cert, ""


def _zero_plan(params, start):
    cand = CandidateType("S", "+")
    plan = build_plan(params, start, cand, "", [], 0.0, {"regime": "already-captured"})
    cert = PmpCertificate(0.0, 0.0, 0.0, 0.0, 1, 0.0, 0.0, "empty")
    rows = [(c, Outcome("solved", 0.0, plan=plan, certificate=cert) if c == cand
             else Outcome("infeasible", reason="start already captures"))
            for c in enumerate_candidates()]
    return SolveReport(plan, rows, cert)


def plan(params: SystemParams, start: State, options: PlanOptions | None = None) -> SolveReport:
    """Fastest admitted plan over all candidates, with a per-candidate table."""
    opts = options or PlanOptions()
    r2 = start.x ** 2 + start.y ** 2
    inside = r2 <= params.r ** 2
    if inside:
        if capture_check(params, start, TOL_ANGLE):
            return _zero_plan(params, start)
        if not opts.allow_inside_start:
            raise UnsupportedStart("unsupported initial condition: start inside the "
                                   "capture disk with the laser off target")
    rows, rejected = [], []
    best = None
    for cand in enumerate_candidates():
        plans, why = _raw_plans(params, start, cand, opts, inside)
        chosen = None
        for p in sorted(plans, key=lambda p: p.t_final):
            cert, reason = admit(params, start, p, opts.simulate_dt)
            if reason:
                rejected.append((cand.label, p.info.get("regime", ""), p.t_final, reason))
                continue
            chosen = (p, cert)
            break
        if chosen is None:
            if plans:
                status, reason = "no_root", "candidate plans failed admission"
            elif why and all(s == "no root" for s in why):
                status, reason = "no_root", "no root"
            else:
                status, reason = "infeasible", "; ".join(why) or "no plan"
            rows.append((cand, Outcome(status, reason=reason)))
            continue
        p, cert = chosen
        rows.append((cand, Outcome("solved", p.t_final, plan=p, certificate=cert)))
        key = (p.t_final, cand.sort_key)
        if best is None or key < best[0]:
            best = (key, p, cert)
    if best is None:
        raise PlanningError("no plan found", SolveReport(None, rows, None, rejected=rejected))
    report = SolveReport(best[1], rows, best[2], rejected=rejected)
    if opts.run_oracle:
        from .oracle import oracle_min_time
        res = oracle_min_time(params, start, opts.oracle_config)
        report.oracle = res
        report.oracle_gap = report.best.t_final - res.time
    return report
