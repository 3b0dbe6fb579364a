"""Quasilinear solves by damped Picard continuation.

Each stage of the load schedule tau in (0, 1] solves the frozen-coefficient
problem about the current iterate and blends

    u_next = (1 - damping) * u + damping * step(u),

halving the damping factor whenever the defect grows (floor 0.125) and
warm-starting the next stage from the converged iterate.  Guards abort a
stage when the discrete slope blows past `grad_max` (gradient divergence,
the signature of unattainable boundary data) or when the defect stops
improving over a trailing window (stagnation).

Converged solves at full load are audited automatically against the height
and global gradient estimates; the audits ride along in the report.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from .grid import Grid, ScalarField
from .operators import (DIMENSION, apply_Q, gradient, residual_norms,
                        slope_factor)
from .linear import assemble, solve as linear_solve, SolverError

VERDICT_CONVERGED = "converged"
VERDICT_DIVERGED = "diverged_gradient"
VERDICT_STAGNATED = "stagnated"
VERDICT_LINEAR_FAILURE = "linear_failure"


@dataclass
class SolveConfig:
    """Knobs for the continuation solve; defaults suit unit-scale domains."""

    tol_update: float = 1e-9
    tol_residual: Optional[float] = None   # default: 1e-6 * (1 + n * sup|H|)
    max_iters: int = 200
    damping: float = 1.0
    tau_schedule: Sequence[float] = (0.25, 0.5, 0.75, 1.0)
    grad_max: float = 1e4
    stagnation_window: int = 20
    check_conditioning: bool = False
    keep_stage_fields: bool = False
    audit: bool = True

    def residual_tolerance(self, H, n: int = DIMENSION, domain=None) -> float:
        if self.tol_residual is not None:
            return float(self.tol_residual)
        if hasattr(H, "h0"):
            h0 = float(H.h0(domain)) if domain is not None else abs(getattr(H, "value", 1.0))
        else:
            h0 = abs(float(H))
        return 1e-6 * (1.0 + n * h0)


@dataclass
class StageSummary:
    tau: float
    iters: int
    residual_core: float
    residual_collar: float
    update_norm: float
    sup_gradient: float
    damping_final: float
    verdict: str


@dataclass
class SolveReport:
    """Outcome of a continuation solve: final field, verdict, and diagnostics."""

    verdict: str
    field: ScalarField
    stages: list = field(default_factory=list)
    trace: list = field(default_factory=list)     # per-iteration rows
    sup_u: float = 0.0
    sup_gradient: float = 0.0
    residual_core: float = 0.0
    residual_collar: float = 0.0
    iterations: int = 0
    wall_time: float = 0.0
    audits: dict = field(default_factory=dict)
    message: str = ""
    stage_fields: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.verdict == VERDICT_CONVERGED

    def summary_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "sup_u": self.sup_u,
            "sup_gradient": self.sup_gradient,
            "residual_core": self.residual_core,
            "residual_collar": self.residual_collar,
            "iterations": self.iterations,
            "wall_time": self.wall_time,
            "stages": [asdict(s) for s in self.stages],
            "audits": self.audits,
            "message": self.message,
        }


def sup_slope(u: ScalarField) -> float:
    """Worst discrete slope: interior centered plus one-sided foot slopes.

    The one-sided slope (u_owner - phi_foot) / (theta h) along each boundary
    link sees steepening at the boundary a full mesh width before the
    centered interior slopes do, which is what the divergence guard needs.
    """
    g = gradient(u)
    m = float(np.max(np.linalg.norm(g, axis=-1))) if len(g) else 0.0
    return max(m, boundary_slope(u))


def boundary_slope(u: ScalarField) -> float:
    """Largest one-sided slope along the boundary links only.

    This approximates sup over the boundary of the normal derivative, the
    quantity the boundary-gradient estimate bounds; the interior slopes are
    deliberately excluded.
    """
    grid = u.grid
    if grid.n_feet == 0 or u.feet is None:
        return 0.0
    du = u.values[grid.foot_owner] - u.feet
    return float(np.max(np.abs(du) / (grid.foot_theta * grid.h)))


def picard_step(u: ScalarField, H, data, n: int, tau: float,
                check_conditioning: bool = False) -> ScalarField:
    """One frozen-coefficient step about u at load tau."""
    system = assemble(u, H, data, n=n, tau=tau)
    return linear_solve(system, check_conditioning=check_conditioning)


def solve_dirichlet(grid: Grid, H, data, n: int = DIMENSION,
                    config: Optional[SolveConfig] = None) -> SolveReport:
    """Continuation solve of the prescribed-curvature Dirichlet problem.

    Returns a report whose verdict is one of converged, diverged_gradient,
    stagnated, or linear_failure; the field inside is the last iterate in
    every case so failures can be inspected.
    """
    cfg = config or SolveConfig()
    t0 = time.perf_counter()
    tol_res = cfg.residual_tolerance(H, n, domain=grid.domain)
    u = ScalarField.zeros(grid, data.scaled(cfg.tau_schedule[0]) if grid.n_feet else None)
    if u.feet is None:
        u.feet = np.zeros(grid.n_feet)
    report = SolveReport(verdict=VERDICT_CONVERGED, field=u)
    total_iter = 0
    trace = []
    for tau in cfg.tau_schedule:
        scaled = data.scaled(tau)
        # re-anchor the warm start's trace at this stage's load
        u = ScalarField.from_data(grid, u.values, scaled)
        damping = cfg.damping
        prev_res = np.inf
        window: list[float] = []
        stage_verdict = VERDICT_STAGNATED
        last_update = np.inf
        res_core = res_collar = np.inf
        it = 0
        for it in range(1, cfg.max_iters + 1):
            total_iter += 1
            try:
                step = picard_step(u, H, data, n=n, tau=tau,
                                   check_conditioning=cfg.check_conditioning)
            except SolverError as exc:
                report.verdict = VERDICT_LINEAR_FAILURE
                report.message = str(exc)
                report.field = u
                _finalize(report, u, H, n, tau, t0, trace, total_iter)
                return report
            new_vals = (1.0 - damping) * u.values + damping * step.values
            u_new = ScalarField(grid, new_vals, step.feet)
            g = sup_slope(u_new)
            if not np.isfinite(g) or g > cfg.grad_max:
                report.verdict = VERDICT_DIVERGED
                report.message = (f"slope {g:.3e} exceeded grad_max={cfg.grad_max:g} "
                                  f"at tau={tau:g}, iteration {it}")
                report.field = u_new
                report.stages.append(StageSummary(tau, it, np.inf, np.inf,
                                                  np.inf, g, damping,
                                                  VERDICT_DIVERGED))
                _finalize(report, u_new, H, n, tau, t0, trace, total_iter)
                return report
            res_core, res_collar = residual_norms(u_new, H, n, tau)
            last_update = float(np.max(np.abs(u_new.values - u.values)))
            trace.append({"tau": tau, "iter": it, "residual_core": res_core,
                          "residual_collar": res_collar, "update": last_update,
                          "sup_gradient": g, "damping": damping})
            if res_core > prev_res * (1.0 + 1e-12) and damping > 0.125:
                damping = max(0.125, 0.5 * damping)
            prev_res = res_core
            u = u_new
            if last_update <= cfg.tol_update and res_core <= tol_res:
                stage_verdict = VERDICT_CONVERGED
                break
            window.append(res_core)
            if len(window) > cfg.stagnation_window:
                window.pop(0)
                if window[-1] > 0.999 * window[0] and last_update > cfg.tol_update:
                    stage_verdict = VERDICT_STAGNATED
                    break
        else:
            stage_verdict = VERDICT_STAGNATED
        g_final = sup_slope(u)
        report.stages.append(StageSummary(tau, it, res_core, res_collar,
                                          last_update, g_final, damping,
                                          stage_verdict))
        if cfg.keep_stage_fields:
            report.stage_fields.append((tau, u.copy()))
        if stage_verdict != VERDICT_CONVERGED:
            report.verdict = stage_verdict
            report.message = (f"stage tau={tau:g} ended {stage_verdict} after "
                              f"{it} iterations (defect {res_core:.3e})")
            report.field = u
            _finalize(report, u, H, n, tau, t0, trace, total_iter)
            return report
    report.field = u
    report.verdict = VERDICT_CONVERGED
    _finalize(report, u, H, n, 1.0, t0, trace, total_iter)
    if cfg.audit:
        report.audits = _run_audits(u, H, data, n, report)
    return report


def _finalize(report: SolveReport, u: ScalarField, H, n, tau, t0, trace,
              total_iter):
    rc, rb = residual_norms(u, H, n, tau)
    report.residual_core = rc
    report.residual_collar = rb
    report.sup_u = u.sup()
    report.sup_gradient = sup_slope(u)
    report.iterations = total_iter
    report.trace = trace
    report.wall_time = time.perf_counter() - t0


def _run_audits(u: ScalarField, H, data, n: int, report: SolveReport) -> dict:
    """Height and global-gradient checks against the a priori estimates.

    The gradient bound consumes the boundary-only one-sided slope, not the
    global sup, since the estimate propagates boundary control inward.
    """
    from .barriers import height_bound, global_gradient_bound   # lazy: avoids cycle
    out = {}
    try:
        hb = height_bound(u.grid.domain, H, data, n=n, measured=report.sup_u)
        out["height"] = hb.to_dict()
    except Exception as exc:    # noqa: BLE001 - audits must not kill solves
        out["height"] = {"error": str(exc)}
    try:
        gb = global_gradient_bound(u.grid.domain, H, data, n=n,
                                   sup_u=report.sup_u,
                                   boundary_gradient=boundary_slope(u),
                                   measured=report.sup_gradient)
        out["gradient"] = gb.to_dict()
    except Exception as exc:    # noqa: BLE001
        out["gradient"] = {"error": str(exc)}
    return out
