"""Command-line front end.

Subcommands:
  run          execute a scenario config: solve, audit, emit artifacts
  check-serrin boundary solvability audit for a domain and curvature
  estimates    print the a priori constant ledger without solving
  sweep        refinement or curvature sweeps with a ratio/flag table

Exit codes for run: 0 converged with all requested audits passing, 2 solver
failure, 3 audit failure, 4 configuration error.  check-serrin exits 0 when
the solvability condition holds and 1 when violated.

MCGRAPH_THREADS caps BLAS thread pools; it is exported to the usual knobs
(OPENBLAS_NUM_THREADS and friends) before heavy work starts, which is fully
effective only when the libraries have not spun up their pools yet.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_AUDIT = 3
EXIT_CONFIG = 4


def _apply_thread_env() -> None:
    v = os.environ.get("MCGRAPH_THREADS")
    if not v:
        return
    for knob in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(knob, v)


def _say(quiet: bool, *parts) -> None:
    if not quiet:
        print(*parts)


def _load(config_path: str, grid_h, out_override):
    from .config import load_scenario
    scenario = load_scenario(config_path)
    if grid_h is not None:
        scenario.spacings = (float(grid_h),)
    if out_override is not None:
        scenario.outdir = out_override
    return scenario


def _serrin_audit_dict(scenario):
    from .geometry import check_serrin
    audit = check_serrin(scenario.domain, scenario.curvature, scenario.n)
    return {"name": "serrin", "passed": bool(audit.satisfied),
            "margin": audit.margin,
            "worst_point": list(audit.worst_point),
            "note": "boundary solvability (Serrin) condition"}


def _estimate_ledger(scenario, u_sup=None, boundary_gradient=None):
    """BarrierParams plus audit dicts for the scenario, no solving required."""
    from . import barriers
    from .barriers import BarrierParams

    params = BarrierParams()
    audits = {}
    hb = barriers.height_bound(scenario.domain, scenario.curvature,
                               scenario.data, n=scenario.n, measured=u_sup)
    params = params.merged(BarrierParams(mu=hb.params["mu"],
                                         delta=hb.params["delta"]))
    audits["height"] = hb
    gb = barriers.global_gradient_bound(
        scenario.domain, scenario.curvature, scenario.data, n=scenario.n,
        sup_u=u_sup if u_sup is not None else hb.bound,
        boundary_gradient=boundary_gradient or 0.0)
    params = params.merged(BarrierParams(A=gb.params["A"]))
    audits["gradient_formula"] = gb
    try:
        pkg = barriers.boundary_gradient_package(
            scenario.domain, scenario.curvature, scenario.data,
            n=scenario.n, u_sup=u_sup)
        params = params.merged(pkg.params)
        audits["boundary_gradient"] = pkg.audit
    except barriers.NotApplicable as exc:
        audits["boundary_gradient"] = str(exc)
    return params, audits


def cmd_run(args) -> int:
    from .config import ConfigError

    try:
        scenario = _load(args.config, args.grid_h, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from . import barriers
    from .grid import Grid
    from .solver import solve_dirichlet, boundary_slope
    from .reporting import (build_report, write_report, write_traces_csv,
                            write_fields_csv, write_heatmap_svg)

    outdir = Path(scenario.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    extras = {}

    if scenario.experiment is not None:
        if len(scenario.spacings) < 2:
            print("config error: [experiment] needs >= 2 grid spacings",
                  file=sys.stderr)
            return EXIT_CONFIG
        return _run_experiment(scenario, outdir, args.quiet)

    h = scenario.spacings[0]
    if len(scenario.spacings) > 1:
        _say(args.quiet, f"run uses the first spacing h={h:g}; "
                         f"use `sweep` for the full series")
    grid = Grid(scenario.domain, h)
    _say(args.quiet, f"grid h={h:g}: {grid.n_interior} interior nodes")
    report = solve_dirichlet(grid, scenario.curvature, scenario.data,
                             n=scenario.n, config=scenario.solver)
    _say(args.quiet, f"verdict: {report.verdict} after {report.iterations} "
                     f"iterations, residual {report.residual_core:.3e}")

    params, ledger_audits = _estimate_ledger(
        scenario, u_sup=report.sup_u,
        boundary_gradient=boundary_slope(report.field))
    audit_results = dict(report.audits)
    if "serrin" in scenario.audits:
        audit_results["serrin"] = _serrin_audit_dict(scenario)
    if "barrier_pair" in scenario.audits:
        pkg_audit = ledger_audits.get("boundary_gradient")
        if hasattr(pkg_audit, "params"):
            pkg = barriers.boundary_gradient_package(
                scenario.domain, scenario.curvature, scenario.data,
                n=scenario.n, u_sup=report.sup_u)
            checks = barriers.barrier_pair_checks(
                pkg, report.field, scenario.curvature, scenario.data,
                n=scenario.n)
            for key, audit in checks.items():
                audit_results[key] = audit.to_dict()
        else:
            audit_results["barrier_pair"] = {"error": str(pkg_audit)}

    if scenario.reference:
        from .reference import get as get_reference
        extras["reference"] = scenario.reference
        extras["reference_error_sup"] = get_reference(scenario.reference).error(
            report.field)

    extras["audits"] = audit_results
    out_report = build_report(scenario, report, params, extras)
    write_report(outdir / "report.json", out_report)
    write_traces_csv(outdir / "traces.csv", report)
    write_fields_csv(outdir / "fields.csv", report.field)
    write_heatmap_svg(outdir / "heatmap.svg", report.field)
    _say(args.quiet, f"artifacts in {outdir}/")

    if report.verdict != "converged":
        return EXIT_SOLVER
    if _any_audit_failed(audit_results):
        return EXIT_AUDIT
    return EXIT_OK


def _any_audit_failed(audits: dict) -> bool:
    for value in audits.values():
        if isinstance(value, dict):
            if value.get("passed") is False:
                return True
    return False


def _run_experiment(scenario, outdir: Path, quiet: bool) -> int:
    """Non-existence pipeline: certificate, refinement solves, witness."""
    from . import barriers
    from .grid import Grid
    from .solver import solve_dirichlet
    from .reporting import (build_report, write_report, write_traces_csv,
                            write_fields_csv, write_heatmap_svg)

    exp = scenario.experiment
    extras = {"experiment": {"y0": list(exp.y0), "eps": exp.eps,
                             "width": exp.width}}
    try:
        cert = barriers.nonexistence_bound(scenario.domain, scenario.curvature,
                                           exp.y0, exp.eps, n=scenario.n)
        extras["certificate"] = {
            "applicable": True, "nu_ne": cert.nu_ne, "g_value": cert.g_value,
            "a": cert.a, "log10_a": cert.log10_a, "R1": cert.R1, "R2": cert.R2,
            "kappa_S": cert.kappa_S, "warnings": list(cert.warnings)}
        params = cert.params
        _say(quiet, f"certificate: a = 10^{cert.log10_a:.1f}, "
                    f"g(a) = {cert.g_value:.4f} < eps = {exp.eps:g}")
    except barriers.NotApplicable as exc:
        cert = None
        extras["certificate"] = {"applicable": False, "reason": str(exc)}
        params = barriers.BarrierParams(eps=exp.eps)
        _say(quiet, f"certificate not applicable: {exc}")

    data = barriers.adversarial_boundary_data(scenario.domain, exp.y0,
                                              exp.width, exp.eps)
    reports = []
    for h in scenario.spacings:
        grid = Grid(scenario.domain, h)
        rep = solve_dirichlet(grid, scenario.curvature, data, n=scenario.n,
                              config=scenario.solver)
        _say(quiet, f"h={h:g}: {rep.verdict} in {rep.iterations} iterations")
        reports.append(rep)

    witness = barriers.nonexistence_witness(reports, exp.y0, data, exp.eps,
                                            radius_a=exp.width)
    _say(quiet, f"witness verdict: {witness.verdict} "
                f"(ratios {['%.2f' % r for r in witness.gradient_ratios]}, "
                f"attainment gap {witness.attainment_gap:.3e})")
    extras["nonexistence_witness"] = {
        "verdict": witness.verdict, "reasons": list(witness.reasons),
        "gradient_ratios": list(witness.gradient_ratios),
        "attainment_gap": witness.attainment_gap,
        "boundary_excess": witness.boundary_excess,
        "measure_radius": witness.measure_radius}
    extras["refinements"] = [{
        "h": rep.field.grid.h, "verdict": rep.verdict,
        "iterations": rep.iterations, "sup_gradient": rep.sup_gradient,
    } for rep in reports]

    fine = reports[-1]
    out_report = build_report(scenario, fine, params, extras)
    write_report(outdir / "report.json", out_report)
    write_traces_csv(outdir / "traces.csv", fine)
    write_fields_csv(outdir / "fields.csv", fine.field)
    write_heatmap_svg(outdir / "heatmap.svg", fine.field)
    _say(quiet, f"artifacts in {outdir}/")

    if any(r.verdict != "converged" for r in reports):
        return EXIT_SOLVER
    if _any_audit_failed(fine.audits):
        return EXIT_AUDIT
    return EXIT_OK


def cmd_check_serrin(args) -> int:
    from .config import ConfigError
    from .geometry import check_serrin, PrescribedCurvature, MalformedDomainError

    try:
        if args.config:
            scenario = _load(args.config, None, None)
            domain, H, n = scenario.domain, scenario.curvature, scenario.n
        else:
            domain = _domain_from_args(args)
            H = PrescribedCurvature.constant(args.curvature)
            n = args.n
    except (ConfigError, MalformedDomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    audit = check_serrin(domain, H, n)
    state = "satisfied" if audit.satisfied else "violated"
    print(f"solvability condition {state}: margin = {audit.margin:.9g} "
          f"at boundary point ({audit.worst_point[0]:.6g}, "
          f"{audit.worst_point[1]:.6g})")
    return 0 if audit.satisfied else 1


def _domain_from_args(args):
    from .geometry import disk, ellipse, rect, annulus, dumbbell
    shape = args.shape
    if shape == "disk":
        return disk(radius=args.radius)
    if shape == "ellipse":
        return ellipse(args.a, args.b)
    if shape == "rect":
        return rect(args.hx, args.hy)
    if shape == "annulus":
        return annulus(args.r_in, args.r_out)
    if shape == "dumbbell":
        return dumbbell(waist=args.waist, spread=args.spread)
    raise SystemExit(f"unknown shape {shape!r}")


def cmd_estimates(args) -> int:
    from .config import ConfigError

    try:
        scenario = _load(args.config, None, None)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    params, audits = _estimate_ledger(scenario)
    serrin = _serrin_audit_dict(scenario)
    print("a priori constant ledger")
    print(f"  solvability margin      = {serrin['margin']:.9g} "
          f"({'ok' if serrin['passed'] else 'VIOLATED'})")
    height = audits["height"]
    print(f"  mu                      = {height.params['mu']!r}")
    print(f"  delta (diameter)        = {height.params['delta']!r}")
    print(f"  height bound            = {height.bound!r}")
    grad = audits["gradient_formula"]
    print(f"  gradient exponent A     = {grad.params['A']!r}")
    print(f"  global gradient bound   = {grad.bound!r}")
    bg = audits["boundary_gradient"]
    if hasattr(bg, "params"):
        for key in ("C", "nu", "k", "a", "M", "tau_strip"):
            print(f"  {key:<23s} = {bg.params[key]!r}")
        print(f"  boundary gradient bound = {bg.bound!r}")
    else:
        print(f"  boundary gradient barrier refused: {bg}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .config import ConfigError

    try:
        scenario = _load(args.config, None, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if scenario.sweep_curvatures:
        return _sweep_curvature(scenario, args)
    if len(scenario.spacings) >= 2:
        return _sweep_refinement(scenario, args)
    print("config error: sweep needs [sweep] curvatures or multiple "
          "grid spacings", file=sys.stderr)
    return EXIT_CONFIG


def _sweep_refinement(scenario, args) -> int:
    from .grid import Grid
    from .solver import solve_dirichlet

    reference = None
    if scenario.reference:
        from .reference import get as get_reference
        reference = get_reference(scenario.reference)

    rows = []
    for h in scenario.spacings:
        grid = Grid(scenario.domain, h)
        rep = solve_dirichlet(grid, scenario.curvature, scenario.data,
                              n=scenario.n, config=scenario.solver)
        err = reference.error(rep.field) if reference else rep.residual_core
        rows.append({"h": h, "verdict": rep.verdict, "iterations": rep.iterations,
                     "error": err})
    header = "h,verdict,iterations," + ("sup_error" if reference else
                                        "residual_core") + ",ratio"
    lines = [header]
    for k, row in enumerate(rows):
        ratio = "" if k == 0 or rows[k]["error"] == 0 else \
            repr(rows[k - 1]["error"] / rows[k]["error"])
        lines.append(f"{row['h']!r},{row['verdict']},{row['iterations']},"
                     f"{row['error']!r},{ratio}")
    table = "\n".join(lines)
    print(table)
    outdir = Path(scenario.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "sweep.csv").write_text(table + "\n")
    return EXIT_OK


def _sweep_curvature(scenario, args) -> int:
    from . import barriers
    from .geometry import PrescribedCurvature, check_serrin
    from .grid import Grid
    from .solver import solve_dirichlet

    exp = scenario.experiment
    lines = ["H,serrin_margin,certificate,witness"]
    grids = [Grid(scenario.domain, h) for h in scenario.spacings]
    for h_val in scenario.sweep_curvatures:
        H = PrescribedCurvature.constant(h_val)
        margin = check_serrin(scenario.domain, H, scenario.n).margin
        cert_flag, wit_flag = "not-applicable", ""
        if exp is not None:
            try:
                barriers.nonexistence_bound(scenario.domain, H, exp.y0,
                                            exp.eps, n=scenario.n)
                cert_flag = "applicable"
            except barriers.NotApplicable:
                cert_flag = "not-applicable"
            if len(grids) >= 2:
                data = barriers.adversarial_boundary_data(
                    scenario.domain, exp.y0, exp.width, exp.eps)
                reports = [solve_dirichlet(g, H, data, n=scenario.n,
                                           config=scenario.solver)
                           for g in grids]
                wit_flag = barriers.nonexistence_witness(
                    reports, exp.y0, data, exp.eps, radius_a=exp.width).verdict
        lines.append(f"{h_val!r},{margin!r},{cert_flag},{wit_flag}")
    table = "\n".join(lines)
    print(table)
    outdir = Path(scenario.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "sweep.csv").write_text(table + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcgraph",
        description="Dirichlet solver and verification laboratory for "
                    "prescribed mean curvature graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="override output directory")
    p_run.add_argument("--grid-h", type=float, default=None,
                       help="override grid spacing")
    p_run.add_argument("--quiet", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_ser = sub.add_parser("check-serrin", help="boundary solvability audit")
    p_ser.add_argument("--config", default=None)
    p_ser.add_argument("--shape", default="disk",
                       choices=["disk", "ellipse", "rect", "annulus", "dumbbell"])
    p_ser.add_argument("--radius", type=float, default=1.0)
    p_ser.add_argument("--a", type=float, default=1.0)
    p_ser.add_argument("--b", type=float, default=1.0)
    p_ser.add_argument("--hx", type=float, default=1.0)
    p_ser.add_argument("--hy", type=float, default=1.0)
    p_ser.add_argument("--r-in", dest="r_in", type=float, default=0.5)
    p_ser.add_argument("--r-out", dest="r_out", type=float, default=1.0)
    p_ser.add_argument("--waist", type=float, default=1.0)
    p_ser.add_argument("--spread", type=float, default=1.1)
    p_ser.add_argument("--curvature", type=float, default=0.0)
    p_ser.add_argument("--n", type=int, default=2)
    p_ser.add_argument("--quiet", action="store_true")
    p_ser.set_defaults(func=cmd_check_serrin)

    p_est = sub.add_parser("estimates", help="print the constant ledger")
    p_est.add_argument("--config", required=True)
    p_est.add_argument("--quiet", action="store_true")
    p_est.set_defaults(func=cmd_estimates)

    p_sweep = sub.add_parser("sweep", help="refinement or curvature sweep")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--quiet", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    _apply_thread_env()
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
