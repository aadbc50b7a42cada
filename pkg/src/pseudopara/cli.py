"""Command line entry point.

Exit codes: 0 all checks passed, 1 a check failed, 2 bad configuration or
usage (including refusing to overwrite an existing output).
"""
import argparse
import os
import sys

import numpy as np
import yaml

from . import harness
from .errors import ConfigError, PreconditionError, SolverOverflowError
from .kernel import kernel_lower_bound_check, kernel_table
from .operators import (GridSpec, WeightParams, sandwich_constants, verify_operator_bounds,
                        verify_weight_sandwich)
from .potentials import lambda_star_at
from .solver import maximal_solution, write_state

OK, FAIL, CONFIG = 0, 1, 2


def _refuse(path, force):
    if path and os.path.exists(path) and not force:
        raise ConfigError(f"{path} exists; use --force to overwrite")


def _single(path):
    docs = harness.load_specs(path)
    if len(docs) != 1:
        raise ConfigError(f"{path} must hold exactly one experiment, found {len(docs)}")
    return docs[0], harness.spec_from_dict(docs[0])


def cmd_solve(args):
    _, spec = _single(args.config)
    _refuse(args.out, args.force)
    res = harness.run_experiment(spec, args.out, force=args.force)
    tr = res.trajectory
    if args.dump:
        _refuse(args.dump, args.force)
        write_state(args.dump, tr.field(len(tr.times) - 1), float(tr.times[-1]))
    ok = tr.ladder_report is None or tr.ladder_report["monotone"]
    print(f"{spec.name}: {len(tr.times)} states, final sup {tr.sup_norm[-1]:.6g}, "
          f"max mild residual {max(r[3] for r in res.rows):.3g}, ladder monotone {ok}")
    return OK if ok else FAIL


def cmd_maximal(args):
    raw, spec = _single(args.config)
    _refuse(args.out, args.force)
    tr = maximal_solution(spec.potential, spec.solver, spec.t_end, spec.grid,
                          raw.get("checks", {}).get("extrapolate", "richardson"))
    rows = harness.diagnostics_rows(tr, spec.potential, spec.solver)
    if args.out:
        harness.write_csv(args.out, rows, force=args.force)
    ok = bool(tr.ladder_report.get("monotone", True))
    V = spec.potential
    if V.time_only:
        tol = float(spec.extra.get("tol", 0.05))
        ls = lambda_star_at(V, tr.times[1:])
        ref = np.concatenate([[0.0], ((1 - spec.solver.p) * ls) ** (1 / (1 - spec.solver.p))])
        err = float(np.max(np.abs(tr.sup_norm - ref)))
        print(f"max |u - closed form| = {err:.3g} (tol {tol:g})")
        ok = ok and err <= tol
    print(f"{spec.name}: ladder monotone {tr.ladder_report.get('monotone')}, "
          f"final sup {tr.sup_norm[-1]:.6g}")
    return OK if ok else FAIL


def cmd_compare(args):
    docs = harness.load_specs(args.config)
    if len(docs) != 2:
        raise ConfigError("compare needs exactly two experiments (higher data first)")
    hi, lo = (harness.spec_from_dict(d) for d in docs)
    rep = harness.compare_runs(hi, lo)
    if args.out:
        _refuse(args.out, args.force)
        rows = [(float(t), float(v), float(tl)) for t, v, tl in
                zip(rep.hi.times, rep.violations, rep.tolerance)]
        harness.write_csv(args.out, rows, ("t", "violation", "tolerance"), force=args.force)
    print(f"ordering {'holds' if rep.passed else 'FAILS'}: max violation {rep.max_violation:.3g}")
    return OK if rep.passed else FAIL


def cmd_growth_fit(args):
    raw, spec = _single(args.config)
    if args.csv:
        a = spec.data_exponent()
        col = args.column or ("weighted_norm" if a > 0 else "sup_norm")
        fit = harness.fit_growth_exponent(args.csv, spec.fit_window, a=a, sigma=spec.potential.sigma,
                                          time_power=spec.potential.time_power, p=spec.solver.p,
                                          column=col, zero_potential=spec.potential.is_zero)
    else:
        _refuse(args.out, args.force)
        res = harness.run_experiment(spec, args.out, force=args.force)
        fit = harness.fit_experiment(res, args.column)
    rel = float(spec.extra.get("fit_tol", 0.1))
    ok = fit.within_critical() if fit.regime == "critical" else fit.within(rel)
    print(f"slope {fit.slope:.4f} predicted {fit.predicted_slope:.4f} regime {fit.regime} "
          f"r^2 {fit.r_squared:.5f} -> {'PASS' if ok else 'FAIL'}")
    return OK if ok else FAIL


def cmd_nonuniqueness(args):
    raw, spec = _single(args.config)
    kappas = [float(k) for k in raw.get("checks", {}).get("kappas", [0.0, 0.5, 1.0])]
    tol = float(spec.extra.get("tol", 1e-3))
    gap_min = float(spec.extra.get("min_gap", 0.1))
    cands = harness.nonuniqueness_demo(spec.potential, spec.solver.p, kappas, spec.t_end,
                                       spec.solver.dt, spec.grid, spec.solver)
    rows = [(c.kappa, c.mild_residual, c.s_mild_residual, c.final_sup) for c in cands]
    if args.out:
        _refuse(args.out, args.force)
        harness.write_csv(args.out, rows, ("kappa", "mild_residual", "s_mild_residual", "final_sup"),
                          force=args.force)
    print(f"{'kappa':>8} {'mild_res':>12} {'s_mild_res':>12} {'u(t_end)':>12}")
    for r in rows:
        print(f"{r[0]:8.4g} {r[1]:12.4g} {r[2]:12.4g} {r[3]:12.6g}")
    gap = harness.pairwise_min_gap(cands)
    ok = all(c.mild_residual <= tol for c in cands) and gap >= gap_min
    print(f"min pairwise gap {gap:.4g}; {'PASS' if ok else 'FAIL'}")
    return OK if ok else FAIL


def cmd_verify_operators(args):
    docs = harness.load_specs(args.config)
    cfg = docs[0]
    known = {"dim", "L", "N", "a", "R", "theta", "rho", "d", "k", "seed", "eps", "trials", "t"}
    bad = set(cfg) - known
    if bad:
        raise ConfigError(f"unknown keys: {sorted(bad)}")
    try:
        grid = GridSpec(int(cfg.get("dim", 1)), float(cfg.get("L", 32.0)), int(cfg.get("N", 256)))
        w = WeightParams(float(cfg.get("R", 1.0)), float(cfg.get("a", 0.0)))
        theta = float(cfg.get("theta", 0.5))
        ts = [float(t) for t in cfg.get("t", [0.1, 1.0])]
        rep = verify_operator_bounds(w, theta, int(cfg.get("trials", 20)), grid, ts,
                                     int(cfg.get("seed", 0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    rows = []
    ok = rep.passed
    if not rep.precondition_ok:
        print(f"precondition violated: {rep.message}")
    else:
        rows.append(("||B phi|| / ||phi||", rep.max_ratio_bessel, rep.bessel_bound))
        for t in ts:
            rows.append((f"||G({t:g}) phi|| / ||phi||", rep.max_ratio_green[t], rep.green_bound[t]))
    if "d" in cfg:
        d = float(cfg["d"])
        c = sandwich_constants(grid.dim, d, float(cfg.get("eps", 0.5)), theta)
        rho = float(cfg.get("rho", max(c["rho0"], c["rho_g"])))
        k = float(cfg.get("k", c["k0"]))
        sw = verify_weight_sandwich(rho, d, float(cfg.get("eps", 0.5)), theta, ts, k, grid)
        for f in sw.failed_preconditions:
            print(f"precondition violated: {f}")
        for name, v in sw.checks.items():
            rows.append((name + " violation", v, 0.0))
        ok = ok and sw.passed
    print(f"{'check':<32} {'observed':>14} {'bound':>14}")
    for name, v, b in rows:
        print(f"{name:<32} {v:14.6g} {b:14.6g}")
    print("PASS" if ok else "FAIL")
    return OK if ok else FAIL


def cmd_kernel_table(args):
    _refuse(args.out, args.force)
    tab = kernel_table(args.dim, args.nu, args.rmin, args.rmax, args.samples)
    text = harness.format_csv([tuple(r) for r in tab], ("r", "B_nu(r)", "lower_bound", "ratio"))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.nu == 1.0:
        _, ok = kernel_lower_bound_check(args.dim, tab[:, 0])
        return OK if ok else FAIL
    return OK


def build_parser():
    ap = argparse.ArgumentParser(prog="pseudopara", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out=True, config=True):
        if config:
            p.add_argument("--config", required=True, help="YAML experiment file")
        if out:
            p.add_argument("--out", help="CSV output path")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")

    p = sub.add_parser("solve", help="run the regularisation ladder and write diagnostics")
    common(p)
    p.add_argument("--dump", help="binary dump of the final state")
    p.set_defaults(fn=cmd_solve)
    p = sub.add_parser("maximal", help="maximal solution from zero data")
    common(p)
    p.set_defaults(fn=cmd_maximal)
    p = sub.add_parser("compare", help="ordering of two runs with ordered data")
    common(p)
    p.set_defaults(fn=cmd_compare)
    p = sub.add_parser("growth-fit", help="fit the norm growth exponent")
    common(p)
    p.add_argument("--csv", help="fit an existing diagnostics CSV instead of running")
    p.add_argument("--column", choices=("sup_norm", "weighted_norm"))
    p.set_defaults(fn=cmd_growth_fit)
    p = sub.add_parser("nonuniqueness", help="delayed maximal solutions from zero data")
    common(p)
    p.set_defaults(fn=cmd_nonuniqueness)
    p = sub.add_parser("verify-operators", help="weighted operator bounds")
    common(p, out=False)
    p.set_defaults(fn=cmd_verify_operators)
    p = sub.add_parser("kernel-table", help="tabulate the Bessel potential kernel")
    common(p, config=False)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--rmin", type=float, required=True)
    p.add_argument("--rmax", type=float, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.set_defaults(fn=cmd_kernel_table)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return CONFIG if exc.code else OK
    try:
        return args.fn(args)
    except (ConfigError, PreconditionError, FileExistsError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG
    except SolverOverflowError as exc:
        print(f"solver overflow: {exc}", file=sys.stderr)
        return FAIL


if __name__ == "__main__":
    sys.exit(main())
