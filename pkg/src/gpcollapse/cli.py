"""Command-line front end: profile / minimize / scan / check.

Exit codes: 0 success, 1 validation or configuration error, 2 numerical
non-convergence (reports are still written in that case). Output files go
to --out, or $GPCOLLAPSE_OUT, or the working directory; a plain key=value
config file can seed any flag, with explicit flags winning.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .asymptotics import (
    DEFAULT_LADDER_GAPS,
    collapse_scan,
    ladder_from_gaps,
)
from .checks import DEFAULT_SUITES, format_table, run_check_suites
from .functional import GPParams
from .grid import SpectralGrid
from .minimizer import SolveConfig, minimize
from .profile import BracketError, compute_constants, solve_profile

_EXIT_OK = 0
_EXIT_VALIDATION = 1
_EXIT_NONCONVERGED = 2


def _fmt(x):
    return f"{x:.17g}"


def _load_config(path):
    values = {}
    with open(path) as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _out_dir(args):
    out = args.out or os.environ.get("GPCOLLAPSE_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _add_common(parser):
    parser.add_argument("--out", default=None, help="output directory (or $GPCOLLAPSE_OUT)")
    parser.add_argument("--config", default=None, help="key=value config file; flags win")
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1)


def _add_grid(parser, n=256, extent=12.0):
    parser.add_argument("--n", type=int, default=n, help="grid points per axis")
    parser.add_argument("--extent", type=float, default=extent, help="box half-width")


def _add_profile_args(parser):
    parser.add_argument("--rmax", type=float, default=20.0)
    parser.add_argument("--tol", type=float, default=1e-13)
    parser.add_argument("--dr", type=float, default=0.005)
    parser.add_argument("--s", type=float, default=2.0)
    parser.add_argument("--c0", type=float, default=1.0)


def _add_solver_args(parser):
    parser.add_argument("--max-iters", type=int, default=5000)
    parser.add_argument("--residual-tol", type=float, default=1e-6)
    parser.add_argument("--step0", type=float, default=0.5)
    parser.add_argument("--init", choices=("gaussian", "profile"), default="profile")


def build_parser():
    parser = argparse.ArgumentParser(prog="gpcollapse")
    sub = parser.add_subparsers(dest="command", required=True)

    p_prof = sub.add_parser("profile", help="solve the radial profile, write constants")
    _add_common(p_prof)
    _add_profile_args(p_prof)

    p_min = sub.add_parser("minimize", help="one constrained solve at blow-up scale")
    _add_common(p_min)
    _add_profile_args(p_min)
    _add_grid(p_min)
    _add_solver_args(p_min)
    p_min.add_argument("--omega", type=float, default=0.0)
    p_min.add_argument(
        "--gap", "--a-gap", dest="gap", type=float, default=0.05, help="a_star - a"
    )

    p_scan = sub.add_parser("scan", help="collapse ladder and power-law fit")
    _add_common(p_scan)
    _add_profile_args(p_scan)
    _add_grid(p_scan)
    _add_solver_args(p_scan)
    p_scan.add_argument("--omega", type=float, default=0.0)
    p_scan.add_argument(
        "--ladder",
        default=",".join(str(g) for g in DEFAULT_LADDER_GAPS),
        help="comma-separated gaps a_star - a, decreasing",
    )

    p_check = sub.add_parser("check", help="run the seeded invariant suites")
    _add_common(p_check)
    _add_profile_args(p_check)
    _add_grid(p_check, n=128, extent=10.0)
    p_check.add_argument("--seed", type=int, default=0)
    p_check.add_argument("--trials", type=int, default=100)
    p_check.add_argument("--a-star", dest="a_star", type=float, default=None,
                         help="override the critical coupling (diagnostic)")
    p_check.add_argument("--suites", default=",".join(DEFAULT_SUITES))

    return parser


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        overrides = _load_config(args.config)
        known = vars(args)
        unknown = [k for k in overrides if k not in known]
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        # reparse with config values as defaults so explicit flags win
        parser2 = build_parser()
        for action in parser2._subparsers._group_actions[0].choices[args.command]._actions:
            if action.dest in overrides:
                raw = overrides[action.dest]
                action.default = action.type(raw) if action.type else raw
        args = parser2.parse_args(argv)
    return args


def cmd_profile(args):
    out = _out_dir(args)
    try:
        prof = solve_profile(r_max=args.rmax, tol=args.tol, dr=args.dr)
    except BracketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION
    consts = compute_constants(prof, s=args.s, c0=args.c0)
    prof.to_csv(out / "profile.csv")
    consts.to_json(out / "constants.json")
    print(f"a_star = {_fmt(consts.a_star)}")
    print(f"lambda_star = {_fmt(consts.lambda_star)}")
    print(f"lambda_tilde = {_fmt(consts.lambda_tilde)}")
    return _EXIT_OK


def _solve_context(args):
    prof = solve_profile(r_max=args.rmax, tol=args.tol, dr=args.dr)
    consts = compute_constants(prof, s=args.s, c0=args.c0)
    grid = SpectralGrid(args.n, args.extent)
    return prof, consts, grid


def cmd_minimize(args):
    out = _out_dir(args)
    prof, consts, grid = _solve_context(args)
    p = GPParams(
        a=consts.a_star - args.gap,
        a_star=consts.a_star,
        omega=args.omega,
        s=args.s,
        c0=args.c0,
        scale="blowup",
    )
    cfg = SolveConfig(
        max_iters=args.max_iters,
        step0=args.step0,
        residual_tol=args.residual_tol,
        init=args.init,
    )
    report = minimize(p, cfg, grid, profile=prof, constants=consts)
    report.to_json(out / "report.json")
    report.field.to_binary(out / "field.bin")
    report.history_to_csv(out / "history.csv")
    print(
        f"converged = {report.converged}  iters = {report.iters}  "
        f"residual = {_fmt(report.residual)}"
    )
    print(f"energy_physical = {_fmt(report.energy_physical)}")
    return _EXIT_OK if report.converged else _EXIT_NONCONVERGED


def cmd_scan(args):
    out = _out_dir(args)
    gaps = [float(tok) for tok in args.ladder.split(",") if tok.strip()]
    if len(gaps) < 4:
        print("error: need >= 4 rungs in the ladder", file=sys.stderr)
        return _EXIT_VALIDATION
    prof, consts, grid = _solve_context(args)
    p_base = GPParams(
        a=consts.a_star - gaps[0],
        a_star=consts.a_star,
        omega=args.omega,
        s=args.s,
        c0=args.c0,
        scale="blowup",
    )
    cfg = SolveConfig(
        max_iters=args.max_iters,
        step0=args.step0,
        residual_tol=args.residual_tol,
        init=args.init,
    )
    scan = collapse_scan(
        p_base, ladder_from_gaps(consts.a_star, gaps), cfg, grid, prof, consts
    )
    scan.to_csv(out / "scan.csv")
    scan.to_json(out / "scan.json")
    scan.plot_data(out / "scan_plotdata.csv")
    if scan.fitted_exponent is not None:
        print(f"fitted_exponent = {_fmt(scan.fitted_exponent)}")
        print(f"fitted_constant = {_fmt(scan.fitted_constant)}")
        print(f"target_exponent = {_fmt(scan.target_exponent)}")
        print(f"target_constant = {_fmt(scan.target_constant)}")
    bad = [r for r in scan.rows if not r.converged]
    if bad:
        print(f"warning: {len(bad)} rung(s) did not converge", file=sys.stderr)
        return _EXIT_NONCONVERGED
    return _EXIT_OK


def cmd_check(args):
    out = _out_dir(args)
    prof = solve_profile(r_max=args.rmax, tol=args.tol, dr=args.dr)
    consts = compute_constants(prof, s=args.s, c0=args.c0)
    grid = SpectralGrid(args.n, args.extent)
    names = tuple(tok.strip() for tok in args.suites.split(",") if tok.strip())
    results = run_check_suites(
        prof,
        consts,
        grid=grid,
        seed=args.seed,
        trials=args.trials,
        a_star_override=args.a_star,
        names=names,
        jobs=args.jobs,
    )
    table = format_table(results)
    print(table)
    with open(out / "check.txt", "w") as f:
        f.write("# schema: gpcollapse.check.v1\n")
        f.write(table + "\n")
    return _EXIT_OK if all(r.passed for r in results) else _EXIT_VALIDATION


def main(argv=None):
    try:
        args = _parse(argv)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION
    np.seterr(over="raise", invalid="raise")
    handlers = {
        "profile": cmd_profile,
        "minimize": cmd_minimize,
        "scan": cmd_scan,
        "check": cmd_check,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, BracketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
