"""Command-line interface: ``dpmc <command> [options]``.

Exit codes: 0 success, 1 verification failure, 2 invalid configuration,
3 file or parse error, 4 degenerate utility subspace.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

from dpmc import __version__
from dpmc._backend import BACKEND
from dpmc.calibration import (PrivacyBudget, calibrate, g_eval, rdp_epsilon,
                              solve_bound_analytic, solve_bound_bisection)
from dpmc.errors import DegenerateSubspaceError, DpmcError, MatrixFormatError
from dpmc.matnorm import format_matrix, make_rng, read_matrix
from dpmc.mechanisms import (MechanismSpec, MvgParams, UtilitySubspace,
                             imgm_perturb, mvg_iid_sigma, mvg_singular_bound,
                             optimal_design)
from dpmc.suites import SUITES, SuiteConfig, run_suites
from dpmc.verification import ORACLE_MAX_DIM, design_grid_oracle

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_FILE, EXIT_DEGENERATE = 0, 1, 2, 3, 4
DEFAULT_SEED = 0


class ConfigError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("DPMC_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"DPMC_SEED must be an integer, got {env!r}")


def _budget(args) -> PrivacyBudget:
    if args.eps is None or args.delta is None:
        raise ConfigError("--eps and --delta are required")
    return PrivacyBudget(args.eps, args.delta)


def _config_echo(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _csv_table(args, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# dpmc {__version__} config={json.dumps(_config_echo(args), sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _meta(args) -> dict:
    return {"version": __version__, "backend": BACKEND, "config": _config_echo(args)}


def cmd_calibrate(args) -> int:
    budget = _budget(args)
    bound = calibrate(args.sensitivity, budget, args.T)
    bisect_b = solve_bound_bisection(budget)
    analytic_b = solve_bound_analytic(budget) if budget.epsilon > 0 else None
    report = {
        "b": bound.B,
        "sigma": bound.sigma,
        "epsilon": budget.epsilon,
        "delta": budget.delta,
        "t": bound.compositions,
        "sensitivity": bound.sensitivity,
        "method": bound.method,
        "residual": bound.residual,
        "b_bisection": bisect_b,
        "b_analytic": analytic_b,
        "solver_difference": None if analytic_b is None else analytic_b - bisect_b,
        **_meta(args),
    }
    if args.format == "csv":
        keys = ["b", "sigma", "epsilon", "delta", "t", "sensitivity", "method",
                "residual", "b_bisection", "b_analytic", "solver_difference"]
        _emit(args, _csv_table(args, keys, [[report[k] for k in keys]]))
    else:
        _emit(args, _json(report))
    return EXIT_OK


def cmd_perturb(args) -> int:
    if not args.input:
        raise ConfigError("--in is required")
    fX = read_matrix(args.input)
    m, n = fX.shape
    for flag, want, got in (("--rows", args.rows, m), ("--cols", args.cols, n)):
        if want is not None and want != got:
            raise ConfigError(f"{flag}={want} but input has {got}")
    spec = MechanismSpec(args.sensitivity, m, n, _budget(args), args.T)
    out = imgm_perturb(fX, spec, make_rng(_resolve_seed(args)))
    _emit(args, format_matrix(out))
    return EXIT_OK


def cmd_design(args) -> int:
    if not (args.w1 and args.w2):
        raise ConfigError("--w1 and --w2 are required")
    sub = UtilitySubspace(read_matrix(args.w1), read_matrix(args.w2))
    m, n = sub.shape
    spec = MechanismSpec(args.sensitivity, m, n, _budget(args), args.T)
    res = optimal_design(sub, spec)
    report = {
        "rows": m,
        "cols": n,
        "sigma_u1": res.cov.sigma1.tolist(),
        "sigma_u2": res.cov.sigma2.tolist(),
        "objective": res.objective,
        "minimum_formula": res.minimum_formula,
        "difference": res.objective - res.minimum_formula,
        "b": spec.bound().B,
        "sigma": spec.bound().sigma,
        "epsilon": spec.budget.epsilon,
        "delta": spec.budget.delta,
        "t": spec.compositions,
        **_meta(args),
    }
    if m <= ORACLE_MAX_DIM and n <= ORACLE_MAX_DIM:
        level = spec.bound().sigma
        report["grid_oracle"] = design_grid_oracle(sub, level, 1.0, args.grid_points)
    _emit(args, _json(report))
    return EXIT_OK


def cmd_compare(args) -> int:
    s2 = args.sensitivity
    gamma = s2 if args.gamma is None else args.gamma
    delta = 1e-5 if args.delta is None else args.delta
    eps_list = args.eps_list or ([args.eps] if args.eps is not None else [1.0, 0.1, 0.01])
    if args.dims:
        shapes = [(d, d) for d in args.dims]
    else:
        shapes = [(args.rows or 2, args.cols or 2)]
    rows = []
    for eps in eps_list:
        budget = PrivacyBudget(eps, delta)
        imgm = calibrate(s2, budget, args.T).sigma
        for m, n in shapes:
            bound = mvg_singular_bound(MvgParams(s2, gamma, m, n, budget))
            # MVG has no composition rule of its own here; sqrt(T) keeps rows comparable
            mvg = mvg_iid_sigma(bound, m, n) * math.sqrt(args.T)
            rows.append([eps, delta, m, n, imgm, mvg, mvg / imgm])
    header = ["epsilon", "delta", "rows", "cols", "imgm_sigma", "mvg_sigma", "ratio"]
    if args.format == "json":
        _emit(args, _json({"rows": [dict(zip(header, r)) for r in rows], **_meta(args)}))
    else:
        _emit(args, _csv_table(args, header, rows))
    return EXIT_OK


def cmd_rdp(args) -> int:
    if args.bound is not None:
        B = args.bound
        if B < 0:
            raise ConfigError("--bound must be >= 0")
    else:
        B = calibrate(args.sensitivity, _budget(args)).B
    rows = []
    for alpha in args.alpha:
        if not alpha > 1:
            print(f"warning: skipping alpha={alpha} (must exceed 1)", file=sys.stderr)
            continue
        pt = rdp_epsilon(alpha, B)
        rows.append([pt.alpha, B, pt.epsilon_prime, int(B == 0.0)])
    header = ["alpha", "b", "epsilon_prime", "degenerate"]
    if args.format == "json":
        _emit(args, _json({"rows": [dict(zip(header, r)) for r in rows], **_meta(args)}))
    else:
        _emit(args, _csv_table(args, header, rows))
    return EXIT_OK


def cmd_verify(args) -> int:
    names = args.suite or list(SUITES)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
    budget = (PrivacyBudget(args.eps, args.delta)
              if args.eps is not None and args.delta is not None else PrivacyBudget(1.0, 1e-5))
    cfg = SuiteConfig(seed=_resolve_seed(args), samples=args.samples,
                      cov_scale=args.cov_scale, budget=budget, sensitivity=args.sensitivity)
    failed = 0
    for res in run_suites(names, cfg):
        failed += not res.passed
        print(f"[{'PASS' if res.passed else 'FAIL'}] {res.name}: {res.detail}")
    print(f"{len(names) - failed}/{len(names)} suites passed")
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps", type=float, help="privacy parameter epsilon")
    common.add_argument("--delta", type=float, help="privacy parameter delta")
    common.add_argument("--sensitivity", type=float, default=1.0,
                        help="l2 sensitivity of the query (default 1)")
    common.add_argument("--rows", type=int, help="query output rows m")
    common.add_argument("--cols", type=int, help="query output columns n")
    common.add_argument("-T", type=int, default=1, help="number of compositions")
    common.add_argument("--gamma", type=float, help="sup ||f(X)||_F for MVG (default: sensitivity)")
    common.add_argument("--seed", type=int, help="RNG seed (fallback: $DPMC_SEED, then 0)")
    common.add_argument("--in", dest="input", help="input matrix file")
    common.add_argument("--out", help="output path (default: stdout)")

    parser = argparse.ArgumentParser(prog="dpmc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dpmc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", parents=[common], help="bound B and noise scale")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("perturb", parents=[common], help="release f(X) + noise from a matrix file")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("design", parents=[common], help="utility-optimal covariance design")
    p.add_argument("--w1", help="row weight matrix file (m' x m)")
    p.add_argument("--w2", help="column weight matrix file (n' x n)")
    p.add_argument("--grid-points", type=int, default=9, help="grid oracle resolution")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("compare", parents=[common], help="IMGM vs MVG noise over a sweep")
    p.add_argument("--eps-list", type=_floats, help="comma-separated epsilon sweep")
    p.add_argument("--dims", type=_ints, help="comma-separated square sizes m = n")
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("rdp", parents=[common], help="Renyi-DP epsilon over an alpha sweep")
    p.add_argument("--alpha", type=_floats, default=[1.5, 2.0, 3.0, 4.0, 8.0, 16.0, 32.0])
    p.add_argument("--bound", type=float, help="use this B instead of calibrating")
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    p.set_defaults(func=cmd_rdp)

    p = sub.add_parser("verify", parents=[common], help="run verification suites")
    p.add_argument("--suite", action="append", help=f"suite name, repeatable ({', '.join(SUITES)})")
    p.add_argument("--samples", type=int, default=20000, help="Monte Carlo sample count")
    p.add_argument("--cov-scale", type=float, default=1.0,
                   help="scale the certified covariance before the dp suite (fault injection)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DegenerateSubspaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (OSError, MatrixFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILE
    except (ConfigError, DpmcError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
