"""
Command-line entry point: ``hardedge {kernel, painleve, transition, validate}``.

CSV output has a header row, numbers at 17 significant digits, commas and
LF line endings; JSON output is one object carrying ``schema_version``.
The same arguments always produce byte-identical files.
"""

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import painleve as pv
from .errors import HardEdgeError
from .harness import (
    RunConfig,
    grid_points,
    run_airy_transition,
    run_bessel_transition,
    run_hard_edge,
    run_validate,
)
from .kernels import airy_kernel, bessel_kernel, kernel_grid, sine_kernel
from .orthopoly import Weight, build_table, cd_kernel
from .psi import psi_kernel_grid

SCHEMA_VERSION = "1"


def format_value(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(x) for x in row])


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise HardEdgeError("non-finite value in JSON output")
        return float(x)
    return x


def write_json(path, obj):
    payload = {"schema_version": SCHEMA_VERSION}
    payload.update(_jsonable(obj))
    with open(path, "w", newline="") as f:
        json.dump(payload, f, indent=1)
        f.write("\n")


def _floats(spec):
    return tuple(float(x) for x in spec.split(",") if x.strip())


# ---------------------------------------------------------------------------
# commands


def _kernel_values(args, xs):
    kind = args.kind
    if kind == "sine":
        return kernel_grid(sine_kernel, xs).values
    if kind == "airy":
        return kernel_grid(airy_kernel, xs).values
    if kind == "bessel":
        return kernel_grid(lambda x, y: bessel_kernel(args.alpha, x, y), xs).values
    if kind == "psi":
        if args.s is None:
            raise HardEdgeError("--kind psi needs --s")
        sol = pv.integrate_r(args.alpha, max(1.0, args.s), args.tol)
        return psi_kernel_grid(sol, args.s, xs).values
    if args.n is None or args.t is None:
        raise HardEdgeError("--kind cd needs --n and --t")
    weight = Weight(args.alpha, args.t)
    table = build_table(weight, args.n)
    return kernel_grid(lambda x, y: cd_kernel(table, weight, args.n, x, y), xs).values


def cmd_kernel(args):
    xs = grid_points(args.grid)
    vals = _kernel_values(args, xs)
    rows = [(x, y, vals[i, j]) for i, x in enumerate(xs) for j, y in enumerate(xs)]
    if args.format == "csv":
        write_csv(args.out, ["x", "y", "kernel"], rows)
    else:
        params = {k: getattr(args, k) for k in ("kind", "alpha", "s", "n", "t") if getattr(args, k) is not None}
        write_json(args.out, {"command": "kernel", "params": params, "grid": list(xs),
                              "rows": [{"x": x, "y": y, "kernel": k} for x, y, k in rows]})
    return 0


PAINLEVE_COLUMNS = ["s", "r", "r'", "q", "q'", "t'", "t",
                    "residual_third_order", "residual_identity", "residual_alt"]


def _painleve_rows(sol):
    rows = []
    for s in sol.traj.ts:
        s = float(s)
        alt = pv.residual_alt_third_order(sol, s) if s >= 1e-3 else float("nan")
        rows.append((s, pv.r_of_s(sol, s), pv.rprime_of_s(sol, s), pv.q_of_s(sol, s),
                     pv.qprime_of_s(sol, s), pv.tprime_of_s(sol, s), pv.t_of_s(sol, s),
                     pv.residual_third_order(sol, s), pv.identity_residual(sol, s), alt))
    return rows


def cmd_painleve(args):
    sol = pv.integrate_r(args.alpha, args.smax, args.tol)
    rows = _painleve_rows(sol)
    if args.format == "csv":
        write_csv(args.out, PAINLEVE_COLUMNS, rows)
    else:
        # JSON has no NaN; the alternative residual is null where undefined
        recs = [{c: (None if isinstance(v, float) and math.isnan(v) else v)
                 for c, v in zip(PAINLEVE_COLUMNS, row)} for row in rows]
        write_json(args.out, {"command": "painleve",
                              "params": {"alpha": args.alpha, "smax": args.smax, "tol": args.tol},
                              "rows": recs})
    return 0


REPORT_COLUMNS = ["param", "u", "v", "model", "limit", "abs_error"]


def report_dict(report):
    return {"command": "transition", "regime": report.regime, "params": report.params,
            "errors": [{"param": p, "sup_error": e} for p, e in report.errors],
            "rates": report.rates, "passes": report.passes, "passed": report.passed,
            "metadata": report.metadata, "supplement": report.supplement, "rows": report.rows}


def cmd_transition(args):
    cfg = RunConfig(alpha=args.alpha, s=args.s,
                    s_schedule=_floats(args.s_schedule) if args.s_schedule else (),
                    n_schedule=tuple(int(n) for n in _floats(args.n_schedule)) if args.n_schedule else (),
                    grid=grid_points(args.grid) if args.grid else (), tol=args.tol)
    run = {"bessel": run_bessel_transition, "airy": run_airy_transition,
           "hard_edge": run_hard_edge}[args.regime]
    report = run(cfg)
    if args.format == "csv":
        write_csv(args.out, REPORT_COLUMNS, [[row[c] for c in REPORT_COLUMNS] for row in report.rows])
    else:
        write_json(args.out, report_dict(report))
    for name, ok in report.passes.items():
        print(f"{'PASS' if ok else 'FAIL'}  {report.regime}: {name}")
    return 0 if report.passed else 1


def cmd_validate(args):
    checks = run_validate(args.tol)
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.module:<11} {c.name:<{width}}  {c.detail}")
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="hardedge", description="Hard-edge kernel numerics.")
    sub = parser.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", help="tabulate a kernel on a square grid")
    k.add_argument("--kind", choices=["sine", "airy", "bessel", "psi", "cd"], required=True)
    k.add_argument("--alpha", type=float, default=0.5)
    k.add_argument("--s", type=float)
    k.add_argument("--n", type=int)
    k.add_argument("--t", type=float)
    k.add_argument("--tol", type=float, default=1e-10)
    k.add_argument("--grid", required=True, help="MIN:MAX:COUNT or a comma list")
    k.add_argument("--out", required=True)
    k.add_argument("--format", choices=["csv", "json"], default="csv")
    k.set_defaults(func=cmd_kernel)

    p = sub.add_parser("painleve", help="tabulate r(s) and its companions")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--smax", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_painleve)

    t = sub.add_parser("transition", help="run one limit-regime verification")
    t.add_argument("--regime", choices=["bessel", "airy", "hard_edge"], required=True)
    t.add_argument("--alpha", type=float, default=0.5)
    t.add_argument("--s", type=float, default=1.0, help="fixed s (hard_edge)")
    t.add_argument("--s-schedule", help="comma list of s (bessel, airy)")
    t.add_argument("--n-schedule", help="comma list of n (hard_edge)")
    t.add_argument("--grid", help="MIN:MAX:COUNT or a comma list")
    t.add_argument("--tol", type=float, default=1e-10)
    t.add_argument("--out", required=True)
    t.add_argument("--format", choices=["csv", "json"], default="csv")
    t.set_defaults(func=cmd_transition)

    v = sub.add_parser("validate", help="run every module's invariant checks")
    v.add_argument("--tol", type=float, default=1e-10)
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HardEdgeError as exc:
        print(f"hardedge: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
