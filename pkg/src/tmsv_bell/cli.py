"""Command-line front end: single points, sweeps, threshold curves and audits.

Exit codes: 0 ok, 1 audit/fit-check failure, 2 domain or configuration
error, 3 convergence or bracketing error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import analytic_core as ac
from . import fock_oracle as fo
from . import nonlocality as nl
from . import threshold as th
from .errors import (
    BracketingError,
    ConfigurationError,
    ConvergenceError,
    DomainError,
    NeverNonlocalError,
)

OUTDIR_ENV = "TMSV_BELL_OUTDIR"
MAX_ROWS = 100_000

EXIT_OK, EXIT_AUDIT, EXIT_DOMAIN, EXIT_CONVERGENCE, EXIT_IO = 0, 1, 2, 3, 4

BUILTIN_DEFAULTS = {
    "cutoff": 40,
    "tol": ac.DEFAULT_TOL,
    "bisection_tol": th.BISECTION_TOL,
    "jobs": 1,
}

SWEEP_HEADER = ["r", "lambda", "R_A", "R_B", "alpha", "beta", "bmax", "violated"]
THRESHOLD_HEADER = ["r", "r_max", "fit", "gamma_max", "rel_fit_error"]


def fmt(x):
    return f"{x:.12g}"


def load_config(path):
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    config = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key in ("cutoff", "jobs"):
                config[key] = int(value)
            elif key in ("tol", "bisection_tol"):
                config[key] = float(value)
            elif key == "output_dir":
                config[key] = value
            else:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
    return config


def _setting(args, key):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return args.config_values.get(key, BUILTIN_DEFAULTS.get(key))


def _output_path(args, default_name):
    if args.output == "-":
        return "-"
    if args.output:
        return args.output
    outdir = args.config_values.get("output_dir") or os.environ.get(OUTDIR_ENV, ".")
    return os.path.join(outdir, default_name)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if path == "-":
        sys.stdout.write(buf.getvalue())
        return
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())
    print(f"wrote {len(rows)} rows to {path}", file=sys.stderr)


def _squeezing(args):
    """``(r, lam)`` from ``--r`` or ``--lambda``."""
    if args.r is not None and args.lam is not None:
        raise DomainError("give either --r or --lambda, not both")
    if args.lam is not None:
        if not (0.0 <= args.lam < 1.0):
            raise DomainError(f"lambda must lie in [0, 1), got {args.lam}")
        return math.atanh(args.lam), args.lam
    if args.r is None:
        raise DomainError("one of --r or --lambda is required")
    return args.r, ac.lambda_from_r(args.r)


def _reflectivity(R, gamma, name):
    if R is not None and gamma is not None:
        raise DomainError(f"give either the R or the gamma form of {name}, not both")
    if gamma is not None:
        return th.R_from_gamma(gamma)
    return 0.0 if R is None else R


def _params(r, lam, rA, rB):
    if math.tanh(r) == lam:
        return ac.ChannelParams(lam, rA, rB, r)
    return ac.ChannelParams(lam, rA, rB)


def _print_result(res, extra=()):
    rows = [
        ("alpha", fmt(res.alpha)),
        ("beta", fmt(res.beta)),
        ("bmax", fmt(res.bmax)),
        ("violated", str(res.violated).lower()),
        ("terms_used", str(res.terms_used)),
        ("tail_estimate", f"{res.tail_estimate:.3e}"),
        *extra,
    ]
    for key, value in rows:
        print(f"{key:<16}{value}")


def _oracle_bmax(state, dim):
    v = fo.correlation_matrix(state, fo.pseudo_spin_ops(dim))
    return nl.horodecki_bmax(v).bmax


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_bell(args):
    r, lam = _squeezing(args)
    rA = _reflectivity(args.R, args.gamma, "R")
    rB = _reflectivity(args.R2, args.gamma2, "R2")
    params = _params(r, lam, rA, rB)
    res = ac.bmax_analytic(params, _setting(args, "tol"))
    extra = [("r", fmt(r)), ("lambda", fmt(lam)), ("R_A", fmt(rA)), ("R_B", fmt(rB))]
    if args.oracle:
        dim = _setting(args, "cutoff")
        fock = _oracle_bmax(fo.lossy_state_direct(lam, rA, rB, dim), dim)
        extra += [("oracle_bmax", fmt(fock)), ("oracle_delta", f"{abs(fock - res.bmax):.3e}")]
    _print_result(res, extra)
    return EXIT_OK


def cmd_eve(args):
    r, lam = _squeezing(args)
    rB = _reflectivity(args.R, args.gamma, "R")
    params = ac.eve_params(_params(r, lam, 0.0, rB))
    res = ac.bmax_analytic(params, _setting(args, "tol"))
    extra = [("r", fmt(r)), ("lambda", fmt(lam)), ("R_B", fmt(rB))]
    if args.oracle:
        dim = _setting(args, "cutoff")
        fock = _oracle_bmax(fo.eve_state(lam, rB, dim), dim)
        extra += [("oracle_bmax", fmt(fock)), ("oracle_delta", f"{abs(fock - res.bmax):.3e}")]
    _print_result(res, extra)
    return EXIT_OK


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    step: float
    mode: str
    r: float | None
    lam: float | None
    R: float
    output_path: str

    def __post_init__(self):
        if self.variable not in ("R", "r", "gamma"):
            raise ConfigurationError(f"unknown sweep variable {self.variable!r}")
        if not (self.start < self.stop) or not (self.step > 0):
            raise ConfigurationError("sweep needs start < stop and step > 0")
        if (self.stop - self.start) / self.step > MAX_ROWS:
            raise ConfigurationError(f"sweep exceeds {MAX_ROWS} rows")

    def values(self):
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + i * self.step, 12) for i in range(n)]


def _sweep_row(task):
    r, lam, rA, rB, tol = task
    res = ac.bmax_analytic(_params(r, lam, rA, rB), tol)
    return [fmt(r), fmt(lam), fmt(rA), fmt(rB), fmt(res.alpha), fmt(res.beta),
            fmt(res.bmax), str(res.violated).lower()]


def _map(func, tasks, jobs):
    if jobs <= 1 or len(tasks) < 2:
        return [func(t) for t in tasks]
    # map() yields in submission order, so rows stay in grid order
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks))


def _sweep_tasks(spec, tol):
    tasks = []
    for x in spec.values():
        if spec.variable == "r":
            r, lam, R = x, ac.lambda_from_r(x), spec.R
        else:
            r, lam = spec.r, spec.lam
            R = th.R_from_gamma(x) if spec.variable == "gamma" else x
        rB = R if th.Mode(spec.mode) is th.Mode.SYMMETRIC else 0.0
        tasks.append((r, lam, R, rB, tol))
    return tasks


def cmd_sweep(args):
    if args.variable == "r":
        if args.r is not None or args.lam is not None:
            raise DomainError("an r sweep takes the squeezing from the grid")
        r = lam = None
    else:
        r, lam = _squeezing(args)
    spec = SweepSpec(
        variable=args.variable,
        start=args.start,
        stop=args.stop,
        step=args.step,
        mode=args.mode,
        r=r,
        lam=lam,
        R=_reflectivity(args.R, args.gamma, "R"),
        output_path=_output_path(args, "sweep.csv"),
    )
    rows = _map(_sweep_row, _sweep_tasks(spec, _setting(args, "tol")), _setting(args, "jobs"))
    _write_csv(spec.output_path, SWEEP_HEADER, rows)
    return EXIT_OK


def _threshold_row(task):
    mode, r, tol = task
    point = th.rmax(th.Scenario(mode, r), tol)
    rel = abs(point.r_max - point.fit_value) / point.r_max
    return [fmt(point.r), fmt(point.r_max), fmt(point.fit_value), fmt(point.gamma_max), fmt(rel)]


def _r_grid(start, stop, step):
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def cmd_threshold(args):
    if args.r_start < 0.1:
        raise DomainError("threshold curves start at r >= 0.1")
    if not (args.r_start <= args.r_stop) or not args.r_step > 0:
        raise ConfigurationError("need r_start <= r_stop and r_step > 0")
    tol = _setting(args, "bisection_tol")
    tasks = [(args.mode, r, tol) for r in _r_grid(args.r_start, args.r_stop, args.r_step)]
    rows = _map(_threshold_row, tasks, _setting(args, "jobs"))
    _write_csv(_output_path(args, f"threshold_{args.mode}.csv"), THRESHOLD_HEADER, rows)
    return EXIT_OK


def cmd_fit_check(args):
    tol = _setting(args, "bisection_tol")
    modes = [args.mode] if args.mode else [m.value for m in th.Mode]
    failed = False
    print(f"{'mode':<11}{'r':>6}{'r_max':>12}{'fit':>12}{'rel_err':>10}  status")
    for mode in modes:
        points = [th.rmax(th.Scenario(mode, r), tol) for r in args.r_values]
        for p in points:
            rel = abs(p.r_max - p.fit_value) / p.r_max
            ok = rel <= args.tolerance
            failed |= not ok
            print(f"{mode:<11}{p.r:>6.2f}{p.r_max:>12.6f}{p.fit_value:>12.6f}"
                  f"{rel:>10.4f}  {'PASS' if ok else 'FAIL'}")
        if args.refit:
            print(f"{mode:<11} least-squares c in c*exp(-r): {th.fit_coefficient(points):.4f}"
                  f" (rule of thumb uses {th.FIT_COEFFICIENTS[mode]})")
    return EXIT_AUDIT if failed else EXIT_OK


DEFAULT_AUDIT_LAMBDAS = (0.0, 0.3, math.tanh(1.0), math.tanh(1.5))
DEFAULT_AUDIT_R = (0.0, 0.25, 0.5, 0.75, 1.0)


def audit_point(lam, rA, rB, dim, tol=ac.DEFAULT_TOL):
    """``(|delta B_max|, trace distance)`` between the analytic and Fock routes."""
    direct = fo.lossy_state_direct(lam, rA, rB, dim)
    purified = fo.lossy_state_purified(lam, rA, rB, dim)
    fock = _oracle_bmax(purified, dim)
    analytic = ac.bmax_analytic(ac.ChannelParams(lam, rA, rB), tol).bmax
    return abs(analytic - fock), fo.trace_distance(direct, purified)


def cmd_oracle_audit(args):
    dim = _setting(args, "cutoff")
    fo.FockCutoff(dim)
    lambdas = args.lambdas if args.lambdas else DEFAULT_AUDIT_LAMBDAS
    grid = args.grid if args.grid else DEFAULT_AUDIT_R
    worst_db = worst_td = 0.0
    offenders = []
    for lam in lambdas:
        for rA in grid:
            for rB in grid:
                db, td = audit_point(lam, rA, rB, dim)
                worst_db, worst_td = max(worst_db, db), max(worst_td, td)
                if db >= args.tolerance or td >= args.trace_tolerance:
                    offenders.append((lam, rA, rB, db, td))
    print(f"cutoff {dim}, {len(lambdas) * len(grid) ** 2} grid points")
    print(f"worst |delta bmax|     {worst_db:.3e}  (tolerance {args.tolerance:.1e})")
    print(f"worst trace distance   {worst_td:.3e}  (tolerance {args.trace_tolerance:.1e})")
    for lam, rA, rB, db, td in offenders[:10]:
        print(f"FAIL lambda={fmt(lam)} R_A={fmt(rA)} R_B={fmt(rB)} "
              f"delta_bmax={db:.3e} trace_distance={td:.3e}")
    if offenders:
        return EXIT_AUDIT
    print("PASS")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_squeezing(p):
    p.add_argument("--r", type=float, help="squeezing parameter")
    p.add_argument("--lambda", dest="lam", type=float, help="tanh(r), instead of --r")


def _add_common(p):
    p.add_argument("--tol", type=float, help="relative tolerance of the alpha series")
    p.add_argument("--cutoff", type=int, help="Fock cutoff for oracle paths (even)")
    p.add_argument("--jobs", type=int, help="worker processes for grid commands")
    p.add_argument("--bisection-tol", dest="bisection_tol", type=float,
                   help="threshold solver tolerance on R")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tmsv-bell",
        description="CHSH nonlocality of a lossy two-mode squeezed vacuum.",
    )
    parser.add_argument("--config", help="key = value file with default settings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bell", help="Bell factor at one point")
    _add_squeezing(p)
    p.add_argument("--R", type=float, help="reflectivity of Alice's channel")
    p.add_argument("--gamma", type=float, help="absorption of Alice's channel")
    p.add_argument("--R2", type=float, help="reflectivity of Bob's channel")
    p.add_argument("--gamma2", type=float, help="absorption of Bob's channel")
    p.add_argument("--oracle", action="store_true", help="also run the Fock-space route")
    _add_common(p)
    p.set_defaults(func=cmd_bell)

    p = sub.add_parser("eve", help="Bell factor of the Alice-Eve state (loss on Bob only)")
    _add_squeezing(p)
    p.add_argument("--R", type=float, help="reflectivity of Bob's channel")
    p.add_argument("--gamma", type=float, help="absorption of Bob's channel")
    p.add_argument("--oracle", action="store_true", help="also run the Fock-space route")
    _add_common(p)
    p.set_defaults(func=cmd_eve)

    p = sub.add_parser("sweep", help="B_max along a grid in R, r or gamma")
    p.add_argument("--variable", choices=["R", "r", "gamma"], default="R")
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--mode", choices=[m.value for m in th.Mode], default="symmetric")
    _add_squeezing(p)
    p.add_argument("--R", type=float, help="fixed reflectivity for an r sweep")
    p.add_argument("--gamma", type=float, help="fixed absorption for an r sweep")
    p.add_argument("--output", "-o", help="CSV path, '-' for stdout")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("threshold", help="R_max(r) curve with the exponential fit")
    p.add_argument("--mode", choices=[m.value for m in th.Mode], default="symmetric")
    p.add_argument("--r-start", dest="r_start", type=float, default=0.5)
    p.add_argument("--r-stop", dest="r_stop", type=float, default=3.0)
    p.add_argument("--r-step", dest="r_step", type=float, default=0.1)
    p.add_argument("--output", "-o", help="CSV path, '-' for stdout")
    _add_common(p)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("fit-check", help="compare R_max with c*exp(-r)")
    p.add_argument("--mode", choices=[m.value for m in th.Mode])
    p.add_argument("--r-values", dest="r_values", type=float, nargs="+",
                   default=[1.5, 2.0, 2.5, 3.0])
    p.add_argument("--tolerance", type=float, default=0.10, help="relative error allowed")
    p.add_argument("--refit", action="store_true", help="also print least-squares coefficients")
    _add_common(p)
    p.set_defaults(func=cmd_fit_check)

    p = sub.add_parser("oracle-audit", help="analytic vs Fock-space equivalence grid")
    p.add_argument("--lambdas", type=float, nargs="+")
    p.add_argument("--grid", type=float, nargs="+", help="reflectivities for both arms")
    p.add_argument("--tolerance", type=float, default=1e-6, help="allowed |delta B_max|")
    p.add_argument("--trace-tolerance", dest="trace_tolerance", type=float, default=1e-10)
    _add_common(p)
    p.set_defaults(func=cmd_oracle_audit)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.config_values = load_config(args.config) if args.config else {}
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConvergenceError, BracketingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (DomainError, ConfigurationError, NeverNonlocalError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
