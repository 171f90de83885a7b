"""Command-line interface: ``cknlab <command> [options]``.

Exit codes: 0 success, 1 verification or convergence failure, 2 invalid
arguments.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from decimal import ROUND_HALF_EVEN, Decimal

import numpy as np

from . import params as _params
from . import verify as _verify
from .errors import CKNError, FitDegenerate, InvalidParams, NoRoot
from .numerics import QuadConfig
from .params import ParamPoint, Region
from .profiles import best_constant_S, c_ab, grad_norm_sq, kernel_elements
from .spectrum import closed_form_eigenvalue, kernel_dimension, solve_mode, third_eigenfunction
from .stability import (
    FIT_WINDOW, TIGHT_QUAD, deficit_report, degenerate_sequence, fit_expansion,
    richardson_limit, spectral_sequence, two_bubble,
)

FIG2_A = (-0.5, -0.6, -0.641867, -0.7, -0.8, -1.0, -2.0, -3.0, -4.0, -5.0, -10.0)

TABLE_HEADER = ("a", "b_fs", "b_fs_star", "b_star", "selection")
SPECTRUM_HEADER = ("k", "index", "eigenvalue", "closed_form", "abs_diff")
DEFICIT_HEADER = ("param", "grad_sq", "star_norm", "m", "dist_sq", "E")
PARAMS_KEYS = ("a", "b", "q", "K", "tau", "C_ab", "c_ab", "S_ab", "b_fs", "b_fs_star", "region",
               "mu3_closed", "bound_spectral", "bound_two_bubble")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def fmt_number(x, precision: int) -> str:
    """Fixed-point string with ``precision`` decimals, round-half-even."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    q = Decimal(repr(x)).quantize(Decimal(1).scaleb(-precision), rounding=ROUND_HALF_EVEN)
    if q == 0:
        q = abs(q)
    return f"{q:f}"


def _json_value(x, precision: int):
    if x is None or isinstance(x, str) or isinstance(x, bool):
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(fmt_number(x, precision))


class Output:
    """Serializes one table (plus optional summary) as CSV or JSON."""

    def __init__(self, fmt: str, precision: int):
        self.fmt = fmt
        self.precision = precision

    def cell(self, x) -> str:
        return x if isinstance(x, str) else fmt_number(x, self.precision)

    def render(self, header, rows, summary=None, single=False) -> str:
        if self.fmt == "json":
            objs = [{k: _json_value(v, self.precision) for k, v in zip(header, r)} for r in rows]
            if single:
                doc = objs[0]
            else:
                doc = {"rows": objs}
            if summary:
                doc.update({k: _json_value(v, self.precision) for k, v in summary.items()})
            return json.dumps(doc, indent=2) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([self.cell(v) for v in r])
        for k, v in (summary or {}).items():
            buf.write(f"{k}={self.cell(v)}\n")
        return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def _point(args) -> ParamPoint:
    if args.a is None or args.b is None:
        raise UsageError("--a and --b are required")
    return ParamPoint(args.a, args.b)


def _optional(fn):
    try:
        return fn()
    except InvalidParams:
        return None


def cmd_params(args, out: Output) -> tuple[str, int]:
    p = _point(args)
    d = _params.derive(p)
    mu3 = _optional(lambda: _params.mu3_closed(p))
    row = (d.a, d.b, d.q, d.K, d.tau, d.C_ab, c_ab(p), _optional(lambda: best_constant_S(p)),
           d.b_fs, d.b_fs_star, d.region.value, mu3,
           None if mu3 is None else _params.stability_upper_bound(p), _params.two_bubble_bound(p))
    return out.render(PARAMS_KEYS, [row], single=True), EXIT_OK


def _table_row(a: float):
    bfs, bfs_star = _params.felli_schneider(a), _params.felli_schneider_star(a)
    try:
        bstar = _params.solve_b_star(a)
        empty = False
    except NoRoot:
        empty = True
        try:
            bstar = _params.solve_b_root_extended(a)
        except NoRoot:
            bstar = None
    return bfs, bfs_star, bstar, empty


def cmd_table_fig2(args, out: Output, a_values=FIG2_A) -> tuple[str, int]:
    rows = []
    for a in a_values:
        bfs, bfs_star, bstar, empty = _table_row(a)
        if empty:
            sel = "empty"
        else:
            sel = f"[{out.cell(bstar)}, {out.cell(bfs_star)})"
        rows.append((a, bfs, bfs_star, bstar, sel))
    return out.render(TABLE_HEADER, rows), EXIT_OK


def cmd_curves(args, out: Output) -> tuple[str, int]:
    if not args.a_max < 0 or not args.a_min < args.a_max or args.points < 2:
        raise UsageError("need a_min < a_max < 0 and at least 2 points")
    return cmd_table_fig2(args, out, np.linspace(args.a_min, args.a_max, args.points))


def cmd_thresholds(args, out: Output) -> tuple[str, int]:
    th = _params.solve_thresholds()
    return out.render(("k_star", "a_star"), [(th.k_star, th.a_star)], single=True), EXIT_OK


def _int_list(text: str) -> list:
    try:
        vals = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--modes must be a comma-separated list of integers, got {text!r}")
    if not vals:
        raise UsageError("--modes is empty")
    return vals


def cmd_spectrum(args, out: Output) -> tuple[str, int]:
    p = _point(args)
    d = _params.derive(p)
    if d.region == Region.BelowFS:
        raise InvalidParams(f"b={d.b} lies below b_FS(a)={d.b_fs:.9g}")
    rows = []
    for k in _int_list(args.modes):
        ms = solve_mode(p, k, args.count)
        for n, mu in enumerate(ms.eigenvalues):
            cf = closed_form_eigenvalue(p, k, n)
            rows.append((k, n + 1, mu, cf, abs(mu - cf)))
    summary = {"kernel_dim": kernel_dimension(p)}
    return out.render(SPECTRUM_HEADER, rows, summary), EXIT_OK


def _report_row(param, rep):
    return (param, rep.grad_sq, rep.star, rep.m_value, rep.dist_sq, rep.E if rep.E_defined else None)


def cmd_deficit(args, out: Output) -> tuple[str, int]:
    p = _point(args)
    d = _params.derive(p)
    cfg = QuadConfig(rel_tol=args.tol_quad, abs_tol=1e-300) if args.tol_quad else TIGHT_QUAD
    n = args.points
    if n < 1:
        raise UsageError("--points must be positive")
    summary = {}
    status = EXIT_OK
    if args.family == "two-bubble":
        if d.region == Region.BelowFS:
            raise InvalidParams("the two-bubble family needs b >= b_FS(a)")
        lo, hi = args.lam_min or FIT_WINDOW[0], args.lam_max or FIT_WINDOW[1]
        if not 0 < lo < hi < 1:
            raise UsageError("need 0 < lam_min < lam_max < 1")
        lams = np.geomspace(lo, hi, n)
        rows = [_report_row(float(l), deficit_report(two_bubble(p, float(l)), cfg)) for l in lams]
        summary["bound"] = _params.two_bubble_bound(p)
        try:
            fit = fit_expansion(p, "E", lams, cfg)
            summary.update(exponent=fit.exponent, coefficient=fit.coefficient, limit=fit.limit,
                           pinned_coefficient=fit.pinned_coefficient, pinned_limit=fit.pinned_limit)
        except (FitDegenerate, InvalidParams) as exc:
            summary["fit"] = f"unavailable ({exc})"
            status = EXIT_FAIL
    elif args.family == "fs-kernel":
        if d.region != Region.OnFS:
            raise InvalidParams("the fs-kernel family needs b on the FS curve")
        eps = [0.2 * 0.5**i for i in range(n)]
        seq = degenerate_sequence(p, eps, cfg)
        rows = [_report_row(e, r) for e, r in seq]
        summary["norm_Z1"] = math.sqrt(grad_norm_sq(kernel_elements(p)[1], cfg))
    else:
        if d.region in (Region.BelowFS, Region.OnFS):
            raise InvalidParams("the spectral family needs b > b_FS(a)")
        e3 = third_eigenfunction(p)
        eps = [0.05 * 0.5**i for i in range(n)]
        seq = spectral_sequence(p, e3, eps, cfg)
        rows = [_report_row(e, r) for e, r in seq]
        summary["target"] = _params.stability_upper_bound(p)
        if n >= 3:
            powers = (2, 4) if e3.terms[0].k >= 1 else (1, 2)
            summary["limit"] = richardson_limit(eps[-3:], [r.E for _, r in seq[-3:]], powers)
    return out.render(DEFICIT_HEADER, rows, summary), status


def cmd_verify(args, out: Output) -> tuple[str, int]:
    lines = []

    def echo(line):
        lines.append(line)
        if args.out is None:
            print(line, flush=True)

    results = _verify.run_all(quick=not args.full, echo=echo)
    ok = all(r.passed for r in results)
    tail = f"{sum(r.passed and not r.skipped for r in results)} passed, " \
           f"{sum(not r.passed for r in results)} failed, {sum(r.skipped for r in results)} skipped"
    if args.out is None:
        print(tail)
        return "", EXIT_OK if ok else EXIT_FAIL
    return "\n".join(lines + [tail]) + "\n", EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--precision", type=int, default=6, help="decimal places (default 6)")
    common.add_argument("--tol-quad", type=float, default=None, help="relative quadrature tolerance")
    common.add_argument("--out", default=None, help="output path (default stdout)")

    point = argparse.ArgumentParser(add_help=False)
    point.add_argument("--a", type=float, required=True)
    point.add_argument("--b", type=float, required=True)

    parser = argparse.ArgumentParser(prog="cknlab", description="Numerics for the 2-D CKN inequality.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("params", parents=[common, point], help="derived constants at (a, b)")
    sp.set_defaults(func=cmd_params)

    sp = sub.add_parser("table-fig2", parents=[common], help="b_FS, b*_FS and b* for the tabulated a values")
    sp.set_defaults(func=cmd_table_fig2)

    sp = sub.add_parser("curves", parents=[common], help="the same columns on a uniform a grid")
    sp.add_argument("--a-min", type=float, default=-5.0)
    sp.add_argument("--a-max", type=float, default=-0.65)
    sp.add_argument("--points", type=int, default=50)
    sp.set_defaults(func=cmd_curves)

    sp = sub.add_parser("thresholds", parents=[common], help="K* and a*")
    sp.set_defaults(func=cmd_thresholds)

    sp = sub.add_parser("spectrum", parents=[common, point], help="per-mode eigenvalues")
    sp.add_argument("--modes", default="0,1,2")
    sp.add_argument("--count", type=int, default=3)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("deficit", parents=[common, point], help="deficit quotient along a test family")
    sp.add_argument("--family", choices=("two-bubble", "fs-kernel", "spectral"), default="two-bubble")
    sp.add_argument("--points", type=int, default=None)
    sp.add_argument("--lam-min", type=float, default=None)
    sp.add_argument("--lam-max", type=float, default=None)
    sp.set_defaults(func=cmd_deficit)

    sp = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--quick", action="store_true", default=True)
    mode.add_argument("--full", action="store_true")
    sp.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.precision < 0 or args.precision > 17:
        print("error: --precision must lie in [0, 17]", file=sys.stderr)
        return EXIT_USAGE
    if args.tol_quad is not None and not 0 < args.tol_quad < 1:
        print("error: --tol-quad must lie in (0, 1)", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "points", 0) is None:
        args.points = {"two-bubble": 8, "fs-kernel": 4, "spectral": 3}[args.family]
    out = Output(args.format, args.precision)
    try:
        text, code = args.func(args, out)
    except (InvalidParams, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CKNError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
