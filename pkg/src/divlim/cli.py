"""Command-line front end.

Exit codes: 0 ok, 2 parse/usage error, 3 evaluation error, 4 violated
precondition, 5 failed consistency check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Any

from . import divergence, regfin, renorm
from .errors import (
    ConsistencyError,
    EvaluationError,
    ParseError,
    PreconditionError,
    RegulatorDisagreement,
)
from .expr import parse, to_text
from .quad import DEFAULT_TOL

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_EVAL = 3
EXIT_PRECONDITION = 4
EXIT_CONSISTENCY = 5

TOL_ENV = "DIVLIM_TOL"
METHODS = {
    "direct": regfin.Method.DIRECT,
    "cutoff": regfin.Method.CUTOFF,
    "partner": regfin.Method.PARTNER,
}


class CheckFailed(ConsistencyError):
    pass


# -- argument types -----------------------------------------------------------

def positive_float(text: str) -> float:
    x = float(text)
    if not (x > 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return x


def grid(text: str) -> list[float]:
    """``start:stop:step`` (endpoints included within half a step) or ``a,b,c``."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + 0.5)) + 1
            values = [start + i * step for i in range(count)]
        else:
            values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad grid {text!r}; use start:stop:step or a comma list"
        ) from None
    if not values or any(b <= a for a, b in zip(values, values[1:])):
        raise argparse.ArgumentTypeError(f"grid {text!r} must be non-empty and strictly increasing")
    return values


def binding(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name.isidentifier():
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    return name, float(value)


def default_tol() -> float:
    env = os.environ.get(TOL_ENV)
    return positive_float(env) if env else DEFAULT_TOL


# -- output -------------------------------------------------------------------

def _fmt(x: Any) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    if x is None:
        return ""
    if isinstance(x, (list, tuple, dict)):
        return json.dumps(x)
    return str(x)


def render(report: dict, fmt: str) -> str:
    rows = report["rows"]
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    columns: list[str] = []
    for row in rows:
        for k in row:
            if k not in columns:
                columns.append(k)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])
        return buf.getvalue()
    cells = [[_fmt(row.get(c)) for c in columns] for row in rows]
    widths = [max([len(c)] + [len(r[i]) for r in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    numeric = [all(isinstance(row.get(c), (int, float)) or row.get(c) is None for row in rows)
               for c in columns]
    for r in cells:
        lines.append("  ".join(
            v.rjust(w) if num else v.ljust(w) for v, w, num in zip(r, widths, numeric)
        ).rstrip())
    return "\n".join(lines) + "\n"


def emit(report: dict, args) -> None:
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- helpers ------------------------------------------------------------------

def _bindings(args) -> dict[str, float]:
    b = {}
    if args.m is not None:
        b["m"] = args.m
    for name, value in args.param or ():
        b[name] = value
    return b


def _integrand(args):
    return parse(args.integrand)


def _base(args, command: str) -> dict:
    return {
        "command": command,
        "integrand": to_text(parse(args.integrand)) if getattr(args, "integrand", None) else None,
        "bindings": _bindings(args),
        "tol": args.tol,
    }


def _omega_out(omega):
    return omega if math.isfinite(omega) else None


def _order(args, e) -> int:
    if args.order is not None:
        return args.order
    omega = divergence.sdd(e)
    return max(int(omega), 0) if math.isfinite(omega) else 0


def _qs(args) -> list[float]:
    return args.q_grid if getattr(args, "q_grid", None) else [args.q]


# -- commands -----------------------------------------------------------------

def cmd_analyze(args) -> int:
    e = _integrand(args)
    b = _bindings(args)
    rep = divergence.analyze(e, b, args.q)
    slope = divergence.verify_sdd_numeric(e, b, args.q, args.p0) if not rep.poles else None
    report = _base(args, "analyze")
    report["rows"] = [{
        "omega": _omega_out(rep.omega),
        "verdict": rep.verdict.value,
        "pole_free": rep.pole_free,
        "poles": list(rep.poles),
        "numeric_slope": slope,
    }]
    emit(report, args)
    return EXIT_OK


def _partner(args, e) -> regfin.Partner:
    return regfin.Partner.for_integrand(e, args.partner, args.M)


def cmd_regularize(args) -> int:
    e = _integrand(args)
    b = _bindings(args)
    schemes = ["cutoff", "partner"] if args.scheme == "both" else [args.scheme]
    rows = []
    for q in _qs(args):
        for scheme in schemes:
            reg = regfin.HardCutoff(args.cutoff) if scheme == "cutoff" else _partner(args, e)
            res = regfin.regularized_value(e, reg, q, b, args.tol)
            rows.append({
                "q": q,
                "scheme": "HardCutoff" if scheme == "cutoff" else "Partner",
                "scale": reg.scale,
                "value": res.value,
                "abs_error_estimate": res.abs_error_estimate,
                "subdivisions": res.subdivisions,
            })
    report = _base(args, "regularize")
    report["rows"] = rows
    emit(report, args)
    return EXIT_OK


def _methods(text: str) -> list[str]:
    if text == "all":
        return list(METHODS)
    names = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in names if m not in METHODS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {list(METHODS)} or all")
    return names


def cmd_finite_part(args) -> int:
    e = _integrand(args)
    b = _bindings(args)
    spec = regfin.SubtractionSpec(_order(args, e), args.point)
    rows = []
    for q in _qs(args):
        results = []
        for name in args.methods:
            if name == "direct":
                res = regfin.finite_part_direct(e, spec, q, b, args.tol)
            elif name == "cutoff":
                res = regfin.finite_part_cutoff_limit(e, regfin.HardCutoff(1.0), spec, q, b, args.tol)
            else:
                res = regfin.finite_part_cutoff_limit(e, _partner(args, e), spec, q, b, args.tol)
            results.append(res)
        values = [r.value for r in results]
        discrepancy = max(values) - min(values)
        for res in results:
            rows.append({
                "q": q,
                "point": spec.point,
                "order": spec.order,
                "method": res.method.value,
                "value": res.value,
                "abs_error_estimate": res.abs_error_estimate,
                "regulator_scale": res.regulator_scale,
                "subtraction_terms": [[n, c] for n, c in res.subtraction_terms],
                "max_discrepancy": discrepancy,
            })
    report = _base(args, "finite-part")
    report["rows"] = rows
    emit(report, args)
    return EXIT_OK


def cmd_renorm(args) -> int:
    e = _integrand(args)
    b = _bindings(args) or {"m": 1.0}
    row: dict[str, Any] = {"mode": args.mode, "q": args.q, "q_s": args.point}
    if args.mode == "additive":
        model = renorm.AdditiveModel(args.mu, e, b)
        row["mu_R"] = renorm.running_mu(model, args.point, args.tol)
        row["finite_part"] = renorm.finite_part(model, args.q, args.point, args.tol)
        row["E"] = renorm.observable_additive(model, args.q, args.point, args.tol)
    else:
        model = renorm.MultiplicativeModel(args.g, e, b)
        row["g_R"] = renorm.running_g(model, args.point, args.tol)
        row["finite_part"] = renorm.finite_part(model, args.q, args.point, args.tol)
        row["E"] = renorm.observable_multiplicative(model, args.q, args.point, args.tol)
    if args.cutoff is not None:
        row["cutoff"] = args.cutoff
        row["bare"] = renorm.running_bare(model, regfin.HardCutoff(args.cutoff), args.point, args.tol)
    report = _base(args, "renorm")
    report["bindings"] = b
    report["rows"] = [row]
    emit(report, args)
    return EXIT_OK


def cmd_rg_flow(args) -> int:
    e = _integrand(args)
    b = _bindings(args) or {"m": 1.0}
    table = renorm.rg_flow(
        renorm.AdditiveModel(args.mu, e, b),
        renorm.MultiplicativeModel(args.g, e, b),
        args.grid,
        args.tol,
    )
    report = _base(args, "rg-flow")
    report["bindings"] = b
    report["rows"] = [
        {"q_s": r.q_s, "delta": r.delta, "mu_R": r.mu_R, "g_R": r.g_R} for r in table.rows
    ]
    emit(report, args)
    return EXIT_OK


def cmd_check(args) -> int:
    e = _integrand(args)
    b = _bindings(args)
    tol = args.tol
    spec = regfin.SubtractionSpec(_order(args, e), args.point)
    rows = []

    def record(name, passed, detail, value=None):
        rows.append({"check": name, "passed": passed, "value": value, "detail": detail})

    omega = divergence.sdd(e)
    if math.isfinite(omega):
        slope = divergence.verify_sdd_numeric(e, b, args.q_grid[0])
        record("sdd_numeric", abs(slope - omega) < 0.05, f"omega={omega}", slope)

    try:
        cross = regfin.cross_regulator_check(e, spec, args.q_grid, b, tol, args.partner)
        record("cross_regulator", True, f"max discrepancy over q={args.q_grid}", cross.max_discrepancy)
    except RegulatorDisagreement as exc:
        record("cross_regulator", False, str(exc), exc.discrepancy)

    for reg in (regfin.HardCutoff(args.cutoff), _partner(args, e)):
        label = type(reg).__name__
        sym = regfin.symmetry_check(e, args.flip, reg, args.q_grid[0], b, tol, spec)
        # the regularized value and its subtraction terms must share the verdict
        consistent = sym.classification == sym.subtraction_classification
        detail = (f"{label}: value {sym.classification.value}, "
                  f"subtraction {sym.subtraction_classification.value}")
        if sym.flipped_poles:
            detail += f", flipped poles at p={list(sym.flipped_poles)}"
        record(f"symmetry_{label}", consistent, detail)

    if omega <= 0:
        model = renorm.AdditiveModel(0.0, e, b)
        resid = renorm.rg_residual(model, args.q_grid[0], args.rg_grid, tol)
        bound = max(1e-7, 1e3 * tol)
        record("rg_additive", resid < bound, f"bound {bound:g}", resid)

    report = _base(args, "check")
    report["rows"] = rows
    emit(report, args)
    failed = [r["check"] for r in rows if not r["passed"]]
    if failed:
        raise CheckFailed(f"failed checks: {', '.join(failed)}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divlim",
        description="Regularization, finite parts and renormalization of divergent "
                    "half-line integrals of rational integrands.",
        epilog=f"Exit codes: 0 ok, 2 parse error, 3 evaluation error, 4 precondition, "
               f"5 consistency check failed. {TOL_ENV} overrides the default tolerance.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--m", type=float, default=None, help="value of the parameter m")
    common.add_argument("--param", type=binding, action="append", metavar="NAME=VALUE",
                        help="bind any other parameter (repeatable)")
    common.add_argument("--tol", type=positive_float, default=default_tol(),
                        help=f"absolute tolerance (default %(default)g; env {TOL_ENV})")
    common.add_argument("--format", choices=["table", "json", "csv"], default="table",
                        help="output format (default %(default)s)")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")

    partner = argparse.ArgumentParser(add_help=False)
    partner.add_argument("--partner", default=regfin.DEFAULT_PARTNER,
                         help="partner integrand in the scale M (default %(default)s)")
    partner.add_argument("--M", type=positive_float, default=100.0,
                         help="partner scale for fixed-scale evaluations (default %(default)g)")

    p = sub.add_parser("analyze", parents=[common], help="superficial degree of divergence")
    p.add_argument("integrand")
    p.add_argument("--q", type=float, default=1.0, help="external momentum (default %(default)g)")
    p.add_argument("--p0", type=positive_float, default=1.0,
                   help="base point of the numeric scaling check (default %(default)g)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("regularize", parents=[common, partner], help="regularized integrals")
    p.add_argument("integrand")
    p.add_argument("--q", type=float, default=1.0, help="external momentum (default %(default)g)")
    p.add_argument("--q-grid", type=grid, help="sweep q instead of a single --q")
    p.add_argument("--scheme", choices=["cutoff", "partner", "both"], default="both")
    p.add_argument("--cutoff", type=positive_float, default=1e6,
                   help="hard cutoff Lambda (default %(default)g)")
    p.set_defaults(func=cmd_regularize)

    p = sub.add_parser("finite-part", parents=[common, partner], help="regulator-independent finite part")
    p.add_argument("integrand")
    p.add_argument("--q", type=float, default=1.0, help="external momentum (default %(default)g)")
    p.add_argument("--q-grid", type=grid, help="sweep q instead of a single --q")
    p.add_argument("--order", type=int, default=None,
                   help="subtraction order k (default max(omega, 0))")
    p.add_argument("--point", type=float, default=0.0, help="subtraction point q_s (default 0)")
    p.add_argument("--methods", type=_methods, default=["direct"],
                   help="comma list of direct,cutoff,partner or 'all' (default direct)")
    p.set_defaults(func=cmd_finite_part)

    p = sub.add_parser("renorm", parents=[common], help="renormalized observables")
    p.add_argument("integrand", nargs="?", default=regfin.DEFAULT_INTEGRAND,
                   help="default %(default)s")
    p.add_argument("--mode", choices=["additive", "multiplicative"], default="additive")
    p.add_argument("--mu", type=float, default=0.0, help="mu_R at q_s=0 (default %(default)g)")
    p.add_argument("--g", type=float, default=0.01, help="g_R at q_s=0 (default %(default)g)")
    p.add_argument("--q", type=float, default=1.0, help="external momentum (default %(default)g)")
    p.add_argument("--point", type=float, default=0.0, help="subtraction point q_s (default 0)")
    p.add_argument("--cutoff", type=positive_float, default=None,
                   help="also report the bare parameter at this hard cutoff")
    p.set_defaults(func=cmd_renorm)

    p = sub.add_parser("rg-flow", parents=[common], help="running parameters over q_s")
    p.add_argument("integrand", nargs="?", default=regfin.DEFAULT_INTEGRAND,
                   help="default %(default)s")
    p.add_argument("--mu", type=float, default=0.0, help="mu_R at q_s=0 (default %(default)g)")
    p.add_argument("--g", type=float, default=0.01, help="g_R at q_s=0 (default %(default)g)")
    p.add_argument("--grid", type=grid, required=True, help="q_s grid, start:stop:step or a,b,c")
    p.set_defaults(func=cmd_rg_flow)

    p = sub.add_parser("check", parents=[common, partner], help="run the consistency suite")
    p.add_argument("integrand")
    p.add_argument("--q-grid", type=grid, default=[0.1, 1.0, 10.0],
                   help="q values for the cross-regulator check (default 0.1,1,10)")
    p.add_argument("--order", type=int, default=None,
                   help="subtraction order k (default max(omega, 0))")
    p.add_argument("--point", type=float, default=0.0, help="subtraction point q_s (default 0)")
    p.add_argument("--cutoff", type=positive_float, default=1e6,
                   help="hard cutoff for the symmetry check (default %(default)g)")
    p.add_argument("--flip", default="m", help="parameter flipped in the symmetry check (default m)")
    p.add_argument("--rg-grid", type=grid, default=[0.0, 0.5, 1.0, 2.0],
                   help="q_s grid for the RG residual (default 0,0.5,1,2)")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        code, kind, err = EXIT_PARSE, "parse error", exc
    except PreconditionError as exc:
        code, kind, err = EXIT_PRECONDITION, "precondition", exc
    except ConsistencyError as exc:
        code, kind, err = EXIT_CONSISTENCY, "consistency check failed", exc
    except EvaluationError as exc:
        code, kind, err = EXIT_EVAL, "evaluation error", exc
    except (ValueError, KeyError) as exc:
        code, kind, err = EXIT_PRECONDITION, "invalid input", exc
    print(f"divlim: {kind}: {err}", file=sys.stderr)
    return code

if __name__ == "__main__":
    sys.exit(main())
