"""Command-line front end: ``deltawv <command> [flags]``.

Every report embeds the resolved configuration.  Reports are written
atomically; a ``<out>.meta.json`` sidecar carries the timestamp so the
report itself is byte-identical across identical runs.

Exit codes: 0 PASS/complete, 1 FAIL, 2 usage or configuration error,
3 numeric trouble (precision exhausted, non-convergence, inconclusive).
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys
import tempfile
from typing import Optional, Sequence

from . import __version__
from ._numeric import DEFAULT_PREC, MIN_PREC, geometric_grid, serialize
from .errors import ConfigurationError, NumericError, ValidationError

DIGITS = 30
PREC_ENV = "DELTAWV_PREC"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _env_prec() -> int:
    raw = os.environ.get(PREC_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_PREC
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(f"{PREC_ENV} must be an integer, got {raw!r}") from None
    return value


def _eta(text: str):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) == 1:
        from fractions import Fraction

        try:
            v = Fraction(parts[0])
        except (ValueError, ZeroDivisionError):
            raise argparse.ArgumentTypeError(f"bad eta {text!r}") from None
        return int(v) if v.denominator == 1 else v
    if len(parts) == 2:
        try:
            return complex(float(parts[0]), float(parts[1]))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad eta {text!r}") from None
    raise argparse.ArgumentTypeError(f"bad eta {text!r}")


def _number_list(text: str) -> list:
    out = []
    for p in text.split(","):
        p = p.strip()
        if not p:
            continue
        try:
            v = float(p)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad number {p!r}") from None
        out.append(int(v) if v.is_integer() and "e" not in p.lower() and "." not in p else v)
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _grid_flags(p, rmin, rmax, points):
    p.add_argument("--rmin", type=float, default=rmin)
    p.add_argument("--rmax", type=float, default=rmax)
    p.add_argument("--points", type=int, default=points)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="deltawv", description="Difference-operator and Wiman-Valiron numerics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p, fmt=("json",)):
        p.add_argument("--prec", type=int, default=None, help=f"bits (default ${PREC_ENV} or {DEFAULT_PREC})")
        p.add_argument("--out", default=None, help="report path (stdout when omitted)")
        p.add_argument("--format", choices=fmt, default=fmt[0])

    p = sub.add_parser("stirling", help="dump the Stirling triangle S(n, m)")
    p.add_argument("--nmax", type=int, required=True)
    common(p, ("csv", "json"))

    p = sub.add_parser("expand", help="truncated Stirling expansion of Delta^n f / f at one point")
    p.add_argument("--func", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--eta", type=_eta, default=1)
    p.add_argument("--z", type=_number_list, required=True)
    common(p)

    for name, helptext in (("verify-expansion", "decay of the truncated expansion"),
                           ("verify-first", "first-difference case n = 1")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--func", required=True)
        if name == "verify-expansion":
            p.add_argument("--n", type=int, required=True)
        p.add_argument("--N", type=int, required=True)
        p.add_argument("--eta", type=_eta, default=1)
        p.add_argument("--eps", type=float, default=0.05)
        _grid_flags(p, 1e2, 1e6, 9)
        p.add_argument("--gnuplot", default=None, help="write log r, log err columns here")
        common(p)

    p = sub.add_parser("wv-report", help="maximal term, central index and M(r) profile")
    p.add_argument("--func", required=True)
    p.add_argument("--circle-samples", type=int, default=256)
    _grid_flags(p, 1e2, 1e6, 9)
    common(p)

    p = sub.add_parser("verify-wv", help="Delta^k f / f against (nu/r)^k")
    p.add_argument("--func", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.05)
    _grid_flags(p, 1e3, 1e7, 9)
    common(p)

    p = sub.add_parser("counterexample-gamma", help="1/Gamma first difference against 1/z - 1")
    p.add_argument("--z", type=_number_list, default=[2, 10, 50])
    p.add_argument("--eps", type=float, default=0.05)
    common(p)

    p = sub.add_parser("polygon", help="Newton polygon of a difference equation")
    p.add_argument("--eq", required=True)
    common(p)

    p = sub.add_parser("solve", help="minimal Newton-series solution and growth fit")
    p.add_argument("--eq", required=True)
    p.add_argument("--terms", type=int, default=None)
    p.add_argument("--fit", action="store_true", help="run the growth fit and residual check")
    _grid_flags(p, 1e3, 1e7, 9)
    common(p)
    return parser


# -- commands ------------------------------------------------------------------


def _grid(args):
    if args.points < 2 or not 0 < args.rmin < args.rmax:
        raise ConfigurationError("need 0 < rmin < rmax and points >= 2")
    return geometric_grid(args.rmin, args.rmax, args.points)


def _series(name):
    from .series_core import builtin

    return builtin(name)


def _cmd_stirling(args, prec):
    from .stirling import build_table

    if args.nmax < 1:
        raise ConfigurationError("--nmax must be >= 1")
    table = build_table(args.nmax)
    text = table.to_csv() if args.format == "csv" else table.to_json()
    return text, EXIT_OK


def _cmd_expand(args, prec):
    from .stirling import expansion

    f = _series(args.func)
    if not args.N >= args.n >= 1:
        raise ConfigurationError("need N >= n >= 1")
    rows = [{"z": serialize(z, DIGITS), "value": serialize(expansion(f, args.n, args.N, args.eta, z, prec), DIGITS)}
            for z in args.z]
    return {"f_name": f.name, "rows": rows}, EXIT_OK


def _status_code(status: str) -> int:
    return {"PASS": EXIT_OK, "FAIL": EXIT_FAIL}.get(status, EXIT_NUMERIC)


def _gnuplot(report, path):
    lines = ["# log(r) log(abs_err)"]
    for row in sorted(report.rows, key=lambda row: float(row.r)):
        err = float(row.abs_err)
        if err > 0 and math.isfinite(math.log(err)):
            lines.append(f"{math.log(float(row.r)):.17g} {math.log(err):.17g}")
    _atomic_write(path, "\n".join(lines) + "\n")


def _cmd_verify(args, prec):
    from .verifier import verify_expansion

    f = _series(args.func)
    n = args.n if args.command == "verify-expansion" else 1
    if not args.N >= n >= 1:
        raise ConfigurationError("need N >= n >= 1")
    kind = "expansion" if args.command == "verify-expansion" else "first-difference"
    rep = verify_expansion(f, n, args.N, args.eta, _grid(args), args.eps, prec, kind=kind)
    if args.gnuplot:
        _gnuplot(rep, args.gnuplot)
    return rep.to_dict(DIGITS), _status_code(rep.status)


def _cmd_wv_report(args, prec):
    from .wiman_valiron import wv_profile

    f = _series(args.func)
    grid = _grid(args)
    prof = wv_profile(f, grid, prec, args.circle_samples, fit_order=len(grid) >= 2)
    return prof.to_dict(DIGITS), EXIT_OK


def _cmd_verify_wv(args, prec):
    from .verifier import verify_wv_difference

    if args.k < 1:
        raise ConfigurationError("--k must be >= 1")
    rep = verify_wv_difference(_series(args.func), args.k, _grid(args), args.eps, prec)
    return rep.to_dict(DIGITS), _status_code(rep.status)


def _cmd_gamma(args, prec):
    from .verifier import gamma_counterexample

    rows = gamma_counterexample(args.z, prec, args.eps)
    ok = all(row.match for row in rows)
    return {"rows": [row.to_dict(DIGITS) for row in rows], "all_match": ok}, EXIT_OK if ok else EXIT_FAIL


def _cmd_polygon(args, prec):
    from .difference_eq import load_equation, newton_polygon

    eq = load_equation(args.eq)
    return {"equation": eq.describe(), **newton_polygon(eq).to_dict()}, EXIT_OK


def _cmd_solve(args, prec):
    from .difference_eq import (
        binomial_recurrence,
        default_terms,
        load_equation,
        newton_polygon,
        solve_minimal,
        verify_regular_growth,
    )

    eq = load_equation(args.eq)
    grid = _grid(args)
    if args.fit:
        rep = verify_regular_growth(eq, args.terms, grid, prec)
        return rep.to_dict(DIGITS), _status_code(rep.status)
    poly = newton_polygon(eq)
    rec = binomial_recurrence(eq)
    chi = float(max(poly.predicted_orders)) if poly.predicted_orders else 0.5
    terms = args.terms or max(500, default_terms(chi, args.rmax))
    sol = solve_minimal(rec, terms, prec=prec)
    return {
        "equation": eq.describe(),
        "predicted_orders": [str(c) for c in poly.predicted_orders],
        "recurrence": rec.to_dict(),
        "solution": sol.to_dict(DIGITS),
    }, EXIT_OK


COMMANDS = {
    "stirling": _cmd_stirling,
    "expand": _cmd_expand,
    "verify-expansion": _cmd_verify,
    "verify-first": _cmd_verify,
    "wv-report": _cmd_wv_report,
    "verify-wv": _cmd_verify_wv,
    "counterexample-gamma": _cmd_gamma,
    "polygon": _cmd_polygon,
    "solve": _cmd_solve,
}


# -- output --------------------------------------------------------------------


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".deltawv-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _config_value(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (str, bool, int, type(None))):
        return v
    if isinstance(v, list):
        return [_config_value(x) for x in v]
    return serialize(v, DIGITS)


def _config(args, prec) -> dict:
    cfg = {k: _config_value(v) for k, v in sorted(vars(args).items()) if k != "out"}
    cfg["prec"] = prec
    cfg["digits"] = DIGITS
    return cfg


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    """Parse ``argv``, run the command, write the report; return the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        prec = args.prec if args.prec is not None else _env_prec()
        if prec < MIN_PREC:
            raise ConfigurationError(f"precision must be >= {MIN_PREC} bits")
        payload, code = COMMANDS[args.command](args, prec)
    except _UsageError as exc:
        print(exc, file=stderr)
        return EXIT_USAGE
    except (ConfigurationError, ValidationError) as exc:
        print(f"deltawv: {exc}", file=stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"deltawv: numeric error: {exc}", file=stderr)
        return EXIT_NUMERIC
    if isinstance(payload, dict):
        text = json.dumps({"config": _config(args, prec), "report": payload}, indent=2) + "\n"
    else:
        text = payload
    if args.out:
        _atomic_write(args.out, text)
        meta = {
            "report": os.path.basename(args.out),
            "created": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
            "version": __version__,
        }
        _atomic_write(args.out + ".meta.json", json.dumps(meta, indent=2) + "\n")
    else:
        stdout.write(text)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    code = run(argv)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
