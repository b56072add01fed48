"""Command-line front end: ``ensemble-spectra <subcommand> ...``.

Every subcommand writes either CSV or a JSON object with the keys
``tool_version``, ``config``, ``results`` and ``checks``.  Exit codes:
0 success, 1 a check failed, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import __version__
from .densities import EnsembleSpec, QuadratureError, density_eval
from .expansion import PrecisionOverflowError, gse_goe_expand, gue_expand
from .mgf import ConventionError, mgf_eval, mgf_expansion_1n, moments_from_mgf
from .poly import Poly
from .sampler import KramersPairingError, SampleConfig, empirical_trace_mean

PRECISION_ENV = "ENSEMBLE_SPECTRA_PRECISION_BITS"


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# formatting
# --------------------------------------------------------------------------

def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def fmt_fraction(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits; non-finite floats become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, Fraction):
        return json.dumps(fmt_fraction(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {to_json(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _report(config: dict, results, checks=()) -> dict:
    return {"tool_version": __version__, "config": config, "results": results,
            "checks": [c if isinstance(c, dict) else c.as_dict() for c in checks]}


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _kind(text: str) -> str:
    k = text.upper()
    if k not in ("GOE", "GUE", "GSE"):
        raise argparse.ArgumentTypeError(f"unknown ensemble {text!r} (choose goe, gue or gse)")
    return k


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _sigma2_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"sigma2 must be a positive number or 'auto', got {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError("sigma2 must be positive")
    return v


def _grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    try:
        start, stop, pts = float(parts[0]), float(parts[1]), int(parts[2])
        if len(parts) != 3:
            raise ValueError
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"grid must be start:stop:points, got {text!r}") from None
    if pts < 2:
        raise argparse.ArgumentTypeError("grid needs at least 2 points")
    if not stop > start:
        raise argparse.ArgumentTypeError("grid needs stop > start")
    return start, stop, pts


_MONO = re.compile(r"^\s*x\s*(?:\^\s*(\d+))?\s*$")


def parse_poly(text: str) -> Poly:
    """``x^k`` / ``x`` or comma-separated rational coefficients, lowest degree first."""
    m = _MONO.match(text)
    if m:
        return Poly.monomial(int(m.group(1) or 1), Fraction(1))
    try:
        return Poly([Fraction(c.strip()) for c in text.split(",")])
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(
            f"test function must be 'x^k' or comma-separated coefficients, got {text!r}") from None


def _precision(text: str):
    if text == "exact":
        return None
    v = _positive_int(text)
    if v < 64:
        raise argparse.ArgumentTypeError("precision must be at least 64 bits")
    return v


def _add_ensemble(p: argparse.ArgumentParser, sigma2: bool = True) -> None:
    p.add_argument("--kind", type=_kind, required=True, help="goe, gue or gse")
    p.add_argument("--n", type=_positive_int, required=True, help="matrix order")
    if sigma2:
        p.add_argument("--sigma2", type=_sigma2_arg, default="auto",
                       help="entry variance scale, or 'auto' for 1/n (default)")


def _add_output(p: argparse.ArgumentParser, formats=("json",)) -> None:
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--output", help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ensemble-spectra",
        description="Mean spectral densities, moment generating functions and 1/n^2 "
                    "expansions of the Gaussian ensembles.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="evaluate the mean density on a grid")
    _add_ensemble(p)
    p.add_argument("--grid", type=_grid, required=True, help="start:stop:points")
    p.add_argument("--deriv", type=int, choices=range(4), default=0)
    p.add_argument("--normalization", choices=("mean_count", "probability"), default="mean_count")
    _add_output(p, ("csv", "json"))

    p = sub.add_parser("mgf", help="moment generating function value or 1/n table")
    _add_ensemble(p)
    p.add_argument("--s", type=float, required=True, help="Laplace variable")
    p.add_argument("--convention", choices=("mass_consistent", "as_printed"), default="mass_consistent")
    p.add_argument("--normalization", choices=("mean_count", "probability"), default="mean_count")
    p.add_argument("--expansion", action="store_true",
                   help="also tabulate the 1/n partial sums (GUE/GSE, sigma2 = 1/n)")
    p.add_argument("--terms", type=_positive_int, help="number of 1/n partial sums to keep")
    _add_output(p)

    p = sub.add_parser("expand", help="1/n^2 expansion of (1/n) E Tr g(X) at sigma2 = 1/n")
    _add_ensemble(p, sigma2=False)
    p.add_argument("--g", type=parse_poly, default=parse_poly("x^2"),
                   help="'x^k' or coefficients c0,c1,... (default x^2)")
    p.add_argument("--J", type=int, default=6, help="highest order (GSE/GOE)")
    p.add_argument("--D", type=_positive_int, help="truncation degree of the auxiliary series")
    p.add_argument("--precision-bits", type=_precision,
                   help=f"working bits or 'exact' (default exact; env {PRECISION_ENV})")
    p.add_argument("--convention", choices=("corrected", "as_printed"), default="corrected")
    p.add_argument("--seeds", choices=("auto", "zero", "bounded"), default="auto")
    p.add_argument("--doubling", action="store_true", help="recompute with 2D and report the shift")
    p.add_argument("--no-reference", action="store_true", help="skip the quadrature reference")
    _add_output(p, ("json", "csv"))

    p = sub.add_parser("moments", help="exact rational moments")
    _add_ensemble(p)
    p.add_argument("--upto", type=int, default=4, help="highest even moment order (<= 40)")
    p.add_argument("--convention", choices=("mass_consistent", "as_printed"), default="mass_consistent")
    p.add_argument("--normalization", choices=("probability", "mean_count"), default="probability")
    _add_output(p)

    p = sub.add_parser("sample", help="Monte Carlo estimate of (1/n) E Tr g(X)")
    _add_ensemble(p)
    p.add_argument("--count", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--convention", choices=("mehta_consistent", "paper_definition"),
                   default="mehta_consistent")
    p.add_argument("--g", type=parse_poly, default=parse_poly("x^2"))
    _add_output(p)

    p = sub.add_parser("verify", help="run the invariant suite")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--fast", dest="mode", action="store_const", const="fast")
    mode.add_argument("--full", dest="mode", action="store_const", const="full")
    p.add_argument("--quiet", action="store_true", help="no progress on stderr")
    _add_output(p)
    p.set_defaults(mode="fast")
    return parser


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _resolve_sigma2(args) -> Fraction:
    return Fraction(1, args.n) if args.sigma2 == "auto" else args.sigma2


def _numeric_failure(name: str, exc: Exception) -> dict:
    return {"name": name, "status": "fail", "measured": None, "tolerance": None,
            "detail": {"error": f"{type(exc).__name__}: {exc}"}}


def cmd_density(args) -> tuple[str, int]:
    s2 = _resolve_sigma2(args)
    start, stop, pts = args.grid
    xs = np.linspace(start, stop, pts)
    spec = EnsembleSpec(args.kind, args.n, float(s2), args.normalization)
    vals = density_eval(spec, xs, args.deriv)
    if args.format == "csv":
        return _csv(["x", "value"], ([fmt_float(x), fmt_float(v)] for x, v in zip(xs, vals))), 0
    config = {"command": "density", "kind": args.kind, "n": args.n, "sigma2": s2,
              "grid": {"start": start, "stop": stop, "points": pts},
              "deriv": args.deriv, "normalization": args.normalization}
    return to_json(_report(config, {"x": xs.tolist(), "value": vals.tolist()})) + "\n", 0


def cmd_mgf(args) -> tuple[str, int]:
    s2 = _resolve_sigma2(args)
    config = {"command": "mgf", "kind": args.kind, "n": args.n, "sigma2": s2, "s": args.s,
              "convention": args.convention, "normalization": args.normalization,
              "expansion": args.expansion, "terms": args.terms}
    checks = []
    results: dict = {}
    try:
        results["value"] = mgf_eval(args.kind, args.n, s2, args.s, args.convention, args.normalization)
    except ConventionError as exc:
        raise UsageError(str(exc)) from None
    except ArithmeticError as exc:
        results["value"] = None
        checks.append(_numeric_failure("mgf_eval", exc))
    if args.expansion:
        if args.kind == "GOE" or s2 != Fraction(1, args.n):
            raise UsageError("the 1/n table is available for GUE and GSE at sigma2 = 1/n")
        partials = mgf_expansion_1n(args.kind, args.s, args.n, args.terms, args.convention)
        if args.normalization == "probability":
            partials = [p / args.n for p in partials]
        results["partials"] = partials
    code = 1 if checks else 0
    return to_json(_report(config, results, checks)) + "\n", code


def _env_precision():
    raw = os.environ.get(PRECISION_ENV)
    if raw is None or raw == "":
        return None
    try:
        return _precision(raw)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"{PRECISION_ENV}: {exc}") from None


def cmd_expand(args) -> tuple[str, int]:
    bits = args.precision_bits if args.precision_bits is not None else _env_precision()
    config = {"command": "expand", "kind": args.kind, "n": args.n,
              "g": [fmt_fraction(c) for c in args.g.coeffs], "J": args.J, "D": args.D,
              "precision_bits": bits, "convention": args.convention, "seeds": args.seeds,
              "doubling": args.doubling, "reference": not args.no_reference}
    checks = []
    if args.kind == "GUE":
        rep = gue_expand(args.g, args.n)
        results = rep.as_dict()
        results["exact_terms"] = [fmt_fraction(t) for t in rep.exact_terms]
    else:
        if args.J < 0:
            raise UsageError("J must be non-negative")
        try:
            rep = gse_goe_expand(args.g, args.n, args.kind, J=args.J, D=args.D, precision_bits=bits,
                                 convention=args.convention, reference=not args.no_reference,
                                 check_doubling=args.doubling, seeds=args.seeds)
        except (PrecisionOverflowError, QuadratureError) as exc:
            return to_json(_report(config, None, [_numeric_failure("expansion", exc)])) + "\n", 1
        results = rep.as_dict()
        if rep.diagnostics.get("divergent"):
            checks.append({"name": "expansion_terms_decrease", "status": "fail",
                           "measured": rep.diagnostics["ratios"], "tolerance": None})
        if args.doubling:
            shift = rep.diagnostics["doubling_shift"]
            checks.append({"name": "doubling_shift", "status": "pass" if shift < 1e-6 else "fail",
                           "measured": shift, "tolerance": 1e-6})
    code = 1 if any(c["status"] == "fail" for c in checks) else 0
    if args.format == "csv":
        rows = ([j, fmt_float(t), fmt_float(p)] for j, (t, p) in enumerate(zip(rep.terms, rep.partials)))
        return _csv(["j", "term", "partial"], rows), code
    return to_json(_report(config, results, checks)) + "\n", code


def cmd_moments(args) -> tuple[str, int]:
    s2 = _resolve_sigma2(args)
    if args.upto < 0 or args.upto % 2 or args.upto > 40:
        raise UsageError("--upto must be an even integer between 0 and 40")
    try:
        moms = moments_from_mgf(args.kind, args.n, s2, args.upto, args.convention, args.normalization)
    except ConventionError as exc:
        raise UsageError(str(exc)) from None
    config = {"command": "moments", "kind": args.kind, "n": args.n, "sigma2": s2, "upto": args.upto,
              "convention": args.convention, "normalization": args.normalization}
    results = {f"m{k}": fmt_fraction(m) for k, m in enumerate(moms)}
    return to_json(_report(config, results)) + "\n", 0


def cmd_sample(args) -> tuple[str, int]:
    s2 = _resolve_sigma2(args)
    if not 0 <= args.seed < 2**64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    if args.g.degree > 16:
        raise UsageError("test polynomials are limited to degree 16")
    cfg = SampleConfig(args.kind, args.n, float(s2), args.count, args.seed, args.convention)
    config = {"command": "sample", "kind": args.kind, "n": args.n, "sigma2": s2, "count": args.count,
              "seed": args.seed, "convention": args.convention,
              "g": [fmt_fraction(c) for c in args.g.coeffs]}
    try:
        stats = empirical_trace_mean(cfg, args.g)
    except KramersPairingError as exc:
        return to_json(_report(config, None, [_numeric_failure("kramers_pairing", exc)])) + "\n", 1
    results = {"mean": stats.mean, "stderr": stats.stderr, "count": stats.count}
    return to_json(_report(config, results)) + "\n", 0


def cmd_verify(args) -> tuple[str, int]:
    from .verify import run_suite

    progress = None if args.quiet else (lambda name: print(f"running {name}", file=sys.stderr, flush=True))
    checks, runtimes = run_suite(args.mode, progress)
    failed = [c.name for c in checks if not c.passed]
    results = {"mode": args.mode, "passed": len(checks) - len(failed), "failed": failed,
               "runtime_seconds": runtimes}
    config = {"command": "verify", "mode": args.mode}
    return to_json(_report(config, results, checks)) + "\n", 1 if failed else 0


COMMANDS = {
    "density": cmd_density,
    "mgf": cmd_mgf,
    "expand": cmd_expand,
    "moments": cmd_moments,
    "sample": cmd_sample,
    "verify": cmd_verify,
}


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run the subcommand and return the exit code."""
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # grid specs such as -3:3:601 start with a dash; bind them to the flag
    for i in range(len(argv) - 2, -1, -1):
        if argv[i] == "--grid" and argv[i + 1].startswith("-"):
            argv[i:i + 2] = [f"--grid={argv[i + 1]}"]
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        text, code = COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"ensemble-spectra {args.command}: error: {exc}", file=sys.stderr)
        return 2
    _emit(text, getattr(args, "output", None))
    return code


def main() -> None:
    sys.exit(run())
