"""Command-line front end.

Every verb prints one JSON document on stdout (``scan`` prints CSV and
``partitions`` one partition per line).  Exit codes: 0 success, 1 parameter or
I/O error, 2 soundness violation found by ``verify``.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .criteria import CriterionContext, Theorem3Basis, build_k_alpha, detect, parse_basis_file
from .oracle import enumerate_k_partitions, soundness_scan
from .qstate import DensityMatrix, NoiseFamily, StateError, parse_bitstring, parse_state_file
from .threshold import (
    affine_fit,
    bisection_threshold,
    closed_form_threshold,
    scan,
    scan_csv,
)

SCHEMA = 1

# the four-qubit product basis used in the worked three-criterion example
DEFAULT_T3_STATES = ("0011", "0101", "0110", "1010")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 instead of argparse's 2
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _float17(f: float) -> str:
    if f != f or f in (float("inf"), float("-inf")):
        raise ValueError(f"non-finite value {f!r} in output")
    return format(f, ".17g")


class _Encoder(json.JSONEncoder):
    """JSON with every float printed at 17 significant digits."""

    def iterencode(self, o, _one_shot=False):
        # the C encoder hard-codes float.__repr__; the pure-Python one accepts floatstr
        return json.encoder._make_iterencode(
            {}, self.default, json.encoder.py_encode_basestring_ascii, self.indent, _float17,
            self.key_separator, self.item_separator, self.sort_keys, self.skipkeys, True,
        )(o, 0)


def dumps(doc: dict) -> str:
    return json.dumps({"schema": SCHEMA, **doc}, cls=_Encoder)


def _rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


# --------------------------------------------------------------------------
# argument helpers


def _add_state_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--state", type=Path, help="state file (JSON)")
    p.add_argument("--family", choices=["dicke"], help="built-in noise family instead of --state")
    p.add_argument("--n", type=int, help="qubit count for --family")
    p.add_argument("--m", type=int, help="excitations (family and criterion t2)")


def _add_criterion_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--criterion", choices=["t1", "t2", "t3"], default="t1", help="criterion")
    p.add_argument("--k", type=int, required=True, help="separability order k")
    p.add_argument("--basis", type=Path, help="basis-set file for t3 (default: the 4-qubit example set)")


def _load_state(args) -> Union[DensityMatrix, NoiseFamily]:
    if args.state is not None and args.family is not None:
        raise UsageError("give either --state or --family, not both")
    if args.state is not None:
        return parse_state_file(args.state.read_bytes())
    if args.family == "dicke":
        if args.n is None or args.m is None:
            raise UsageError("--family dicke needs --n and --m")
        return NoiseFamily.dicke(args.n, args.m)
    raise UsageError("one of --state or --family is required")


def _load_basis(args, n: int) -> Theorem3Basis:
    if args.basis is not None:
        return parse_basis_file(args.basis.read_bytes())
    if n != 4:
        raise UsageError("criterion t3 needs --basis unless n = 4")
    return build_k_alpha([parse_bitstring(s, 4) for s in DEFAULT_T3_STATES], n_qubits=4)


def _context(args, n: int, family: Optional[NoiseFamily] = None) -> CriterionContext:
    if args.criterion == "t2":
        m = args.m
        if m is None and family is not None:
            weights = {b.bit_count() for b in family.base.amplitudes}
            if len(weights) == 1:
                m = weights.pop()
        if m is None:
            raise UsageError("criterion t2 needs --m")
        return CriterionContext(n, args.k, "t2", m=m)
    if args.criterion == "t3":
        return CriterionContext(n, args.k, "t3", basis=_load_basis(args, n))
    return CriterionContext(n, args.k, "t1")


def _grid(args) -> list[float]:
    if args.grid:
        try:
            return [float(Fraction(tok)) for tok in args.grid.split(",") if tok.strip()]
        except ValueError as exc:
            raise UsageError(f"bad --grid: {exc}") from None
    return [float(x) for x in np.linspace(0.0, 1.0, args.points)]


# --------------------------------------------------------------------------
# verbs


def cmd_eval(args, out) -> int:
    obj = _load_state(args)
    family = obj if isinstance(obj, NoiseFamily) else None
    if family is not None:
        if args.a is None:
            raise UsageError("noise families need --a")
        rho = family.realize(args.a)
    else:
        if args.a is not None:
            raise UsageError("--a applies only to noise families")
        rho = obj
    ctx = _context(args, rho.n_qubits, family)
    v = detect(rho, ctx)
    doc = {
        "criterion": ctx.variant,
        "n": rho.n_qubits,
        "k": ctx.k,
        "a": args.a,
        "value": v.value,
        "a_part": v.a_part,
        "b_part": v.b_part,
        "nk": v.nk,
        "verdict": v.verdict,
    }
    out.write(dumps(doc) + "\n")
    return 0


def cmd_threshold(args, out) -> int:
    if args.method == "closed":
        if args.family != "dicke" or args.state is not None:
            raise UsageError("--method closed needs --family dicke")
        if args.n is None or args.m is None:
            raise UsageError("--family dicke needs --n and --m")
        res = closed_form_threshold(args.n, args.m, args.k)
        doc = {
            "method": res.method,
            "n": args.n,
            "m": args.m,
            "k": args.k,
            "nk": res.nk,
            "a_star": _rational(res.exact) if res.in_range else None,
            "a_star_float": res.a_star,
            "root": _rational(res.exact),
        }
    else:
        family = _load_state(args)
        if not isinstance(family, NoiseFamily):
            raise UsageError("bisection needs a noise family, not an explicit density matrix")
        ctx = _context(args, family.n_qubits, family)
        res = bisection_threshold(family, ctx, args.tol)
        doc = {
            "method": res.method,
            "criterion": ctx.variant,
            "n": family.n_qubits,
            "k": ctx.k,
            "nk": res.nk,
            "tol": args.tol,
            "a_star": res.a_star,
            "residual": res.residual,
        }
    out.write(dumps(doc) + "\n")
    return 0


def cmd_scan(args, out) -> int:
    family = _load_state(args)
    if not isinstance(family, NoiseFamily):
        raise UsageError("scan needs a noise family")
    ctx = _context(args, family.n_qubits, family)
    points = scan(family, ctx, _grid(args))
    out.write(scan_csv(points))
    if args.fit and len(points) >= 2:
        slope, intercept, resid = affine_fit(points)
        print(f"fit: slope={slope:.17g} intercept={intercept:.17g} residual={resid:.3g}", file=sys.stderr)
    return 0


def cmd_verify(args, out) -> int:
    if args.n is None:
        raise UsageError("verify needs --n")
    ctx = _context(args, args.n)
    report = soundness_scan(args.n, args.k, ctx, args.trials, args.seed, terms=args.terms)
    doc = {
        "criterion": ctx.variant,
        "n": args.n,
        "k": args.k,
        "nk": ctx.nk,
        "pure_trials": report.pure_trials,
        "mixed_trials": report.mixed_trials,
        "max_pure": report.max_pure,
        "max_mixed": report.max_mixed,
        "max_value": report.max_value,
        "violation": report.violation is not None,
    }
    if report.violation is not None:
        doc["worst_seed"] = list(report.worst_seed)
        doc["worst_kind"] = report.worst_kind
        if args.artifact is not None:
            args.artifact.mkdir(parents=True, exist_ok=True)
            (args.artifact / "state.json").write_text(json.dumps(report.violation["state"]))
            (args.artifact / "report.json").write_text(dumps(report.violation["report"]))
            doc["artifact"] = str(args.artifact)
        print(f"soundness violation: max value {report.max_value!r}", file=sys.stderr)
    out.write(dumps(doc) + "\n")
    return 2 if report.violation is not None else 0


def cmd_partitions(args, out) -> int:
    for p in enumerate_k_partitions(args.n, args.k):
        out.write(f"{p}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="dickesep", description=__doc__.splitlines()[0], formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"dickesep {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate a criterion on one state", formatter_class=fmt)
    _add_state_args(p)
    _add_criterion_args(p)
    p.add_argument("--a", type=float, help="noise parameter in [0, 1] for families")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("threshold", help="white-noise threshold of a family", formatter_class=fmt)
    _add_state_args(p)
    _add_criterion_args(p)
    p.add_argument("--method", choices=["closed", "bisect"], default="closed")
    p.add_argument("--tol", type=float, default=1e-10, help="bisection interval width")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("scan", help="criterion values along a family (CSV)", formatter_class=fmt)
    _add_state_args(p)
    _add_criterion_args(p)
    p.add_argument("--grid", help="comma-separated a values (fractions allowed)")
    p.add_argument("--points", type=int, default=11, help="uniform grid size when --grid is absent")
    p.add_argument("--fit", action="store_true", help="report a least-squares line on stderr")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify", help="random k-separable soundness scan", formatter_class=fmt)
    p.add_argument("--n", type=int, help="qubit count")
    p.add_argument("--m", type=int, help="excitations for criterion t2")
    _add_criterion_args(p)
    p.add_argument("--trials", type=int, default=1000, help="pure-state trials (mixed: trials/10)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--terms", type=int, default=4, help="pure terms per mixed state")
    p.add_argument("--artifact", type=Path, help="directory for violation artifacts")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("partitions", help="list k-partitions of 1..n", formatter_class=fmt)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_partitions)
    return parser


def run(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (StateError, OSError) as exc:
        print(f"dickesep: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
