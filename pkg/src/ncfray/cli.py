"""Command line front end: ``ncfray <subcommand> ...``.

Every subcommand parses its inputs, calls the library and prints the result
on stdout (JSON by default). Errors go to stderr as a JSON object with exit status
1 (usage), 2 (domain) or 3 (precision exhausted).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import cantor, expansions, figure, hallray, spectrum
from .ncf import NcfExpansion, evaluate_ncf, evaluate_rcf, structural_bounds
from .numerics import (
    NumericsError,
    PrecisionExhausted,
    Surd,
    surd_from_periodic_ncf,
    surd_from_periodic_rcf,
)

log = logging.getLogger("ncfray")

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_PRECISION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- input grammar ---------------------------------------------------------

def _ints(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"expected comma separated integers, got {text!r}") from None


def _split_word(text: str) -> tuple[list[int], list[int]]:
    if ";" in text:
        pre, per = text.split(";", 1)
        return _ints(pre), _ints(per)
    return [], _ints(text)


def parse_real(spec: str):
    """``rational:p/q`` (or bare ``p/q``), ``ncf:pre;period`` or ``rcf:pre;period``."""
    kind, _, body = spec.partition(":")
    if not body:
        kind, body = "rational", spec
    if kind == "rational":
        try:
            return Fraction(body)
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"bad rational {body!r}") from None
    if kind == "ncf":
        pre, per = _split_word(body) if ";" in body else (_ints(body), [])
        if per:
            return surd_from_periodic_ncf(pre, per)
        return evaluate_ncf(pre)
    if kind == "rcf":
        pre, per = _split_word(body) if ";" in body else (_ints(body), [])
        if per:
            return surd_from_periodic_rcf(pre, per)
        return evaluate_rcf(pre)
    raise UsageError(f"unknown input kind {kind!r}; use rational:, ncf: or rcf:")


def parse_alpha(spec: str) -> NcfExpansion:
    kind, _, body = spec.partition(":")
    if kind == "ncf" and ";" in body:
        pre, per = _split_word(body)
        if per:
            return NcfExpansion.periodic(pre, per)
    value = parse_real(spec)
    if isinstance(value, Surd) and not value.is_rational:
        return NcfExpansion.from_handle(value)
    return NcfExpansion(value)


def _beta_source(args, alpha: NcfExpansion):
    if getattr(args, "beta_digits", None):
        pre, per = _split_word(args.beta_digits)
        return expansions.DigitWord(tuple(pre), tuple(per))
    if getattr(args, "beta", None):
        return parse_real(args.beta)
    raise UsageError("give --beta or --beta-digits")


def _emit(obj, fmt: str = "json") -> None:
    if fmt == "json":
        sys.stdout.write(json.dumps(obj, indent=2) + "\n")
    else:
        sys.stdout.write(obj if obj.endswith("\n") else obj + "\n")


def _precision(args) -> int:
    if args.precision is not None:
        return args.precision
    return int(os.environ.get("NCFRAY_PRECISION", "256"))


def _s0(alpha: NcfExpansion, depth: int, s_max: int) -> int:
    s0, _ = cantor.find_s0(alpha, depth=depth, s_max=s_max)
    if s0 is None:
        raise NumericsError(f"no s <= {s_max} passes the Hall check to depth {depth}")
    return s0


# -- subcommands ---------------------------------------------------------------

def cmd_ncf(args):
    a = parse_alpha(args.alpha)
    out = {"alpha": a.describe(), **a.to_json(args.n)}
    if a.is_periodic:
        sb = structural_bounds(expansion=a)
        out["bounds"] = {"M": sb.M, "N": sb.N, "L": sb.L, "R": str(sb.R)}
    return out


def cmd_ostrowski(args):
    a = parse_alpha(args.alpha)
    ex = expansions.ostrowski(args.q, a)
    out = ex.to_json()
    out["q"] = args.q
    out["valid"] = expansions.ostrowski_validate(ex.coefficients, a)
    return out


def cmd_davenport(args):
    a = parse_alpha(args.alpha)
    src = _beta_source(args, a)
    if isinstance(src, expansions.DigitWord):
        d = expansions.DavenportDigits(a, word=src)
    else:
        d = expansions.DavenportDigits(a, beta=src)
    out = d.to_json(args.depth)
    enc = expansions.davenport_sum(d, args.depth, a)
    out["sum"] = {"lo": spectrum._dec(enc.lo, 25), "hi": spectrum._dec(enc.hi, 25)}
    out["valid"] = expansions.davenport_validate(d.digits(args.depth), a)
    if a.is_periodic:
        w = expansions.detect_word(d, max_steps=max(args.depth, 400))
        out["word"] = w.to_json() if w is not None else None
    return out


def cmd_spectrum(args):
    a = parse_alpha(args.alpha)
    src = _beta_source(args, a)
    if args.two_sided:
        est = spectrum.two_sided(src, a, args.depth)
    else:
        est = spectrum.mplus_truncated(src, a, args.depth)
    out = est.to_json()
    if args.trace:
        out["trace"] = spectrum.trace(src, a, args.depth).to_json()
    return out


def cmd_oracle(args):
    a = parse_alpha(args.alpha)
    if not isinstance(a.source, Surd) or a.source.is_rational:
        raise NumericsError("alpha is rational: its expansion terminates")
    src = _beta_source(args, a)
    if isinstance(src, expansions.DigitWord):
        src = expansions.word_value(a, src)
    table = spectrum.mplus_oracle(src, a, args.qmax, workers=args.workers)
    return table.to_csv() if args.format == "csv" else table.to_json()


def cmd_dissect(args):
    a = parse_alpha(args.alpha)
    nodes = cantor.dissect(args.kind, a, args.s, args.depth)
    return {"kind": args.kind, "s": args.s, "depth": args.depth,
            "roots": [n.to_json(args.digits) for n in nodes]}


def cmd_hallcheck(args):
    a = parse_alpha(args.alpha)
    if args.s == "auto":
        s0, tried = cantor.find_s0(a, depth=args.depth, s_max=args.s_max)
        return {
            "alpha": a.describe(),
            "depth": args.depth,
            "s0": s0,
            "tried": {str(s): {k: v.to_json() for k, v in r.items()} for s, r in tried.items()},
        }
    s = int(args.s)
    kinds = ("E", "F") if args.kind == "both" else (args.kind,)
    reports = {k: cantor.hall_condition_check(k, args.depth, alpha=a, s=s).to_json() for k in kinds}
    return {"alpha": a.describe(), "s": s, "depth": args.depth, "reports": reports}


def _auto_s(args, a):
    return _s0(a, args.hall_depth, args.s_max) if args.s == "auto" else int(args.s)


def cmd_construct(args):
    a = parse_alpha(args.alpha)
    sb = structural_bounds(expansion=a)
    s = _auto_s(args, a)
    r = args.r if args.r is not None else s * sb.L
    lo_i, hi_i = args.i_range
    pair = hallray.fit_schedule(a, r, s, first_index=lo_i)
    Ed = cantor.Dissection("E", pair.alpha_minus, s)
    Fd = cantor.Dissection("F", pair.alpha_plus.shifted(r), s)
    if args.target is not None:
        e, f, _ = cantor.product_contains_interval_witness(
            pair.alpha_minus, pair.alpha_plus.shifted(r), s, Fraction(args.target),
            window=cantor.product_window(sb.N, s))
    else:
        e = Ed.node(Ed.roots()[0]).lower_word
        f = Fd.node(Fd.roots()[0]).lower_word
    glued = hallray.glue_beta(e, f, r, s, pair)
    prec = _precision(args)
    rep = hallray.hallray_report(glued, list(range(lo_i, hi_i + 1)), oracle_qmax=args.oracle_qmax,
                                 prec=max(prec, 512))
    rep["glued"] = glued.to_json()
    rep["checks"] = hallray.verify_glued(glued, hi_i)
    return rep


def cmd_chain(args):
    a = parse_alpha(args.alpha)
    if args.r0 == "auto":
        r0 = hallray.chain_start(a, _s0(a, args.hall_depth, args.s_max))
    else:
        r0 = int(args.r0)
    links = hallray.ray_chain(a, range(r0, r0 + args.count + 1))
    cover = hallray.chain_coverage(links)
    return {
        "alpha": a.describe(),
        "r0": r0,
        "chain": [link.to_json() for link in links],
        "covered": None if cover is None else [spectrum._dec(cover[0], 20), spectrum._dec(cover[1], 20)],
    }


def cmd_figure(args):
    a = parse_alpha(args.alpha)
    if args.format == "json":
        return {"alpha": a.describe(), "levels": figure.cell_counts(a, args.levels)}
    return figure.run_figure(a, args.levels)


# -- parser ------------------------------------------------------------------------

def _range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        return (int(lo), int(hi)) if sep else (int(lo), int(lo))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ncfray", description="Negative continued fractions and one-sided "
                "inhomogeneous approximation spectra.")
    p.add_argument("--precision", type=int, default=None,
                   help="working precision in bits (default: $NCFRAY_PRECISION or 256)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, fn, help_, formats=("json",)):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--alpha", required=True, help="ncf:pre;period, rcf:pre;period or rational:p/q")
        sp.add_argument("--format", choices=formats, default=formats[0])
        sp.set_defaults(func=fn)
        return sp

    def beta(sp):
        sp.add_argument("--beta", help="beta as rational:p/q, ncf:... or rcf:...")
        sp.add_argument("--beta-digits", help="Davenport digits 'pre;period' (no ';' means purely periodic)")

    sp = add("ncf", cmd_ncf, "digits and convergents with structural bounds")
    sp.add_argument("--n", type=int, default=12)
    sp = add("ostrowski", cmd_ostrowski, "Ostrowski expansion of an integer")
    sp.add_argument("--q", type=int, required=True)
    sp = add("davenport", cmd_davenport, "Davenport digits of beta")
    beta(sp)
    sp.add_argument("--depth", type=int, default=30)
    sp = add("spectrum", cmd_spectrum, "M+(alpha, beta) exactly or as an estimate")
    beta(sp)
    sp.add_argument("--depth", type=int, default=60)
    sp.add_argument("--two-sided", action="store_true")
    sp.add_argument("--trace", action="store_true")
    sp = add("oracle", cmd_oracle, "brute force window minima of q||q alpha - beta||", ("json", "csv"))
    beta(sp)
    sp.add_argument("--qmax", type=int, default=10**6)
    sp.add_argument("--workers", type=int, default=1)
    sp = add("dissect", cmd_dissect, "Cantor dissection tree of E or F")
    sp.add_argument("--kind", choices=("E", "F"), required=True)
    sp.add_argument("--s", type=int, required=True)
    sp.add_argument("--depth", type=int, default=2)
    sp.add_argument("--digits", type=int, default=20)
    sp = add("hallcheck", cmd_hallcheck, "Hall's condition on adjacent siblings")
    sp.add_argument("--kind", choices=("E", "F", "both"), default="both")
    sp.add_argument("--s", default="auto", help="an integer or 'auto' for the smallest passing s")
    sp.add_argument("--depth", type=int, default=10)
    sp.add_argument("--s-max", type=int, default=40)
    sp = add("construct", cmd_construct, "glue e and f into beta and trace lambda_{K(i)}")
    sp.add_argument("--s", default="auto")
    sp.add_argument("--r", type=int, default=None)
    sp.add_argument("--target", default=None, help="rational in [P1, P2]; default uses root endpoints")
    sp.add_argument("--i-range", type=_range, default=(5, 12))
    sp.add_argument("--oracle-qmax", type=int, default=0)
    sp.add_argument("--hall-depth", type=int, default=10)
    sp.add_argument("--s-max", type=int, default=40)
    sp = add("chain", cmd_chain, "chain of overlapping intervals in the spectrum")
    sp.add_argument("--r0", default="auto")
    sp.add_argument("--count", type=int, default=20)
    sp.add_argument("--hall-depth", type=int, default=10)
    sp.add_argument("--s-max", type=int, default=40)
    sp = add("figure", cmd_figure, "long/short picture as SVG", ("svg", "json"))
    sp.add_argument("--levels", type=int, default=2)
    return p


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    if args.precision is not None:
        os.environ["NCFRAY_PRECISION"] = str(args.precision)
    try:
        out = args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except PrecisionExhausted as exc:
        return _fail(EXIT_PRECISION, type(exc).__name__, str(exc))
    except (NumericsError, ValueError, ArithmeticError) as exc:
        return _fail(EXIT_DOMAIN, type(exc).__name__, str(exc))
    _emit(out, "json" if isinstance(out, (dict, list)) else "text")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
