"""Command line interface: ``mcfsadic <subcommand> ...``; every run prints (or writes) one JSON report.

Exit status: 0 success, 2 domain error, 3 inconclusive verdict, 1 usage or internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import mpmath

from . import dynamics, mcf, rauzy, sadic, spectral
from .core import DEFAULT_PRECISION, Substitution, as_matrix, compose_all, format_number, format_word, parse_vector
from .errors import DomainError, MCFError

SCHEMA = 1
EXIT_OK, EXIT_INTERNAL, EXIT_DOMAIN, EXIT_INCONCLUSIVE = 0, 1, 2, 3

PRESETS = {
    "tau": lambda: [mcf.CassaigneSelmer.GAMMA[1], mcf.CassaigneSelmer.GAMMA[2]],
    "tribonacci": lambda: [mcf.dbonacci(3)],
    "dbonacci4": lambda: [mcf.dbonacci(4)],
    "brun4": lambda: [mcf.brun_substitution(1, 2, 4), mcf.brun_substitution(2, 3, 4),
                      mcf.brun_substitution(3, 4, 4), mcf.brun_substitution(4, 1, 4)],
    "jp01": lambda: [mcf.jp_substitution(0, 1)],
}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_INTERNAL)


def default_precision() -> int:
    try:
        return int(os.environ.get("MCFSADIC_PRECISION", DEFAULT_PRECISION))
    except ValueError:
        return DEFAULT_PRECISION


# ---------------------------------------------------------------- argument groups

def add_common(p):
    p.add_argument("--precision-bits", type=int, default=None, help="float precision (default $MCFSADIC_PRECISION or 256)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="worker cap (recorded; runs are single threaded)")
    p.add_argument("--report", default=None, help="write the JSON report here instead of stdout")
    p.add_argument("--json", action="store_true", help="JSON output (always on; kept for scripts)")


def add_sequence(p):
    g = p.add_argument_group("directive sequence")
    g.add_argument("--algo", choices=sorted(mcf.ALGORITHMS), help="expand --x with this algorithm")
    g.add_argument("--d", type=int, default=3)
    g.add_argument("--x", help="point, e.g. 2/5,1/4,7/20")
    g.add_argument("--subst", action="append", help="periodic block member, e.g. '1->13;2->12;3->2' (repeatable)")
    g.add_argument("--prefix", action="append", help="substitutions applied before the periodic block (repeatable)")
    g.add_argument("--preset", choices=sorted(PRESETS))


def build_sequence(args, precision):
    if args.preset:
        return sadic.DirectiveSequence.periodic(PRESETS[args.preset](), name=args.preset)
    if args.subst:
        period = [Substitution.parse(s) for s in args.subst]
        prefix = [Substitution.parse(s) for s in (args.prefix or [])]
        if prefix:
            return sadic.DirectiveSequence.explicit(prefix, period)
        return sadic.DirectiveSequence.periodic(period)
    if args.algo and args.x:
        algo = mcf.get_algorithm(args.algo, args.d)
        return sadic.DirectiveSequence.from_expansion(algo, parse_point(args.x, algo, precision))
    raise UsageError("give --preset, --subst, or --algo with --x")


def parse_point(text, algo, precision):
    x = parse_vector(text, precision)
    if len(x.coords) != algo.d:
        raise UsageError(f"--x has {len(x.coords)} coordinates, {algo.name} needs {algo.d}")
    return x


def parse_int_matrix(text):
    rows = [r for r in text.replace("|", ";").split(";") if r.strip()]
    return as_matrix([[int(v) for v in r.replace(" ", ",").split(",") if v] for r in rows])


# ---------------------------------------------------------------- commands

def cmd_expand(args, prec):
    algo = mcf.get_algorithm(args.algo, args.d)
    x = parse_point(args.x, algo, prec)
    rec = mcf.expand(algo, x, args.steps)
    errs = mcf.convergence_errors(rec, prec)
    result = {
        "algorithm": algo.name, "d": algo.d, "mode": "rational" if x.exact else "float",
        "cells": [list(c) if isinstance(c, tuple) else c for c in rec.cells],
        "iterates": [[format_number(c) for c in p.coords] for p in rec.iterates],
        "products": [[[str(v) for v in row] for row in m] for m in rec.products],
        "strong_errors": [[mpmath.nstr(v, 12) for v in e["strong"]] for e in errs],
        "weak_errors": [[mpmath.nstr(v, 12) for v in e["weak"]] for e in errs],
        "admissible": algo.admissible(rec.cells),
        "error": rec.error, "error_step": rec.error_step,
    }
    return result, (EXIT_DOMAIN if rec.error else EXIT_OK)


def cmd_word(args, prec):
    D = build_sequence(args, prec)
    w = sadic.limit_word_prefix(D, args.length)
    return {"length": len(w), "word": format_word(w, D.d)}, EXIT_OK


def cmd_complexity(args, prec):
    D = build_sequence(args, prec)
    depth = args.depth if args.depth is not None else sadic.saturating_depth(D, args.n_max)
    table = sadic.language(D, args.n_max, depth)
    if not table.saturated:
        raise sadic.Unsaturated(f"language not saturated at depth {depth}")
    return {"depth": depth, "saturated": table.saturated, "complexity": table.complexity(),
            "scanned_lengths": list(table.scanned_lengths)}, EXIT_OK


def cmd_balance(args, prec):
    D = build_sequence(args, prec)
    depth = args.depth if args.depth is not None else sadic.saturating_depth(D, args.n_scan)
    rep = sadic.balance(D, args.n_scan, depth, factors_up_to=args.factors_up_to)
    return rep.to_json(), EXIT_OK


def _cloud_for(args, D, prec):
    u, info = rauzy.right_eigenvector(D, mode=args.mode, precision=prec)
    depth = args.depth if args.depth is not None else rauzy.depth_for_points(D, args.points)
    c = rauzy.cloud(D, depth, args.tag_len, u=u)
    return c, u, info


def cmd_rauzy(args, prec):
    D = build_sequence(args, prec)
    c, u, info = _cloud_for(args, D, prec)
    result = {"depth": c.depth, "points": len(c), "tag_length": c.tag_length,
              "u": [format_number(v) for v in u.coords], "eigenvector": info,
              "sup_norm": c.sup_norm(), "letter_fractions": [float(v) for v in c.letter_fractions()]}
    if args.out:
        rauzy.export(c, args.out, dedup=args.dedup)
        result["output"] = str(args.out)
    return result, EXIT_OK


def cmd_tiling(args, prec):
    D = build_sequence(args, prec)
    args.tag_len = 1
    c, u, info = _cloud_for(args, D, prec)
    r = rauzy.raster_tiling_check(c, args.radius, args.resolution)
    result = {"depth": c.depth, "points": len(c), "window": list(r.window), "resolution": r.resolution,
              "lattice_radius": args.radius, "translates": r.translates,
              "coverage": r.coverage, "overlap": r.overlap}
    if args.out:
        rauzy.export(r, args.out)
        result["output"] = str(args.out)
    return result, EXIT_OK


def cmd_bpa(args, prec):
    if args.preset:
        sigma = compose_all(PRESETS[args.preset]())
    elif args.subst:
        sigma = compose_all([Substitution.parse(s) for s in args.subst])
    else:
        raise UsageError("give --subst or --preset")
    res = spectral.bpa_run(sigma, args.pair_cap, args.iter_cap)
    out = {"substitution": sigma.to_text(), **res.to_json(sigma.d)}
    return out, (EXIT_INCONCLUSIVE if res.verdict == "Inconclusive" else EXIT_OK)


def cmd_pisot(args, prec):
    if args.poly:
        coeffs = [int(v) for v in args.poly.split(",")]
        source = {"polynomial": coeffs}
    elif args.matrix:
        M = parse_int_matrix(args.matrix)
        coeffs = spectral.char_poly(M)
        source = {"matrix": [list(r) for r in M]}
    elif args.subst:
        sigma = compose_all([Substitution.parse(s) for s in args.subst])
        coeffs = spectral.char_poly(sigma.incidence)
        source = {"substitution": sigma.to_text()}
    else:
        raise UsageError("give --poly, --matrix or --subst")
    cert = spectral.pisot_certify(coeffs, precision=min(prec, 1024))
    return {**source, **cert.to_json()}, EXIT_OK


def cmd_gcc(args, prec):
    D = build_sequence(args, prec)
    u, _ = rauzy.right_eigenvector(D, precision=prec)
    C = args.C
    balance_depth = None
    if C is None:
        C, balance_depth = sadic.balance_constant(D.shift(args.n), args.n_scan)
    if args.search_z or args.z is None:
        w = spectral.gcc_search(D, args.n, C, u=u, grid=args.grid, budget=args.budget)
        if w is None:
            return {"n": args.n, "C": C, "verdict": False, "found": False,
                    "balance_depth": balance_depth}, EXIT_INCONCLUSIVE
    else:
        z = [float(Fraction(v)) for v in args.z.split(",")]
        w = spectral.effective_gcc(D, args.n, C, z, args.i, u=u, budget=args.budget)
    w.balance_depth = balance_depth
    return {"found": w.verdict, **w.to_json()}, EXIT_OK


def cmd_lyapunov(args, prec):
    algo = mcf.get_algorithm(args.algo, args.d)
    if args.cells:
        cells = [_parse_cell(c) for c in args.cells.split(";")]
        exact = dynamics.periodic_lyapunov(algo, cells, precision=min(prec, 512))
        est = dynamics.cocycle_lyapunov(algo, cells, args.steps)
        return {"algorithm": algo.name, "cells": [list(c) if isinstance(c, tuple) else c for c in cells],
                "theta_exact": [mpmath.nstr(v, 20) for v in exact], "theta_benettin": est,
                "units": "natural log per step"}, EXIT_OK
    est = dynamics.lyapunov(algo, args.steps, args.trials, args.seed)
    return {**est.to_json(), "units": "natural log per step"}, EXIT_OK


def _parse_cell(text):
    text = text.strip().strip("()")
    parts = [int(v) for v in text.split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def cmd_density(args, prec):
    rep = dynamics.density_histogram(args.steps, args.grid, args.seed, chains=args.chains)
    return rep.to_json(), EXIT_OK


def cmd_discrepancy(args, prec):
    D = build_sequence(args, prec)
    u, _ = rauzy.right_eigenvector(D, precision=prec)
    cps = [int(v) for v in args.checkpoints.split(",")] if args.checkpoints else None
    tr = dynamics.letter_discrepancy(D, u, args.N, cps)
    return tr.to_json(), EXIT_OK


def cmd_coding(args, prec):
    D = build_sequence(args, prec)
    rep = dynamics.coding_consistency(D, args.N, args.eps, sign=args.sign)
    return rep.to_json(), EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> Parser:
    p = Parser(prog="mcfsadic", description="Multidimensional continued fractions and S-adic systems")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    s = sub.add_parser("expand", help="expand a point")
    s.add_argument("--algo", required=True, choices=sorted(mcf.ALGORITHMS))
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--x", required=True)
    s.add_argument("--steps", type=int, default=10)
    add_common(s)
    s.set_defaults(func=cmd_expand)

    s = sub.add_parser("word", help="prefix of a limit word")
    add_sequence(s)
    s.add_argument("--length", type=int, default=100)
    add_common(s)
    s.set_defaults(func=cmd_word)

    s = sub.add_parser("complexity", help="factor complexity on a saturated table")
    add_sequence(s)
    s.add_argument("--n-max", type=int, default=10)
    s.add_argument("--depth", type=int, default=None)
    add_common(s)
    s.set_defaults(func=cmd_complexity)

    s = sub.add_parser("balance", help="letter and factor balance constants")
    add_sequence(s)
    s.add_argument("--n-scan", type=int, default=200)
    s.add_argument("--depth", type=int, default=None)
    s.add_argument("--factors-up-to", type=int, default=3)
    add_common(s)
    s.set_defaults(func=cmd_balance)

    for name, func in (("rauzy", cmd_rauzy), ("tiling", cmd_tiling)):
        s = sub.add_parser(name, help="Rauzy fractal cloud" if name == "rauzy" else "raster tiling check")
        if name == "rauzy":
            s.add_argument("action", nargs="?", choices=["render"], default="render")
            s.add_argument("--tag-len", type=int, default=1)
            s.add_argument("--dedup", action="store_true")
        else:
            s.add_argument("--radius", type=int, default=2)
            s.add_argument("--resolution", type=int, default=512)
        add_sequence(s)
        s.add_argument("--depth", type=int, default=None)
        s.add_argument("--points", type=int, default=100_000, help="target size when --depth is omitted")
        s.add_argument("--mode", default="auto", choices=["auto", "cf-point", "periodic", "cone"])
        s.add_argument("--out", default=None, help=".csv, .svg or .png")
        add_common(s)
        s.set_defaults(func=func)

    s = sub.add_parser("bpa", help="balanced pair algorithm")
    s.add_argument("--subst", action="append")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--pair-cap", type=int, default=spectral.PAIR_CAP)
    s.add_argument("--iter-cap", type=int, default=spectral.ITER_CAP)
    add_common(s)
    s.set_defaults(func=cmd_bpa)

    s = sub.add_parser("pisot", help="Pisot certificate")
    s.add_argument("--poly", help="coefficients, highest degree first")
    s.add_argument("--matrix", help="rows separated by ';', e.g. '1,1,0;0,0,1;0,1,0'")
    s.add_argument("--subst", action="append")
    add_common(s)
    s.set_defaults(func=cmd_pisot)

    s = sub.add_parser("gcc", help="effective geometric coincidence")
    add_sequence(s)
    s.add_argument("--n", type=int, default=16)
    s.add_argument("--C", type=float, default=None, help="default: measured balance constant of the shifted sequence")
    s.add_argument("--n-scan", type=int, default=200)
    s.add_argument("--z", default=None)
    s.add_argument("--i", type=int, default=1)
    s.add_argument("--search-z", action="store_true")
    s.add_argument("--grid", type=int, default=24)
    s.add_argument("--budget", type=int, default=spectral.GCC_BUDGET)
    add_common(s)
    s.set_defaults(func=cmd_gcc)

    s = sub.add_parser("lyapunov", help="Lyapunov exponents")
    s.add_argument("--algo", required=True, choices=sorted(mcf.ALGORITHMS))
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--steps", type=int, default=100_000)
    s.add_argument("--trials", type=int, default=32)
    s.add_argument("--cells", default=None, help="periodic cell loop, e.g. '1;2' or '(1,2);(2,3)'")
    add_common(s)
    s.set_defaults(func=cmd_lyapunov)

    s = sub.add_parser("density", help="Cassaigne-Selmer invariant density histogram")
    s.add_argument("--steps", type=int, default=10**7)
    s.add_argument("--grid", type=int, default=8)
    s.add_argument("--chains", type=int, default=1000)
    add_common(s)
    s.set_defaults(func=cmd_density)

    s = sub.add_parser("discrepancy", help="letter discrepancy of a limit word")
    add_sequence(s)
    s.add_argument("--N", type=int, default=10**6)
    s.add_argument("--checkpoints", default=None)
    add_common(s)
    s.set_defaults(func=cmd_discrepancy)

    s = sub.add_parser("coding-check", help="natural coding consistency")
    add_sequence(s)
    s.add_argument("--N", type=int, default=1000)
    s.add_argument("--eps", type=float, default=1e-3)
    s.add_argument("--sign", type=int, choices=[-1, 1], default=-1)
    add_common(s)
    s.set_defaults(func=cmd_coding)
    return p


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if hasattr(obj, "item"):            # numpy scalars
        return obj.item()
    if isinstance(obj, (mpmath.mpf, mpmath.mpc)):
        return mpmath.nstr(obj, 25)
    return obj


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    prec = args.precision_bits or default_precision()
    report = {"schema": SCHEMA, "command": args.command, "seed": args.seed, "precision_bits": prec,
              "threads": args.threads}
    try:
        result, status = args.func(args, prec)
        report["status"] = "ok" if status == EXIT_OK else "domain-error" if status == EXIT_DOMAIN else "inconclusive"
        report["result"] = result
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"mcfsadic: error: {exc}\n")
        return EXIT_INTERNAL
    except DomainError as exc:
        status = EXIT_DOMAIN
        report["status"] = "domain-error"
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    except MCFError as exc:
        status = EXIT_INTERNAL
        report["status"] = "error"
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    text = json.dumps(_jsonable(report), indent=2) + "\n"
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
