"""
Command-line front end.

Exit codes: 0 on success, 1 on domain errors (an incompatible pattern under
``--strict``, support violations, non-convergence under ``--strict``), 2 on
parse and I/O errors, including bad flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .classify import classify_all, uniqueness_probe
from .io import dumps, read_table, table_to_dict
from .ipfp import IpfpConfig, ipfp_uniform
from .lp import lp_feasibility
from .odds import all_conditional_ors, evaluate_monomial, marginal_or, parse_monomial
from .polytope import check_compatibility_rays, extreme_pmfs, kernel_basis
from .tables import (ProbTable, RationalTable, TableFormatError, UnimarginError,
                     ZeroPattern, parse_shape)
from .twoway import classify_twoway, discrete_copula

log = logging.getLogger("unimargin")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise TableFormatError(f"{self.prog}: {message}")


def _fmt(v) -> str:
    return f"{float(v):.3f}"


def _load(args) -> ProbTable:
    shape = parse_shape(args.shape) if getattr(args, "shape", None) else None
    t = read_table(args.input, shape)
    return t.to_prob() if isinstance(t, RationalTable) else t


def _pattern(args) -> ZeroPattern:
    return ZeroPattern.from_string(args.pattern, parse_shape(args.shape))


def _emit(args, payload: dict, human: list[str]):
    if args.json:
        print(dumps(payload))
    else:
        print("\n".join(human))


def _write(path, text: str):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise TableFormatError(f"cannot write {path}: {exc.strerror}") from exc


# -- subcommands -------------------------------------------------------------

def cmd_ipfp(args) -> int:
    table = _load(args)
    out, report = ipfp_uniform(table, IpfpConfig(max_iter=args.max_iter, tol=args.tol))
    payload = {"table": table_to_dict(out), "report": report.as_dict()}
    if args.out:
        _write(args.out, dumps(table_to_dict(out)) + "\n")
    human = [f"shape {out.shape}, {report.iterations_used} sweeps, "
             f"margin deviation {report.final_margin_deviation:.2e}"
             + ("" if report.converged else " (not converged)")]
    human += [f"{''.join(map(str, a))}  {_fmt(v)}" for a, v in zip(out.shape.cells(), out.p)]
    if report.boundary_drift:
        human.append("warning: some positive cells drifted to the boundary")
    _emit(args, payload, human)
    if args.strict and not report.converged:
        raise UnimarginError("IPFP did not converge")
    return 0


def cmd_check(args) -> int:
    pat = _pattern(args)
    payload: dict = {"pattern": str(pat), "shape": list(pat.shape.levels)}
    human = [f"pattern {pat} on {pat.shape}"]
    verdicts = []
    if args.method in ("rays", "both"):
        v = check_compatibility_rays(pat)
        payload["rays"] = v.as_dict()
        verdicts.append(v.compatible)
        line = f"rays: {v.status}"
        if v.reason:
            line += f" ({v.reason})"
        human.append(line + f"; S1 = {list(v.s1)}")
        if v.witness is not None:
            human.append("  witness: " + " ".join(str(x) for x in v.witness.p))
    if args.method in ("lp", "both"):
        v = lp_feasibility(pat, exact=args.exact)
        payload["lp"] = v.as_dict()
        verdicts.append(v.compatible)
        human.append(f"lp: {v.status}; delta* = {v.delta_star if args.exact else _fmt(v.delta_star)}")
        if v.witness is not None:
            human.append("  witness: " + " ".join(_fmt(x) for x in v.witness.p))
    if len(set(verdicts)) > 1:
        raise UnimarginError("ray and LP verdicts disagree")
    compatible = verdicts[0]
    payload["compatible"] = compatible
    if len(verdicts) == 2:
        human.append("rays and LP agree")
    _emit(args, payload, human)
    if args.strict and not compatible:
        return 1
    return 0


def cmd_rays(args) -> int:
    shape = parse_shape(args.shape)
    def progress(step, total, count):
        log.info("constraint %d/%d: %d rays", step, total, count)

    rays = extreme_pmfs(shape, max_cells=args.max_cells, cache_dir=args.cache_dir,
                        progress=progress if args.verbose else None)
    payload = {"shape": list(shape.levels), "order": "lex-msb", "count": len(rays),
               "rays": [[str(v) for v in r.p] for r in rays]}
    if args.out:
        _write(args.out, dumps(payload) + "\n")
    human = [f"{len(rays)} extreme pmfs for {shape}"]
    if not args.out:
        human += [f"r{k + 1}: " + " ".join(str(v) for v in r.p) for k, r in enumerate(rays)]
    _emit(args, payload, human)
    return 0


def cmd_kernel(args) -> int:
    pat = _pattern(args)
    basis = kernel_basis(pat)
    cols = [c + 1 for c in pat.positives]
    payload: dict = {"pattern": str(pat), "cells": cols, "basis": [list(b) for b in basis]}
    human = [f"kernel dimension {len(basis)} over cells {cols}"]
    human += ["  " + " ".join(f"{x:+d}" for x in b) for b in basis]
    if args.probe:
        rep = uniqueness_probe(pat)
        payload["uniqueness"] = rep.as_dict()
        human.append(f"determined by odds-ratio products of order {rep.determining_order}")
        for p in rep.defined():
            if p.separates:
                human.append(f"  {p.monomial.label}: {p.monomial}")
    _emit(args, payload, human)
    return 0


def cmd_odds(args) -> int:
    table = _load(args)
    lines = []
    for spec, val in all_conditional_ors(table):
        lines.append({"spec": spec.label, **val.as_dict()})
    for text in args.product or []:
        m = parse_monomial(text, table.shape)
        lines.append({"spec": m.label, "monomial": {str(k): e for k, e in m.as_dict().items()},
                      **evaluate_monomial(table, m).as_dict()})
    if args.marginal:
        d = table.shape.d
        for i in range(1, d + 1):
            for j in range(i + 1, d + 1):
                if table.shape.levels[i - 1] == 2 == table.shape.levels[j - 1]:
                    lines.append({"spec": f"w{i}{j}", **marginal_or(table, i, j).as_dict()})
    if args.json:
        for obj in lines:
            print(json.dumps(obj, sort_keys=True))
    else:
        for obj in lines:
            val = "undefined" if obj["value"] is None else _fmt(obj["value"])
            print(f"{obj['spec']:<24} {val}")
    return 0


def cmd_classify(args) -> int:
    shape = parse_shape(args.shape)
    atlas = classify_all(shape, lp_sample=args.lp_sample, seed=args.seed, jobs=args.jobs)
    payload = atlas.as_dict()
    disagree = [r for r in atlas.records
                if r.lp_delta is not None and (r.lp_delta > 1e-9) != r.compatible]
    payload["lp_disagreements"] = [str(r.pattern) for r in disagree]
    if args.out:
        _write(args.out, dumps(payload) + "\n")
    if args.csv:
        _write(args.csv, atlas.crosstab_csv())
    human = [f"{len(atlas.compatible)} of {len(atlas.records)} patterns admit a uniform-margin table",
             atlas.crosstab_csv().rstrip()]
    if disagree:
        human.append(f"LP disagrees on {len(disagree)} patterns")
    if args.json:
        payload = {k: v for k, v in payload.items() if k != "records"} if args.out else payload
    _emit(args, payload, human)
    if disagree:
        raise UnimarginError("ray and LP verdicts disagree")
    return 0


def cmd_twoway(args) -> int:
    if args.action == "copula":
        return cmd_copula(args)
    v = classify_twoway(_load(args), eps=args.eps)
    human = [v.case] + [f"  rows {sorted(r.rows)} x cols {sorted(r.cols)}, weight {r.weight}"
                        for r in v.rectangles]
    _emit(args, v.as_dict(), human)
    if args.strict and not v.same_support_exists:
        return 1
    return 0


def cmd_copula(args) -> int:
    cop = discrete_copula(_load(args))
    u, v, c = cop.to_float()
    human = ["u: " + " ".join(_fmt(x) for x in u), "v: " + " ".join(_fmt(x) for x in v)]
    human += ["  " + " ".join(_fmt(x) for x in row) for row in c]
    _emit(args, cop.as_dict(), human)
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit JSON instead of text")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="unimargin", description="Uniform-margin transforms of contingency tables.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def table_input(sp):
        sp.add_argument("--in", dest="input", required=True, help="table file (.json or .csv)")
        sp.add_argument("--shape", help="override the table shape, e.g. 2,2,2")

    def pattern_input(sp):
        sp.add_argument("--pattern", required=True,
                        help="0/1 string in cell order (0 = zero cell) or zero cells like '0,1,1;1,0,1'")
        sp.add_argument("--shape", required=True, help="e.g. 2,2,2")

    sp = sub.add_parser("ipfp", parents=[common], help="rescale a table to uniform margins")
    table_input(sp)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=100_000)
    sp.add_argument("--out", help="write the output table here")
    sp.add_argument("--strict", action="store_true", help="exit 1 when IPFP does not converge")
    sp.set_defaults(func=cmd_ipfp)

    sp = sub.add_parser("check", parents=[common], help="does a zero pattern admit uniform margins")
    pattern_input(sp)
    sp.add_argument("--method", choices=("rays", "lp", "both"), default="rays")
    sp.add_argument("--exact", action="store_true", help="rational simplex for the LP")
    sp.add_argument("--strict", action="store_true", help="exit 1 when the pattern is incompatible")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("rays", parents=[common], help="extreme pmfs of the uniform-margin polytope")
    sp.add_argument("--shape", required=True)
    sp.add_argument("--out")
    sp.add_argument("--cache-dir")
    sp.add_argument("--max-cells", type=int, default=64)
    sp.set_defaults(func=cmd_rays)

    sp = sub.add_parser("kernel", parents=[common], help="kernel basis for a zero pattern")
    pattern_input(sp)
    sp.add_argument("--probe", action="store_true",
                    help="also list the odds-ratio products that determine the table (2x2x2)")
    sp.set_defaults(func=cmd_kernel)

    sp = sub.add_parser("odds", parents=[common], help="conditional odds ratios as JSON lines")
    table_input(sp)
    sp.add_argument("--product", action="append", help="odds-ratio product, e.g. 'w13|0*w23|1'")
    sp.add_argument("--marginal", action="store_true", help="also print marginal odds ratios")
    sp.set_defaults(func=cmd_odds)

    sp = sub.add_parser("classify", parents=[common], help="classify every zero pattern of a shape")
    sp.add_argument("--shape", required=True)
    sp.add_argument("--out", help="atlas JSON")
    sp.add_argument("--csv", help="N0 x N1 crosstab CSV")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--lp-sample", type=int, help="LP cross-check on this many random patterns")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_classify)

    def copula_args(sp):
        table_input(sp)
        sp.add_argument("--eps", type=float, default=0.0, help="cells <= eps count as zero")
        sp.add_argument("--strict", action="store_true",
                        help="exit 1 unless a same-support uniform-margin table exists")

    sp = sub.add_parser("twoway", parents=[common], help="two-way existence classifier and copula")
    sp.add_argument("action", choices=("classify", "copula"))
    copula_args(sp)
    sp.set_defaults(func=cmd_twoway)

    sp = sub.add_parser("copula", parents=[common], help="discrete copula of a two-way table")
    copula_args(sp)
    sp.set_defaults(func=cmd_copula)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except TableFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except TableFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except UnimarginError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
