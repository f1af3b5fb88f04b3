"""Command-line front end: list/show/verify/compare catalog entries and emit
deterministic CSV/JSON reports.

Exit codes: 0 = every requested expectation met, 1 = some verification or
analysis mismatch, 2 = usage or configuration error.  Output formatting is
fixed (17 significant digits, '.' radix, LF line ends) so identical runs are
byte-identical; configuration comes from flags only.
"""

from __future__ import annotations

import argparse
import json
import math
import multiprocessing
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .analysis import crossover, dominance_table, max_rel_error
from .catalog import (Catalog, DEFAULT_X_MAX, builtin_catalog, load_catalog,
                      parse_interval)
from .errors import BoundsError
from .expr import print_expr
from .oracle import MIN_DIGITS, Precision
from .special import verify_beta_bound
from .verifier import DEFAULT_GRID, DEFAULT_REFINE, certify_sign


@dataclass
class RunConfig:
    grid_n: int = DEFAULT_GRID
    refine_depth: int = DEFAULT_REFINE
    digits: int = 40
    x_max: Fraction = DEFAULT_X_MAX
    jobs: int = 0                      # 0 = logical CPUs
    as_json: bool = False
    out_path: Optional[str] = None
    catalog_path: Optional[str] = None

    def validate(self) -> None:
        if self.grid_n < 64:
            raise BoundsError(f"--grid must be >= 64, got {self.grid_n}")
        if self.digits < MIN_DIGITS:
            raise BoundsError(f"--digits must be >= {MIN_DIGITS}, got {self.digits}")
        if self.refine_depth < 0:
            raise BoundsError("--refine must be >= 0")
        if self.x_max <= 1:
            raise BoundsError("--xmax must exceed 1 (the strip region starts there)")

    @property
    def precision(self) -> Precision:
        return Precision(self.digits)

    @property
    def grid_2d(self) -> int:
        return max(64, min(256, int(math.isqrt(self.grid_n))))

    def catalog(self) -> Catalog:
        if self.catalog_path:
            return load_catalog(self.catalog_path)
        return builtin_catalog(self.x_max)


def fmt(v) -> str:
    """17-significant-digit fixed formatting used by all text/CSV output."""
    f = float(v)
    if math.isnan(f):
        return "nan"
    if math.isinf(f):
        return "inf" if f > 0 else "-inf"
    return format(f, ".17g")


def _jsonable(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return v
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def _parse_iv(text: Optional[str]):
    if text is None:
        return None
    try:
        return parse_interval(text)
    except (ValueError, BoundsError) as exc:
        raise UsageError(f"bad interval {text!r}: {exc}") from exc


class UsageError(BoundsError):
    pass


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out_path:
        with open(cfg.out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# verify


def _verify_one(args) -> dict:
    entry_id, cfg_tuple = args
    cfg = RunConfig(*cfg_tuple)
    cat = cfg.catalog()
    entry = cat.lookup(entry_id)
    if entry.region in ("unit-square", "strip"):
        rep = verify_beta_bound(entry, grid_per_axis=cfg.grid_2d,
                                prec=cfg.precision)
    else:
        rep = certify_sign(entry, grid_n=cfg.grid_n,
                           refine_depth=cfg.refine_depth, prec=cfg.precision)
    return {
        "entry_id": rep.entry_id,
        "expect": entry.expect,
        "status": rep.status,
        "matches_expect": rep.status == entry.expect,
        "min_margin": rep.min_margin,
        "argmin": rep.argmin,
        "samples_used": rep.samples_used,
        "refinements": rep.refinements,
        "counterexamples": rep.counterexamples,
        "precision_used": rep.precision_used,
        "param_values": rep.param_values,
        "notes": list(rep.notes),
    }


def _cfg_tuple(cfg: RunConfig) -> tuple:
    return (cfg.grid_n, cfg.refine_depth, cfg.digits, cfg.x_max, cfg.jobs,
            cfg.as_json, None, cfg.catalog_path)


def cmd_verify(cfg: RunConfig, ids: list[str], all_entries: bool) -> int:
    cat = cfg.catalog()
    if all_entries:
        ids = cat.ids()
    elif not ids:
        raise BoundsError("verify needs entry ids or --all")
    else:
        for i in ids:
            cat.lookup(i)  # fail fast on unknown ids
        ids = sorted(ids)
    jobs = cfg.jobs or os.cpu_count() or 1
    work = [(i, _cfg_tuple(cfg)) for i in ids]
    if jobs > 1 and len(ids) > 1:
        with multiprocessing.Pool(processes=jobs) as pool:
            results = pool.map(_verify_one, work, chunksize=1)
    else:
        results = [_verify_one(w) for w in work]
    results.sort(key=lambda r: r["entry_id"])
    summary = {
        "certified": sum(r["status"] == "certified" for r in results),
        "violated": sum(r["status"] == "violated" for r in results),
        "inconclusive": sum(r["status"] == "inconclusive" for r in results),
        "expect_mismatches": sum(not r["matches_expect"] for r in results),
    }
    if cfg.as_json:
        doc = {
            "config": {
                "grid": cfg.grid_n, "refine": cfg.refine_depth,
                "digits": cfg.digits, "xmax": str(cfg.x_max),
                "catalog": cfg.catalog_path or "builtin",
            },
            "reports": _jsonable(results),
            "summary": summary,
        }
        _emit(json.dumps(doc, indent=1, sort_keys=False) + "\n", cfg)
    else:
        lines = []
        for r in results:
            mark = "ok " if r["matches_expect"] else "MISMATCH"
            lines.append(
                f"{r['entry_id']:34s} {r['status']:12s} expect={r['expect']:9s} "
                f"min_margin={fmt(r['min_margin'])} argmin={_fmt_arg(r['argmin'])} {mark}")
            if not r["matches_expect"] or r["status"] == "violated":
                for pt, m in r["counterexamples"][:3]:
                    lines.append(f"    counterexample at {_fmt_arg(pt)}: margin {fmt(m)}")
        lines.append(
            f"summary: certified={summary['certified']} violated={summary['violated']} "
            f"inconclusive={summary['inconclusive']} mismatches={summary['expect_mismatches']}")
        _emit("\n".join(lines) + "\n", cfg)
    return 0 if summary["expect_mismatches"] == 0 else 1


def _fmt_arg(arg) -> str:
    if isinstance(arg, (tuple, list)):
        return "(" + ",".join(fmt(a) for a in arg) + ")"
    return fmt(arg)


# ---------------------------------------------------------------------------
# list / show / const


def cmd_list(cfg: RunConfig, target: Optional[str], tag: Optional[str],
             side: Optional[str]) -> int:
    cat = cfg.catalog()
    rows = cat.select(target=target, tag=tag, side=side)
    lines = [f"{'id':34s} {'target':16s} {'side':5s} {'domain':22s} provenance"]
    for e in rows:
        lines.append(f"{e.id:34s} {e.target:16s} {e.side:5s} {str(e.domain):22s} {e.ref}")
    lines.append(f"{len(rows)} entries")
    _emit("\n".join(lines) + "\n", cfg)
    return 0


def cmd_show(cfg: RunConfig, entry_id: str) -> int:
    cat = cfg.catalog()
    e = cat.lookup(entry_id)
    lines = [
        f"id:        {e.id}",
        f"target:    {e.target}" + (f"  targetexpr: {print_expr(e.target_expr)}"
                                    if e.target_expr is not None else ""),
        f"side:      {e.side}",
        f"domain:    {e.domain}" + (f"  region: {e.region}" if e.region else ""),
        f"expr:      {print_expr(e.expr)}",
        f"sharp:     {','.join(e.sharp) or '-'}",
        f"expect:    {e.expect}",
        f"tags:      {','.join(e.tags) or '-'}",
        f"ref:       {e.ref}",
    ]
    for p in e.params:
        lines.append(f"param:     {p.name} in [{print_expr(p.lo)},{print_expr(p.hi)}] "
                     f"default {print_expr(p.default)} "
                     f"grid {';'.join(print_expr(g) for g in p.grid)}")
    if e.tangent is not None:
        lines.append(f"tangent:   {print_expr(e.tangent)}")
    _emit("\n".join(lines) + "\n", cfg)
    return 0


def cmd_const(cfg: RunConfig, name: Optional[str]) -> int:
    cat = cfg.catalog()
    consts = [cat.constant(name)] if name else list(cat.constants)
    lines = []
    for c in consts:
        v = c.value(cfg.precision)
        flag = " flag=SUSPECT" if c.suspect else ""
        flag += " (empirical)" if c.empirical else ""
        dec = f" paper-decimal={c.decimal}" if c.decimal is not None else ""
        lines.append(f"{c.name}: closed-form {print_expr(c.closed_form)} "
                     f"value {v}{dec}{flag}")
        lines.append(f"    {c.ref}")
    _emit("\n".join(lines) + "\n", cfg)
    return 0


# ---------------------------------------------------------------------------
# analysis commands


def cmd_crossover(cfg: RunConfig, id_a: str, id_b: str,
                  interval: Optional[str]) -> int:
    cat = cfg.catalog()
    iv = _parse_iv(interval)
    res = crossover(cat, id_a, id_b, interval=iv, grid_n=cfg.grid_n,
                    prec=cfg.precision)
    lines = [f"crossover {id_a} vs {id_b} on ({fmt(res.interval[0])},{fmt(res.interval[1])})"]
    for x, a, b in res.crossings:
        lines.append(f"  crossing at {fmt(x)} bracket [{fmt(a)},{fmt(b)}]")
    if not res.crossings:
        lines.append("  no crossings")
    for lo, hi, who in res.dominance:
        label = {"A": id_a, "B": id_b}.get(who, who)
        lines.append(f"  tighter on ({fmt(lo)},{fmt(hi)}): {label}")
    for x, v in res.possible_tangencies:
        lines.append(f"  possible tangency near {fmt(x)} (|d|={fmt(v)})")
    _emit("\n".join(lines) + "\n", cfg)
    return 0


def cmd_maxerr(cfg: RunConfig, entry_id: str, interval: Optional[str]) -> int:
    cat = cfg.catalog()
    iv = _parse_iv(interval)
    rec = max_rel_error(cat.lookup(entry_id), interval=iv, grid_n=cfg.grid_n,
                        prec=cfg.precision)
    lines = [f"max relative error of {entry_id} on "
             f"({fmt(rec.interval[0])},{fmt(rec.interval[1])}]: "
             f"{fmt(rec.value)} at x={fmt(rec.arg)}"]
    if rec.asymptotic_residual is not None:
        lines.append(f"  asymptotic |bound(X)-pi/2| at X={fmt(rec.interval[1])}: "
                     f"{fmt(rec.asymptotic_residual)}")
    _emit("\n".join(lines) + "\n", cfg)
    return 0


def cmd_dominance(cfg: RunConfig, ids: list[str], interval: Optional[str]) -> int:
    cat = cfg.catalog()
    iv = _parse_iv(interval)
    rows = dominance_table(cat, ids, interval=iv, grid_n=cfg.grid_n,
                           prec=cfg.precision)
    lines = ["id_a,id_b,crossings,dominance"]
    for r in rows:
        cr = ";".join(fmt(x) for x, _, _ in r.crossings) or "-"
        dom = ";".join(f"({fmt(lo)},{fmt(hi)}):{w}" for lo, hi, w in r.dominance)
        lines.append(f"{r.id_a},{r.id_b},{cr},{dom}")
    _emit("\n".join(lines) + "\n", cfg)
    return 0


def cmd_table(cfg: RunConfig, target: str, ids: list[str], points: int) -> int:
    from .oracle import EvalCtx, affine, target_num
    cat = cfg.catalog()
    if ids:
        entries = [cat.lookup(i) for i in ids]
        for e in entries:
            if e.target != target:
                raise BoundsError(f"{e.id} does not bound {target}")
    else:
        entries = [e for e in cat.select(target=target) if not e.params]
    if not entries:
        raise BoundsError(f"no entries for target {target!r}")
    if points < 2:
        raise BoundsError("--points must be >= 2")
    ec = EvalCtx(cfg.precision)
    lo = hi = None
    for e in entries:
        elo, ehi = e.domain.bounds(ec)
        lo = elo if lo is None or elo > lo else lo
        hi = ehi if hi is None or ehi < hi else hi
    if not lo < hi:
        raise BoundsError("selected entries have no common subinterval")
    span = ec.ctx.sub(hi, lo)
    from .verifier import bound_fn
    fns = [bound_fn(e, ec, e.default_params()) for e in entries]
    header = "x," + ",".join(e.id for e in entries) + f",{target}"
    lines = [header]
    for i in range(points):
        xm = affine(ec, lo, span, Fraction(2 * i + 1, 2 * points))
        row = [fmt(xm)]
        for f in fns:
            row.append(fmt(f(xm)[0]))
        row.append(fmt(target_num(ec, target, ((xm, 0.0),))[0]))
        lines.append(",".join(row))
    _emit("\n".join(lines) + "\n", cfg)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(ap: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    ap.add_argument("--grid", type=int, default=d(DEFAULT_GRID),
                    help="interior grid points per entry (default 10000)")
    ap.add_argument("--refine", type=int, default=d(DEFAULT_REFINE),
                    help="golden-section refinement iterations (default 40)")
    ap.add_argument("--digits", type=int, default=d(40),
                    help="working precision in decimal digits (default 40)")
    ap.add_argument("--xmax", type=str, default=d("10"),
                    help="truncation point for unbounded domains (default 10)")
    ap.add_argument("--jobs", type=int, default=d(0),
                    help="parallel workers for verify (default: logical CPUs)")
    if suppress:
        ap.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable output")
    else:
        ap.add_argument("--json", action="store_true", help="machine-readable output")
    ap.add_argument("--out", type=str, default=d(None), help="write output to a file")
    ap.add_argument("--catalog", type=str, default=d(None),
                    help="load entries from a catalog file instead of the built-ins")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bounds",
        description="Catalog-driven numeric certification of sharp "
                    "elementary-function inequalities.")
    _add_common(ap, suppress=False)
    subparsers = ap.add_subparsers(dest="command", required=True)

    class _Sub:
        # every subcommand also accepts the shared options (after the verb)
        @staticmethod
        def add_parser(name, **kw):
            p = subparsers.add_parser(name, **kw)
            _add_common(p, suppress=True)
            return p

    sub = _Sub()

    p = sub.add_parser("list", help="list catalog entries")
    p.add_argument("--target", default=None)
    p.add_argument("--tag", default=None)
    p.add_argument("--side", default=None, choices=("lower", "upper"))

    p = sub.add_parser("show", help="show one entry in full")
    p.add_argument("id")

    p = sub.add_parser("verify", help="certify entries against their expectation")
    p.add_argument("ids", nargs="*")
    p.add_argument("--all", action="store_true", dest="all_entries")

    p = sub.add_parser("crossover", help="locate tightness crossings of two bounds")
    p.add_argument("id_a")
    p.add_argument("id_b")
    p.add_argument("--interval", default=None, help='e.g. "(0,pi/2)"')

    p = sub.add_parser("maxerr", help="maximum relative error of a bound")
    p.add_argument("id")
    p.add_argument("--interval", default=None)

    p = sub.add_parser("dominance", help="pairwise dominance table (CSV)")
    p.add_argument("ids", nargs="+")
    p.add_argument("--interval", default=None)

    p = sub.add_parser("const", help="show registered constants")
    p.add_argument("name", nargs="?", default=None)

    p = sub.add_parser("table", help="CSV of bounds vs target on a uniform grid")
    p.add_argument("target")
    p.add_argument("ids", nargs="*")
    p.add_argument("--points", type=int, default=200)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        cfg = RunConfig(
            grid_n=ns.grid, refine_depth=ns.refine, digits=ns.digits,
            x_max=Fraction(ns.xmax), jobs=ns.jobs, as_json=ns.json,
            out_path=ns.out, catalog_path=ns.catalog)
        cfg.validate()
    except (BoundsError, ValueError) as exc:
        print(f"bounds: {exc}", file=sys.stderr)
        return 2
    try:
        if ns.command == "list":
            return cmd_list(cfg, ns.target, ns.tag, ns.side)
        if ns.command == "show":
            return cmd_show(cfg, ns.id)
        if ns.command == "verify":
            return cmd_verify(cfg, ns.ids, ns.all_entries)
        if ns.command == "crossover":
            return cmd_crossover(cfg, ns.id_a, ns.id_b, ns.interval)
        if ns.command == "maxerr":
            return cmd_maxerr(cfg, ns.id, ns.interval)
        if ns.command == "dominance":
            return cmd_dominance(cfg, ns.ids, ns.interval)
        if ns.command == "const":
            return cmd_const(cfg, ns.name)
        if ns.command == "table":
            return cmd_table(cfg, ns.target, ns.ids, ns.points)
        raise BoundsError(f"unknown command {ns.command!r}")
    except UsageError as exc:
        print(f"bounds: {exc}", file=sys.stderr)
        return 2
    except BoundsError as exc:
        print(f"bounds: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
