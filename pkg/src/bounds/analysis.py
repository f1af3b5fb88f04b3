"""Comparative analysis: crossover abscissae, maximum relative errors,
numeric best-possible constants and dominance orderings between bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from gmpy2 import mpq

from . import expr as E
from . import oracle
from .catalog import BoundEntry, Catalog, Interval
from .errors import DomainError, EmptyOverlap, EvalError, MismatchedTarget
from .oracle import EvalCtx, Precision
from .verifier import (NOISE_FACTOR, _aitken, _golden_min, bound_fn,
                       build_samples, target_fn)

BISECT_WIDTH = 1e-12
TANGENCY_LEVEL = 1e-9


@dataclass
class CrossoverResult:
    id_a: str
    id_b: str
    interval: tuple
    crossings: list          # (abscissa, bracket_lo, bracket_hi)
    dominance: list          # (sub_lo, sub_hi, "A" | "B" | "tie")
    possible_tangencies: list = field(default_factory=list)
    grid_n: int = 0
    precision_used: int = 0


@dataclass
class ExtremumRecord:
    quantity: str            # max_rel_error | sup_ratio | inf_ratio
    value: float
    arg: float
    ids: tuple = ()
    interval: tuple = ()
    grid_n: int = 0
    refine_iters: int = 0
    bracket_width: float = 0.0
    asymptotic_residual: Optional[float] = None


def _intersection(ec: EvalCtx, a: BoundEntry, b: BoundEntry) -> Interval:
    alo, ahi = a.domain.bounds(ec)
    blo, bhi = b.domain.bounds(ec)
    lo_node = a.domain.lo if alo >= blo else b.domain.lo
    hi_node = a.domain.hi if ahi <= bhi else b.domain.hi
    iv = Interval(lo_node, hi_node, True, True)
    lo, hi = iv.bounds(ec)
    if not lo < hi:
        raise EmptyOverlap(f"{a.id} and {b.id} have no common subinterval")
    return iv


def crossover(catalog: Catalog, id_a: str, id_b: str,
              interval: Optional[Interval] = None, grid_n: int = 2000,
              prec: Precision = Precision()) -> CrossoverResult:
    """Locate every sign change of A(x) - B(x); bisect each bracket to width
    1e-12 and derive the dominance segments from the sign pattern."""
    a = catalog.lookup(id_a)
    b = catalog.lookup(id_b)
    if a.target != b.target:
        raise MismatchedTarget(f"{id_a} bounds {a.target}, {id_b} bounds {b.target}")
    ec = EvalCtx(prec)
    iv = interval or _intersection(ec, a, b)
    lo, hi = iv.bounds(ec)
    span = ec.ctx.sub(hi, lo)
    fa = bound_fn(a, ec, a.default_params())
    fb = bound_fn(b, ec, b.default_params())

    def d(xm):
        return oracle.sub(ec, fa(xm), fb(xm))

    xs, vals = [], []
    for q in (Fraction(2 * i + 1, 2 * grid_n) for i in range(grid_n)):
        xm = oracle.affine(ec, lo, span, q)
        v = d(xm)
        xs.append(xm)
        vals.append(v)

    def sgn(v) -> int:
        m, err = float(v[0]), v[1]
        if m > NOISE_FACTOR * err:
            return 1
        if m < -NOISE_FACTOR * err:
            return -1
        return 0

    signs = [sgn(v) for v in vals]
    crossings = []
    for i in range(grid_n - 1):
        if signs[i] != 0 and signs[i + 1] != 0 and signs[i] != signs[i + 1]:
            xa, xb = xs[i], xs[i + 1]
            sa = signs[i]
            while float(ec.ctx.sub(xb, xa)) > BISECT_WIDTH:
                mid = ec.ctx.div(ec.ctx.add(xa, xb), oracle._mp(ec, mpq(2)))
                sm = sgn(d(mid))
                if sm == 0 or sm == sa:
                    xa = mid
                else:
                    xb = mid
            crossings.append((float(ec.ctx.div(ec.ctx.add(xa, xb),
                                               oracle._mp(ec, mpq(2)))),
                              float(xa), float(xb)))

    # tangency sweep: grid minima of |d| below the level with no sign change
    tangencies = []
    absd = [abs(float(v[0])) for v in vals]
    for i in range(1, grid_n - 1):
        if absd[i] <= absd[i - 1] and absd[i] <= absd[i + 1] and \
                absd[i] < TANGENCY_LEVEL:
            near_crossing = any(float(xs[i - 1]) <= c[0] <= float(xs[i + 1])
                                for c in crossings)
            if not near_crossing and signs[i - 1] == signs[i + 1] and signs[i - 1] != 0:
                tangencies.append((float(xs[i]), absd[i]))

    lo_f, hi_f = float(lo), float(hi)
    cuts = [lo_f] + [c[0] for c in crossings] + [hi_f]
    dominance = []
    same_side = a.side == b.side
    for j in range(len(cuts) - 1):
        if cuts[j + 1] - cuts[j] <= 1e-15 * (hi_f - lo_f):
            continue
        mid = oracle._mp(ec, mpq(Fraction((cuts[j] + cuts[j + 1]) / 2.0)))
        try:
            s = sgn(d(mid))
        except DomainError:
            continue
        if s == 0:
            label = "tie"
        elif same_side and a.side == "lower":
            label = "A" if s > 0 else "B"        # larger lower bound is tighter
        elif same_side:
            label = "A" if s < 0 else "B"        # smaller upper bound is tighter
        else:
            label = "A-above" if s > 0 else "B-above"
        dominance.append((cuts[j], cuts[j + 1], label))
    return CrossoverResult(
        id_a=id_a, id_b=id_b, interval=(lo_f, hi_f), crossings=crossings,
        dominance=dominance, possible_tangencies=tangencies,
        grid_n=grid_n, precision_used=prec.digits)


def max_rel_error(entry: BoundEntry, interval: Optional[Interval] = None,
                  grid_n: int = 2000, prec: Precision = Precision(),
                  refine_iters: int = 80) -> ExtremumRecord:
    """Maximize |bound - target| / |target| by grid scan plus golden section.

    Arctan entries default to the wide window (0, 1000] so the whole
    approach to pi/2 is covered; everything else uses the entry's domain.
    """
    ec = EvalCtx(prec)
    if interval is None and entry.target == "atan":
        interval = Interval(E.Number(Fraction(0)), E.Number(Fraction(1000)),
                            True, False)
    iv = interval or entry.domain
    lo, hi = iv.bounds(ec)
    combo = entry.default_params()
    tf = target_fn(entry, ec, combo)
    bf = bound_fn(entry, ec, combo)

    def rel(xm):
        t = tf(xm)
        if t[0] == 0:
            raise DomainError("target vanishes inside the interval")
        m = oracle.sub(ec, bf(xm), t)
        return oracle.div(ec, oracle.abs_(ec, m), oracle.abs_(ec, t))

    def negrel(xm):
        return oracle.neg(ec, rel(xm))

    pts = build_samples(ec, iv, grid_n)
    best = (-math.inf, None, None)  # value, x, index
    for idx, (xm, origin) in enumerate(pts):
        try:
            rv = float(rel(xm)[0])
        except DomainError:
            continue
        if rv > best[0]:
            best = (rv, xm, idx)
    idx = best[2]
    bracket = 0.0
    if idx is not None and 0 < idx < len(pts) - 1:
        a, b = pts[idx - 1][0], pts[idx + 1][0]
        for xm, m in _golden_min(ec, negrel, a, b, refine_iters):
            rv = -float(m[0])
            if rv > best[0]:
                best = (rv, xm, idx)
        bracket = abs(float(ec.ctx.sub(b, a))) * (0.6180339887498949 ** refine_iters)
    asym = None
    if entry.target == "atan":
        half_pi = ec.ctx.div(ec.pi()[0], oracle._mp(ec, mpq(2)))
        bf2 = bound_fn(entry, ec, combo)
        asym = abs(float(ec.ctx.sub(oracle._mp(ec, bf2(hi)[0]), half_pi)))
    return ExtremumRecord(
        quantity="max_rel_error", value=best[0],
        arg=float(best[1]) if best[1] is not None else math.nan,
        ids=(entry.id,), interval=(float(lo), float(hi)), grid_n=grid_n,
        refine_iters=refine_iters, bracket_width=bracket,
        asymptotic_residual=asym)


def _limit_estimate(node: E.Expr, iv: Interval, which: str, ec: EvalCtx,
                    k_start: int = 6, k_max: int = 48) -> Optional[float]:
    f = E.compile_expr(node)
    lo, hi = iv.bounds(ec)
    span = ec.ctx.sub(hi, lo)
    seq = []
    for k in range(k_start, k_max + 1):
        q = Fraction(1, 2 ** k)
        xm = oracle.affine(ec, lo, span, q if which == "lo" else 1 - q)
        try:
            v = f(ec, {"x": (xm, 0.0)})
        except (DomainError, EvalError):
            continue
        seq.append((float(v[0]), v[1]))
        if len(seq) >= 3:
            d0 = abs(seq[-2][0] - seq[-3][0])
            d1 = abs(seq[-1][0] - seq[-2][0])
            if d1 > 4.0 * d0 and d1 > 1e6 * (abs(seq[-1][0]) * 1e-12 + 1e-300):
                return None  # diverging toward the endpoint
            if d1 <= 30.0 * (seq[-1][1] + seq[-2][1]):
                break
    if len(seq) < 3:
        return None
    return _aitken(seq)


def best_constant(ratio_expr, interval: Interval, kind: str = "sup",
                  grid_n: int = 2000, prec: Precision = Precision(),
                  refine_iters: int = 80) -> ExtremumRecord:
    """Numeric sup/inf of a univariate ratio with endpoint limits handled by
    geometric extrapolation.  sup(r) and -inf(-r) coincide bit for bit."""
    if kind not in ("sup", "inf"):
        raise EvalError(f"kind must be sup|inf, got {kind!r}")
    node = ratio_expr if E.is_node(ratio_expr) else E.parse_expr(str(ratio_expr))
    work = E.Unary("-", node) if kind == "sup" else node
    ec = EvalCtx(prec)
    f = E.compile_expr(work)

    def fx(xm):
        return f(ec, {"x": (xm, 0.0)})

    lo, hi = interval.bounds(ec)
    pts = build_samples(ec, interval, grid_n)
    best = (math.inf, None, None)
    for idx, (xm, origin) in enumerate(pts):
        try:
            v = fx(xm)
        except DomainError:
            continue
        vv = float(v[0])
        if vv < best[0]:
            best = (vv, xm, idx)
    bracket = 0.0
    if best[2] is not None and 0 < best[2] < len(pts) - 1:
        a, b = pts[best[2] - 1][0], pts[best[2] + 1][0]
        for xm, m in _golden_min(ec, fx, a, b, refine_iters):
            if float(m[0]) < best[0]:
                best = (float(m[0]), xm, best[2])
        bracket = abs(float(ec.ctx.sub(b, a))) * (0.6180339887498949 ** refine_iters)
    value, arg = best[0], float(best[1]) if best[1] is not None else math.nan
    for which, endpoint in (("lo", float(lo)), ("hi", float(hi))):
        est = _limit_estimate(work, interval, which, ec)
        if est is not None and est < value:
            value, arg = est, endpoint
    if kind == "sup":
        value = -value
    return ExtremumRecord(
        quantity=f"{kind}_ratio", value=value, arg=arg, ids=(),
        interval=(float(lo), float(hi)), grid_n=grid_n,
        refine_iters=refine_iters, bracket_width=bracket)


def dominance_table(catalog: Catalog, ids: list[str],
                    interval: Optional[Interval] = None, grid_n: int = 2000,
                    prec: Precision = Precision()) -> list[CrossoverResult]:
    """Pairwise crossover matrix for same-target, same-side entries, ordered
    lexicographically by (id_a, id_b)."""
    entries = [catalog.lookup(i) for i in ids]
    if len(entries) < 2:
        return []
    targets = {e.target for e in entries}
    sides = {e.side for e in entries}
    if len(targets) > 1:
        raise MismatchedTarget(f"entries bound different targets: {sorted(targets)}")
    if len(sides) > 1:
        raise MismatchedTarget("dominance table needs same-side entries")
    rows = []
    for i, a in enumerate(sorted(ids)):
        for b in sorted(ids)[i + 1:]:
            rows.append(crossover(catalog, a, b, interval=interval,
                                  grid_n=grid_n, prec=prec))
    return rows
