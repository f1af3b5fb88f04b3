"""Two-variable Beta-function bound verification over regions.

Unit-square and strip entries are scanned on a tensor grid whose axes
cluster geometrically toward open boundaries (down to the region margin
``eps``), then the worst cell is polished by alternating coordinate-wise
golden-section sweeps.  Diagonal entries (y = 1-x) reduce to the 1-D engine.

Zero-margin-within-noise points are tolerated anywhere on a region: the
sharp sets here are whole edges or corners (for example B(x,y) -> 1/(xy) at
(1,1), or equality along the x=1 edge of the strip), and no region entry is
a misprint candidate; genuine violations beyond the error band still flip
the verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from gmpy2 import mpq

from . import expr as E
from . import oracle
from .catalog import BoundEntry
from .errors import DomainError, MismatchedTarget
from .oracle import EvalCtx, Precision
from .verifier import (CERTIFIED, INCONCLUSIVE, NOISE_FACTOR, VIOLATED,
                       VerificationReport, _aitken, _golden_min, certify_sign)

DEFAULT_GRID_2D = 128
SWEEPS = 5
SWEEP_ITERS = 20


@dataclass(frozen=True)
class Region:
    """Sampled part of the plane for a beta entry."""

    kind: str                      # unit-square | strip | diagonal
    x_lo: Fraction = Fraction(0)
    x_hi: Fraction = Fraction(1)
    x_lo_open: bool = True
    x_hi_open: bool = True
    eps: Fraction = Fraction(1, 1000)


def region_for(entry: BoundEntry, ec: EvalCtx) -> Region:
    if entry.region is None:
        raise MismatchedTarget(f"{entry.id} has no beta region")
    lo, hi = entry.domain.bounds(ec)
    return Region(kind=entry.region,
                  x_lo=Fraction(float(lo)), x_hi=Fraction(float(hi)),
                  x_lo_open=entry.domain.lo_open, x_hi_open=entry.domain.hi_open)


def _axis_fractions(n: int, eps: Fraction, lo_open: bool, hi_open: bool) -> list[Fraction]:
    """Relative coordinates in [0, 1]: midpoints plus geometric clusters."""
    qs = [Fraction(2 * i + 1, 2 * n) for i in range(n)]
    k = 2
    while Fraction(1, 2 ** k) >= eps:
        if lo_open:
            qs.append(Fraction(1, 2 ** k))
        if hi_open:
            qs.append(1 - Fraction(1, 2 ** k))
        k += 1
    if not lo_open:
        qs.append(Fraction(0))
    if not hi_open:
        qs.append(Fraction(1))
    return sorted(set(qs))


def verify_beta_bound(entry: BoundEntry, region: Optional[Region] = None,
                      grid_per_axis: int = DEFAULT_GRID_2D,
                      prec: Precision = Precision(),
                      refine_depth: int = SWEEP_ITERS) -> VerificationReport:
    """Certify the sign of a beta entry's margin over its region."""
    if entry.target != "beta_xy":
        raise MismatchedTarget(f"{entry.id} does not bound beta_xy")
    ec = EvalCtx(prec)
    reg = region or region_for(entry, ec)
    if reg.kind == "diagonal":
        return certify_sign(entry, grid_n=max(64, grid_per_axis ** 2 // 64),
                            refine_depth=max(refine_depth, 40), prec=prec)

    bound = E.compile_expr(entry.expr)
    lower = entry.side == "lower"

    def margin(xm, ym):
        env = {"x": (xm, 0.0), "y": (ym, 0.0)}
        b = bound(ec, env)
        t = oracle.beta_num(ec, env["x"], env["y"])
        return oracle.sub(ec, t, b) if lower else oracle.sub(ec, b, t)

    x_lo = oracle._mp(ec, mpq(reg.x_lo))
    x_span = ec.ctx.sub(oracle._mp(ec, mpq(reg.x_hi)), x_lo)
    y_lo = oracle._mp(ec, mpq(0))
    y_span = oracle._mp(ec, mpq(1))
    xqs = _axis_fractions(grid_per_axis, reg.eps, reg.x_lo_open, reg.x_hi_open)
    yqs = _axis_fractions(grid_per_axis, reg.eps, True, True)
    xs = [oracle.affine(ec, x_lo, x_span, q) for q in xqs]
    ys = [oracle.affine(ec, y_lo, y_span, q) for q in yqs]

    samples = 0
    violations = []
    resolved_min = math.inf
    resolved_arg = (math.nan, math.nan)
    argmin_idx = None
    unexcused = 0
    for i, xm in enumerate(xs):
        for j, ym in enumerate(ys):
            try:
                m = margin(xm, ym)
            except DomainError as exc:
                return VerificationReport(
                    entry_id=entry.id, status=VIOLATED, min_margin=-math.inf,
                    argmin=(float(xm), float(ym)), samples_used=samples,
                    refinements=0, counterexamples=[((float(xm), float(ym)),
                                                     -math.inf)],
                    precision_used=prec.digits, grid_n=grid_per_axis,
                    refine_depth=refine_depth,
                    notes=(f"expression left its domain: {exc}",))
            samples += 1
            mv, band = float(m[0]), NOISE_FACTOR * m[1]
            if mv < -band:
                violations.append(((float(xm), float(ym)), mv))
            elif mv > band:
                if mv < resolved_min:
                    resolved_min = mv
                    resolved_arg = (float(xm), float(ym))
                    argmin_idx = (i, j)
            # zero-consistent points: excused on regions (sharp edges/corners)

    refinements = 0
    if argmin_idx is not None and not violations:
        i, j = argmin_idx
        cx, cy = xs[i], ys[j]
        for sweep in range(SWEEPS):
            axis = sweep % 2
            if axis == 0:
                t0 = xs[max(i - 1, 0)]
                t1 = xs[min(i + 1, len(xs) - 1)]
                f = lambda t: margin(t, cy)
            else:
                t0 = ys[max(j - 1, 0)]
                t1 = ys[min(j + 1, len(ys) - 1)]
                f = lambda t: margin(cx, t)
            best_t, best_m = (cx if axis == 0 else cy), resolved_min
            for tm, m in _golden_min(ec, f, t0, t1, refine_depth):
                refinements += 1
                mv, band = float(m[0]), NOISE_FACTOR * m[1]
                if -band <= mv <= band:
                    continue
                if mv < -band:
                    violations.append((((float(tm), float(cy)) if axis == 0
                                        else (float(cx), float(tm))), mv))
                    break
                if mv < best_m:
                    best_m, best_t = mv, tm
            if axis == 0:
                cx = best_t
            else:
                cy = best_t
            if best_m < resolved_min:
                resolved_min = best_m
                resolved_arg = (float(cx), float(cy))

    if violations:
        violations.sort(key=lambda v: v[1])
        return VerificationReport(
            entry_id=entry.id, status=VIOLATED, min_margin=violations[0][1],
            argmin=violations[0][0], samples_used=samples,
            refinements=refinements, counterexamples=violations[:8],
            precision_used=prec.digits, grid_n=grid_per_axis,
            refine_depth=refine_depth)
    status = CERTIFIED if math.isfinite(resolved_min) else INCONCLUSIVE
    return VerificationReport(
        entry_id=entry.id, status=status, min_margin=resolved_min,
        argmin=resolved_arg, samples_used=samples, refinements=refinements,
        counterexamples=[], precision_used=prec.digits,
        grid_n=grid_per_axis, refine_depth=refine_depth)


# ---------------------------------------------------------------------------
# reproduction of the sharp two-variable constants


def alzer_constant_estimates(prec: Precision = Precision(),
                             grid: int = 32) -> tuple[float, float]:
    """sup/inf over the unit square of (1 - xy B(x,y)) (1+x)(1+y) /
    ((1-x)(1-y)): the sup is approached at (1,1), the inf at (0,0); both are
    estimated along the diagonal with geometric extrapolation and
    cross-checked against a coarse interior scan."""
    ec = EvalCtx(prec)

    def F(tx, ty):
        x = (tx, 0.0)
        y = (ty, 0.0)
        one = (mpq(1), 0.0)
        b = oracle.beta_num(ec, x, y)
        num = oracle.sub(ec, one, oracle.mul(ec, oracle.mul(ec, x, y), b))
        num = oracle.mul(ec, num, oracle.mul(ec, oracle.add(ec, one, x),
                                             oracle.add(ec, one, y)))
        den = oracle.mul(ec, oracle.sub(ec, one, x), oracle.sub(ec, one, y))
        return oracle.div(ec, num, den)

    sup_seq, inf_seq = [], []
    for k in range(4, 40):
        t_hi = oracle.affine(ec, oracle._mp(ec, mpq(0)), oracle._mp(ec, mpq(1)),
                             1 - Fraction(1, 2 ** k))
        t_lo = oracle.affine(ec, oracle._mp(ec, mpq(0)), oracle._mp(ec, mpq(1)),
                             Fraction(1, 2 ** k))
        vh = F(t_hi, t_hi)
        vl = F(t_lo, t_lo)
        sup_seq.append((float(vh[0]), vh[1]))
        inf_seq.append((float(vl[0]), vl[1]))
        if len(sup_seq) >= 3 and \
                abs(sup_seq[-1][0] - sup_seq[-2][0]) <= 30 * (sup_seq[-1][1] + sup_seq[-2][1]):
            break
    a_est = _aitken(sup_seq)
    b_est = _aitken(inf_seq)
    # interior scan sanity: nothing inside beats the corner limits
    for i in range(1, grid):
        for j in range(1, grid):
            tx = oracle.affine(ec, oracle._mp(ec, mpq(0)), oracle._mp(ec, mpq(1)),
                               Fraction(i, grid))
            ty = oracle.affine(ec, oracle._mp(ec, mpq(0)), oracle._mp(ec, mpq(1)),
                               Fraction(j, grid))
            v = float(F(tx, ty)[0])
            if v > a_est:
                a_est = v
            if v < b_est:
                b_est = v
    return a_est, b_est
