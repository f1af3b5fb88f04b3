"""Numeric sign certification for catalog entries and lemma-level checks.

The engine samples the margin (target minus bound for lower entries, bound
minus target for upper ones) on a midpoint grid, adds geometric clusters
toward open endpoints, refines every local grid minimum by golden section in
extended precision, and classifies the result against the propagated error
bounds:

* a point with ``margin < -10*err`` is a counterexample,
* a point with ``margin > 10*err`` is positively resolved,
* anything in between is indistinguishable from zero at the working
  precision.  Such points are expected exactly where an entry is sharp (or
  tangent), so they are excused when they sit against a declared sharp
  endpoint or declared interior tangency; anywhere else they make the
  verdict Inconclusive.

Certification is sampling-based with extended-precision confirmation, not
interval arithmetic; reports carry the grid, refinement depth and digits that
produced them and are bit-deterministic for fixed inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from gmpy2 import mpq

from . import expr as E
from . import oracle
from .catalog import BoundEntry, Catalog, Interval
from .errors import DomainError, EvalError, ValidationError
from .oracle import EvalCtx, Num, Precision

DEFAULT_GRID = 10_000
DEFAULT_REFINE = 40
CLUSTER_DEPTH = 40
NOISE_FACTOR = 10.0
MAX_REFINED_MINIMA = 6
MAX_COUNTEREXAMPLES = 8

CERTIFIED = "certified"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"


@dataclass
class Sample:
    x: object          # mpfr abscissa (exact sample point)
    margin: float
    err: float
    origin: str        # grid | cluster-lo | cluster-hi | end-lo | end-hi | refine


@dataclass
class VerificationReport:
    entry_id: str
    status: str
    min_margin: float
    argmin: float
    samples_used: int
    refinements: int
    counterexamples: list
    precision_used: int
    grid_n: int
    refine_depth: int
    param_values: Optional[dict] = None
    cluster_margins: dict = field(default_factory=dict)
    notes: tuple = ()

    def matches(self, expect: str) -> bool:
        return self.status == expect


@dataclass
class LimitReport:
    estimate: float
    expected: float
    residual: float
    terms_used: int


@dataclass
class MonotoneReport:
    fexpr: str
    interval: str
    direction: str
    status: str
    worst_violation: float
    worst_at: Optional[float] = None
    minimizer: Optional[float] = None
    minimum: Optional[float] = None
    limits: dict = field(default_factory=dict)
    samples_used: int = 0


@dataclass
class SubstitutionReport:
    id_a: str
    id_b: str
    transform: str
    max_deviation: float
    arg: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.max_deviation <= self.tolerance


# ---------------------------------------------------------------------------
# margin machinery


_ONE = (mpq(1), 0.0)


def _param_env(ec: EvalCtx, combo: dict) -> dict:
    return {name: E.compile_expr(node)(ec, {}) for name, node in combo.items()}


def _env_for(entry: BoundEntry, ec: EvalCtx, penv: dict, xm) -> dict:
    env = dict(penv)
    env["x"] = (xm, 0.0)
    if entry.region == "diagonal":
        env["y"] = oracle.sub(ec, _ONE, env["x"])
    return env


def target_fn(entry: BoundEntry, ec: EvalCtx, combo: dict) -> Callable:
    """Evaluator for the entry's effective target quantity."""
    tfn = E.compile_expr(entry.target_expr) if entry.target_expr is not None else None
    penv = _param_env(ec, combo)
    diagonal = entry.region == "diagonal"
    target = entry.target

    def t(xm) -> Num:
        env = _env_for(entry, ec, penv, xm)
        if tfn is not None:
            return tfn(ec, env)
        if diagonal:
            return oracle.target_num(ec, "beta_xy", (env["x"], env["y"]))
        return oracle.target_num(ec, target, (env["x"],))

    return t


def bound_fn(entry: BoundEntry, ec: EvalCtx, combo: dict) -> Callable:
    """Evaluator for the entry's bound expression."""
    bound = E.compile_expr(entry.expr)
    penv = _param_env(ec, combo)

    def b(xm) -> Num:
        return bound(ec, _env_for(entry, ec, penv, xm))

    return b


def margin_fn(entry: BoundEntry, ec: EvalCtx, combo: dict) -> Callable:
    """Margin evaluator m(x) for one parameter binding, as a Num pair."""
    tf = target_fn(entry, ec, combo)
    bf = bound_fn(entry, ec, combo)
    lower = entry.side == "lower"

    def f(xm) -> Num:
        t, b = tf(xm), bf(xm)
        return oracle.sub(ec, t, b) if lower else oracle.sub(ec, b, t)

    return f


def _grid_fractions(grid_n: int) -> list[Fraction]:
    return [Fraction(2 * i + 1, 2 * grid_n) for i in range(grid_n)]


def build_samples(ec: EvalCtx, domain: Interval, grid_n: int,
                  cluster_depth: int = CLUSTER_DEPTH) -> list[tuple]:
    """(abscissa, origin) pairs: interior midpoints, geometric clusters toward
    open endpoints, the endpoints themselves when closed."""
    lo, hi = domain.bounds(ec)
    span = ec.ctx.sub(hi, lo)
    pts = [(oracle.affine(ec, lo, span, q), "grid") for q in _grid_fractions(grid_n)]
    for k in range(1, cluster_depth + 1):
        q = Fraction(1, 2 ** k)
        if domain.lo_open:
            pts.append((oracle.affine(ec, lo, span, q), "cluster-lo"))
        if domain.hi_open:
            pts.append((oracle.affine(ec, lo, span, 1 - q), "cluster-hi"))
    if not domain.lo_open:
        pts.append((lo, "end-lo"))
    if not domain.hi_open:
        pts.append((hi, "end-hi"))
    pts.sort(key=lambda p: p[0])
    return pts


def _golden_min(ec: EvalCtx, f: Callable, a, b, iters: int) -> list[tuple]:
    """Golden-section minimization; returns the evaluated (x, Num) points."""
    ctx = ec.ctx
    invphi = ctx.div(ctx.sub(ctx.sqrt(oracle._mp(ec, mpq(5))), oracle._mp(ec, mpq(1))),
                     oracle._mp(ec, mpq(2)))
    out = []

    def ev(x):
        v = f(x)
        out.append((x, v))
        return v[0]

    h = ctx.sub(b, a)
    c = ctx.sub(b, ctx.mul(invphi, h))
    d = ctx.add(a, ctx.mul(invphi, h))
    fc, fd = ev(c), ev(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            h = ctx.sub(b, a)
            c = ctx.sub(b, ctx.mul(invphi, h))
            fc = ev(c)
        else:
            a, c, fc = c, d, fd
            h = ctx.sub(b, a)
            d = ctx.add(a, ctx.mul(invphi, h))
            fd = ev(d)
    return out


def _near(xf: float, anchor: float, radius: float) -> bool:
    return abs(xf - anchor) <= radius


class _Scan:
    """One margin scan at one precision for one parameter binding."""

    def __init__(self, entry: BoundEntry, combo: dict, grid_n: int,
                 refine_depth: int, prec: Precision):
        self.entry = entry
        self.combo = combo
        self.grid_n = grid_n
        self.refine_depth = refine_depth
        self.prec = prec
        self.ec = EvalCtx(prec)
        self.samples: list[Sample] = []
        self.refinements = 0
        self.notes: list[str] = []
        self.domain_violation: Optional[tuple] = None

    def run(self) -> None:
        ec = self.ec
        entry = self.entry
        f = margin_fn(entry, ec, self.combo)
        lo, hi = entry.domain.bounds(ec)
        self.lo_f, self.hi_f = float(lo), float(hi)
        self.span_f = self.hi_f - self.lo_f
        pts = build_samples(ec, entry.domain, self.grid_n)
        for xm, origin in pts:
            self._eval(f, xm, origin)
        self._refine(f)

    def _eval(self, f, xm, origin) -> Optional[Sample]:
        try:
            m = f(xm)
        except DomainError as exc:
            if origin.startswith("end-"):
                self.notes.append(f"endpoint not evaluable: {exc}")
                return None
            # the expression leaves its domain inside the claimed interval
            self.domain_violation = (float(xm), str(exc))
            return None
        s = Sample(xm, float(m[0]), m[1], origin)
        self.samples.append(s)
        return s

    def _refine(self, f) -> None:
        ordered = self.samples
        n = len(ordered)
        if n < 3:
            return
        minima = []
        for i in range(n):
            m = ordered[i].margin
            if (i == 0 or m <= ordered[i - 1].margin) and \
               (i == n - 1 or m <= ordered[i + 1].margin):
                if 0 < i < n - 1:
                    minima.append(i)
        minima.sort(key=lambda i: ordered[i].margin)
        for i in minima[:MAX_REFINED_MINIMA]:
            a, b = ordered[i - 1].x, ordered[i + 1].x
            for xm, m in _golden_min(self.ec, f, a, b, self.refine_depth):
                self.samples.append(Sample(xm, float(m[0]), m[1], "refine"))
                self.refinements += 1

    # classification ---------------------------------------------------

    def _excused(self, s: Sample) -> bool:
        cell = 2.0 * self.span_f / self.grid_n
        sharp = self.entry.sharp
        if "lo" in sharp and (s.origin in ("cluster-lo", "end-lo")
                              or _near(float(s.x), self.lo_f, cell)):
            return True
        if "hi" in sharp and (s.origin in ("cluster-hi", "end-hi")
                              or _near(float(s.x), self.hi_f, cell)):
            return True
        if self.entry.tangent is not None:
            tf = float(E.compile_expr(self.entry.tangent)(self.ec, {})[0])
            if _near(float(s.x), tf, max(cell, 1e-6 * self.span_f)):
                return True
        return False

    def classify(self) -> tuple[str, list, float, float, int]:
        violations = []
        resolved_min = math.inf
        resolved_arg = math.nan
        unexcused_zero = 0
        for s in self.samples:
            band = NOISE_FACTOR * s.err
            if s.margin < -band:
                violations.append(s)
            elif s.margin > band:
                if s.margin < resolved_min:
                    resolved_min, resolved_arg = s.margin, float(s.x)
            elif not self._excused(s):
                unexcused_zero += 1
        if self.domain_violation is not None:
            x, why = self.domain_violation
            return VIOLATED, [(x, math.nan)], math.nan, x, 0
        if violations:
            violations.sort(key=lambda s: s.margin)
            ces = [(float(s.x), s.margin) for s in violations[:MAX_COUNTEREXAMPLES]]
            return VIOLATED, ces, violations[0].margin, float(violations[0].x), 0
        if unexcused_zero or not math.isfinite(resolved_min):
            return INCONCLUSIVE, [], resolved_min, resolved_arg, unexcused_zero
        return CERTIFIED, [], resolved_min, resolved_arg, 0

    def cluster_margins(self) -> dict:
        out = {}
        for side in ("lo", "hi"):
            seq = [(float(s.x), s.margin, s.err) for s in self.samples
                   if s.origin == f"cluster-{side}"]
            seq.sort(key=lambda t: t[0], reverse=(side == "lo"))
            out[side] = seq
        return out


def certify_sign(entry: BoundEntry, grid_n: int = DEFAULT_GRID,
                 refine_depth: int = DEFAULT_REFINE,
                 prec: Precision = Precision(),
                 retry_on_inconclusive: bool = True) -> VerificationReport:
    """Certify the sign of the entry's margin over its domain.

    Parameterized entries are checked on their stored verification grid; the
    report aggregates the worst binding.  On an Inconclusive outcome the scan
    is retried once at twice the digits.
    """
    if grid_n < 64:
        raise ValidationError(entry.id, f"grid_n must be >= 64, got {grid_n}")
    if refine_depth < 0:
        raise ValidationError(entry.id, "refine_depth must be >= 0")
    combos = entry.param_grid()
    worst: Optional[VerificationReport] = None
    rank = {CERTIFIED: 0, INCONCLUSIVE: 1, VIOLATED: 2}
    for combo in combos:
        rep = _certify_one(entry, combo, grid_n, refine_depth, prec,
                           retry_on_inconclusive)
        if worst is None or rank[rep.status] > rank[worst.status] or (
                rep.status == worst.status
                and _lt(rep.min_margin, worst.min_margin)):
            worst = rep
    return worst


def _lt(a: float, b: float) -> bool:
    if math.isnan(a):
        return False
    if math.isnan(b):
        return True
    return a < b


def _certify_one(entry, combo, grid_n, refine_depth, prec, retry) -> VerificationReport:
    scan = _Scan(entry, combo, grid_n, refine_depth, prec)
    scan.run()
    status, ces, mmin, arg, unexcused = scan.classify()
    if status == INCONCLUSIVE and retry and prec.digits * 2 <= oracle.MAX_DIGITS:
        return _certify_one(entry, combo, grid_n, refine_depth,
                            prec.doubled(), retry=False)
    pv = {n: E.print_expr(v) for n, v in combo.items()} or None
    notes = tuple(scan.notes)
    if entry.has_tag("truncated"):
        notes += (f"verified on the truncated domain {entry.domain}",)
    if unexcused:
        notes += (f"{unexcused} sample(s) indistinguishable from zero away "
                  f"from declared sharp points",)
    return VerificationReport(
        entry_id=entry.id, status=status, min_margin=mmin, argmin=arg,
        samples_used=len(scan.samples), refinements=scan.refinements,
        counterexamples=ces, precision_used=prec.digits, grid_n=grid_n,
        refine_depth=refine_depth, param_values=pv,
        cluster_margins=scan.cluster_margins(), notes=notes)


# ---------------------------------------------------------------------------
# monotonicity / limits / substitution checks


def _as_expr(fexpr) -> E.Expr:
    return fexpr if E.is_node(fexpr) else E.parse_expr(str(fexpr))


def _fn_of(ec: EvalCtx, node: E.Expr) -> Callable:
    compiled = E.compile_expr(node)
    return lambda xm: compiled(ec, {"x": (xm, 0.0)})


def check_limit(fexpr, interval: Interval, which: str, expected,
                prec: Precision = Precision(), k_start: int = 6,
                k_max: int = 48) -> LimitReport:
    """Estimate the one-sided limit at an interval end along a geometric
    approach sequence, with Aitken (last-three) extrapolation, and compare
    against the expected closed form."""
    node = _as_expr(fexpr)
    ec = EvalCtx(prec)
    f = _fn_of(ec, node)
    lo, hi = interval.bounds(ec)
    span = ec.ctx.sub(hi, lo)
    seq: list[tuple[float, float]] = []
    for k in range(k_start, k_max + 1):
        q = Fraction(1, 2 ** k)
        xm = oracle.affine(ec, lo, span, q if which == "lo" else 1 - q)
        try:
            v = f(xm)
        except DomainError:
            continue
        seq.append((float(v[0]), v[1]))
        if len(seq) >= 3:
            d1 = abs(seq[-1][0] - seq[-2][0])
            noise = 30.0 * (seq[-1][1] + seq[-2][1])
            if d1 <= noise:
                break
    if not seq:
        raise DomainError("limit sequence empty: function not evaluable near endpoint")
    est = _aitken(seq)
    exp_node = _as_expr(expected)
    expected_v = float(E.compile_expr(exp_node)(ec, {})[0])
    return LimitReport(estimate=est, expected=expected_v,
                       residual=abs(est - expected_v), terms_used=len(seq))


def _aitken(seq: list[tuple[float, float]]) -> float:
    if len(seq) < 3:
        return seq[-1][0]
    s0, s1, s2 = (seq[-3][0], seq[-2][0], seq[-1][0])
    d1, d2 = s1 - s0, s2 - s1
    if d1 == d2 or d2 == 0.0:
        return s2
    r = d2 / d1
    if not math.isfinite(r) or abs(1.0 - r) < 1e-12:
        return s2
    return s2 + d2 * r / (1.0 - r)


def check_monotone(fexpr, interval: Interval, direction: str,
                   grid_n: int = 2000, prec: Precision = Precision(),
                   limits: Optional[dict] = None) -> MonotoneReport:
    """Adjacent-difference sign test on the clustered grid; for
    ``min-at-interior`` locates the interior minimizer by golden section.

    ``limits`` may map endpoint tags ('lo'/'hi') to expected closed forms;
    the report then carries the extrapolated residuals.
    """
    if direction not in ("increasing", "decreasing", "min-at-interior"):
        raise EvalError(f"unknown direction {direction!r}")
    node = _as_expr(fexpr)
    ec = EvalCtx(prec)
    f = _fn_of(ec, node)
    pts = build_samples(ec, interval, grid_n)
    vals = []
    for xm, origin in pts:
        try:
            v = f(xm)
        except DomainError:
            continue
        vals.append((xm, float(v[0]), v[1], origin))
    report = MonotoneReport(
        fexpr=E.print_expr(node), interval=str(interval), direction=direction,
        status=CERTIFIED, worst_violation=0.0, samples_used=len(vals))
    if direction == "min-at-interior":
        idx = min(range(len(vals)), key=lambda i: vals[i][1])
        if idx in (0, len(vals) - 1):
            report.status = INCONCLUSIVE
        else:
            a, b = vals[idx - 1][0], vals[idx + 1][0]
            best = (vals[idx][1], vals[idx][0])
            for xm, m in _golden_min(ec, f, a, b, 80):
                if float(m[0]) < best[0]:
                    best = (float(m[0]), xm)
            report.minimum, report.minimizer = best[0], float(best[1])
    else:
        sign = 1.0 if direction == "increasing" else -1.0
        worst = 0.0
        worst_at = None
        unresolved_interior = 0
        n = len(vals)
        for i in range(n - 1):
            d = sign * (vals[i + 1][1] - vals[i][1])
            band = NOISE_FACTOR * (vals[i][2] + vals[i + 1][2])
            if d < -band:
                if d < worst:
                    worst, worst_at = d, float(vals[i][0])
            elif abs(d) <= band:
                if vals[i][3] == "grid" and vals[i + 1][3] == "grid" \
                        and 0 < i < n - 2:
                    unresolved_interior += 1
        report.worst_violation = worst
        report.worst_at = worst_at
        if worst < 0.0:
            report.status = VIOLATED
        elif unresolved_interior:
            report.status = INCONCLUSIVE
    if limits:
        for which, expected in limits.items():
            report.limits[which] = check_limit(node, interval, which, expected, prec)
    return report


_TRANSFORMS = ("x=cos(2t)", "x=tan(t)", "identity")


def check_substitution(catalog: Catalog, id_a: str, id_b: str, transform: str,
                       grid_n: int = 256,
                       prec: Precision = Precision()) -> SubstitutionReport:
    """Verify that entry B's bound is the image of entry A's bound under the
    named substitution (with the arccos halving scale where applicable)."""
    if transform not in _TRANSFORMS:
        raise EvalError(f"unknown transform {transform!r}; pick from {_TRANSFORMS}")
    ea, eb = catalog.lookup(id_a), catalog.lookup(id_b)
    ec = EvalCtx(prec)
    fa = E.compile_expr(ea.expr)
    fb = E.compile_expr(eb.expr)
    pa = _param_env(ec, ea.default_params())
    pb = _param_env(ec, eb.default_params())
    if transform == "identity":
        lo, hi = ea.domain.bounds(ec)
        scale = _ONE
        xmap = None
    else:
        # t in (0, pi/4) covers x = cos 2t and x = tan t in (0, 1)
        lo = oracle._mp(ec, mpq(0))
        hi = ec.ctx.div(ec.pi()[0], oracle._mp(ec, mpq(4)))
        if transform == "x=cos(2t)":
            scale = (mpq(1, 2), 0.0)
            xmap = lambda t: oracle.call(ec, "cos", oracle.mul(ec, (mpq(2), 0.0), t))
        else:
            scale = _ONE
            xmap = lambda t: oracle.call(ec, "tan", t)
    span = ec.ctx.sub(hi, lo)
    worst = (-math.inf, math.nan)
    for q in _grid_fractions(grid_n):
        tm = (oracle.affine(ec, lo, span, q), 0.0)
        va = fa(ec, dict(pa, x=tm))
        if xmap is None:
            vb = fb(ec, dict(pb, x=tm))
        else:
            vb = fb(ec, dict(pb, x=xmap(tm)))
        dev = oracle.abs_(ec, oracle.sub(ec, va, oracle.mul(ec, scale, vb)))
        dv = float(dev[0])
        if dv > worst[0]:
            worst = (dv, float(tm[0]))
    return SubstitutionReport(
        id_a=id_a, id_b=id_b, transform=transform,
        max_deviation=worst[0], arg=worst[1],
        tolerance=10.0 ** (5 - prec.digits))
