"""Extended-precision reference evaluation of target quantities.

Every inequality in the catalog is judged against values produced here, so the
whole module is built on MPFR (via gmpy2): software binary big-floats with
correctly rounded operations and transcendental functions at a chosen working
precision.  Hardware doubles never back a reference value.

Values travel as ``(value, err)`` pairs: ``value`` is an ``mpfr`` (or an exact
``mpq`` while a subexpression is still rational) and ``err`` is a conservative
absolute error bound propagated through every operation with first-order
Lipschitz estimates.  Exact rational arithmetic carries ``err == 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import gmpy2
from gmpy2 import mpfr, mpq

from .errors import DomainError, EvalError, PrecisionError

MIN_DIGITS = 30
MAX_DIGITS = 300
DEFAULT_DIGITS = 40
GUARD_BITS = 24
TRIG_ARG_LIMIT = 1.0e4

_LOG2_10 = math.log2(10.0)


@dataclass(frozen=True)
class Precision:
    """Working precision expressed in significant decimal digits."""

    digits: int = DEFAULT_DIGITS

    def __post_init__(self) -> None:
        if not isinstance(self.digits, int):
            raise PrecisionError(f"digits must be an integer, got {self.digits!r}")
        if self.digits < MIN_DIGITS or self.digits > MAX_DIGITS:
            raise PrecisionError(
                f"digits must lie in [{MIN_DIGITS}, {MAX_DIGITS}], got {self.digits}"
            )

    @property
    def bits(self) -> int:
        # guard bits keep accumulated rounding far below the 10^(2-digits) claim
        return int(math.ceil(self.digits * _LOG2_10)) + GUARD_BITS

    def err_cap(self, value: float) -> float:
        """Largest err_bound the RefValue contract allows for ``value``."""
        return 10.0 ** (2 - self.digits) * max(abs(value), 10.0 ** (-self.digits))

    def doubled(self) -> "Precision":
        return Precision(min(2 * self.digits, MAX_DIGITS))


@dataclass(frozen=True)
class RefValue:
    """A reference value with a conservative absolute error bound."""

    value: object  # mpfr, or mpq when the computation stayed exact
    err_bound: float

    def __float__(self) -> float:
        return float(self.value)

    @property
    def is_exact(self) -> bool:
        return self.err_bound == 0.0


class EvalCtx:
    """Bundles the gmpy2 context with the error-model constants.

    One instance per evaluation batch; never shared across threads (each
    worker builds its own, all values are immutable).
    """

    __slots__ = ("prec", "ctx", "eps", "consts")

    def __init__(self, prec: Precision):
        self.prec = prec
        self.ctx = gmpy2.context(
            precision=prec.bits,
            trap_divzero=True,
            trap_invalid=True,
            trap_overflow=True,
        )
        self.eps = 2.0 ** (1 - prec.bits)
        self.consts: dict[int, tuple] = {}  # memo for hoisted constant subtrees

    def pi(self) -> tuple:
        memo = self.consts.get(-1)
        if memo is None:
            v = self.ctx.const_pi()
            memo = (v, abs(float(v)) * self.eps)
            self.consts[-1] = memo
        return memo


Num = tuple  # (mpfr | mpq, float err)


def _f(v) -> float:
    try:
        return float(v)
    except OverflowError:
        return math.inf


def _ulp(ec: EvalCtx, v) -> float:
    # doubled to cover one internal operand conversion alongside the rounding
    return 2.0 * abs(_f(v)) * ec.eps


def _is_q(v) -> bool:
    return isinstance(v, (mpq, int))


def to_num(ec: EvalCtx, v, err: float = 0.0) -> Num:
    """Wrap a Python/gmpy2 number as an exact (or err-tagged) operand."""
    if isinstance(v, (int, mpq)):
        return (mpq(v), err)
    if isinstance(v, Fraction):
        return (mpq(v.numerator, v.denominator), err)
    if isinstance(v, float):
        return (mpq(Fraction(v)), err)  # binary floats are exact rationals
    if isinstance(v, mpfr):
        return (v, err)
    if isinstance(v, str):
        return (mpq(Fraction(v)), err)
    raise EvalError(f"cannot interpret {v!r} as a number")


def _mp(ec: EvalCtx, v) -> mpfr:
    return mpfr(v, ec.prec.bits) if _is_q(v) else v


def affine(ec: EvalCtx, lo, span, q) -> mpfr:
    """lo + span*q rounded into the working precision (an exact sample point:
    whatever dyadic it lands on is the abscissa actually certified)."""
    return ec.ctx.add(lo, ec.ctx.mul(span, mpfr(q, ec.prec.bits)))


def add(ec: EvalCtx, a: Num, b: Num) -> Num:
    if _is_q(a[0]) and _is_q(b[0]):
        return (a[0] + b[0], a[1] + b[1])
    r = ec.ctx.add(a[0], b[0])
    return (r, a[1] + b[1] + _ulp(ec, r))


def sub(ec: EvalCtx, a: Num, b: Num) -> Num:
    if _is_q(a[0]) and _is_q(b[0]):
        return (a[0] - b[0], a[1] + b[1])
    r = ec.ctx.sub(a[0], b[0])
    return (r, a[1] + b[1] + _ulp(ec, r))


def mul(ec: EvalCtx, a: Num, b: Num) -> Num:
    if _is_q(a[0]) and _is_q(b[0]):
        return (a[0] * b[0], a[1] * abs(_f(b[0])) + b[1] * abs(_f(a[0])) + a[1] * b[1])
    r = ec.ctx.mul(a[0], b[0])
    e = a[1] * abs(_f(b[0])) + b[1] * abs(_f(a[0])) + a[1] * b[1] + _ulp(ec, r)
    return (r, e)


def div(ec: EvalCtx, a: Num, b: Num) -> Num:
    if b[0] == 0:
        raise DomainError("division by zero")
    fb = abs(_f(b[0]))
    if _is_q(a[0]) and _is_q(b[0]):
        r = a[0] / b[0]
        return (r, (a[1] + abs(_f(r)) * b[1]) / fb if fb else math.inf)
    r = ec.ctx.div(a[0], b[0])
    e = ((a[1] + abs(_f(r)) * b[1]) / fb if fb else math.inf) + _ulp(ec, r)
    return (r, e)


def neg(ec: EvalCtx, a: Num) -> Num:
    # operator minus would round through the 53-bit global context
    return (-a[0] if _is_q(a[0]) else ec.ctx.minus(a[0]), a[1])


def abs_(ec: EvalCtx, a: Num) -> Num:
    return (abs(a[0]) if _is_q(a[0]) else ec.ctx.abs(a[0]), a[1])


def min_(ec: EvalCtx, a: Num, b: Num) -> Num:
    # if the comparison could flip within error, the summed err still covers
    # the other operand
    return (a[0], a[1] + b[1]) if a[0] <= b[0] else (b[0], a[1] + b[1])


def max_(ec: EvalCtx, a: Num, b: Num) -> Num:
    return (a[0], a[1] + b[1]) if a[0] >= b[0] else (b[0], a[1] + b[1])


_Q_POW_LIMIT = 1 << 16


def pow_(ec: EvalCtx, a: Num, b: Num) -> Num:
    av, ae = a
    bv, be = b
    if _is_q(bv):
        bq = mpq(bv)
        num, den = int(bq.numerator), int(bq.denominator)
        base_zero = av == 0
        if num == 0:
            if base_zero:
                raise EvalError("0^0 is undefined")
            return (mpq(1), 0.0)
        if base_zero:
            if num < 0:
                raise DomainError("zero base with negative exponent")
            return (mpq(0), 0.0)
        if den == 1 and abs(num) <= _Q_POW_LIMIT:
            fa = abs(_f(av))
            if _is_q(av):
                r = mpq(av) ** num
                e = abs(num) * abs(_f(r)) * ae / fa if ae else 0.0
                return (r, e)
            r = ec.ctx.pow(av, num)
            e = (abs(num) * abs(_f(r)) * ae / fa if ae and fa else 0.0) + _ulp(ec, r)
            return (r, e)
        if den > _Q_POW_LIMIT or abs(num) > _Q_POW_LIMIT:
            raise EvalError("rational exponent too large")
        # fractional exponent p/q: exact power, then one correctly rounded root
        if av < 0:
            raise DomainError("negative base with non-integer exponent")
        t = mpq(av) ** num if _is_q(av) else ec.ctx.pow(av, num)
        ft = abs(_f(t))
        et = (abs(num) * ft * ae / abs(_f(av)) if ae else 0.0)
        if not _is_q(t):
            et += _ulp(ec, t)
        r = ec.ctx.rootn(_mp(ec, t), den)
        e = (abs(_f(r)) * et / (den * ft) if ft else et) + _ulp(ec, r)
        return (r, e)
    # real (inexact) exponent
    if av == 0:
        if bv > 0:
            return (mpq(0), 0.0)
        raise DomainError("zero base with non-positive real exponent")
    if av < 0:
        raise DomainError("negative base with non-integer exponent")
    r = ec.ctx.pow(_mp(ec, av), bv)
    fa = abs(_f(av))
    e = abs(_f(r)) * (abs(_f(bv)) * ae / fa + abs(math.log(fa)) * be) + _ulp(ec, r)
    return (r, e)


FUNCTIONS = (
    "sin", "cos", "tan", "asin", "acos", "atan",
    "sinh", "cosh", "tanh", "exp", "log", "sqrt", "gamma",
)


def _is_integral(v) -> bool:
    if _is_q(v):
        return mpq(v).denominator == 1
    return gmpy2.is_integer(v)


def call(ec: EvalCtx, fn: str, a: Num) -> Num:
    av, ae = a
    fx = _f(av)
    if fn in ("sin", "cos", "tan") and abs(fx) > TRIG_ARG_LIMIT:
        raise DomainError(f"|x| > {TRIG_ARG_LIMIT:g} outside the argument-reduction policy")
    if fn in ("asin", "acos") and abs(av) > 1:
        raise DomainError(f"{fn} argument outside [-1, 1]")
    if fn == "log" and av <= 0:
        raise DomainError("log of a non-positive number")
    if fn == "sqrt" and av < 0:
        raise DomainError("sqrt of a negative number")
    if fn == "gamma" and av <= 0 and _is_integral(av):
        raise DomainError("gamma pole at a non-positive integer")
    try:
        r = getattr(ec.ctx, fn)(_mp(ec, av))
    except (ZeroDivisionError, OverflowError, ValueError) as exc:
        raise DomainError(f"{fn}({fx!r}) left the function domain") from exc
    lip = _lipschitz(ec, fn, av, fx, r) if ae else 0.0
    return (r, lip * ae + _ulp(ec, r))


def _lipschitz(ec: EvalCtx, fn: str, x, fx: float, r) -> float:
    fr = _f(r)
    if fn in ("sin", "cos", "tanh", "atan"):
        return 1.0
    if fn == "tan":
        return 1.0 + fr * fr
    if fn in ("asin", "acos"):
        w = 1.0 - fx * fx
        return 1.0 / math.sqrt(w) if w > 1e-30 else 1e15
    if fn == "sinh":
        return math.hypot(1.0, fr)
    if fn == "cosh":
        return math.sqrt(max(fr * fr - 1.0, 0.0))
    if fn == "exp":
        return abs(fr)
    if fn == "log":
        return 1.0 / abs(fx)
    if fn == "sqrt":
        return 0.5 / fr if fr > 0 else 1e15
    if fn == "gamma":
        if fx > 0:
            # |psi(x)| <= |log x| + 1/x for x > 0
            return abs(fr) * (abs(math.log(fx)) + 1.0 / fx)
        return abs(fr) * abs(_f(ec.ctx.digamma(_mp(ec, x))))
    raise EvalError(f"unknown function {fn!r}")


# ---------------------------------------------------------------------------
# public oracle operations


def eval_ref(fn: str, x, prec: Precision = Precision()) -> RefValue:
    """Reference value of a basic function at ``x`` within ``err_bound``."""
    if fn not in FUNCTIONS:
        raise EvalError(f"unknown function id {fn!r}")
    ec = EvalCtx(prec)
    a = to_num(ec, x)
    if abs(_f(a[0])) > TRIG_ARG_LIMIT:
        raise DomainError(f"|x| > {TRIG_ARG_LIMIT:g} outside the argument-reduction policy")
    v, e = call(ec, fn, a)
    return RefValue(v, e)


def eval_beta(x, y, prec: Precision = Precision()) -> RefValue:
    ec = EvalCtx(prec)
    v, e = beta_num(ec, to_num(ec, x), to_num(ec, y))
    return RefValue(v, e)


_LOG_GAMMA_SWITCH = 30.0


def beta_num(ec: EvalCtx, a: Num, b: Num) -> Num:
    """B(x, y) = Gamma(x) Gamma(y) / Gamma(x+y); log-gamma route for large sums."""
    if a[0] <= 0 or b[0] <= 0:
        raise DomainError("beta requires positive arguments")
    s = add(ec, a, b)
    if _f(s[0]) > _LOG_GAMMA_SWITCH:
        la, lb, ls = _lgamma(ec, a), _lgamma(ec, b), _lgamma(ec, s)
        return call(ec, "exp", sub(ec, add(ec, la, lb), ls))
    ga = call(ec, "gamma", a)
    gb = call(ec, "gamma", b)
    gs = call(ec, "gamma", s)
    return div(ec, mul(ec, ga, gb), gs)


def _lgamma(ec: EvalCtx, a: Num) -> Num:
    x = _mp(ec, a[0])
    r, sign = ec.ctx.lgamma(x)
    if sign < 0:
        raise DomainError("log-gamma of a point where gamma is negative")
    fx = _f(x)
    lip = abs(math.log(fx)) + 1.0 / fx  # |psi| bound for x > 0
    return (r, lip * a[1] + _ulp(ec, r))


# ---------------------------------------------------------------------------
# composite targets


def _t_sinc(ec, x):
    return div(ec, call(ec, "sin", x), x)


def _t_x_over_sin(ec, x):
    return div(ec, x, call(ec, "sin", x))


def _t_x_over_tan(ec, x):
    return div(ec, x, call(ec, "tan", x))


def _t_tan_over_x(ec, x):
    return div(ec, call(ec, "tan", x), x)


def _t_sinhc(ec, x):
    return div(ec, call(ec, "sinh", x), x)


def _t_half(ec, x):
    return div(ec, x, (mpq(2), 0.0))


def _t_redheffer(ec, x):
    pi2 = pow_(ec, ec.pi(), (mpq(2), 0.0))
    x2 = pow_(ec, x, (mpq(2), 0.0))
    return div(ec, sub(ec, pi2, x2), add(ec, pi2, x2))


def _sq(ec, a):
    return pow_(ec, a, (mpq(2), 0.0))


def _times(ec, k, a):
    return mul(ec, (mpq(k), 0.0), a)


TARGETS: dict[str, tuple[int, Callable]] = {
    "identity": (1, lambda ec, x: x),
    "sinc": (1, _t_sinc),
    "cos": (1, lambda ec, x: call(ec, "cos", x)),
    "tan_over_x": (1, _t_tan_over_x),
    "x_over_tan": (1, _t_x_over_tan),
    "acos": (1, lambda ec, x: call(ec, "acos", x)),
    "atan": (1, lambda ec, x: call(ec, "atan", x)),
    "sinh_over_x": (1, _t_sinhc),
    "cosh": (1, lambda ec, x: call(ec, "cosh", x)),
    "tanh": (1, lambda ec, x: call(ec, "tanh", x)),
    "tan_half": (1, lambda ec, x: call(ec, "tan", _t_half(ec, x))),
    "tanh_half": (1, lambda ec, x: call(ec, "tanh", _t_half(ec, x))),
    "redheffer_ratio": (1, _t_redheffer),
    "wilker_sum": (1, lambda ec, x: add(
        ec, _times(ec, 2, _t_x_over_sin(ec, x)), _t_x_over_tan(ec, x))),
    "wilker_anglesio": (1, lambda ec, x: add(
        ec, _sq(ec, _t_sinc(ec, x)), _t_tan_over_x(ec, x))),
    "wilker_huygens": (1, lambda ec, x: add(
        ec, _times(ec, 2, _t_sinc(ec, x)), _t_tan_over_x(ec, x))),
    "wilker_wang": (1, lambda ec, x: add(
        ec, _sq(ec, _t_x_over_sin(ec, x)), _t_x_over_tan(ec, x))),
    "wilker_hyp": (1, lambda ec, x: add(
        ec, _sq(ec, _t_sinhc(ec, x)), div(ec, call(ec, "tanh", x), x))),
    "wilker_hyp_wang": (1, lambda ec, x: add(
        ec, _sq(ec, div(ec, x, call(ec, "sinh", x))), div(ec, x, call(ec, "tanh", x)))),
    "jordan_cos_sum": (1, lambda ec, x: add(
        ec, _times(ec, 3, _t_x_over_sin(ec, x)), call(ec, "cos", x))),
    "sinc_cos_diff": (1, lambda ec, x: sub(
        ec, _times(ec, 3, _t_sinc(ec, x)), call(ec, "cos", x))),
    "log_sec": (1, lambda ec, x: neg(ec, call(ec, "log", call(ec, "cos", x)))),
    "log_cosh": (1, lambda ec, x: call(ec, "log", call(ec, "cosh", x))),
    "log_sinc_inv": (1, lambda ec, x: call(ec, "log", _t_x_over_sin(ec, x))),
    "log_sinhc": (1, lambda ec, x: call(ec, "log", _t_sinhc(ec, x))),
    "beta_xy": (2, lambda ec, x, y: beta_num(ec, x, y)),
}

TARGET_IDS = tuple(sorted(TARGETS))

_SINGULAR_AT_0 = frozenset((
    "sinc", "tan_over_x", "x_over_tan", "sinh_over_x", "wilker_sum",
    "wilker_anglesio", "wilker_huygens", "wilker_wang", "wilker_hyp",
    "wilker_hyp_wang", "jordan_cos_sum", "sinc_cos_diff", "log_sinc_inv",
    "log_sinhc",
))


def target_num(ec: EvalCtx, target: str, nums: tuple) -> Num:
    spec = TARGETS.get(target)
    if spec is None:
        raise EvalError(f"unknown target id {target!r}")
    nvars, fn = spec
    if len(nums) != nvars:
        raise EvalError(f"target {target!r} expects {nvars} coordinate(s)")
    if target in _SINGULAR_AT_0 and nums[0][0] == 0:
        raise DomainError(f"target {target!r} has a removable singularity at 0")
    return fn(ec, *nums)


def eval_target(target: str, point, prec: Precision = Precision()) -> RefValue:
    """Composite target at an interior point, errors propagated from the parts.

    Removable singularities are never patched: e.g. ``sinc`` at 0 raises
    DomainError, callers must stay inside the open domain.
    """
    ec = EvalCtx(prec)
    pt = point if isinstance(point, tuple) else (point,)
    nums = tuple(to_num(ec, c) for c in pt)
    v, e = target_num(ec, target, nums)
    return RefValue(v, e)
