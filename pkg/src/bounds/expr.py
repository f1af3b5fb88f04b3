"""Parser, printer and evaluator for the catalog's closed-form expression DSL.

Grammar (whitespace between tokens is ignored)::

    expr    := term (('+'|'-') term)*
    term    := factor (('*'|'/') factor)*
    factor  := unary ('^' factor)?          # '^' is right-associative
    unary   := '-' unary | primary
    primary := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'
    NUMBER  := digits ['.' digits] | digits '/' digits     # the latter is an
                                                           # exact rational token
    NAME    := [a-zA-Z_][a-zA-Z0-9_]*

A rational literal is formed only when '/' sits directly between digit runs
with no intervening whitespace; everywhere else '/' is the division operator
(the two readings always evaluate identically here because integer division is
kept exact).  Unary minus binds tighter than '^' only when parenthesized:
``-x^2`` parses as ``-(x^2)`` while ``(-x)^2`` squares the negation.

Names resolve first to functions at call sites, then to the constant ``pi``,
then to the variables ``x``/``y``, and finally to named parameters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

from . import oracle
from .errors import ArityError, EvalError, ExprSyntaxError
from .oracle import EvalCtx, Num, Precision, RefValue

MAX_TEXT = 4096
MAX_DEPTH = 64


@dataclass(frozen=True)
class Number:
    value: Fraction


@dataclass(frozen=True)
class ConstRef:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


Expr = Union[Number, ConstRef, Var, Param, Unary, Binary, Call]

UNARY_FNS = ("sin", "cos", "tan", "asin", "acos", "atan", "sinh", "cosh",
             "tanh", "sqrt", "exp", "log", "abs", "gamma")
BINARY_FNS = ("beta", "min", "max")
FN_ARITY = {**{f: 1 for f in UNARY_FNS}, **{f: 2 for f in BINARY_FNS}}
CONSTANTS = ("pi",)
VARIABLES = ("x", "y")


# ---------------------------------------------------------------------------
# lexer

_NUM, _NAME, _OP, _LP, _RP, _COMMA, _END = range(7)


def _tokenize(text: str) -> list[tuple[int, object, int]]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit():
            start = i
            while i < n and text[i].isdigit():
                i += 1
            if i < n and text[i] == ".":
                i += 1
                if i >= n or not text[i].isdigit():
                    raise ExprSyntaxError("digits required after '.'", i, ("digit",))
                while i < n and text[i].isdigit():
                    i += 1
                toks.append((_NUM, Fraction(text[start:i]), start))
            elif i < n and text[i] == "/" and i + 1 < n and text[i + 1].isdigit():
                i += 1
                dstart = i
                while i < n and text[i].isdigit():
                    i += 1
                den = int(text[dstart:i])
                if den == 0:
                    raise ExprSyntaxError("zero denominator in rational literal",
                                          dstart, ("nonzero digits",))
                toks.append((_NUM, Fraction(int(text[start:dstart - 1]), den), start))
            else:
                toks.append((_NUM, Fraction(int(text[start:i])), start))
            continue
        if c.isalpha() or c == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            toks.append((_NAME, text[start:i], start))
            continue
        if c in "+-*/^":
            toks.append((_OP, c, i))
        elif c == "(":
            toks.append((_LP, c, i))
        elif c == ")":
            toks.append((_RP, c, i))
        elif c == ",":
            toks.append((_COMMA, c, i))
        else:
            raise ExprSyntaxError(f"unexpected character {c!r}", i,
                                  ("number", "name", "operator", "'('"))
        i += 1
    toks.append((_END, None, n))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def take(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, val, off = self.peek()
        if kind == _OP and val == op:
            return self.take()
        raise ExprSyntaxError(f"expected {op!r}", off, (op,))

    def expr(self, depth: int) -> Expr:
        self._check_depth(depth)
        node = self.term(depth + 1)
        while True:
            kind, val, _ = self.peek()
            if kind == _OP and val in "+-":
                self.take()
                node = Binary(val, node, self.term(depth + 1))
            else:
                return node

    def term(self, depth: int) -> Expr:
        self._check_depth(depth)
        node = self.factor(depth + 1)
        while True:
            kind, val, off = self.peek()
            if kind == _OP and val in "*/":
                self.take()
                rhs = self.factor(depth + 1)
                if val == "/" and isinstance(node, Number) and isinstance(rhs, Number):
                    # fold literal/literal so printed rationals re-lex to the
                    # same tree (maximal-munch NUMBER token)
                    if rhs.value == 0:
                        raise ExprSyntaxError("division by zero in constant", off, ())
                    node = Number(node.value / rhs.value)
                else:
                    node = Binary(val, node, rhs)
            else:
                return node

    def factor(self, depth: int) -> Expr:
        self._check_depth(depth)
        kind, val, _ = self.peek()
        if kind == _OP and val == "-":
            self.take()
            return Unary("-", self.factor(depth + 1))
        base = self.primary(depth + 1)
        kind, val, _ = self.peek()
        if kind == _OP and val == "^":
            self.take()
            return Binary("^", base, self.factor(depth + 1))
        return base

    def primary(self, depth: int) -> Expr:
        self._check_depth(depth)
        kind, val, off = self.take()
        if kind == _NUM:
            return Number(val)
        if kind == _LP:
            node = self.expr(depth + 1)
            k, _, o = self.take()
            if k != _RP:
                raise ExprSyntaxError("expected ')'", o, (")",))
            return node
        if kind == _NAME:
            k, v, _ = self.peek()
            if k == _LP:
                self.take()
                args = [self.expr(depth + 1)]
                while True:
                    k2, _, o2 = self.take()
                    if k2 == _RP:
                        break
                    if k2 != _COMMA:
                        raise ExprSyntaxError("expected ',' or ')'", o2, (",", ")"))
                    args.append(self.expr(depth + 1))
                arity = FN_ARITY.get(val)
                if arity is None:
                    raise ExprSyntaxError(f"unknown function {val!r}", off,
                                          tuple(sorted(FN_ARITY)))
                if len(args) != arity:
                    raise ArityError(
                        f"{val} takes {arity} argument(s), got {len(args)} at offset {off}")
                return Call(val, tuple(args))
            if val in CONSTANTS:
                return ConstRef(val)
            if val in VARIABLES:
                return Var(val)
            return Param(val)
        raise ExprSyntaxError("expected a number, name or '('", off,
                              ("number", "name", "(",))

    def _check_depth(self, depth: int):
        if depth > MAX_DEPTH:
            raise ExprSyntaxError("expression nests deeper than the supported limit",
                                  self.peek()[2], ())


def parse_expr(text: str) -> Expr:
    """Parse DSL text into an AST; SyntaxError positions are byte offsets."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, ("expression",))
    if len(text) > MAX_TEXT:
        raise ExprSyntaxError(f"expression longer than {MAX_TEXT} bytes", MAX_TEXT, ())
    p = _Parser(text)
    node = p.expr(0)
    kind, _, off = p.peek()
    if kind != _END:
        raise ExprSyntaxError("trailing input after expression", off, ("end of input",))
    return node


def print_expr(e: Expr) -> str:
    """Canonical fully parenthesized text; reparsing yields a structurally
    identical tree."""
    if isinstance(e, Number):
        v = e.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(e, (ConstRef, Var, Param)):
        return e.name
    if isinstance(e, Unary):
        return f"(-{print_expr(e.operand)})"
    if isinstance(e, Binary):
        return f"({print_expr(e.left)}{e.op}{print_expr(e.right)})"
    if isinstance(e, Call):
        return f"{e.fn}({','.join(print_expr(a) for a in e.args)})"
    raise EvalError(f"not an expression node: {e!r}")


_NODE_TYPES = (Number, ConstRef, Var, Param, Unary, Binary, Call)


def is_node(v) -> bool:
    return isinstance(v, _NODE_TYPES)


def free_names(e: Expr) -> frozenset[str]:
    """Variable and parameter names the expression reads."""
    if isinstance(e, (Var, Param)):
        return frozenset((e.name,))
    if isinstance(e, Unary):
        return free_names(e.operand)
    if isinstance(e, Binary):
        return free_names(e.left) | free_names(e.right)
    if isinstance(e, Call):
        out: frozenset[str] = frozenset()
        for a in e.args:
            out |= free_names(a)
        return out
    return frozenset()


# ---------------------------------------------------------------------------
# compiler: Expr -> closure over (EvalCtx, env)

_const_key = itertools.count()

_CALLS: dict[str, Callable] = {
    "abs": lambda ec, a: oracle.abs_(ec, a),
    "beta": lambda ec, a, b: oracle.beta_num(ec, a, b),
    "min": lambda ec, a, b: oracle.min_(ec, a, b),
    "max": lambda ec, a, b: oracle.max_(ec, a, b),
}

_BINOPS = {
    "+": oracle.add,
    "-": oracle.sub,
    "*": oracle.mul,
    "/": oracle.div,
    "^": oracle.pow_,
}


def _build(e: Expr) -> Callable[[EvalCtx, dict], Num]:
    if isinstance(e, Number):
        q = oracle.mpq(e.value.numerator, e.value.denominator)
        const: Num = (q, 0.0)
        return lambda ec, env: const
    if isinstance(e, ConstRef):
        return lambda ec, env: ec.pi()
    if isinstance(e, (Var, Param)):
        name = e.name
        def read(ec, env, _name=name):
            try:
                return env[_name]
            except KeyError:
                raise EvalError(f"unbound name {_name!r}") from None
        return read
    if isinstance(e, Unary):
        inner = _build(e.operand)
        return lambda ec, env: oracle.neg(ec, inner(ec, env))
    if isinstance(e, Binary):
        op = _BINOPS[e.op]
        lf, rf = _build(e.left), _build(e.right)
        return lambda ec, env: op(ec, lf(ec, env), rf(ec, env))
    if isinstance(e, Call):
        fns = [_build(a) for a in e.args]
        special = _CALLS.get(e.fn)
        if special is not None:
            if len(fns) == 1:
                f0 = fns[0]
                return lambda ec, env: special(ec, f0(ec, env))
            f0, f1 = fns
            return lambda ec, env: special(ec, f0(ec, env), f1(ec, env))
        name, f0 = e.fn, fns[0]
        return lambda ec, env: oracle.call(ec, name, f0(ec, env))
    raise EvalError(f"not an expression node: {e!r}")


def _hoist(e: Expr, fn: Callable) -> Callable:
    """Cache constant subtrees once per EvalCtx."""
    if free_names(e):
        return fn
    key = next(_const_key)
    def cached(ec: EvalCtx, env: dict, _key=key, _fn=fn):
        memo = ec.consts.get(_key)
        if memo is None:
            memo = _fn(ec, {})
            ec.consts[_key] = memo
        return memo
    return cached


def _build_hoisted(e: Expr) -> Callable[[EvalCtx, dict], Num]:
    if isinstance(e, (Number, ConstRef, Var, Param)):
        return _build(e)
    if not free_names(e):
        return _hoist(e, _build(e))
    if isinstance(e, Unary):
        inner = _build_hoisted(e.operand)
        return lambda ec, env: oracle.neg(ec, inner(ec, env))
    if isinstance(e, Binary):
        op = _BINOPS[e.op]
        lf, rf = _build_hoisted(e.left), _build_hoisted(e.right)
        return lambda ec, env: op(ec, lf(ec, env), rf(ec, env))
    if isinstance(e, Call):
        fns = [_build_hoisted(a) for a in e.args]
        special = _CALLS.get(e.fn)
        if special is not None:
            if len(fns) == 1:
                f0 = fns[0]
                return lambda ec, env: special(ec, f0(ec, env))
            f0, f1 = fns
            return lambda ec, env: special(ec, f0(ec, env), f1(ec, env))
        name, f0 = e.fn, fns[0]
        return lambda ec, env: oracle.call(ec, name, f0(ec, env))
    raise EvalError(f"not an expression node: {e!r}")


_compiled: dict[Expr, Callable] = {}


def compile_expr(e: Expr) -> Callable[[EvalCtx, dict], Num]:
    """Compile once; repeat evaluations reuse the closure tree."""
    fn = _compiled.get(e)
    if fn is None:
        fn = _build_hoisted(e)
        _compiled[e] = fn
    return fn


def bind_env(ec: EvalCtx, values: dict) -> dict[str, Num]:
    """Convert raw bindings into exact evaluator operands."""
    return {k: oracle.to_num(ec, v) for k, v in values.items()}


def eval_expr(e: Expr, env: dict, prec: Precision = Precision()) -> RefValue:
    """Evaluate with all names bound; rationals stay exact until rounding."""
    ec = EvalCtx(prec)
    v, err = compile_expr(e)(ec, bind_env(ec, env))
    return RefValue(v, err)
