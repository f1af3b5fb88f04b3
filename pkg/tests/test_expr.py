"""Parser/printer/evaluator tests for the expression DSL."""

from fractions import Fraction

import pytest

from bounds import expr as E
from bounds.catalog import builtin_catalog
from bounds.errors import (ArityError, DomainError, EvalError, ExprSyntaxError)
from bounds.expr import (Binary, Number, Param, Unary, Var, eval_expr,
                         parse_expr, print_expr)
from bounds.oracle import EvalCtx, Precision
import gmpy2

P30, P40 = Precision(30), Precision(40)


def test_basic_shapes():
    e = parse_expr("(8*sin(x/2)-sin(x))/3")
    assert isinstance(e, Binary) and e.op == "/"
    assert e.right == Number(Fraction(3))
    assert parse_expr("x") == Var("x")
    assert parse_expr("p") == Param("p")
    assert parse_expr("pi").name == "pi"


def test_power_right_associative():
    e = parse_expr("2^3^2")
    # 2^(3^2)
    assert e.op == "^" and e.left == Number(Fraction(2))
    assert e.right.op == "^"
    v = eval_expr(e, {})
    assert v.value == 512


def test_unary_minus_vs_power():
    m = parse_expr("-x^2")
    assert m == Unary("-", Binary("^", Var("x"), Number(Fraction(2))))
    n = parse_expr("(-x)^2")
    assert n == Binary("^", Unary("-", Var("x")), Number(Fraction(2)))
    assert float(eval_expr(m, {"x": 3})) == -9.0
    assert float(eval_expr(n, {"x": 3})) == 9.0


def test_rational_token_maximal_munch():
    # "digits/digits" is one NUMBER token, so x^2/6 is x^(2/6)
    assert parse_expr("1/2") == Number(Fraction(1, 2))
    assert parse_expr("x^2/6") == Binary("^", Var("x"), Number(Fraction(1, 3)))
    assert parse_expr("x^(2)/6") == Binary(
        "/", Binary("^", Var("x"), Number(Fraction(2))), Number(Fraction(6)))


def test_whitespace_insensitive():
    assert parse_expr(" 1 + 2*x ") == parse_expr("1+2*x")


def test_literal_division_folds():
    # keeps print/reparse structural round trips stable
    assert parse_expr("3 / 2") == Number(Fraction(3, 2))
    e = Binary("/", Var("x"), Number(Fraction(7, 2)))
    assert parse_expr(print_expr(e)) == e


def test_thm3_upper_parses():
    e = parse_expr("2^(11/6)*sqrt(1-x)/(2+sqrt(2)*sqrt(1+x))^(2/3)")
    assert parse_expr(print_expr(e)) == e


def test_syntax_errors_carry_offsets():
    with pytest.raises(ExprSyntaxError) as ei:
        parse_expr("sin(x")
    assert ei.value.offset == 5
    with pytest.raises(ExprSyntaxError) as ei:
        parse_expr("x  5")
    assert ei.value.offset == 3
    with pytest.raises(ExprSyntaxError):
        parse_expr("")
    with pytest.raises(ExprSyntaxError):
        parse_expr("foo(x)")
    with pytest.raises(ExprSyntaxError):
        parse_expr("1/0")
    with pytest.raises(ExprSyntaxError):
        parse_expr("x +")
    with pytest.raises(ExprSyntaxError):
        parse_expr("(" * 70 + "x" + ")" * 70)
    with pytest.raises(ExprSyntaxError):
        parse_expr("x" + " " * 5000)


def test_arity_errors():
    for bad in ("beta(x)", "min(x)", "max(1,2,3)", "sin(x,y)"):
        with pytest.raises(ArityError):
            parse_expr(bad)


def test_eval_examples():
    v = eval_expr(parse_expr("pi*(8-pi)/4"), {}, P40)
    assert abs(float(v) - 3.8157842069072467) < 1e-12
    assert float(eval_expr(parse_expr("x"), {"x": 7})) == 7.0
    v2 = eval_expr(parse_expr("2*sqrt(2)/(4-pi)"), {}, P40)
    assert abs(float(v2) - 3.2949707811500611) < 1e-12


def test_eval_errors():
    with pytest.raises(EvalError):
        eval_expr(parse_expr("0^0"), {})
    with pytest.raises(DomainError):
        eval_expr(parse_expr("(-2)^(1/2)"), {})
    with pytest.raises(DomainError):
        eval_expr(parse_expr("sqrt(-1)"), {})
    with pytest.raises(EvalError):
        eval_expr(parse_expr("z+1"), {})
    with pytest.raises(DomainError):
        eval_expr(parse_expr("1/(x-x)"), {"x": 1})


def test_exactness_of_rational_expressions():
    for text in ("3/4+1/4", "(3/2)^3", "(2^10)/1024", "-(5-2)*7"):
        v = eval_expr(parse_expr(text), {})
        assert v.is_exact, text
    # irrational parts end the exact path
    assert not eval_expr(parse_expr("sqrt(2)"), {}).is_exact


def test_min_max_abs():
    assert float(eval_expr(parse_expr("min(2,3)"), {})) == 2.0
    assert float(eval_expr(parse_expr("max(pi/2,1+a)"), {"a": 0.7})) == 1.7
    assert float(eval_expr(parse_expr("abs(-3)"), {})) == 3.0


def test_roundtrip_all_catalog_expressions():
    cat = builtin_catalog()
    nodes = []
    for e in cat.entries:
        nodes.append(e.expr)
        if e.target_expr is not None:
            nodes.append(e.target_expr)
    for c in cat.constants:
        nodes.append(c.closed_form)
    for node in nodes:
        text = print_expr(node)
        again = parse_expr(text)
        assert again == node
        assert print_expr(again) == text  # printing is idempotent


def test_precision_coherence_on_catalog():
    # digits 30 vs 40 agree to 25 significant digits on interior points
    cat = builtin_catalog()
    ec30, ec40 = EvalCtx(P30), EvalCtx(P40)
    for entry in cat.entries:
        lo30, hi30 = entry.domain.bounds(ec30)
        lo40, hi40 = entry.domain.bounds(ec40)
        f = E.compile_expr(entry.expr)
        penv30 = {n: E.compile_expr(v)(ec30, {}) for n, v in entry.default_params().items()}
        penv40 = {n: E.compile_expr(v)(ec40, {}) for n, v in entry.default_params().items()}
        span30 = ec30.ctx.sub(hi30, lo30)
        span40 = ec40.ctx.sub(hi40, lo40)
        for i in range(100):
            q = Fraction(2 * i + 1, 200)
            from bounds.oracle import affine, sub, to_num
            x30 = affine(ec30, lo30, span30, q)
            x40 = affine(ec40, lo40, span40, q)
            env30 = dict(penv30, x=(x30, 0.0))
            env40 = dict(penv40, x=(x40, 0.0))
            if entry.region == "diagonal":
                env30["y"] = sub(ec30, to_num(ec30, 1), env30["x"])
                env40["y"] = sub(ec40, to_num(ec40, 1), env40["x"])
            elif entry.region is not None:
                env30["y"] = to_num(ec30, Fraction(1, 3))
                env40["y"] = to_num(ec40, Fraction(1, 3))
            v30 = gmpy2.mpfr(f(ec30, env30)[0], 250)
            v40 = gmpy2.mpfr(f(ec40, env40)[0], 250)
            scale = max(abs(float(v40)), 1e-300)
            assert abs(float(v30 - v40)) <= 1e-25 * scale, entry.id
