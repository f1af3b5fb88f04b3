"""Catalog registry tests: required entries, constants, file format,
sharp-endpoint behavior and reversal pairs."""

import math
from fractions import Fraction

import pytest

from bounds import expr as E
from bounds.catalog import (Catalog, builtin_catalog, dump_catalog, eval_bound,
                            load_catalog, parse_catalog_text, parse_interval)
from bounds.errors import (DomainError, FormatError, IoError, ValidationError)
from bounds.oracle import EvalCtx, Precision, affine
from bounds.verifier import certify_sign, margin_fn

P30 = Precision(30)

# one id per required entry of the registry contract
REQUIRED_IDS = [
    # sinc
    "cusa-lower", "cusa-upper", "refine-lower", "refine-upper",
    "oppenheim-case1-lower", "oppenheim-case1-upper",
    "oppenheim-case2-lower", "oppenheim-case2-upper",
    "oppenheim-case3-lower", "oppenheim-case3-upper",
    "oppenheim-case4-lower", "oppenheim-case4-upper",
    "zhu-lower", "zhu-upper", "qi-upper", "thm1-lower", "thm1-upper",
    "huygens-corollary", "lemma1702a-lower", "lemma1702a-upper",
    "lemma1702b-lower", "lemma1702b-upper",
    "jordan-dz1", "jordan-dz2", "jordan-ozban", "jordan-zhu-u",
    "jordan-jiang-l", "jordan-jiang-u", "kvv-lower", "kvv-upper", "li-upper",
    "thm0803-lower", "thm0803-upper", "m1-lower", "m2-upper",
    "yang-lower", "yang-upper", "jrw-thm2-cl", "jrw-thm2-cu",
    "jrw-thm1-dl", "jrw-thm1-du", "jrw-thm3-1", "jrw-thm3-2", "jrw-thm3-3",
    "zhu28a-lower", "zhu28a-upper", "redheffer-lower", "red-12-upper",
    "red-converse-upper", "red-power-upper", "grcon-upper", "joz01-upper",
    "sinmax-lower", "sinold-1", "sinold-2", "sinold-3", "sandor1702-lower",
    "coro3-1", "coro3-2", "coro3-3", "cor1702-lower", "cor1702-upper",
    "kober-thm2-refined", "kober-thm2-vs-ozban",
    "kober-thm1-lower", "kober-thm1-upper", "lema2-lower", "lema2-upper",
    "beta-1104-lower", "beta-1104-upper", "beta-0505-lower", "beta-0505-upper",
    "3001-upper", "jozcor-1", "jozcor-2", "jozcor-3",
    # cos
    "kober-classic-lower", "kober-classic-upper", "sandor-3103a-lower",
    "sandor-3103b-lower", "sandor-3103b-upper", "zhang-3003-lower",
    "zhang-3003-upper", "taylor-3103e-upper", "prop1702-lower",
    "prop1702-upper", "zhu28b-lower", "zhu28b-upper", "thm1702-lower",
    "thm1702-upper", "lem3-cos-upper", "lem3-cos-lower-corrected",
    "lem3-cos-lower-as-printed", "kober1702-lower",
    # tan / tan-half
    "zhu28c-lower", "zhu28c-upper", "becker-stark-lower", "becker-stark-upper",
    "jrw-cor1-lower", "jrw-cor1-upper", "beta-tan-coro-upper",
    "beta-tan-coro-reversed-lower", "thm0-lower", "thm0-upper",
    "lem3-tanhalf-lower",
    # Wilker-type
    "anglesio-lower", "anglesio-upper", "wusri-lower", "ineq1103-lower",
    "mortici-lower", "wu-sri-thm-lower", "wu-sri-thm-upper",
    "thm1003-lower", "thm1003-upper", "chen-sandor-lower", "chen-sandor-upper",
    "wang-lower", "wang-upper", "zhu-z4-lower", "sun-zhu-upper",
    "corollary-wilker-2", "corollary-wilker-3",
    # arccos
    "carlson-lower", "carlson-upper", "guoqi1-lower", "guoqi1-upper",
    "guoqi2-lower", "guoqi2-upper", "chen-lower",
    "zhu-p-family-lower", "zhu-p-family-upper", "thm3-upper",
    "thm3-lower-corrected", "thm3-lower-as-printed",
    "coro1-arccos-lower", "coro1-arccos-upper",
    # arctan
    "shafer-lower", "qi-family-1-lower", "qi-family-1-upper",
    "qi-family-2-lower", "qi-family-2-upper", "alirezaei-lower",
    "alirezaei-upper", "thm4-lower", "thm4-upper",
    "coro1-arctan-lower", "coro1-arctan-upper",
    # hyperbolic
    "lazhyp-lower", "lazhyp-upper", "th2-lower", "th2-upper",
    "cor1-h1", "cor1-h2", "cor1-h3", "cor1-h4", "red-hyp-lower",
    "red-hyp-vs-pi", "thmm1-1", "thmm1-2", "thmm1-3", "lem3-tanhhalf-lower",
    # log-form
    "thmm-1", "thmm-2", "thmm-3", "corjoz-1-lower", "corjoz-1-upper",
    "corjoz-2-lower", "corjoz-2-upper", "corjoz-3-upper",
    "jozlem1-1-upper", "jozlem1-2-lower", "jozlem1-3-upper",
    "jozlem1-4-lower", "nnn-upper",
    # beta
    "dragomir-upper", "alzer-lower", "alzer-upper", "ivady-lower",
    "ivady-upper", "mainthm-diag-lower", "mainthm-diag-upper",
    "thm1004-1-upper", "thm1004-1-reversed-lower", "thm1004-2-diag-upper",
    "gammathm-1-upper", "gammathm-2-lower",
]

REQUIRED_CONSTANTS = [
    "alpha_thm1", "beta_thm1", "gamma_1702c", "a_1702a", "b_1702b",
    "c1_redheffer", "x0_redheffer", "a_red_power", "alpha_jrw_thm3",
    "alpha_jrw_thm4", "alpha_1702", "beta_1702", "alpha_kober", "beta_kober",
    "alpha_thm0", "a_yang", "alpha_beta_diag", "a_alzer", "c1_lem3",
    "anglesio_lo", "anglesio_hi", "alirezaei_lower_shape",
    "alirezaei_upper_shape", "prop1702_lo", "prop1702_hi",
]


def test_builtin_size_and_required_ids(cat):
    assert len(cat) >= 110
    missing = [i for i in REQUIRED_IDS if i not in cat]
    assert not missing, f"missing required entries: {missing}"
    assert len(set(e.id for e in cat.entries)) == len(cat.entries)


def test_required_constants_present(cat):
    for name in REQUIRED_CONSTANTS:
        cat.constant(name)


def test_lookup_examples(cat):
    e = cat.lookup("thm1-lower")
    assert e.expr == E.parse_expr("(8*sin(x/2)-sin(x))/3")
    assert e.domain.lo_open and e.domain.hi_open
    assert str(e.domain) == "(0,pi/2)"
    assert "lo" in e.sharp

    r = cat.lookup("redheffer-lower")
    assert r.expr == E.parse_expr("(pi^2-x^2)/(pi^2+x^2)")
    assert not r.domain.hi_open  # holds on (0, pi]
    assert str(r.domain) == "(0,pi]"

    t = cat.lookup("thm3-lower-as-printed")
    assert t.expect == "violated"
    assert t.has_tag("as-printed-typo")
    assert cat.lookup("lem3-cos-lower-as-printed").expect == "violated"


def test_typo_entries_are_exactly_tagged(cat):
    typos = [e.id for e in cat.select(tag="as-printed-typo")]
    assert typos == ["lem3-cos-lower-as-printed", "thm3-lower-as-printed"]
    for e in cat.entries:
        if e.expect == "violated":
            assert e.has_tag("as-printed-typo")


def test_constant_decimals(cat):
    for c in cat.constants:
        if c.decimal is None:
            continue
        v = float(c.value(P30))
        err = abs(v - float(Fraction(c.decimal)))
        if c.suspect:
            assert err > 1e-4, f"{c.name} flagged suspect but matches its decimal"
        else:
            assert err <= 1e-4, f"{c.name}: closed form {v} vs decimal {c.decimal}"


def test_suspect_constant_value(cat):
    b = cat.constant("b_1702b")
    assert b.suspect
    assert abs(float(b.value()) - 3.2949707811500611) < 1e-12


def test_eval_bound_examples(cat):
    v = eval_bound(cat.lookup("thm1-lower"), math.pi / 2 - 1e-6)
    assert abs(float(v) - (4 * math.sqrt(2) - 1) / 3) < 1e-5
    # both sides vanish at the sharp arccos endpoint
    u = eval_bound(cat.lookup("carlson-upper"), 1 - 1e-12)
    assert 0 < float(u) < 2e-6
    z = eval_bound(cat.lookup("zhu-p-family-lower"), 0.5)
    assert abs(float(z) - 6 * math.sqrt(0.5) /
               (2 * math.sqrt(2) + math.sqrt(1.5))) < 1e-12
    with pytest.raises(DomainError):
        eval_bound(cat.lookup("thm1-lower"), 2.0)
    with pytest.raises(DomainError):
        eval_bound(cat.lookup("thm1-lower"), 0.0)  # open endpoint
    # closed endpoint is allowed
    eval_bound(cat.lookup("redheffer-lower"), math.pi - 1e-9)


def test_param_grids(cat):
    e = cat.lookup("zhu-p-family-lower")
    grids = e.param_grid()
    assert len(grids) == 3
    q = cat.lookup("qi-family-2-upper")
    assert len(q.param_grid()) == 3


def test_truncated_entries_respect_x_max(cat):
    alt = builtin_catalog(Fraction(8))
    e = alt.lookup("shafer-lower")
    ec = EvalCtx(P30)
    lo, hi = e.domain.bounds(ec)
    assert float(hi) == 8.0
    assert float(cat.lookup("shafer-lower").domain.bounds(ec)[1]) == 10.0
    assert len(alt) == len(cat)


def test_sharpness_declared_endpoints(cat):
    """Every declared sharp endpoint shows |margin| -> 0 along a geometric
    approach: the last resolved term is under 1e-3 of the first."""
    ec = EvalCtx(P30)
    for entry in cat.entries:
        if not entry.sharp or entry.region in ("unit-square", "strip"):
            continue
        f = margin_fn(entry, ec, entry.default_params())
        lo, hi = entry.domain.bounds(ec)
        span = ec.ctx.sub(hi, lo)
        for side in entry.sharp:
            seq = []
            for k in range(4, 37):
                q = Fraction(1, 2 ** k)
                xm = affine(ec, lo, span, q if side == "lo" else 1 - q)
                try:
                    m = f(xm)
                except DomainError:
                    continue
                if abs(float(m[0])) <= 10 * m[1]:
                    break  # below noise: consistent with margin -> 0
                seq.append(abs(float(m[0])))
            if len(seq) >= 3:
                assert seq[-1] < 1e-3 * seq[0] or seq[-1] < 1e-20, \
                    f"{entry.id} sharp={side}: {seq[0]} -> {seq[-1]}"


def test_chain_margins_simultaneously_positive(cat):
    ec = EvalCtx(Precision(40))
    chain = [cat.lookup(i) for i in ("jrw-thm3-1", "jrw-thm3-2", "jrw-thm3-3")]
    fns = [margin_fn(e, ec, {}) for e in chain]
    lo, hi = chain[0].domain.bounds(ec)
    span = ec.ctx.sub(hi, lo)
    for i in range(64):
        xm = affine(ec, lo, span, Fraction(2 * i + 1, 128))
        for f in fns:
            m = f(xm)
            assert float(m[0]) > 10 * m[1]


def test_reversal_pairs(cat):
    # Zhu's p-family certifies with sides swapped in the reversed regime
    for eid in ("zhu-p-family-rev-upper", "zhu-p-family-rev-lower"):
        rep = certify_sign(cat.lookup(eid), grid_n=256, refine_depth=10, prec=P30)
        assert rep.status == "certified", eid
    rep = certify_sign(cat.lookup("beta-tan-coro-reversed-lower"),
                       grid_n=256, refine_depth=10, prec=P30)
    assert rep.status == "certified"


# ---------------------------------------------------------------------------
# the file format


GOOD = '''
# tiny catalog
const alpha = "pi/4" decimal=0.7853981 ref="test constant"

entry demo-lower
  target=sinc
  side=lower
  domain=(0,pi/2)
  expr="1-x^2/6"          # lexes as 1 - x^(1/3); fine for a format test
  sharp=lo
  ref="demo"
end
'''


def test_parse_catalog_text_roundtrip():
    c = parse_catalog_text(GOOD)
    assert len(c) == 1 and len(c.constants) == 1
    text = dump_catalog(c)
    again = parse_catalog_text(text)
    assert dump_catalog(again) == text
    assert again.lookup("demo-lower").expr == c.lookup("demo-lower").expr


def test_load_catalog_file(tmp_path):
    p = tmp_path / "one.cat"
    p.write_text(GOOD, encoding="utf-8")
    c = load_catalog(p)
    assert len(c) == 1
    with pytest.raises(IoError):
        load_catalog(tmp_path / "missing.cat")


def test_duplicate_id_rejected():
    text = GOOD + GOOD.split("const")[0] + GOOD[GOOD.index("entry"):]
    with pytest.raises(FormatError) as ei:
        parse_catalog_text(text)
    assert "duplicate id" in str(ei.value)
    assert ei.value.line > 9  # points at the second definition


def test_bad_expr_reports_line():
    bad = GOOD.replace('expr="1-x^2/6"', 'expr="sin(x"')
    with pytest.raises(FormatError) as ei:
        parse_catalog_text(bad)
    assert ei.value.line == 9
    assert "offset" in str(ei.value)


def test_unknown_field_rejected():
    bad = GOOD.replace("sharp=lo", "sharpe=lo")
    with pytest.raises(FormatError):
        parse_catalog_text(bad)


def test_validation_rejects_empty_domain(tmp_path):
    bad = GOOD.replace("domain=(0,pi/2)", "domain=(1,0)")
    p = tmp_path / "bad.cat"
    p.write_text(bad, encoding="utf-8")
    with pytest.raises(ValidationError):
        load_catalog(p)


def test_validation_rejects_unexpected_violated(tmp_path):
    bad = GOOD.replace("  sharp=lo", "  sharp=lo\n  expect=violated")
    p = tmp_path / "bad.cat"
    p.write_text(bad, encoding="utf-8")
    with pytest.raises(ValidationError):
        load_catalog(p)


def test_builtin_dump_reload_identical(cat):
    text = dump_catalog(cat)
    again = parse_catalog_text(text)
    assert dump_catalog(again) == text
    assert len(again) == len(cat)


def test_interval_parsing():
    iv = parse_interval("(0,sqrt(27/5))")
    assert iv.lo_open and iv.hi_open
    ec = EvalCtx(P30)
    lo, hi = iv.bounds(ec)
    assert abs(float(hi) - math.sqrt(27 / 5)) < 1e-15
    assert not parse_interval("[1,2]").lo_open
    with pytest.raises(ValueError):
        parse_interval("(1;2)")
