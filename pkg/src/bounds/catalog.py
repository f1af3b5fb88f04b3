"""The inequality registry: every bound as data, plus the named constants.

Entries are plain records: a target quantity, one side, an open/closed
domain, the bound expression, sharpness tags, the expected certification
outcome and a provenance citation.  The complete built-in set ships as a
text file in the package (``data/builtin.cat``) in the same line-oriented
format ``load_catalog`` accepts, so the built-in catalog and user catalogs
go through one code path.

Chains of k inequalities are stored as k-1 pairwise entries; when the left
side of a pairwise comparison is not a named target quantity the entry
carries a ``targetexpr`` that overrides the target during verification.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional

from gmpy2 import mpfr

from . import expr as E
from . import oracle
from .errors import (DomainError, FormatError, IoError, ValidationError)
from .oracle import EvalCtx, Precision

SIDES = ("lower", "upper")
EXPECTS = ("certified", "violated")
REGIONS = ("unit-square", "strip", "diagonal")
DEFAULT_X_MAX = Fraction(10)
TYPO_TAG = "as-printed-typo"
TRUNCATED_TAG = "truncated"

# classification ids accepted in the target= field; "custom" requires targetexpr
TARGET_IDS = oracle.TARGET_IDS + ("custom",)


@dataclass(frozen=True)
class Interval:
    """A 1-D domain with closed-form endpoints and per-end openness."""

    lo: E.Expr
    hi: E.Expr
    lo_open: bool = True
    hi_open: bool = True

    def bounds(self, ec: EvalCtx) -> tuple[mpfr, mpfr]:
        lo = E.compile_expr(self.lo)(ec, {})[0]
        hi = E.compile_expr(self.hi)(ec, {})[0]
        return oracle._mp(ec, lo), oracle._mp(ec, hi)

    def __str__(self) -> str:
        lo = "(" if self.lo_open else "["
        hi = ")" if self.hi_open else "]"
        return f"{lo}{_endpoint_text(self.lo)},{_endpoint_text(self.hi)}{hi}"


def _endpoint_text(e: E.Expr) -> str:
    # endpoints are short closed forms; drop the outermost parentheses
    s = E.print_expr(e)
    return s[1:-1] if s.startswith("(") and s.endswith(")") else s


def parse_interval(text: str) -> Interval:
    text = text.strip()
    if len(text) < 5 or text[0] not in "([" or text[-1] not in ")]":
        raise ValueError(f"malformed interval {text!r}")
    lo_open = text[0] == "("
    hi_open = text[-1] == ")"
    inner = text[1:-1]
    depth = 0
    split = -1
    for i, c in enumerate(inner):
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
        elif c == "," and depth == 0:
            split = i
            break
    if split < 0:
        raise ValueError(f"interval {text!r} needs two endpoints")
    lo = E.parse_expr(inner[:split])
    hi = E.parse_expr(inner[split + 1:])
    if E.free_names(lo) or E.free_names(hi):
        raise ValueError("interval endpoints must be closed forms")
    return Interval(lo, hi, lo_open, hi_open)


@dataclass(frozen=True)
class ParamSpec:
    """A named parameter with its admissible range and verification grid."""

    name: str
    lo: E.Expr
    hi: E.Expr
    default: E.Expr
    grid: tuple[E.Expr, ...] = ()

    def grid_or_default(self) -> tuple[E.Expr, ...]:
        return self.grid if self.grid else (self.default,)


@dataclass(frozen=True)
class BoundEntry:
    """One side of one published inequality."""

    id: str
    target: str
    side: str
    domain: Interval
    expr: E.Expr
    ref: str
    target_expr: Optional[E.Expr] = None
    params: tuple[ParamSpec, ...] = ()
    sharp: tuple[str, ...] = ()
    expect: str = "certified"
    tags: tuple[str, ...] = ()
    region: Optional[str] = None
    tangent: Optional[E.Expr] = None  # interior abscissa where the bound touches

    def has_tag(self, tag: str) -> bool:
        return tag in self.tags

    def default_params(self) -> dict[str, E.Expr]:
        return {p.name: p.default for p in self.params}

    def param_grid(self) -> list[dict[str, E.Expr]]:
        """Cartesian grid of stored verification parameter values."""
        combos: list[dict[str, E.Expr]] = [{}]
        for p in self.params:
            combos = [dict(c, **{p.name: g}) for c in combos for g in p.grid_or_default()]
        return combos


@dataclass(frozen=True)
class ConstantDef:
    """A named closed-form constant with the decimal the source prints."""

    name: str
    closed_form: E.Expr
    ref: str
    decimal: Optional[str] = None
    tags: tuple[str, ...] = ()

    @property
    def suspect(self) -> bool:
        return "paper-decimal-suspect" in self.tags

    @property
    def empirical(self) -> bool:
        return "empirical" in self.tags

    def value(self, prec: Precision = Precision()) -> mpfr:
        ec = EvalCtx(prec)
        return oracle._mp(ec, E.compile_expr(self.closed_form)(ec, {})[0])


class Catalog:
    """Immutable registry of entries and constants, indexed by id/name."""

    def __init__(self, entries: Iterable[BoundEntry], constants: Iterable[ConstantDef] = ()):
        self.entries: tuple[BoundEntry, ...] = tuple(entries)
        self.constants: tuple[ConstantDef, ...] = tuple(constants)
        self._by_id = {}
        for e in self.entries:
            if e.id in self._by_id:
                raise ValidationError(e.id, "duplicate id")
            self._by_id[e.id] = e
        self._consts = {}
        for c in self.constants:
            if c.name in self._consts:
                raise ValidationError(c.name, "duplicate constant name")
            self._consts[c.name] = c

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, entry_id: str) -> bool:
        return entry_id in self._by_id

    def lookup(self, entry_id: str) -> BoundEntry:
        try:
            return self._by_id[entry_id]
        except KeyError:
            raise ValidationError(entry_id, "no such entry") from None

    def constant(self, name: str) -> ConstantDef:
        try:
            return self._consts[name]
        except KeyError:
            raise ValidationError(name, "no such constant") from None

    def ids(self) -> list[str]:
        return sorted(self._by_id)

    def select(self, ids: Optional[Iterable[str]] = None, target: Optional[str] = None,
               tag: Optional[str] = None, side: Optional[str] = None) -> list[BoundEntry]:
        """Conjunctive filter, stable lexicographic order by id."""
        if ids is not None:
            chosen = [self.lookup(i) for i in ids]
        else:
            chosen = list(self.entries)
        out = [e for e in chosen
               if (target is None or e.target == target)
               and (tag is None or e.has_tag(tag))
               and (side is None or e.side == side)]
        return sorted(out, key=lambda e: e.id)


# ---------------------------------------------------------------------------
# validation


PROBE_POINTS = 64


def validate_catalog(cat: Catalog, prec: Precision = Precision(30)) -> None:
    """Reject malformed entries: unknown fields, unevaluable expressions,
    inverted domains, unexpected expectation flags, bad constants."""
    for e in cat.entries:
        _validate_entry(e, prec)
    for c in cat.constants:
        _validate_constant(c, prec)


def _validate_entry(e: BoundEntry, prec: Precision) -> None:
    if e.target not in TARGET_IDS:
        raise ValidationError(e.id, f"unknown target {e.target!r}")
    if e.target == "custom" and e.target_expr is None:
        raise ValidationError(e.id, "target 'custom' requires targetexpr")
    if e.side not in SIDES:
        raise ValidationError(e.id, f"side must be lower|upper, got {e.side!r}")
    if e.expect not in EXPECTS:
        raise ValidationError(e.id, f"expect must be certified|violated, got {e.expect!r}")
    if e.expect == "violated" and not e.has_tag(TYPO_TAG):
        raise ValidationError(e.id, "expect=violated is reserved for as-printed-typo entries")
    if e.region is not None and e.region not in REGIONS:
        raise ValidationError(e.id, f"unknown region {e.region!r}")
    if e.region is not None and e.target != "beta_xy":
        raise ValidationError(e.id, "regions only apply to beta_xy entries")
    for s in e.sharp:
        if s not in ("lo", "hi"):
            raise ValidationError(e.id, f"sharp tags must be lo|hi, got {s!r}")
    param_names = {p.name for p in e.params}
    allowed = {"x"} | param_names
    if e.region in ("unit-square", "strip", "diagonal"):
        allowed.add("y")
    for node, label in ((e.expr, "expr"), (e.target_expr, "targetexpr")):
        if node is None:
            continue
        extra = E.free_names(node) - allowed
        if extra:
            raise ValidationError(e.id, f"{label} reads unbound names {sorted(extra)}")
    ec = EvalCtx(prec)
    lo, hi = e.domain.bounds(ec)
    if not lo < hi:
        raise ValidationError(e.id, f"empty domain {e.domain}")
    try:
        _probe_entry(e, ec, lo, hi)
    except DomainError as exc:
        raise ValidationError(e.id, f"expression not evaluable on domain probe: {exc}")


def _probe_entry(e: BoundEntry, ec: EvalCtx, lo, hi) -> None:
    bound = E.compile_expr(e.expr)
    tfn = E.compile_expr(e.target_expr) if e.target_expr is not None else None
    penv = {n: (E.compile_expr(v)(ec, {})) for n, v in e.default_params().items()}
    span = ec.ctx.sub(hi, lo)
    if e.region in ("unit-square", "strip"):
        for i in range(8):
            xv = oracle.affine(ec, lo, span, Fraction(2 * i + 1, 16))
            for j in range(8):
                env = dict(penv)
                env["x"] = (xv, 0.0)
                env["y"] = (oracle.mpq(2 * j + 1, 16), 0.0)
                bound(ec, env)
                oracle.target_num(ec, "beta_xy", (env["x"], env["y"]))
        return
    n = PROBE_POINTS
    for i in range(n):
        env = dict(penv)
        env["x"] = (oracle.affine(ec, lo, span, Fraction(2 * i + 1, 2 * n)), 0.0)
        if e.region == "diagonal":
            env["y"] = oracle.sub(ec, (oracle.mpq(1), 0.0), env["x"])
            bound(ec, env)
            oracle.target_num(ec, "beta_xy", (env["x"], env["y"]))
            continue
        bound(ec, env)
        if tfn is not None:
            tfn(ec, env)
        elif e.target != "custom":
            oracle.target_num(ec, e.target, (env["x"],))


def _validate_constant(c: ConstantDef, prec: Precision) -> None:
    if E.free_names(c.closed_form):
        raise ValidationError(c.name, "constant closed form must have no free names")
    if c.decimal is not None and not c.suspect:
        v = float(c.value(prec))
        if abs(v - float(Fraction(c.decimal))) > 1e-4:
            raise ValidationError(
                c.name, f"closed form {v!r} disagrees with printed decimal {c.decimal}")


# ---------------------------------------------------------------------------
# text format


_ENTRY_RE = re.compile(r"^entry\s+([a-z0-9][a-z0-9-]*)$")
_CONST_RE = re.compile(r'^const\s+([A-Za-z_][A-Za-z0-9_]*)\s*=\s*"([^"]*)"\s*(.*)$')
_PARAM_RE = re.compile(
    r'^param\s+([A-Za-z_][A-Za-z0-9_]*)\s+in\s+\[([^\]]*)\]\s+default\s+(\S+)(?:\s+grid\s+(\S+))?$')
_FIELD_RE = re.compile(r'^([a-z]+)\s*=\s*(.*)$')

_QUOTED_FIELDS = ("expr", "targetexpr", "ref", "tangent")
_ENTRY_FIELDS = ("target", "side", "domain", "expr", "targetexpr", "sharp",
                 "expect", "ref", "tags", "region", "tangent")


def _strip_comment(line: str) -> str:
    out = []
    in_str = False
    for ch in line:
        if ch == '"':
            in_str = not in_str
        if ch == "#" and not in_str:
            break
        out.append(ch)
    return "".join(out).strip()


def _unquote(value: str, lineno: int) -> str:
    value = value.strip()
    if len(value) < 2 or value[0] != '"' or value[-1] != '"':
        raise FormatError(lineno, f"expected a quoted string, got {value!r}")
    return value[1:-1]


def parse_catalog_text(text: str, origin: str = "<string>") -> Catalog:
    entries: list[BoundEntry] = []
    constants: list[ConstantDef] = []
    seen_ids: dict[str, int] = {}
    cur: Optional[dict] = None
    cur_params: list[ParamSpec] = []
    cur_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        m = _ENTRY_RE.match(line)
        if m:
            if cur is not None:
                raise FormatError(lineno, "nested entry block (missing 'end'?)")
            if m.group(1) in seen_ids:
                raise FormatError(
                    lineno, f"duplicate id {m.group(1)!r} "
                            f"(first defined at line {seen_ids[m.group(1)]})")
            seen_ids[m.group(1)] = lineno
            cur = {"id": m.group(1)}
            cur_params = []
            cur_line = lineno
            continue
        if line == "end":
            if cur is None:
                raise FormatError(lineno, "'end' outside an entry block")
            entries.append(_finish_entry(cur, cur_params, cur_line))
            cur = None
            continue
        if cur is not None:
            pm = _PARAM_RE.match(line)
            if pm:
                name, rng, default, grid = pm.groups()
                lo_txt, _, hi_txt = rng.partition(",")
                try:
                    spec = ParamSpec(
                        name=name,
                        lo=E.parse_expr(lo_txt),
                        hi=E.parse_expr(hi_txt),
                        default=E.parse_expr(default),
                        grid=tuple(E.parse_expr(g) for g in grid.split(";")) if grid else (),
                    )
                except Exception as exc:
                    raise FormatError(lineno, f"bad param line: {exc}")
                cur_params.append(spec)
                continue
            fm = _FIELD_RE.match(line)
            if not fm:
                raise FormatError(lineno, f"unparsable entry line {line!r}")
            key, value = fm.group(1), fm.group(2)
            if key not in _ENTRY_FIELDS:
                raise FormatError(lineno, f"unknown field {key!r}")
            if key in _QUOTED_FIELDS:
                value = _unquote(value, lineno)
            cur[key] = (value, lineno)
            continue
        cm = _CONST_RE.match(line)
        if cm:
            constants.append(_finish_const(cm, lineno))
            continue
        raise FormatError(lineno, f"unparsable line {line!r}")
    if cur is not None:
        raise FormatError(cur_line, "unterminated entry block")
    try:
        return Catalog(entries, constants)
    except ValidationError:
        raise


def _finish_entry(fields: dict, params: list[ParamSpec], lineno: int) -> BoundEntry:
    def get(key, required=False, default=None):
        if key in fields:
            return fields[key][0]
        if required:
            raise FormatError(lineno, f"entry {fields['id']!r} misses field {key!r}")
        return default

    def parse(key, text):
        try:
            return E.parse_expr(text)
        except Exception as exc:
            line = fields[key][1] if key in fields else lineno
            raise FormatError(line, f"{key}: {exc}")

    try:
        domain = parse_interval(get("domain", required=True))
    except ValueError as exc:
        raise FormatError(fields.get("domain", (None, lineno))[1], str(exc))
    sharp = tuple(s for s in (get("sharp", default="") or "").split(",") if s)
    tags = tuple(t for t in (get("tags", default="") or "").split(",") if t)
    tangent = get("tangent")
    return BoundEntry(
        id=fields["id"],
        target=get("target", required=True),
        side=get("side", required=True),
        domain=domain,
        expr=parse("expr", get("expr", required=True)),
        target_expr=parse("targetexpr", get("targetexpr")) if get("targetexpr") else None,
        params=tuple(params),
        sharp=sharp,
        expect=get("expect", default="certified"),
        ref=get("ref", default=""),
        tags=tags,
        region=get("region"),
        tangent=parse("tangent", tangent) if tangent else None,
    )


def _finish_const(m: re.Match, lineno: int) -> ConstantDef:
    name, form, rest = m.groups()
    decimal = None
    tags: tuple[str, ...] = ()
    ref = ""
    for key, value in re.findall(r'([a-z]+)=("[^"]*"|\S+)', rest):
        if key == "decimal":
            decimal = value.strip('"')
        elif key == "tags":
            tags = tuple(value.strip('"').split(","))
        elif key == "ref":
            ref = value.strip('"')
        else:
            raise FormatError(lineno, f"unknown constant field {key!r}")
    try:
        cf = E.parse_expr(form)
    except Exception as exc:
        raise FormatError(lineno, f"constant {name}: {exc}")
    return ConstantDef(name=name, closed_form=cf, ref=ref, decimal=decimal, tags=tags)


def load_catalog(path, validate: bool = True) -> Catalog:
    """Load and validate a catalog file; parse failures carry line numbers."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read catalog {path}: {exc}") from exc
    cat = parse_catalog_text(text, origin=str(path))
    if validate:
        validate_catalog(cat)
    return cat


def dump_catalog(cat: Catalog) -> str:
    """Serialize back into the file format (used for round-trip tests)."""
    out = io.StringIO()
    for c in cat.constants:
        out.write(f'const {c.name} = "{_endpoint_text(c.closed_form)}"')
        if c.decimal is not None:
            out.write(f" decimal={c.decimal}")
        if c.tags:
            out.write(f" tags={','.join(c.tags)}")
        out.write(f' ref="{c.ref}"\n')
    for e in cat.entries:
        out.write(f"\nentry {e.id}\n")
        out.write(f"  target={e.target}\n")
        out.write(f"  side={e.side}\n")
        out.write(f"  domain={e.domain}\n")
        out.write(f'  expr="{_endpoint_text(e.expr)}"\n')
        if e.target_expr is not None:
            out.write(f'  targetexpr="{_endpoint_text(e.target_expr)}"\n')
        for p in e.params:
            out.write(f"  param {p.name} in [{_endpoint_text(p.lo)},{_endpoint_text(p.hi)}]"
                      f" default {_endpoint_text(p.default)}")
            if p.grid:
                out.write(" grid " + ";".join(_endpoint_text(g) for g in p.grid))
            out.write("\n")
        if e.region:
            out.write(f"  region={e.region}\n")
        if e.sharp:
            out.write(f"  sharp={','.join(e.sharp)}\n")
        if e.tangent is not None:
            out.write(f'  tangent="{_endpoint_text(e.tangent)}"\n')
        if e.expect != "certified":
            out.write(f"  expect={e.expect}\n")
        if e.tags:
            out.write(f"  tags={','.join(e.tags)}\n")
        out.write(f'  ref="{e.ref}"\n')
        out.write("end\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# built-in set


def _with_x_max(cat: Catalog, x_max: Fraction) -> Catalog:
    if x_max == DEFAULT_X_MAX:
        return cat
    hi = E.Number(x_max)
    entries = []
    for e in cat.entries:
        if e.has_tag(TRUNCATED_TAG):
            e = replace(e, domain=replace(e.domain, hi=hi))
        entries.append(e)
    return Catalog(entries, cat.constants)


@lru_cache(maxsize=8)
def _builtin(x_max_str: str) -> Catalog:
    text = resources.files("bounds").joinpath("data/builtin.cat").read_text("utf-8")
    cat = parse_catalog_text(text, origin="builtin")
    cat = _with_x_max(cat, Fraction(x_max_str))
    validate_catalog(cat)
    return cat


def builtin_catalog(x_max: float | Fraction | int = DEFAULT_X_MAX) -> Catalog:
    """The complete built-in registry; hyperbolic/unbounded domains are
    truncated at ``x_max`` (entries tagged ``truncated``)."""
    return _builtin(str(Fraction(x_max)))


def eval_bound(entry: BoundEntry, point, param_env: Optional[dict] = None,
               prec: Precision = Precision()) -> oracle.RefValue:
    """Evaluate the bound expression at a point strictly inside the domain."""
    ec = EvalCtx(prec)
    pt = point if isinstance(point, tuple) else (point,)
    lo, hi = entry.domain.bounds(ec)
    x = oracle.to_num(ec, pt[0])
    inside_lo = x[0] > lo or (not entry.domain.lo_open and x[0] == lo)
    inside_hi = x[0] < hi or (not entry.domain.hi_open and x[0] == hi)
    if not (inside_lo and inside_hi):
        raise DomainError(f"{float(x[0])} outside domain {entry.domain}")
    env = {"x": x}
    if len(pt) > 1:
        env["y"] = oracle.to_num(ec, pt[1])
    elif entry.region == "diagonal":
        env["y"] = oracle.sub(ec, (oracle.mpq(1), 0.0), x)
    merged = entry.default_params()
    if param_env:
        merged.update(param_env)
    for name, val in merged.items():
        env[name] = E.compile_expr(val)(ec, {}) if E.is_node(val) else oracle.to_num(ec, val)
    v, err = E.compile_expr(entry.expr)(ec, env)
    return oracle.RefValue(v, err)
