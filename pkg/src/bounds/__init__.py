"""Numeric certification toolkit for sharp elementary-function inequalities.

A registry of published two-sided bounds for sin(x)/x, cos, tan, the inverse
trigonometric functions, their hyperbolic analogues and the Euler Beta
function, together with machinery to certify each inequality's sign over its
stated domain in extended precision, reproduce best-possible constants,
locate tightness crossovers, and document the handful of misprinted
statements with concrete counterexamples.
"""

__version__ = "0.1.0"

from .catalog import (BoundEntry, Catalog, ConstantDef, Interval, ParamSpec,
                      builtin_catalog, dump_catalog, eval_bound, load_catalog,
                      parse_interval)
from .errors import (ArityError, BoundsError, DomainError, EmptyOverlap,
                     EvalError, ExprSyntaxError, FormatError, IoError,
                     MismatchedTarget, PrecisionError, ValidationError)
from .expr import Expr, eval_expr, parse_expr, print_expr
from .oracle import (Precision, RefValue, eval_beta, eval_ref, eval_target,
                     TARGET_IDS)
from .analysis import (CrossoverResult, ExtremumRecord, best_constant,
                       crossover, dominance_table, max_rel_error)
from .special import Region, alzer_constant_estimates, verify_beta_bound
from .verifier import (LimitReport, MonotoneReport, SubstitutionReport,
                       VerificationReport, certify_sign, check_limit,
                       check_monotone, check_substitution)

__all__ = [
    "ArityError", "BoundEntry", "BoundsError", "Catalog", "ConstantDef",
    "CrossoverResult", "DomainError", "EmptyOverlap", "EvalError", "Expr",
    "ExprSyntaxError", "ExtremumRecord", "FormatError", "Interval", "IoError",
    "LimitReport", "MismatchedTarget", "MonotoneReport", "ParamSpec",
    "Precision", "PrecisionError", "RefValue", "Region", "SubstitutionReport",
    "TARGET_IDS", "ValidationError", "VerificationReport",
    "alzer_constant_estimates", "best_constant", "builtin_catalog",
    "certify_sign", "check_limit", "check_monotone", "check_substitution",
    "crossover", "dominance_table", "dump_catalog", "eval_beta", "eval_bound",
    "eval_expr", "eval_ref", "eval_target", "load_catalog", "max_rel_error",
    "parse_expr", "parse_interval", "print_expr", "verify_beta_bound",
]
