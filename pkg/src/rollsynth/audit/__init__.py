"""Five-layer audit: lints, interval analysis, spec catalog, SMT proofs, property testing."""

from .checks import LINT_CATEGORIES, CheckResult, verdict
from .intervals import Interval, IntervalResult, expr_interval, input_intervals, interval_eval, range_checks
from .lints import run_lints
from .pbt import TestInput, edge_cases, pbt_inputs, random_inputs, run_pbt
from .report import AuditReport, full_audit
from .smt import Translation, TranslationError, translate
from .solver import ModelParseError, SolverResult, SolverUnavailable, solver_run
from .specs import CATALOG, SOLVER_SPECS, SPECS, DomainSpec
from .verify import VerifyResult, translated_outputs, validate_counterexample, verify_all, verify_spec

__all__ = [
    "AuditReport",
    "CATALOG",
    "CheckResult",
    "DomainSpec",
    "Interval",
    "IntervalResult",
    "LINT_CATEGORIES",
    "ModelParseError",
    "SOLVER_SPECS",
    "SPECS",
    "SolverResult",
    "SolverUnavailable",
    "TestInput",
    "Translation",
    "TranslationError",
    "VerifyResult",
    "edge_cases",
    "expr_interval",
    "full_audit",
    "input_intervals",
    "interval_eval",
    "pbt_inputs",
    "random_inputs",
    "range_checks",
    "run_lints",
    "run_pbt",
    "solver_run",
    "translate",
    "translated_outputs",
    "validate_counterexample",
    "verdict",
    "verify_all",
    "verify_spec",
]
