"""Layer 1: 29 source and AST checks in eight categories.

Several host-language hazards cannot be expressed in the controller
language at all. Their checks are kept so reports keep a fixed shape, and
they pass with a note saying the grammar already enforces them.
"""

from __future__ import annotations

from ..domain import ACTION_BOUNDS, MASK_INDEX, OUTPUT_NAMES
from ..heurlang import BUILTINS, HeuristicProgram, SourceUnit, ast, output_dependencies, tokenize
from ..heurlang.parser import FORBIDDEN_WORDS
from .checks import CheckResult, verdict
from .intervals import IntervalResult, interval_eval

MAX_SOURCE_CHARS = 20_000
MAX_NODES = 5_000
MAX_DEPTH = 64

GRAMMAR_NOTE = "enforced by the grammar"


def _depth(node, level: int = 1) -> int:
    kids = ast.children(node)
    return level if not kids else max(_depth(k, level + 1) for k in kids)


def _let_defs(program: HeuristicProgram) -> dict[str, list]:
    defs: dict[str, list] = {}
    for stmt in ast.walk_stmts(program.body):
        if isinstance(stmt, ast.Let):
            defs.setdefault(stmt.name, []).append(stmt.value)
    return defs


def _mask_capped(expr, defs, seen=frozenset()) -> bool:
    """True if ``expr`` can never exceed the mask boundary (syntactically)."""
    if isinstance(expr, ast.Num):
        return expr.value <= 0
    if isinstance(expr, ast.Name):
        if expr.id == MASK_INDEX:
            return True
        if expr.id in seen or expr.id not in defs:
            return False
        return all(_mask_capped(v, defs, seen | {expr.id}) for v in defs[expr.id])
    if isinstance(expr, ast.Call):
        if expr.func == "clip":
            return _mask_capped(expr.args[2], defs, seen)
        if expr.func == "min":
            return any(_mask_capped(a, defs, seen) for a in expr.args)
        if expr.func == "max":
            return all(_mask_capped(a, defs, seen) for a in expr.args)
    if isinstance(expr, ast.IfExpr):
        return _mask_capped(expr.then, defs, seen) and _mask_capped(expr.orelse, defs, seen)
    return False


def _divisions_with_guards(program: HeuristicProgram):
    """Yield (division node, names mentioned by enclosing conditions)."""

    def expr(node, guards):
        if isinstance(node, ast.Binary) and node.op in ("/", "//"):
            yield node, guards
        if isinstance(node, ast.IfExpr):
            inner = guards | ast.names_in(node.cond)
            yield from expr(node.cond, guards)
            yield from expr(node.then, inner)
            yield from expr(node.orelse, inner)
            return
        for child in ast.children(node):
            yield from expr(child, guards)

    def block(stmts, guards):
        for stmt in stmts:
            if isinstance(stmt, ast.If):
                inner = set(guards)
                for cond, body in stmt.branches:
                    yield from expr(cond, frozenset(inner))
                    inner |= ast.names_in(cond)
                    yield from block(body, frozenset(inner))
                if stmt.orelse is not None:
                    yield from block(stmt.orelse, frozenset(inner))
            else:
                for child in ast.children(stmt):
                    yield from expr(child, guards)

    yield from block(program.body, frozenset())


def _dead_after_return(body) -> list:
    out = []
    for i, stmt in enumerate(body):
        if isinstance(stmt, ast.Return) and i + 1 < len(body):
            out.append(body[i + 1])
            break
        if isinstance(stmt, ast.If):
            for _, branch in stmt.branches:
                out += _dead_after_return(branch)
            if stmt.orelse:
                out += _dead_after_return(stmt.orelse)
    return out


def _used_names(program: HeuristicProgram) -> set[str]:
    used: set[str] = set()
    for node in ast.walk(program):
        if isinstance(node, ast.Name):
            used.add(node.id)
    return used


def run_lints(src: SourceUnit | str, program: HeuristicProgram, intervals: IntervalResult | None = None) -> list[CheckResult]:
    text = src.text if isinstance(src, SourceUnit) else src
    iv = intervals if intervals is not None else interval_eval(program)
    deps = output_dependencies(program)
    raw_deps = output_dependencies(program, expand_mask=False)
    defs = _let_defs(program)
    returns = program.returns
    nodes = list(ast.walk(program))
    tokens = tokenize(text)
    results: list[CheckResult] = []

    def add(cid, cat, sev, ok, msg, loc=None):
        results.append(verdict(cid, cat, sev, ok, msg, loc))

    # structural
    bad_arity = [r for r in returns if len(r.values) != 3]
    add("STR-001", "structural", "error", not bad_arity, "every return yields three values" if not bad_arity else "return with wrong arity")
    add("STR-002", "structural", "error", True, f"every control path returns ({GRAMMAR_NOTE})")
    add("STR-003", "structural", "error", bool(returns), f"{len(returns)} return statement(s)")
    add("STR-004", "structural", "error", True, f"returned values are numeric ({GRAMMAR_NOTE})")

    # security
    names = [t for t in tokens if t.kind == "name"]
    odd = [t for t in tokens if t.kind not in ("number", "name", "kw", "op", "sep", "eof")]
    add("SEC-001", "security", "error", not odd, "all tokens belong to the grammar")
    forbidden = [t for t in names if t.text in FORBIDDEN_WORDS]
    add(
        "SEC-002",
        "security",
        "error",
        not forbidden,
        "no host-language keywords or calls" if not forbidden else f"forbidden word '{forbidden[0].text}'",
        (forbidden[0].line, forbidden[0].col) if forbidden else None,
    )
    add("SEC-003", "security", "error", True, f"no attribute access, imports or persistent state ({GRAMMAR_NOTE})")
    dunder = [t for t in names if t.text.startswith("__") or t.text.endswith("__")]
    add(
        "SEC-004",
        "security",
        "error",
        not dunder,
        "no dunder names" if not dunder else f"dunder name '{dunder[0].text}'",
        (dunder[0].line, dunder[0].col) if dunder else None,
    )
    depth = max((_depth(s) for s in program.body), default=0)
    small = len(text) <= MAX_SOURCE_CHARS and len(nodes) <= MAX_NODES and depth <= MAX_DEPTH
    add("SEC-005", "security", "error", small, f"{len(text)} chars, {len(nodes)} nodes, depth {depth}")
    shadow = [s for s in ast.walk_stmts(program.body) if isinstance(s, ast.Let) and s.name in BUILTINS]
    add(
        "SEC-006",
        "security",
        "error",
        not shadow,
        "no binding shadows a builtin" if not shadow else f"'{shadow[0].name}' shadows a builtin",
        shadow[0].pos if shadow else None,
    )

    # mask
    add("MSK-001", "mask", "warning", MASK_INDEX in raw_deps[0], f"hr output {'consults' if MASK_INDEX in raw_deps[0] else 'ignores'} {MASK_INDEX}")
    capped = all(_mask_capped(r.values[0], defs) for r in returns)
    add("MSK-002", "mask", "warning", capped, "hr output capped by the mask on every return" if capped else "hr output not syntactically capped by the mask")
    coerced = iv.coerced_outputs()
    zero_ok = coerced[1].lo >= 1 and coerced[2].lo >= 1
    add("MSK-003", "mask", "warning", zero_ok, "interpass and velocity avoid the masked index 0" if zero_ok else "interpass or velocity may select the masked index 0")

    # bounds
    for i, (out, (lo, hi), name) in enumerate(zip(iv.outputs, ACTION_BOUNDS, OUTPUT_NAMES)):
        ok = out.within(lo, hi)
        add(f"BND-00{i + 1}", "bounds", "warning", ok, f"{name} range {out} {'within' if ok else 'outside'} [{lo}, {hi}]")

    # division
    risky = {f.pos for f in iv.findings if f.kind == "division-by-zero-range"}
    unguarded = [
        node for node, guards in _divisions_with_guards(program) if node.pos in risky and not (ast.names_in(node.right) & guards)
    ]
    add(
        "DIV-001",
        "division",
        "warning",
        not unguarded,
        "every division is guarded or has a non-zero divisor range" if not unguarded else "unguarded division; divisor range contains zero",
        unguarded[0].pos if unguarded else None,
    )
    domain = [f for f in iv.findings if f.kind in ("ln-domain", "exp-overflow", "pow-domain")]
    add("DIV-002", "division", "warning", not domain, "no ln/exp/power domain risk" if not domain else domain[0].detail, domain[0].pos if domain else None)

    # information usage
    ref = program.referenced_inputs
    add("INF-001", "info-usage", "warning", "current_thickness" in ref or program.uses_mask, "reads current thickness (directly or via the mask)")
    add("INF-002", "info-usage", "warning", "target_thickness" in ref or program.uses_mask, "reads target thickness (directly or via the mask)")
    force = bool(ref & {"rolling_force", "rolling_torque"})
    add("INF-003", "info-usage", "info", force, "force/torque aware" if force else "ignores rolling force and torque")
    grain = bool(ref & {"current_grain_size", "target_grain_size"})
    add("INF-004", "info-usage", "info", grain, "grain-size aware" if grain else "ignores grain size")

    # return path
    dead = _dead_after_return(program.body)
    add("RET-001", "return-path", "warning", not dead, "no statements after a return" if not dead else "unreachable statement after return", dead[0].pos if dead else None)
    branches = [f for f in iv.findings if f.kind in ("dead-branch", "always-branch")]
    add("RET-002", "return-path", "warning", not branches, "no branch decided by input ranges" if not branches else branches[0].detail, branches[0].pos if branches else None)
    fallback = bool(program.body) and isinstance(program.body[-1], ast.Return)
    add("RET-003", "return-path", "warning", fallback or len(returns) == 1, "unconditional fallback return" if fallback else "returns only inside branches")

    # control logic
    thick = "current_thickness" in deps[0]
    add("CTL-001", "control-logic", "warning", thick, "hr responds to thickness" if thick else "hr ignores current thickness")
    constant = [not d or o.is_point for d, o in zip(deps, iv.outputs)]
    add("CTL-002", "control-logic", "warning", not all(constant), "outputs depend on the state" if not all(constant) else "all outputs constant")
    consts = [n for n, c in zip(OUTPUT_NAMES, constant) if c]
    add("CTL-003", "control-logic", "info", not consts, "no constant output" if not consts else f"constant output(s): {', '.join(consts)}")
    used = _used_names(program)
    unused = sorted({s.name for s in ast.walk_stmts(program.body) if isinstance(s, ast.Let) and s.name not in used})
    add("CTL-004", "control-logic", "info", not unused, "every binding is used" if not unused else f"unused binding(s): {', '.join(unused)}")

    assert len({r.id for r in results}) == len(results) == 29
    return results
