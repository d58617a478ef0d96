"""Exact interpreter for heuristic programs.

Numbers are evaluated as :class:`fractions.Fraction`. Inputs are read by their
shortest decimal repr, so ``10.1 - 10.0`` is exactly ``0.1`` and the
interpreter agrees with the solver's real arithmetic. Only ``exp``, ``ln`` and
non-integer powers go through floats.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from fractions import Fraction
from typing import NamedTuple

from ..domain import INDEX_BOUNDS, INPUT_KEYS, MASK_FLAGS, MASK_INDEX, exact, max_valid_hr_index
from . import ast
from .errors import RuntimeNumericError

_LIMIT = Fraction(10) ** 300
_MAX_EXACT_POWER = 64


class ActionTriple(NamedTuple):
    hr_idx: int
    interpass_idx: int
    velocity_idx: int


def _read(obj, key):
    if isinstance(obj, Mapping):
        return obj[key]
    return getattr(obj, key)


def bind_inputs(state, mask=None) -> dict[str, object]:
    """Build the evaluation environment from a state and its mask.

    ``state`` may be a ProcessState-like object or a mapping over the input
    keys. ``mask`` may be an ActionMask-like object, a plain integer boundary
    index, or None to derive it from the state.
    """
    env: dict[str, object] = {key: exact(_read(state, key)) for key in INPUT_KEYS}
    if mask is None:
        env[MASK_INDEX] = Fraction(
            max_valid_hr_index(env["current_thickness"], env["target_thickness"], env["hr_limit"])
        )
        env[MASK_FLAGS[0]] = env[MASK_FLAGS[1]] = False
    elif isinstance(mask, (int, Fraction)):
        env[MASK_INDEX] = Fraction(mask)
        env[MASK_FLAGS[0]] = env[MASK_FLAGS[1]] = False
    else:
        env[MASK_INDEX] = Fraction(_read(mask, MASK_INDEX))
        env[MASK_FLAGS[0]] = _read(mask, "interpass_valid_from") == 0
        env[MASK_FLAGS[1]] = _read(mask, "velocity_valid_from") == 0
    return env


def _checked(value: Fraction) -> Fraction:
    if abs(value) > _LIMIT:
        raise RuntimeNumericError("overflow: value exceeds the finite range")
    return value


def _float_result(fn, *args) -> Fraction:
    try:
        out = fn(*(float(a) for a in args))
    except (OverflowError, ValueError, ZeroDivisionError) as exc:
        raise RuntimeNumericError(f"{fn.__name__}: {exc}") from None
    if not math.isfinite(out):
        raise RuntimeNumericError(f"{fn.__name__}: non-finite result")
    return _checked(Fraction(out))


def _ln(x: Fraction) -> Fraction:
    if x <= 0:
        raise RuntimeNumericError(f"ln of non-positive value {float(x):g}")
    return _float_result(math.log, x)


def _power(base: Fraction, expo: Fraction) -> Fraction:
    if expo.denominator == 1 and abs(expo) <= _MAX_EXACT_POWER:
        if base == 0 and expo < 0:
            raise RuntimeNumericError("zero raised to a negative power")
        return _checked(base ** int(expo))
    if base < 0:
        raise RuntimeNumericError("negative base with non-integer exponent")
    if base == 0:
        if expo < 0:
            raise RuntimeNumericError("zero raised to a negative power")
        return Fraction(0)
    return _float_result(math.pow, base, expo)


def _clip(x, lo, hi):
    return min(max(x, lo), hi)


BUILTIN_IMPLS: dict[str, Callable[..., Fraction]] = {
    "clip": _clip,
    "min": lambda *a: min(a),
    "max": lambda *a: max(a),
    "abs": abs,
    "int_trunc": lambda x: Fraction(math.trunc(x)),
    "round_half_even": lambda x: Fraction(round(x)),
    "floor": lambda x: Fraction(math.floor(x)),
    "ceil": lambda x: Fraction(math.ceil(x)),
    "exp": lambda x: _float_result(math.exp, x),
    "ln": _ln,
}


def eval_expr(node, env: Mapping[str, object]):
    if isinstance(node, ast.Num):
        return node.value
    if isinstance(node, ast.Name):
        return env[node.id]
    if isinstance(node, ast.Binary):
        a = eval_expr(node.left, env)
        b = eval_expr(node.right, env)
        op = node.op
        if op == "+":
            return _checked(a + b)
        if op == "-":
            return _checked(a - b)
        if op == "*":
            return _checked(a * b)
        if op == "**":
            return _power(a, b)
        if b == 0:
            raise RuntimeNumericError("division by zero")
        if op == "/":
            return _checked(a / b)
        return Fraction(math.floor(a / b))
    if isinstance(node, ast.Call):
        args = [eval_expr(a, env) for a in node.args]
        return _checked(BUILTIN_IMPLS[node.func](*args))
    if isinstance(node, ast.Compare):
        a = eval_expr(node.left, env)
        b = eval_expr(node.right, env)
        op = node.op
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        if op == "==":
            return a == b
        return a != b
    if isinstance(node, ast.BoolOp):
        left = eval_expr(node.left, env)
        if node.op == "and":
            return left and eval_expr(node.right, env)
        return left or eval_expr(node.right, env)
    if isinstance(node, ast.Unary):
        v = eval_expr(node.operand, env)
        return (not v) if node.op == "not" else -v
    if isinstance(node, ast.IfExpr):
        return eval_expr(node.then if eval_expr(node.cond, env) else node.orelse, env)
    if isinstance(node, ast.Bool):
        return node.value
    raise TypeError(node)


LetHook = Callable[[ast.Let, object], None]


def _run(stmts, env: dict, on_let: LetHook | None):
    for stmt in stmts:
        if isinstance(stmt, ast.Let):
            value = eval_expr(stmt.value, env)
            env[stmt.name] = value
            if on_let is not None:
                on_let(stmt, value)
        elif isinstance(stmt, ast.Return):
            return tuple(eval_expr(v, env) for v in stmt.values)
        else:
            for cond, body in stmt.branches:
                if eval_expr(cond, env):
                    chosen = body
                    break
            else:
                chosen = stmt.orelse or ()
            out = _run(chosen, env, on_let)
            if out is not None:
                return out
    return None


def evaluate_raw(program: ast.HeuristicProgram, state, mask=None, on_let: LetHook | None = None) -> tuple[Fraction, Fraction, Fraction]:
    """Run the program and return its three uncoerced outputs."""
    env = bind_inputs(state, mask)
    try:
        out = _run(program.body, env, on_let)
    except RecursionError:
        raise RuntimeNumericError("expression nesting too deep") from None
    assert out is not None, "parser guarantees a return on every path"
    return out


def coerce(raw: tuple[Fraction, Fraction, Fraction]) -> ActionTriple:
    """Clip each output to its index range, then truncate toward zero."""
    return ActionTriple(*(int(math.trunc(_clip(v, lo, hi))) for v, (lo, hi) in zip(raw, INDEX_BOUNDS)))


def evaluate(program: ast.HeuristicProgram, state, mask=None) -> ActionTriple:
    """Deterministic action for ``state``; raises RuntimeNumericError on numeric faults."""
    return coerce(evaluate_raw(program, state, mask))


def free_inputs(program: ast.HeuristicProgram) -> frozenset[str]:
    """Input keys that can influence some output, including through branch conditions."""
    deps = output_dependencies(program)
    return frozenset().union(*deps)


def output_dependencies(
    program: ast.HeuristicProgram, expand_mask: bool = True
) -> tuple[frozenset[str], frozenset[str], frozenset[str]]:
    """Per-output input dependencies (data plus control flow), syntactic over-approximation.

    With ``expand_mask`` the mask boundary counts as the three inputs it is
    computed from; otherwise it is reported under its own name.
    """
    leaves = {k: {k} for k in INPUT_KEYS}
    if expand_mask:
        leaves[MASK_INDEX] = {"current_thickness", "target_thickness", "hr_limit"}
    else:
        leaves[MASK_INDEX] = {MASK_INDEX}
    result: list[set[str]] = [set(), set(), set()]

    def expr_deps(node, env) -> set[str]:
        out: set[str] = set()
        for n in ast.walk(node):
            if isinstance(n, ast.Name):
                out |= env.get(n.id, leaves.get(n.id, set()))
        return out

    def block(stmts, env: dict[str, set[str]], ctrl: set[str]) -> dict[str, set[str]] | None:
        for stmt in stmts:
            if isinstance(stmt, ast.Let):
                env[stmt.name] = expr_deps(stmt.value, env) | ctrl
            elif isinstance(stmt, ast.Return):
                for i, v in enumerate(stmt.values):
                    result[i] |= expr_deps(v, env) | ctrl
                return None
            else:
                inner = set(ctrl)
                outs = []
                for cond, body in stmt.branches:
                    inner |= expr_deps(cond, env)
                    outs.append(block(body, dict(env), set(inner)))
                outs.append(block(stmt.orelse, dict(env), set(inner)) if stmt.orelse is not None else dict(env))
                live = [o for o in outs if o is not None]
                if not live:
                    return None
                merged: dict[str, set[str]] = {}
                for o in live:
                    for name, d in o.items():
                        merged.setdefault(name, set()).update(d)
                # Names (re)bound under a condition depend on it even where
                # one path left them untouched.
                for name in merged:
                    if any(o.get(name) != env.get(name) for o in live):
                        merged[name] |= inner
                env = merged
                if len(live) < len(outs):
                    # Reaching the code below at all depends on the conditions.
                    ctrl = ctrl | inner
        return env

    block(program.body, {}, set())
    return tuple(frozenset(r) for r in result)
