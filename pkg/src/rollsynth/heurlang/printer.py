"""Canonical source rendering; ``parse(pretty(p)) == p`` for every program."""

from __future__ import annotations

from decimal import Decimal, localcontext
from fractions import Fraction

from . import ast

_PREC = {"or": 1, "and": 2, "not": 3, "cmp": 4, "+": 5, "-": 5, "*": 6, "/": 6, "//": 6, "neg": 7, "**": 8}


def format_number(value: Fraction, is_int: bool) -> str:
    if value < 0:
        raise ValueError("literals are non-negative; negation is a separate node")
    if is_int:
        if value.denominator != 1:
            raise ValueError(f"integer literal with fractional value {value}")
        return str(value.numerator)
    d = value.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    if d != 1:
        raise ValueError(f"{value} has no finite decimal expansion")
    with localcontext() as ctx:
        ctx.prec = 200
        text = format(Decimal(value.numerator) / Decimal(value.denominator), "f")
    if "." not in text:
        text += ".0"
    return text


def _prec(node) -> int:
    if isinstance(node, ast.IfExpr):
        return 0
    if isinstance(node, ast.BoolOp):
        return _PREC[node.op]
    if isinstance(node, ast.Unary):
        return _PREC["not"] if node.op == "not" else _PREC["neg"]
    if isinstance(node, ast.Compare):
        return _PREC["cmp"]
    if isinstance(node, ast.Binary):
        return _PREC[node.op]
    return 9


def expr_to_str(node, min_prec: int = 0) -> str:
    if isinstance(node, ast.Num):
        text = format_number(node.value, node.is_int)
    elif isinstance(node, ast.Bool):
        text = "true" if node.value else "false"
    elif isinstance(node, ast.Name):
        text = node.id
    elif isinstance(node, ast.Call):
        text = f"{node.func}({', '.join(expr_to_str(a) for a in node.args)})"
    elif isinstance(node, ast.IfExpr):
        text = f"if {expr_to_str(node.cond)} then {expr_to_str(node.then)} else {expr_to_str(node.orelse)}"
    elif isinstance(node, ast.Unary):
        if node.op == "not":
            text = f"not {expr_to_str(node.operand, _PREC['not'])}"
        else:
            inner = expr_to_str(node.operand, _PREC["neg"])
            text = f"-{inner}"
    elif isinstance(node, ast.BoolOp):
        p = _PREC[node.op]
        text = f"{expr_to_str(node.left, p)} {node.op} {expr_to_str(node.right, p + 1)}"
    elif isinstance(node, ast.Compare):
        p = _PREC["cmp"]
        text = f"{expr_to_str(node.left, p + 1)} {node.op} {expr_to_str(node.right, p + 1)}"
    elif isinstance(node, ast.Binary):
        p = _PREC[node.op]
        if node.op == "**":
            text = f"{expr_to_str(node.left, 9)} ** {expr_to_str(node.right, _PREC['neg'])}"
        else:
            text = f"{expr_to_str(node.left, p)} {node.op} {expr_to_str(node.right, p + 1)}"
    else:
        raise TypeError(node)
    if _prec(node) < min_prec:
        return f"({text})"
    return text


def _stmts(stmts, indent: int, out: list[str]) -> None:
    pad = "    " * indent
    for stmt in stmts:
        if isinstance(stmt, ast.Let):
            out.append(f"{pad}let {stmt.name} = {expr_to_str(stmt.value)}")
        elif isinstance(stmt, ast.Return):
            out.append(f"{pad}return ({', '.join(expr_to_str(v) for v in stmt.values)})")
        else:
            for i, (cond, body) in enumerate(stmt.branches):
                out.append(f"{pad}{'if' if i == 0 else 'elif'} {expr_to_str(cond)} then")
                _stmts(body, indent + 1, out)
            if stmt.orelse is not None:
                out.append(f"{pad}else")
                _stmts(stmt.orelse, indent + 1, out)
            out.append(f"{pad}end")


def pretty(program: ast.HeuristicProgram | tuple) -> str:
    body = program.body if isinstance(program, ast.HeuristicProgram) else program
    lines: list[str] = []
    _stmts(body, 0, lines)
    return "\n".join(lines) + "\n"
