"""AST node types for heuristic programs.

Source positions are carried on every node but excluded from equality, so
two parses of differently formatted text compare equal when they denote the
same program.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Union

Pos = tuple[int, int]


@dataclass(frozen=True)
class Num:
    value: Fraction
    is_int: bool = False
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Bool:
    value: bool
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Name:
    id: str
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "not"
    operand: "Expr"
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / // **
    left: "Expr"
    right: "Expr"
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Compare:
    op: str  # < <= > >= == !=
    left: "Expr"
    right: "Expr"
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class BoolOp:
    op: str  # "and" / "or"
    left: "Expr"
    right: "Expr"
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class IfExpr:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


Expr = Union[Num, Bool, Name, Unary, Binary, Compare, BoolOp, Call, IfExpr]


@dataclass(frozen=True)
class Let:
    name: str
    value: Expr
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class If:
    branches: tuple[tuple[Expr, tuple["Stmt", ...]], ...]
    orelse: tuple["Stmt", ...] | None
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Return:
    values: tuple[Expr, Expr, Expr]
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


Stmt = Union[Let, If, Return]


@dataclass(frozen=True)
class HeuristicProgram:
    """A parsed, resolved and type-checked controller."""

    body: tuple[Stmt, ...]
    referenced_inputs: frozenset[str]
    uses_mask: bool
    source: str = field(default="", compare=False, repr=False)
    origin: str = field(default="<string>", compare=False, repr=False)

    @cached_property
    def returns(self) -> tuple[Return, ...]:
        return tuple(s for s in walk_stmts(self.body) if isinstance(s, Return))

    @cached_property
    def literals(self) -> tuple[Num, ...]:
        return tuple(n for n in walk(self) if isinstance(n, Num))


def children(node) -> tuple:
    if isinstance(node, (Num, Bool, Name)):
        return ()
    if isinstance(node, Unary):
        return (node.operand,)
    if isinstance(node, (Binary, Compare, BoolOp)):
        return (node.left, node.right)
    if isinstance(node, Call):
        return node.args
    if isinstance(node, IfExpr):
        return (node.cond, node.then, node.orelse)
    if isinstance(node, Let):
        return (node.value,)
    if isinstance(node, Return):
        return node.values
    if isinstance(node, If):
        out: list = []
        for cond, body in node.branches:
            out.append(cond)
            out.extend(body)
        if node.orelse is not None:
            out.extend(node.orelse)
        return tuple(out)
    raise TypeError(f"not an AST node: {node!r}")


def walk(node):
    """Pre-order traversal over statements and expressions."""
    if isinstance(node, HeuristicProgram):
        for stmt in node.body:
            yield from walk(stmt)
        return
    yield node
    for child in children(node):
        yield from walk(child)


def walk_stmts(body):
    for stmt in body:
        yield stmt
        if isinstance(stmt, If):
            for _, branch in stmt.branches:
                yield from walk_stmts(branch)
            if stmt.orelse is not None:
                yield from walk_stmts(stmt.orelse)


def names_in(expr) -> set[str]:
    return {n.id for n in walk(expr) if isinstance(n, Name)}


def contains_return(stmt) -> bool:
    return any(isinstance(s, Return) for s in walk_stmts((stmt,)))
