"""Lexer, recursive-descent parser and resolver for ``.heur`` programs.

Grammar (statements are separated by newlines or ``;``)::

    program  := stmt*
    stmt     := "let" NAME "=" expr
              | "if" expr "then" stmt* ("elif" expr "then" stmt*)* ["else" stmt*] "end"
              | "return" "(" expr "," expr "," expr ")"
    expr     := "if" expr "then" expr "else" expr | or
    or       := and ("or" and)*
    and      := not ("and" not)*
    not      := "not" not | cmp
    cmp      := sum [("<" | "<=" | ">" | ">=" | "==" | "!=") sum]
    sum      := term (("+" | "-") term)*
    term     := unary (("*" | "/" | "//") unary)*
    unary    := ("-" | "+") unary | power
    power    := atom ["**" unary]
    atom     := NUMBER | "true" | "false" | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Comments run from ``#`` to end of line. Newlines inside parentheses are
ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from ..domain import INPUT_KEYS, MASK_FLAGS, MASK_INDEX
from . import ast
from .errors import (
    DslSyntaxError,
    ForbiddenConstruct,
    LexError,
    MissingReturnPath,
    UnknownIdentifier,
)

KEYWORDS = frozenset(
    {"let", "if", "then", "elif", "else", "end", "return", "and", "or", "not", "true", "false"}
)

# Host-language constructs with no meaning here; reported as forbidden rather
# than as unknown names so the diagnostic says why.
FORBIDDEN_WORDS = frozenset(
    {
        "while", "for", "def", "class", "import", "from", "lambda", "global",
        "nonlocal", "exec", "eval", "open", "yield", "try", "except", "with",
        "del", "assert", "raise", "pass", "break", "continue", "in", "is",
        "print", "__import__", "compile", "getattr", "setattr", "globals", "locals",
    }
)

# name -> (min args, max args); None means variadic.
BUILTINS: dict[str, tuple[int, int | None]] = {
    "clip": (3, 3),
    "min": (2, None),
    "max": (2, None),
    "abs": (1, 1),
    "int_trunc": (1, 1),
    "round_half_even": (1, 1),
    "floor": (1, 1),
    "ceil": (1, 1),
    "exp": (1, 1),
    "ln": (1, 1),
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<number>(?:\d[\d_]*(?:\.[\d_]*)?|\.\d[\d_]*)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\*\*|//|<=|>=|==|!=|[-+*/<>=(),;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class SourceUnit:
    text: str
    origin: str = "<string>"


@dataclass(frozen=True)
class Token:
    kind: str  # number, name, kw, op, sep, eof
    text: str
    line: int
    col: int


def tokenize(text: str, origin: str = "<string>") -> list[Token]:
    tokens: list[Token] = []
    line, line_start, depth, i = 1, 0, 0, 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        col = i - line_start + 1
        if m is None:
            raise LexError(f"unexpected character {text[i]!r}", line, col, origin)
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "newline":
            if depth == 0:
                tokens.append(Token("sep", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind == "number":
            if lexeme.endswith("_") or "__" in lexeme or "_." in lexeme:
                raise LexError(f"malformed number {lexeme!r}", line, col, origin)
            tokens.append(Token("number", lexeme, line, col))
        elif kind == "name":
            tokens.append(Token("kw" if lexeme in KEYWORDS else "name", lexeme, line, col))
        elif kind == "op":
            if lexeme == "(":
                depth += 1
            elif lexeme == ")":
                depth = max(0, depth - 1)
            tokens.append(Token("sep" if lexeme == ";" else "op", lexeme, line, col))
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token], origin: str):
        self.toks = tokens
        self.i = 0
        self.origin = origin

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, tok: Token | None = None, cls=DslSyntaxError):
        tok = tok or self.tok
        return cls(message, tok.line, tok.col, self.origin)

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        if self.at(kind, text):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.accept(kind, text)
        if t is None:
            want = text or kind
            got = self.tok.text or self.tok.kind
            raise self.error(f"expected {want!r}, found {got!r}")
        return t

    def skip_seps(self) -> None:
        while self.accept("sep"):
            pass

    # -- statements ----------------------------------------------------
    def program(self) -> tuple[ast.Stmt, ...]:
        body = self.block(terminators=())
        if not self.at("eof"):
            raise self.error(f"unexpected {self.tok.text!r}")
        return body

    def block(self, terminators: tuple[str, ...]) -> tuple[ast.Stmt, ...]:
        stmts: list[ast.Stmt] = []
        self.skip_seps()
        while not self.at("eof") and not (self.tok.kind == "kw" and self.tok.text in terminators):
            stmts.append(self.statement())
            if self.at("eof") or (self.tok.kind == "kw" and self.tok.text in terminators):
                break
            if not self.accept("sep"):
                raise self.error(f"expected end of statement, found {self.tok.text!r}")
            self.skip_seps()
        return tuple(stmts)

    def statement(self) -> ast.Stmt:
        t = self.tok
        if self.accept("kw", "let"):
            name = self.tok
            if name.kind != "name":
                raise self.error("expected a name after 'let'")
            self.check_forbidden(name)
            self.i += 1
            self.expect("op", "=")
            return ast.Let(name.text, self.expr(), pos=(t.line, t.col))
        if self.accept("kw", "if"):
            branches = []
            cond = self.expr()
            self.expect("kw", "then")
            branches.append((cond, self.block(("elif", "else", "end"))))
            orelse = None
            while True:
                if self.accept("kw", "elif"):
                    cond = self.expr()
                    self.expect("kw", "then")
                    branches.append((cond, self.block(("elif", "else", "end"))))
                elif self.accept("kw", "else"):
                    orelse = self.block(("end",))
                    self.expect("kw", "end")
                    break
                else:
                    self.expect("kw", "end")
                    break
            return ast.If(tuple(branches), orelse, pos=(t.line, t.col))
        if self.accept("kw", "return"):
            self.expect("op", "(")
            values = [self.expr()]
            while self.accept("op", ","):
                values.append(self.expr())
            self.expect("op", ")")
            if len(values) != 3:
                raise self.error(
                    f"return must produce (hr_idx, interpass_idx, velocity_idx); got {len(values)} values", t
                )
            return ast.Return(tuple(values), pos=(t.line, t.col))
        if t.kind == "name":
            self.check_forbidden(t)
            if self.toks[self.i + 1].text == "=":
                raise self.error(f"assignment needs 'let': let {t.text} = ...")
        raise self.error(f"expected a statement, found {t.text or t.kind!r}")

    def check_forbidden(self, tok: Token) -> None:
        if tok.text in FORBIDDEN_WORDS:
            raise self.error(f"'{tok.text}' is not part of the controller language", tok, ForbiddenConstruct)

    # -- expressions ---------------------------------------------------
    def expr(self) -> ast.Expr:
        t = self.tok
        if self.accept("kw", "if"):
            cond = self.expr()
            self.expect("kw", "then")
            then = self.expr()
            self.expect("kw", "else")
            return ast.IfExpr(cond, then, self.expr(), pos=(t.line, t.col))
        return self.or_expr()

    def or_expr(self) -> ast.Expr:
        left = self.and_expr()
        while (t := self.accept("kw", "or")) is not None:
            left = ast.BoolOp("or", left, self.and_expr(), pos=(t.line, t.col))
        return left

    def and_expr(self) -> ast.Expr:
        left = self.not_expr()
        while (t := self.accept("kw", "and")) is not None:
            left = ast.BoolOp("and", left, self.not_expr(), pos=(t.line, t.col))
        return left

    def not_expr(self) -> ast.Expr:
        t = self.accept("kw", "not")
        if t is not None:
            return ast.Unary("not", self.not_expr(), pos=(t.line, t.col))
        return self.comparison()

    def comparison(self) -> ast.Expr:
        left = self.sum()
        t = self.tok
        if t.kind == "op" and t.text in ("<", "<=", ">", ">=", "==", "!="):
            self.i += 1
            node = ast.Compare(t.text, left, self.sum(), pos=(t.line, t.col))
            nxt = self.tok
            if nxt.kind == "op" and nxt.text in ("<", "<=", ">", ">=", "==", "!="):
                raise self.error("chained comparisons are not supported; use 'and'")
            return node
        return left

    def sum(self) -> ast.Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            t = self.tok
            self.i += 1
            left = ast.Binary(t.text, left, self.term(), pos=(t.line, t.col))
        return left

    def term(self) -> ast.Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/", "//"):
            t = self.tok
            self.i += 1
            left = ast.Binary(t.text, left, self.unary(), pos=(t.line, t.col))
        return left

    def unary(self) -> ast.Expr:
        t = self.tok
        if self.accept("op", "-"):
            return ast.Unary("-", self.unary(), pos=(t.line, t.col))
        if self.accept("op", "+"):
            return self.unary()
        return self.power()

    def power(self) -> ast.Expr:
        base = self.atom()
        t = self.accept("op", "**")
        if t is not None:
            return ast.Binary("**", base, self.unary(), pos=(t.line, t.col))
        return base

    def atom(self) -> ast.Expr:
        t = self.tok
        pos = (t.line, t.col)
        if t.kind == "number":
            self.i += 1
            text = t.text.replace("_", "")
            is_int = not any(c in text for c in ".eE")
            return ast.Num(Fraction(text), is_int, pos=pos)
        if t.kind == "kw" and t.text in ("true", "false"):
            self.i += 1
            return ast.Bool(t.text == "true", pos=pos)
        if t.kind == "name":
            self.check_forbidden(t)
            self.i += 1
            if self.accept("op", "("):
                args = [self.expr()]
                while self.accept("op", ","):
                    args.append(self.expr())
                self.expect("op", ")")
                return ast.Call(t.text, tuple(args), pos=pos)
            return ast.Name(t.text, pos=pos)
        if self.accept("op", "("):
            inner = self.expr()
            self.expect("op", ")")
            return inner
        raise self.error(f"expected an expression, found {t.text or t.kind!r}")


# -- resolution and type checking --------------------------------------

NUM, BOOL = "num", "bool"

_BASE_ENV = {k: NUM for k in INPUT_KEYS} | {MASK_INDEX: NUM} | {f: BOOL for f in MASK_FLAGS}
_PROTECTED = frozenset(_BASE_ENV)


class _Resolver:
    def __init__(self, origin: str):
        self.origin = origin

    def fail(self, cls, message: str, node) -> None:
        line, col = node.pos
        raise cls(message, line, col, self.origin)

    def expr(self, node, env: dict[str, str]) -> str:
        if isinstance(node, ast.Num):
            return NUM
        if isinstance(node, ast.Bool):
            return BOOL
        if isinstance(node, ast.Name):
            if node.id not in env:
                self.fail(UnknownIdentifier, f"unknown or possibly unassigned name '{node.id}'", node)
            return env[node.id]
        if isinstance(node, ast.Unary):
            want = BOOL if node.op == "not" else NUM
            self.want(node.operand, env, want, f"operand of '{node.op}'")
            return want
        if isinstance(node, ast.Binary):
            self.want(node.left, env, NUM, f"left operand of '{node.op}'")
            self.want(node.right, env, NUM, f"right operand of '{node.op}'")
            return NUM
        if isinstance(node, ast.Compare):
            lt = self.expr(node.left, env)
            rt = self.expr(node.right, env)
            if lt != rt or (lt == BOOL and node.op not in ("==", "!=")):
                self.fail(DslSyntaxError, f"cannot compare {lt} {node.op} {rt}", node)
            return BOOL
        if isinstance(node, ast.BoolOp):
            self.want(node.left, env, BOOL, f"operand of '{node.op}'")
            self.want(node.right, env, BOOL, f"operand of '{node.op}'")
            return BOOL
        if isinstance(node, ast.Call):
            if node.func not in BUILTINS:
                self.fail(UnknownIdentifier, f"unknown function '{node.func}'", node)
            lo, hi = BUILTINS[node.func]
            n = len(node.args)
            if n < lo or (hi is not None and n > hi):
                self.fail(DslSyntaxError, f"{node.func}() takes {lo}{'' if hi == lo else '+'} arguments, got {n}", node)
            for arg in node.args:
                self.want(arg, env, NUM, f"argument of {node.func}()")
            return NUM
        if isinstance(node, ast.IfExpr):
            self.want(node.cond, env, BOOL, "condition")
            t1 = self.expr(node.then, env)
            t2 = self.expr(node.orelse, env)
            if t1 != t2:
                self.fail(DslSyntaxError, f"conditional branches have types {t1} and {t2}", node)
            return t1
        raise TypeError(node)

    def want(self, node, env, kind: str, what: str) -> None:
        got = self.expr(node, env)
        if got != kind:
            self.fail(DslSyntaxError, f"{what} must be {kind}, got {got}", node)

    def block(self, stmts, env: dict[str, str]) -> dict[str, str] | None:
        """Check a block; return the environment on fall-through, None if it always returns."""
        live = True
        for stmt in stmts:
            if isinstance(stmt, ast.Let):
                if stmt.name in _PROTECTED:
                    self.fail(ForbiddenConstruct, f"cannot assign to input '{stmt.name}'", stmt)
                kind = self.expr(stmt.value, env)
                if env.get(stmt.name, kind) != kind:
                    self.fail(DslSyntaxError, f"'{stmt.name}' changes type from {env[stmt.name]} to {kind}", stmt)
                env[stmt.name] = kind
            elif isinstance(stmt, ast.Return):
                for value in stmt.values:
                    self.want(value, env, NUM, "returned value")
                live = False
            elif isinstance(stmt, ast.If):
                outs = []
                for cond, body in stmt.branches:
                    self.want(cond, env, BOOL, "condition")
                    outs.append(self.block(body, dict(env)))
                outs.append(self.block(stmt.orelse, dict(env)) if stmt.orelse is not None else dict(env))
                falling = [o for o in outs if o is not None]
                if not falling:
                    live = False
                else:
                    merged = {}
                    for name in set.intersection(*(set(o) for o in falling)):
                        kinds = {o[name] for o in falling}
                        if len(kinds) > 1:
                            self.fail(DslSyntaxError, f"'{name}' has different types across branches", stmt)
                        merged[name] = kinds.pop()
                    env = merged
        return env if live else None


def parse(src: SourceUnit | str, origin: str | None = None) -> ast.HeuristicProgram:
    """Parse and resolve a program; raises a :class:`Diagnostic` subclass on failure."""
    if isinstance(src, str):
        src = SourceUnit(src, origin or "<string>")
    elif origin is not None:
        src = SourceUnit(src.text, origin)
    tokens = tokenize(src.text, src.origin)
    body = _Parser(tokens, src.origin).program()
    resolver = _Resolver(src.origin)
    if resolver.block(body, dict(_BASE_ENV)) is not None:
        eof = tokens[-1]
        raise MissingReturnPath("some control path ends without 'return'", eof.line, eof.col, src.origin)
    names = {n.id for stmt in body for n in ast.walk(stmt) if isinstance(n, ast.Name)}
    return ast.HeuristicProgram(
        body=body,
        referenced_inputs=frozenset(names & set(INPUT_KEYS)),
        uses_mask=MASK_INDEX in names,
        source=src.text,
        origin=src.origin,
    )
