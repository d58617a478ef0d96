"""Translate controller programs to SMT-LIB2 (quantifier-free, linear or
nonlinear real arithmetic with integer casts).

All numeric terms are Real. Every integer rounding site (``int_trunc``,
``floor``, ``ceil``, ``//``, the mask boundary and the returned indices)
declares a fresh Int ``k`` pinned by linear bounds, ``k <= x < k + 1`` for
floor and the sign-split ``x - 1 < k <= x`` / ``x <= k < x + 1`` for
truncation. Solvers handle these far better than nested ``to_int``. Terms
known to be integer-valued (literals, Int casts and their sums, products,
minima and selections) skip the bounds: rounding them is the identity.

Each ``let`` becomes a ``define-fun`` so shared subterms are not copied.
Division and negative powers add a guard "divisor is non-zero whenever this
point is reached": properties are proved over the executions that do not
fault, and faulting inputs are the execution layer's business.

``exp``, ``ln`` and non-literal or large exponents are untranslatable. A
``let`` whose value cannot be translated is dropped from the environment; a
name bound in only some branches of a conditional is dropped at the merge, so
an output that depends on it becomes untranslatable instead of silently
using the one-sided value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..domain import INPUT_KEYS, INPUT_RANGES, INTEGER_INPUTS, MASK_FLAGS, MASK_INDEX
from ..heurlang import HeuristicProgram, ast

MAX_POWER = 8


class TranslationError(Exception):
    pass


class Untranslatable(Exception):
    def __init__(self, construct: str):
        super().__init__(construct)
        self.construct = construct


def num(value: Fraction) -> str:
    value = Fraction(value)
    if value < 0:
        return f"(- {num(-value)})"
    if value.denominator == 1:
        return f"{value.numerator}.0"
    return f"(/ {value.numerator}.0 {value.denominator}.0)"


def _and(*terms: str) -> str:
    terms = tuple(t for t in terms if t != "true")
    if not terms:
        return "true"
    if len(terms) == 1:
        return terms[0]
    return f"(and {' '.join(terms)})"


def _not(term: str) -> str:
    return f"(not {term})"


def floor_bounds(k: str, x: str) -> str:
    return f"(and (<= (to_real {k}) {x}) (< {x} (+ (to_real {k}) 1.0)))"


def trunc_bounds(k: str, x: str) -> str:
    up = f"(and (< (- {x} 1.0) (to_real {k})) (<= (to_real {k}) {x}))"
    down = f"(and (<= {x} (to_real {k})) (< (to_real {k}) (+ {x} 1.0)))"
    return f"(ite (>= {x} 0.0) {up} {down})"


@dataclass
class Translation:
    prefix: str
    lines: list[str] = field(default_factory=list)
    guards: list[str] = field(default_factory=list)
    # Int-sorted term names for the returned indices, None when untranslatable
    outputs: tuple[str | None, str | None, str | None] = (None, None, None)
    reasons: tuple[str | None, str | None, str | None] = (None, None, None)

    def sym(self, key: str) -> str:
        return f"{self.prefix}{key}"

    def script(self) -> str:
        return "\n".join(self.lines)


@dataclass
class _Val:
    term: str | None  # None -> untranslatable
    sort: str  # Real | Bool
    reason: str | None = None


class _Translator:
    def __init__(self, prefix: str):
        self.t = Translation(prefix)
        self.counter = 0
        self.ints: set[str] = set()  # integer-valued Real terms

    def fresh(self, hint: str) -> str:
        self.counter += 1
        return f"{self.t.prefix}{hint}_{self.counter}"

    def define(self, hint: str, sort: str, term: str) -> str:
        if not term.startswith("("):
            return term
        name = self.fresh(hint)
        self.t.lines.append(f"(define-fun {name} () {sort} {term})")
        if term in self.ints:
            self.ints.add(name)
        return name

    def integral(self, term: str, *parts: str) -> str:
        if all(p in self.ints for p in parts):
            self.ints.add(term)
        return term

    def int_var(self, hint: str, x: str, kind: str = "floor") -> str:
        """Fresh Int equal to floor or truncation of ``x``."""
        k = self.fresh(hint)
        if x in self.ints:
            bounds = f"(= (to_real {k}) {x})"
        else:
            bounds = floor_bounds(k, x) if kind == "floor" else trunc_bounds(k, x)
        self.t.lines.append(f"(declare-const {k} Int)")
        self.t.lines.append(f"(assert {bounds})")
        self.ints.add(f"(to_real {k})")
        return k

    def rounded(self, hint: str, x: str, kind: str = "floor") -> str:
        """Real term for floor/trunc of ``x``; identity on integral terms."""
        if x in self.ints:
            return x
        return f"(to_real {self.int_var(hint, x, kind)})"

    # --- declarations -------------------------------------------------
    def declare_inputs(self, ranges) -> dict[str, _Val]:
        env: dict[str, _Val] = {}
        p = self.t.prefix
        for key in INPUT_KEYS:
            lo, hi = ranges[key]
            sort = "Int" if key in INTEGER_INPUTS else "Real"
            name = f"{p}{key}"
            self.t.lines.append(f"(declare-const {name} {sort})")
            if sort == "Int":
                self.t.lines.append(f"(assert (and (<= {int(lo)} {name}) (<= {name} {int(hi)})))")
                env[key] = _Val(self.integral(f"(to_real {name})"), "Real")
            else:
                self.t.lines.append(f"(assert (and (<= {num(lo)} {name}) (<= {name} {num(hi)})))")
                env[key] = _Val(name, "Real")
        ct, tt, lim = f"{p}current_thickness", f"{p}target_thickness", f"{p}hr_limit"
        self.t.lines.append(f"(assert (>= {ct} {tt}))")
        # contiguous mask reduced to its boundary index
        m = f"{p}{MASK_INDEX}"
        allowed = self.define(
            "allowed",
            "Real",
            f"(let ((a {lim}) (b (* 0.7 {ct})) (c (- {ct} {tt}))) "
            f"(let ((ab (ite (<= a b) a b))) (ite (<= ab c) ab c)))",
        )
        self.t.lines.append(f"(declare-const {m} Int)")
        floor10 = self.int_var("mfloor", f"(* 10.0 {allowed})")
        self.t.lines.append(f"(assert (= {m} (ite (< {floor10} 0) 0 (ite (> {floor10} 500) 500 {floor10}))))")
        env[MASK_INDEX] = _Val(self.integral(f"(to_real {m})"), "Real")
        for flag in MASK_FLAGS:
            env[flag] = _Val("false", "Bool")
        return env

    # --- expressions --------------------------------------------------
    def guard(self, path: str, cond: str) -> None:
        self.t.guards.append(cond if path == "true" else f"(=> {path} {cond})")

    def expr(self, node, env: dict[str, _Val], path: str) -> str:
        """SMT term for ``node``; raises Untranslatable."""
        if isinstance(node, ast.Num):
            return self.integral(num(node.value)) if node.value.denominator == 1 else num(node.value)
        if isinstance(node, ast.Bool):
            return "true" if node.value else "false"
        if isinstance(node, ast.Name):
            v = env.get(node.id)
            if v is None:
                raise Untranslatable(f"name '{node.id}' (untranslatable binding)")
            if v.term is None:
                raise Untranslatable(v.reason or node.id)
            return v.term
        if isinstance(node, ast.Unary):
            x = self.expr(node.operand, env, path)
            return _not(x) if node.op == "not" else self.integral(f"(- {x})", x)
        if isinstance(node, ast.Binary):
            a = self.expr(node.left, env, path)
            if node.op == "**":
                if not isinstance(node.right, ast.Num) or node.right.value.denominator != 1:
                    raise Untranslatable("** with non-integer-literal exponent")
                n = int(node.right.value)
                if abs(n) > MAX_POWER:
                    raise Untranslatable(f"** with exponent {n}")
                if n == 0:
                    return self.integral("1.0")
                prod = a if abs(n) == 1 else self.integral(f"(* {' '.join([a] * abs(n))})", a)
                if n < 0:
                    self.guard(path, f"(not (= {a} 0.0))")
                    return f"(/ 1.0 {prod})"
                return prod
            b = self.expr(node.right, env, path)
            if node.op in ("+", "-", "*"):
                return self.integral(f"({node.op} {a} {b})", a, b)
            self.guard(path, f"(not (= {b} 0.0))")
            if node.op == "/":
                return f"(/ {a} {b})"
            q = self.define("quot", "Real", f"(/ {a} {b})")
            return self.rounded("fdiv", q)
        if isinstance(node, ast.Compare):
            a = self.expr(node.left, env, path)
            b = self.expr(node.right, env, path)
            op = {"==": "=", "!=": "distinct"}.get(node.op, node.op)
            return f"({op} {a} {b})"
        if isinstance(node, ast.BoolOp):
            a = self.expr(node.left, env, path)
            inner = _and(path, a) if node.op == "and" else _and(path, _not(a))
            b = self.expr(node.right, env, inner)
            return f"({node.op} {a} {b})"
        if isinstance(node, ast.IfExpr):
            c = self.expr(node.cond, env, path)
            x = self.expr(node.then, env, _and(path, c))
            y = self.expr(node.orelse, env, _and(path, _not(c)))
            return self.integral(f"(ite {c} {x} {y})", x, y)
        if isinstance(node, ast.Call):
            f = node.func
            if f in ("exp", "ln"):
                raise Untranslatable(f)
            args = [self.define("arg", "Real", self.expr(a, env, path)) for a in node.args]
            if f == "clip":
                x, lo, hi = args
                return self.integral(f"(ite (< {x} {lo}) {lo} (ite (> {x} {hi}) {hi} {x}))", x, lo, hi)
            if f in ("min", "max"):
                op = "<=" if f == "min" else ">="
                acc = args[0]
                for nxt in args[1:]:
                    acc = self.define(f, "Real", self.integral(f"(ite ({op} {acc} {nxt}) {acc} {nxt})", acc, nxt))
                return acc
            (x,) = args
            if f == "abs":
                return self.integral(f"(ite (>= {x} 0.0) {x} (- {x}))", x)
            if f == "int_trunc":
                return self.rounded("trunc", x, "trunc")
            if f == "floor":
                return self.rounded("floor", x)
            if f == "ceil":
                return self.integral(f"(- {self.rounded('ceil', self.integral(f'(- {x})', x))})")
            if f == "round_half_even":
                if x in self.ints:
                    return x
                fl = self.int_var("round", x)
                frac = f"(- {x} (to_real {fl}))"
                up = f"(to_real (+ {fl} 1))"
                down = f"(to_real {fl})"
                even = f"(= (mod {fl} 2) 0)"
                return self.integral(f"(ite (< {frac} 0.5) {down} (ite (> {frac} 0.5) {up} (ite {even} {down} {up})))")
        raise TranslationError(f"unexpected node {node!r}")

    def value(self, node, env, path) -> _Val:
        sort = "Bool" if isinstance(node, (ast.Compare, ast.BoolOp, ast.Bool)) or (
            isinstance(node, ast.Unary) and node.op == "not"
        ) else None
        try:
            term = self.expr(node, env, path)
        except Untranslatable as exc:
            return _Val(None, sort or "Real", exc.construct)
        if sort is None:
            sort = self._sort_of(node, env)
        return _Val(term, sort)

    def _sort_of(self, node, env) -> str:
        if isinstance(node, ast.Name):
            return env[node.id].sort
        if isinstance(node, ast.IfExpr):
            return self._sort_of(node.then, env)
        return "Real"

    # --- statements ---------------------------------------------------
    def block(self, stmts, env: dict[str, _Val], path: str):
        """Returns ('env', env) on fall-through or ('ret', [(term, reason)] * 3)."""
        stmts = list(stmts)
        for i, stmt in enumerate(stmts):
            if isinstance(stmt, ast.Let):
                v = self.value(stmt.value, env, path)
                if v.term is None:
                    env[stmt.name] = _Val(None, v.sort, v.reason)
                else:
                    env[stmt.name] = _Val(self.define(f"v_{stmt.name}", v.sort, v.term), v.sort)
                continue
            if isinstance(stmt, ast.Return):
                outs = []
                for node in stmt.values:
                    v = self.value(node, env, path)
                    outs.append((v.term, v.reason))
                return "ret", outs
            # conditional statement
            conds: list[_Val] = []
            reach = path
            for c, _ in stmt.branches:
                v = self.value(c, env, reach)
                conds.append(v)
                if v.term is None:
                    break
                reach = _and(reach, _not(v.term))
            bodies = [b for _, b in stmt.branches] + [stmt.orelse or ()]
            bad = next((c for c in conds if c.term is None), None)
            if bad is not None:
                conds += [bad] * (len(stmt.branches) - len(conds))
            if ast.contains_return(stmt):
                rest = stmts[i + 1 :]
                if bad is not None:
                    return "ret", [(None, bad.reason)] * 3
                results = []
                prior = "true"
                for c, body in zip(conds + [_Val("true", "Bool")], bodies):
                    here = _and(prior, c.term)
                    kind, out = self.block(tuple(body) + tuple(rest), dict(env), _and(path, here))
                    assert kind == "ret", "parser guarantees a return on every path"
                    results.append((c.term, out))
                    prior = _and(prior, _not(c.term))
                return "ret", self._merge_outputs(results)
            if bad is not None:
                # nothing assigned under an untranslatable condition can be trusted
                for inner in ast.walk_stmts((stmt,)):
                    if isinstance(inner, ast.Let):
                        env[inner.name] = _Val(None, "Real", bad.reason)
                continue
            envs = []
            prior = "true"
            for c, body in zip(conds + [_Val("true", "Bool")], bodies):
                here = _and(prior, c.term)
                _, e = self.block(body, dict(env), _and(path, here))
                envs.append((c.term, e))
                prior = _and(prior, _not(c.term))
            env = self._merge_envs(env, envs)
        return "env", env

    def _merge_outputs(self, results):
        merged = []
        for dim in range(3):
            term, reason = results[-1][1][dim]
            for cond, out in reversed(results[:-1]):
                t, r = out[dim]
                if term is None or t is None:
                    reason = reason or r
                    term = None
                    continue
                term = self.integral(f"(ite {cond} {t} {term})", t, term)
            merged.append((term, reason))
        return merged

    def _merge_envs(self, before, envs):
        names = set.intersection(*(set(e) for _, e in envs))
        merged = {}
        for name in names:
            vals = [e[name] for _, e in envs]
            if all(v is before.get(name) for v in vals):
                merged[name] = before[name]
                continue
            missing = next((v for v in vals if v.term is None), None)
            if missing is not None:
                merged[name] = _Val(None, vals[0].sort, missing.reason)
                continue
            term = vals[-1].term
            for (cond, _), v in zip(reversed(envs[:-1]), reversed(vals[:-1])):
                term = self.integral(f"(ite {cond} {v.term} {term})", v.term, term)
            merged[name] = _Val(self.define(f"m_{name}", vals[0].sort, term), vals[0].sort)
        return merged


def translate(program: HeuristicProgram, prefix: str = "", ranges=INPUT_RANGES) -> Translation:
    """Declarations, definitions and Int-sorted returned indices for one copy."""
    tr = _Translator(prefix)
    env = tr.declare_inputs(ranges)
    kind, outs = tr.block(program.body, env, "true")
    if kind != "ret":
        raise TranslationError("program falls through without returning")
    names, reasons = [], []
    for dim, (term, reason) in enumerate(outs):
        if term is None:
            names.append(None)
            reasons.append(reason)
            continue
        raw = tr.define(f"raw{dim}", "Real", term)
        out = tr.int_var(f"out{dim}", raw, "trunc")
        names.append(out)
        reasons.append(None)
    tr.t.outputs = tuple(names)
    tr.t.reasons = tuple(reasons)
    for g in tr.t.guards:
        tr.t.lines.append(f"(assert {g})")
    return tr.t

