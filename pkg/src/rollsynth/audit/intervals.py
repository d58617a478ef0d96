"""Interval abstract interpretation over controller programs.

Endpoints are exact ``Fraction`` values or float infinities. Booleans are
intervals over {0, 1}. Branches are joined by hull; conditions that the
intervals already decide prune the dead side, but tested variables are never
narrowed inside a branch.

``may_be_nan`` marks values whose computation may fault at run time
(division by a range containing zero, logarithm of a non-positive value).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..domain import ACTION_BOUNDS, INPUT_KEYS, INPUT_RANGES, MASK_FLAGS, MASK_INDEX, OUTPUT_NAMES, THIN_PASS_RATIO
from ..heurlang import ast
from .checks import CheckResult, verdict

INF = math.inf
# Largest exp() argument that does not overflow a double.
_EXP_MAX = 709


def _mul(a, b):
    # 0 * inf is 0 here: infinite endpoints stand for "unbounded but finite".
    if a == 0 or b == 0:
        return Fraction(0)
    return a * b


def _down(x: float):
    return Fraction(math.nextafter(x, -INF)) if math.isfinite(x) else x


def _up(x: float):
    return Fraction(math.nextafter(x, INF)) if math.isfinite(x) else x


def _integerize(fn, x):
    return x if isinstance(x, float) else Fraction(fn(x))


@dataclass(frozen=True)
class Interval:
    lo: Fraction | float
    hi: Fraction | float
    may_be_nan: bool = False

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, v) -> "Interval":
        v = Fraction(v)
        return cls(v, v)

    @classmethod
    def top(cls, may_be_nan: bool = False) -> "Interval":
        return cls(-INF, INF, may_be_nan)

    @property
    def is_finite(self) -> bool:
        return not (isinstance(self.lo, float) or isinstance(self.hi, float))

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, v) -> bool:
        return self.lo <= v <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def within(self, lo, hi) -> bool:
        return lo <= self.lo and self.hi <= hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi), self.may_be_nan or other.may_be_nan)

    def with_nan(self, flag: bool) -> "Interval":
        return Interval(self.lo, self.hi, self.may_be_nan or flag)

    def __add__(self, o: "Interval") -> "Interval":
        return Interval(self.lo + o.lo, self.hi + o.hi, self.may_be_nan or o.may_be_nan)

    def __sub__(self, o: "Interval") -> "Interval":
        return Interval(self.lo - o.hi, self.hi - o.lo, self.may_be_nan or o.may_be_nan)

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo, self.may_be_nan)

    def __mul__(self, o: "Interval") -> "Interval":
        ps = [_mul(a, b) for a in (self.lo, self.hi) for b in (o.lo, o.hi)]
        return Interval(min(ps), max(ps), self.may_be_nan or o.may_be_nan)

    def __truediv__(self, o: "Interval") -> "Interval":
        nan = self.may_be_nan or o.may_be_nan
        if o.contains_zero():
            return Interval.top(True)
        qs = []
        for a in (self.lo, self.hi):
            for b in (o.lo, o.hi):
                if isinstance(b, float):
                    qs.append(Fraction(0))
                else:
                    qs.append(a / b)
        return Interval(min(qs), max(qs), nan)

    def monotone(self, fn) -> "Interval":
        """Image under a non-decreasing map of the endpoints."""
        return Interval(fn(self.lo), fn(self.hi), self.may_be_nan)

    def to_json(self) -> dict:
        def enc(x):
            if isinstance(x, float):
                return "inf" if x > 0 else "-inf"
            return float(x) if x.denominator != 1 else int(x)

        return {"lo": enc(self.lo), "hi": enc(self.hi), "may_be_nan": self.may_be_nan}

    def __str__(self) -> str:
        def f(x):
            return f"{float(x):g}"

        return f"[{f(self.lo)}, {f(self.hi)}]" + (" (nan?)" if self.may_be_nan else "")


TRUE = Interval.point(1)
FALSE = Interval.point(0)
BOOL = Interval(Fraction(0), Fraction(1))


def imax(*xs: Interval) -> Interval:
    return Interval(max(x.lo for x in xs), max(x.hi for x in xs), any(x.may_be_nan for x in xs))


def imin(*xs: Interval) -> Interval:
    return Interval(min(x.lo for x in xs), min(x.hi for x in xs), any(x.may_be_nan for x in xs))


def iabs(x: Interval) -> Interval:
    if x.lo >= 0:
        return x
    if x.hi <= 0:
        return -x
    return Interval(Fraction(0), max(-x.lo, x.hi), x.may_be_nan)


def _exp_endpoint(v, rounder):
    if isinstance(v, float):
        return Fraction(0) if v < 0 else INF
    if v > _EXP_MAX:
        return INF
    return rounder(math.exp(v))


def iexp(x: Interval) -> Interval:
    lo = _exp_endpoint(x.lo, _down)
    if lo == INF:
        # every concrete call overflows; no value ever flows on
        return Interval.top(True)
    lo = max(lo, Fraction(0))
    return Interval(lo, _exp_endpoint(x.hi, _up), x.may_be_nan)


def iln(x: Interval) -> Interval:
    if x.hi <= 0:
        return Interval.top(True)
    bad = x.lo <= 0
    lo = -INF if bad else (_down(math.log(x.lo)) if not isinstance(x.lo, float) else x.lo)
    hi = x.hi if isinstance(x.hi, float) else _up(math.log(x.hi))
    return Interval(lo, hi, x.may_be_nan or bad)


def ipow(base: Interval, expo: Interval) -> Interval:
    nan = base.may_be_nan or expo.may_be_nan
    if expo.is_point and not isinstance(expo.lo, float) and expo.lo.denominator == 1 and abs(expo.lo) <= 64:
        n = int(expo.lo)
        if n == 0:
            return Interval(Fraction(1), Fraction(1), nan)
        if n < 0 and base.contains_zero():
            return Interval.top(True)
        if n % 2 == 0 and base.contains_zero():
            m = max(-base.lo, base.hi)
            return Interval(Fraction(0), m**n if not isinstance(m, float) else INF, nan)

        def pw(v):
            if isinstance(v, float):
                return v**n if n > 0 else Fraction(0)
            return v**n

        ends = [pw(base.lo), pw(base.hi)]
        return Interval(min(ends), max(ends), nan)
    if base.lo > 0 and expo.is_finite and base.is_finite:
        # y * ln(x) is bilinear in (y, ln x): extremes sit at the corners
        corners = [float(y) * math.log(x) for x in (base.lo, base.hi) for y in (expo.lo, expo.hi)]
        lo = _exp_endpoint(min(corners), _down)
        if lo == INF:
            return Interval.top(True)
        return Interval(max(lo, Fraction(0)), _exp_endpoint(max(corners), _up), nan)
    return Interval.top(True)


def compare(op: str, a: Interval, b: Interval) -> Interval:
    if op in ("<", ">"):
        if op == ">":
            a, b = b, a
        if a.hi < b.lo:
            return TRUE
        if a.lo >= b.hi:
            return FALSE
        return BOOL
    if op in ("<=", ">="):
        if op == ">=":
            a, b = b, a
        if a.hi <= b.lo:
            return TRUE
        if a.lo > b.hi:
            return FALSE
        return BOOL
    equal_decided = a.is_point and b.is_point and a.lo == b.lo
    disjoint = a.hi < b.lo or b.hi < a.lo
    if op == "==":
        return TRUE if equal_decided else FALSE if disjoint else BOOL
    return FALSE if equal_decided else TRUE if disjoint else BOOL


@dataclass
class LetSite:
    name: str
    pos: tuple[int, int]
    interval: Interval


@dataclass
class Finding:
    kind: str  # division-by-zero-range, ln-domain, exp-overflow, dead-branch, always-branch
    pos: tuple[int, int]
    detail: str


@dataclass
class IntervalResult:
    outputs: tuple[Interval, Interval, Interval]
    env: dict[str, Interval]
    sites: dict[int, LetSite] = field(default_factory=dict)
    findings: list[Finding] = field(default_factory=list)

    def site_for(self, stmt: ast.Let) -> Interval | None:
        site = self.sites.get(id(stmt))
        return None if site is None else site.interval

    def coerced_outputs(self) -> tuple[Interval, ...]:
        from ..domain import INDEX_BOUNDS

        out = []
        for iv, (lo, hi) in zip(self.outputs, INDEX_BOUNDS):
            c = imin(imax(iv, Interval.point(lo)), Interval.point(hi))
            out.append(c.monotone(lambda v: Fraction(math.trunc(v))))
        return tuple(out)


def input_intervals(ranges=INPUT_RANGES) -> dict[str, Interval]:
    env = {k: Interval(Fraction(ranges[k][0]), Fraction(ranges[k][1])) for k in INPUT_KEYS}
    h, t, limit = env["current_thickness"], env["target_thickness"], env["hr_limit"]
    allowed = imin(limit, Interval.point(THIN_PASS_RATIO) * h, h - t)
    scaled = (allowed * Interval.point(10)).monotone(lambda v: _integerize(math.floor, v))
    env[MASK_INDEX] = imin(imax(scaled, Interval.point(0)), Interval.point(500))
    for flag in MASK_FLAGS:
        env[flag] = FALSE
    return env


class _Analyzer:
    def __init__(self):
        self.sites: dict[int, LetSite] = {}
        self.findings: list[Finding] = []

    def note(self, kind: str, node, detail: str) -> None:
        self.findings.append(Finding(kind, node.pos, detail))

    def expr(self, node, env) -> Interval:
        if isinstance(node, ast.Num):
            return Interval.point(node.value)
        if isinstance(node, ast.Bool):
            return TRUE if node.value else FALSE
        if isinstance(node, ast.Name):
            return env[node.id]
        if isinstance(node, ast.Unary):
            v = self.expr(node.operand, env)
            if node.op == "not":
                return Interval(1 - v.hi, 1 - v.lo, v.may_be_nan)
            return -v
        if isinstance(node, ast.Binary):
            a = self.expr(node.left, env)
            b = self.expr(node.right, env)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "**":
                out = ipow(a, b)
                if out.may_be_nan and not (a.may_be_nan or b.may_be_nan):
                    self.note("pow-domain", node, f"power with base {a} and exponent {b} may fault")
                return out
            if b.contains_zero():
                self.note("division-by-zero-range", node, f"divisor range {b} contains zero")
            q = a / b
            if node.op == "//":
                q = q.monotone(lambda v: _integerize(math.floor, v))
            return q
        if isinstance(node, ast.Compare):
            return compare(node.op, self.expr(node.left, env), self.expr(node.right, env))
        if isinstance(node, ast.BoolOp):
            a = self.expr(node.left, env)
            if node.op == "and":
                if a == FALSE:
                    return FALSE
                b = self.expr(node.right, env)
                return Interval(min(a.lo, b.lo), min(a.hi, b.hi), a.may_be_nan or b.may_be_nan)
            if a == TRUE:
                return TRUE
            b = self.expr(node.right, env)
            return Interval(max(a.lo, b.lo), max(a.hi, b.hi), a.may_be_nan or b.may_be_nan)
        if isinstance(node, ast.IfExpr):
            c = self.expr(node.cond, env)
            if c == TRUE:
                self.note("always-branch", node, "conditional expression always takes its first arm")
                return self.expr(node.then, env).with_nan(c.may_be_nan)
            if c == FALSE:
                self.note("dead-branch", node, "conditional expression never takes its first arm")
                return self.expr(node.orelse, env).with_nan(c.may_be_nan)
            return self.expr(node.then, env).hull(self.expr(node.orelse, env)).with_nan(c.may_be_nan)
        if isinstance(node, ast.Call):
            args = [self.expr(a, env) for a in node.args]
            f = node.func
            if f == "clip":
                return imin(imax(args[0], args[1]), args[2])
            if f == "min":
                return imin(*args)
            if f == "max":
                return imax(*args)
            if f == "abs":
                return iabs(args[0])
            if f == "int_trunc":
                return args[0].monotone(lambda v: _integerize(math.trunc, v))
            if f == "round_half_even":
                return args[0].monotone(lambda v: _integerize(round, v))
            if f == "floor":
                return args[0].monotone(lambda v: _integerize(math.floor, v))
            if f == "ceil":
                return args[0].monotone(lambda v: _integerize(math.ceil, v))
            if f == "exp":
                x = args[0]
                if x.hi > _EXP_MAX:
                    self.note("exp-overflow", node, f"exp argument range {x} may overflow")
                return iexp(x)
            if f == "ln":
                x = args[0]
                if x.lo <= 0:
                    self.note("ln-domain", node, f"ln argument range {x} reaches non-positive values")
                return iln(x)
        raise TypeError(node)

    def block(self, stmts, env: dict[str, Interval], returns: list):
        """Analyse a block; return the fall-through environment or None."""
        for stmt in stmts:
            if isinstance(stmt, ast.Let):
                v = self.expr(stmt.value, env)
                env[stmt.name] = v
                self.sites[id(stmt)] = LetSite(stmt.name, stmt.pos, v)
            elif isinstance(stmt, ast.Return):
                returns.append(tuple(self.expr(v, env) for v in stmt.values))
                return None
            else:
                outs = []
                reachable = True
                for cond, body in stmt.branches:
                    if not reachable:
                        self.note("dead-branch", cond, "branch unreachable: an earlier condition always holds")
                        continue
                    c = self.expr(cond, env)
                    if c == FALSE:
                        self.note("dead-branch", cond, "condition never holds")
                        continue
                    if c == TRUE:
                        reachable = False
                    outs.append(self.block(body, dict(env), returns))
                if reachable:
                    outs.append(self.block(stmt.orelse or (), dict(env), returns))
                elif stmt.orelse:
                    self.note("dead-branch", stmt.orelse[0], "else branch unreachable")
                live = [o for o in outs if o is not None]
                if not live:
                    return None
                common = set.intersection(*(set(o) for o in live))
                merged = {}
                for name in common:
                    iv = live[0][name]
                    for o in live[1:]:
                        iv = iv.hull(o[name])
                    merged[name] = iv
                env = merged
        return env


def interval_eval(program: ast.HeuristicProgram, ranges=INPUT_RANGES) -> IntervalResult:
    """Sound bounds for every let-site and the three raw outputs."""
    analyzer = _Analyzer()
    returns: list[tuple[Interval, Interval, Interval]] = []
    analyzer.block(program.body, input_intervals(ranges), returns)
    if not returns:
        raise ValueError("no reachable return")
    outputs = list(returns[0])
    for r in returns[1:]:
        outputs = [a.hull(b) for a, b in zip(outputs, r)]
    env: dict[str, Interval] = {}
    for site in analyzer.sites.values():
        env[site.name] = env[site.name].hull(site.interval) if site.name in env else site.interval
    return IntervalResult(tuple(outputs), env, analyzer.sites, analyzer.findings)


def expr_interval(node, env: dict[str, Interval]) -> Interval:
    return _Analyzer().expr(node, env)


def range_checks(result: IntervalResult) -> list[CheckResult]:
    """Nine interval-layer checks: three bound checks plus six auxiliary ones."""
    out = []
    for i, (iv, (lo, hi), name) in enumerate(zip(result.outputs, ACTION_BOUNDS, OUTPUT_NAMES)):
        out.append(
            verdict(
                f"RNG-00{i + 1}",
                "range",
                "warning",
                iv.within(lo, hi),
                f"{name} raw range {iv} {'within' if iv.within(lo, hi) else 'exceeds'} [{lo}, {hi}]"
                + ("" if iv.within(lo, hi) else "; return coercion clips it"),
            )
        )
    for i, (iv, name) in enumerate(zip(result.outputs, OUTPUT_NAMES)):
        out.append(
            verdict(
                f"RNG-00{i + 4}",
                "range",
                "warning",
                not iv.may_be_nan,
                f"{name} {'may' if iv.may_be_nan else 'cannot'} come from a faulting computation",
            )
        )
    unbounded = sorted({s.name for s in result.sites.values() if not s.interval.is_finite})
    out.append(
        verdict(
            "RNG-007",
            "range",
            "warning",
            not unbounded,
            "all intermediates bounded" if not unbounded else f"unbounded intermediates: {', '.join(unbounded)}",
        )
    )
    divs = [f for f in result.findings if f.kind == "division-by-zero-range"]
    out.append(
        verdict(
            "RNG-008",
            "range",
            "warning",
            not divs,
            "no divisor range contains zero" if not divs else divs[0].detail,
            divs[0].pos if divs else None,
        )
    )
    dom = [f for f in result.findings if f.kind in ("ln-domain", "exp-overflow", "pow-domain")]
    out.append(
        verdict(
            "RNG-009",
            "range",
            "warning",
            not dom,
            "transcendental arguments within domain" if not dom else dom[0].detail,
            dom[0].pos if dom else None,
        )
    )
    return out
