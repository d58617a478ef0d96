"""Run an external SMT-LIB2 solver as a subprocess and read its answer."""

from __future__ import annotations

import os
import re
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

DEFAULT_COMMAND = ("z3", "-in")
SOLVER_ENV = "ROLLSYNTH_SOLVER"


class SolverUnavailable(RuntimeError):
    pass


class ModelParseError(ValueError):
    pass


@dataclass
class SolverResult:
    status: str  # sat | unsat | unknown
    model: dict[str, Fraction | bool] = field(default_factory=dict)
    reason: str | None = None
    elapsed: float = 0.0


def solver_command(command=None) -> list[str]:
    if command:
        return shlex.split(command) if isinstance(command, str) else list(command)
    env = os.environ.get(SOLVER_ENV)
    if env:
        return shlex.split(env)
    return list(DEFAULT_COMMAND)


_TOKEN = re.compile(r'\s*(?:(\()|(\))|("(?:[^"]|"")*")|(\|[^|]*\|)|([^\s()]+))')


def parse_sexprs(text: str) -> list:
    """Parse a sequence of s-expressions into nested lists of atom strings."""
    stack: list[list] = [[]]
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ModelParseError(f"cannot tokenize near {text[pos:pos + 20]!r}")
        pos = m.end()
        if m.group(1):
            stack.append([])
        elif m.group(2):
            if len(stack) == 1:
                raise ModelParseError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            atom = next(g for g in m.groups()[2:] if g is not None)
            stack[-1].append(atom)
    if len(stack) != 1:
        raise ModelParseError("unbalanced '('")
    return stack[0]


def value_of(sexpr) -> Fraction | bool:
    """Numeric or boolean value of a solver model term."""
    if isinstance(sexpr, str):
        if sexpr in ("true", "false"):
            return sexpr == "true"
        try:
            return Fraction(sexpr)
        except ValueError:
            raise ModelParseError(f"unexpected atom {sexpr!r}") from None
    if not sexpr:
        raise ModelParseError("empty term")
    head, *args = sexpr
    if head == "-" and len(args) == 1:
        return -value_of(args[0])
    if head == "/" and len(args) == 2:
        return value_of(args[0]) / value_of(args[1])
    if head == "to_real" and len(args) == 1:
        return value_of(args[0])
    raise ModelParseError(f"unsupported model term {sexpr!r}")


def build_script(body: str, symbols, timeout: float) -> str:
    lines = [
        "(set-option :produce-models true)",
        f"(set-option :timeout {int(timeout * 1000)})",
        "(set-logic ALL)",
        body,
        "(check-sat)",
    ]
    if symbols:
        lines.append(f"(get-value ({' '.join(symbols)}))")
    return "\n".join(lines) + "\n"


def solver_run(
    body: str,
    symbols=(),
    timeout: float = 10.0,
    command=None,
    artifact: str | Path | None = None,
) -> SolverResult:
    """Check ``body`` for satisfiability; read back ``symbols`` on sat."""
    script = build_script(body, symbols, timeout)
    if artifact is not None:
        Path(artifact).parent.mkdir(parents=True, exist_ok=True)
        Path(artifact).write_text(script)
    cmd = solver_command(command)
    start = time.perf_counter()
    try:
        proc = subprocess.run(cmd, input=script, capture_output=True, text=True, timeout=timeout + 2)
    except FileNotFoundError as exc:
        raise SolverUnavailable(f"solver command not found: {cmd[0]}") from exc
    except subprocess.TimeoutExpired:
        return SolverResult("unknown", reason="timeout", elapsed=time.perf_counter() - start)
    elapsed = time.perf_counter() - start
    out = proc.stdout.strip()
    first, _, rest = out.partition("\n")
    first = first.strip()
    if first == "unsat":
        return SolverResult("unsat", elapsed=elapsed)
    if first == "unknown":
        return SolverResult("unknown", reason="solver returned unknown", elapsed=elapsed)
    if first == "timeout" or (first == "" and elapsed >= timeout):
        return SolverResult("unknown", reason="timeout", elapsed=elapsed)
    if first != "sat":
        detail = (proc.stderr.strip() or out)[:200]
        return SolverResult("unknown", reason=f"unexpected solver output: {detail}", elapsed=elapsed)
    model = {}
    if symbols:
        try:
            parsed = parse_sexprs(rest)
            if len(parsed) != 1:
                raise ModelParseError("expected one get-value response")
            for pair in parsed[0]:
                if not isinstance(pair, list) or len(pair) != 2 or not isinstance(pair[0], str):
                    raise ModelParseError(f"bad model entry {pair!r}")
                model[pair[0]] = value_of(pair[1])
        except ModelParseError as exc:
            return SolverResult("unknown", reason=f"model parse error: {exc}", elapsed=elapsed)
    return SolverResult("sat", model, elapsed=elapsed)
