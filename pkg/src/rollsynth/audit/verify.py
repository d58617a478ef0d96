"""Layer 4: prove solver-amenable specs, or produce validated counterexamples."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

from ..domain import INPUT_KEYS, INTEGER_INPUTS
from ..heurlang import HeuristicProgram
from .smt import TranslationError, Translation, translate
from .solver import SolverUnavailable, solver_run
from .specs import SOLVER_SPECS, DomainSpec, relation_holds, run_indices, safety_holds

DEFAULT_TIMEOUT = 10.0


@dataclass
class VerifyResult:
    spec_id: str
    verdict: str  # proved | counterexample | deferred | unknown
    method: str  # solver | two-translation
    reason: str | None = None
    counterexample: dict | None = None
    solver_time: float = 0.0

    def to_dict(self) -> dict:
        data = asdict(self)
        if self.counterexample is not None:
            data["counterexample"] = _jsonable(self.counterexample)
        return data


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, Fraction):
        return int(obj) if obj.denominator == 1 else float(obj)
    return obj


def _safety_goal(spec: DomainSpec, t: Translation) -> str:
    hr = f"(to_real {t.outputs[0]})"
    if spec.id == "SPEC-001":
        prop = f"(<= (/ {hr} 10.0) (- {t.sym('current_thickness')} {t.sym('target_thickness')}))"
    elif spec.id == "SPEC-002":
        prop = f"(<= (/ {hr} 10.0) {t.sym('hr_limit')})"
    elif spec.id == "SPEC-003":
        prop = f"(>= {t.outputs[0]} 0)"
    else:
        raise ValueError(f"{spec.id} is not a single-run property")
    return f"(assert (not {prop}))"


def _read_state(model: dict, prefix: str) -> dict[str, Fraction]:
    state = {}
    for key in INPUT_KEYS:
        v = model[f"{prefix}{key}"]
        state[key] = Fraction(v)
    return state


def _run(body: str, symbols, spec, method, timeout, command, artifacts, tag) -> tuple:
    artifact = None if artifacts is None else Path(artifacts) / f"{spec.id}{tag}.smt2"
    return solver_run(body, symbols, timeout=timeout, command=command, artifact=artifact)


def verify_safety(
    program: HeuristicProgram,
    spec: DomainSpec,
    timeout: float = DEFAULT_TIMEOUT,
    command=None,
    artifacts: str | Path | None = None,
) -> VerifyResult:
    method = "solver"
    try:
        t = translate(program, "")
    except TranslationError as exc:
        return VerifyResult(spec.id, "unknown", method, f"translation error: {exc}")
    if t.outputs[spec.output] is None:
        return VerifyResult(spec.id, "deferred", method, f"untranslatable: {t.reasons[spec.output]}")
    body = t.script() + "\n" + _safety_goal(spec, t)
    symbols = [t.sym(k) for k in INPUT_KEYS]
    res = _run(body, symbols, spec, method, timeout, command, artifacts, "")
    return _conclude(program, spec, method, res, lambda m: _read_state(m, ""))


def verify_relational(
    program: HeuristicProgram,
    spec: DomainSpec,
    timeout: float = DEFAULT_TIMEOUT,
    command=None,
    artifacts: str | Path | None = None,
) -> VerifyResult:
    method = "two-translation"
    try:
        a = translate(program, "a_")
        b = translate(program, "b_")
    except TranslationError as exc:
        return VerifyResult(spec.id, "unknown", method, f"translation error: {exc}")
    i = spec.output
    if a.outputs[i] is None:
        return VerifyResult(spec.id, "deferred", method, f"untranslatable: {a.reasons[i]}")
    (varied,) = spec.varied
    lines = [a.script(), b.script()]
    for key in INPUT_KEYS:
        if key != varied:
            lines.append(f"(assert (= {a.sym(key)} {b.sym(key)}))")
    lines.append(f"(assert (> {a.sym(varied)} {b.sym(varied)}))")
    lines.append(f"(assert (not ({spec.direction} {a.outputs[i]} {b.outputs[i]})))")
    symbols = [a.sym(k) for k in INPUT_KEYS] + [b.sym(k) for k in INPUT_KEYS]
    res = _run("\n".join(lines), symbols, spec, method, timeout, command, artifacts, "")
    return _conclude(
        program, spec, method, res, lambda m: {"a": _read_state(m, "a_"), "b": _read_state(m, "b_")}
    )


def _conclude(program, spec, method, res, read) -> VerifyResult:
    if res.status == "unsat":
        return VerifyResult(spec.id, "proved", method, solver_time=res.elapsed)
    if res.status == "unknown":
        return VerifyResult(spec.id, "unknown", method, res.reason, solver_time=res.elapsed)
    try:
        cex = read(res.model)
    except KeyError as exc:
        return VerifyResult(spec.id, "unknown", method, f"model lacks {exc}", solver_time=res.elapsed)
    if not validate_counterexample(program, cex, spec):
        return VerifyResult(
            spec.id,
            "unknown",
            method,
            "solver model did not reproduce under execution",
            _jsonable(cex),
            res.elapsed,
        )
    return VerifyResult(spec.id, "counterexample", method, None, cex, res.elapsed)


def _within_domain(state) -> bool:
    from ..domain import INPUT_RANGES

    for key in INPUT_KEYS:
        lo, hi = INPUT_RANGES[key]
        v = Fraction(state[key])
        if not lo <= v <= hi:
            return False
        if key in INTEGER_INPUTS and v.denominator != 1:
            return False
    return state["current_thickness"] >= state["target_thickness"]


def validate_counterexample(program: HeuristicProgram, cex: dict, spec: DomainSpec) -> bool:
    """Re-run the program concretely and confirm the property really fails."""
    if spec.relational:
        a, b = cex["a"], cex["b"]
        if not (_within_domain(a) and _within_domain(b)):
            return False
        (varied,) = spec.varied
        if any(a[k] != b[k] for k in INPUT_KEYS if k != varied) or not a[varied] > b[varied]:
            return False
        out_a, out_b = run_indices(program, a), run_indices(program, b)
        if out_a is None or out_b is None:
            return False
        return not relation_holds(spec, out_a, out_b)
    if not _within_domain(cex):
        return False
    out = run_indices(program, cex)
    return out is not None and not safety_holds(spec, cex, out)


def verify_spec(program: HeuristicProgram, spec: DomainSpec, **kw) -> VerifyResult:
    return verify_relational(program, spec, **kw) if spec.relational else verify_safety(program, spec, **kw)


def verify_all(
    program: HeuristicProgram,
    specs=SOLVER_SPECS,
    timeout: float = DEFAULT_TIMEOUT,
    command=None,
    artifacts: str | Path | None = None,
    jobs: int = 4,
) -> list[VerifyResult]:
    """Verdict per spec; a missing solver defers everything instead of failing."""
    kw = dict(timeout=timeout, command=command, artifacts=artifacts)
    try:
        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            return list(pool.map(lambda s: verify_spec(program, s, **kw), specs))
    except SolverUnavailable as exc:
        return [VerifyResult(s.id, "deferred", "solver", f"solver unavailable: {exc}") for s in specs]


def translated_outputs(
    program: HeuristicProgram, states, timeout: float = DEFAULT_TIMEOUT, command=None
) -> list[tuple[int | None, ...] | None]:
    """Returned indices the translation assigns to each concrete state.

    None means the pinned state is unsatisfiable (a guarded fault); a None
    component means that output is untranslatable. Used to cross-check the
    encoding against the interpreter.
    """
    from .solver import parse_sexprs, solver_command, value_of
    import subprocess

    t = translate(program, "")
    live = [o for o in t.outputs if o is not None]
    chunks = []
    for state in states:
        pins = " ".join(f"(= {t.sym(k)} {_smt_num(state[k], k)})" for k in INPUT_KEYS)
        chunks.append(f"(push)\n(assert (and {pins}))\n(check-sat)\n" + (f"(get-value ({' '.join(live)}))\n" if live else '(echo "()")\n') + "(pop)")
    script = (
        f"(set-option :produce-models true)\n(set-option :timeout {int(timeout * 1000)})\n(set-logic ALL)\n"
        + t.script() + "\n" + "\n".join(chunks) + "\n"
    )
    proc = subprocess.run(solver_command(command), input=script, capture_output=True, text=True, timeout=timeout * len(chunks) + 5)
    answers = parse_sexprs(proc.stdout)
    out: list = []
    for status, reply in zip(answers[::2], answers[1::2]):
        if status == "unsat":
            out.append(None)  # reply is the get-value error
        elif status == "sat":
            values = {k: value_of(v) for k, v in reply}
            out.append(tuple(None if o is None else int(values[o]) for o in t.outputs))
        else:
            raise RuntimeError(f"solver answered {status!r}")
    return out


def _smt_num(value, key: str) -> str:
    from .smt import num

    v = Fraction(value)
    return str(int(v)) if key in INTEGER_INPUTS else num(v)
