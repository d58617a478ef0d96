"""Run the five audit layers in order and aggregate them into one report."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field

from ..heurlang import HeuristicProgram, pretty
from .checks import STATUSES, CheckResult
from .intervals import interval_eval, range_checks
from .lints import run_lints
from .pbt import N_RANDOM, pbt_inputs, run_pbt
from .specs import CATALOG, SOLVER_SPECS
from .verify import DEFAULT_TIMEOUT, VerifyResult, verify_all

LAYERS = ("lint", "interval", "verify", "pbt")
LAYER_TITLES = {
    "lint": "AST lints (8 categories)",
    "interval": "Interval analysis",
    "verify": "SMT prover",
    "pbt": "Property testing",
}
# solver verdicts that hand a property over to execution
HANDED_OVER = ("deferred", "unknown")


def verify_check(res: VerifyResult, severity: str, category: str) -> CheckResult:
    """Solver verdict as a check: a deferral is not a finding, unknown warns."""
    if res.verdict == "proved":
        status, msg = "pass", f"proved for all inputs ({res.method})"
    elif res.verdict == "deferred":
        status, msg = "pass", f"deferred to property testing: {res.reason}"
    elif res.verdict == "unknown":
        status, msg = "warn", f"inconclusive, handed to property testing: {res.reason}"
    else:
        status = "fail" if severity == "error" else "warn"
        msg = f"counterexample ({res.method})"
    return CheckResult(res.spec_id, category, severity, status, msg, witness=res.counterexample and res.to_dict()["counterexample"])


@dataclass
class AuditReport:
    program: str
    layers: dict[str, list[CheckResult]]
    catalog: list[dict]
    verdicts: list[VerifyResult]
    deferred: list[str]
    n_inputs: int
    solver_note: str | None = None
    wall_time: float = 0.0
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def checks(self) -> list[CheckResult]:
        return [c for layer in LAYERS for c in self.layers[layer]]

    def layer_totals(self, layer: str) -> dict[str, int]:
        rows = self.layers[layer]
        out = {"checks": len(rows), "pass": 0, "warn": 0, "fail": 0}
        for c in rows:
            out[c.status] += 1
        out["errors"] = sum(c.is_error for c in rows)
        return out

    @property
    def totals(self) -> dict[str, int]:
        out = {"checks": 0, "pass": 0, "warn": 0, "fail": 0, "errors": 0}
        for layer in LAYERS:
            for k, v in self.layer_totals(layer).items():
                out[k] += v
        return out

    @property
    def errors(self) -> list[CheckResult]:
        return [c for c in self.checks if c.is_error]

    def traceability(self) -> list[dict]:
        """Each handed-over spec with its solver and execution entries."""
        pbt = {c.id: c for c in self.layers["pbt"]}
        by_id = {v.spec_id: v for v in self.verdicts}
        return [
            {"spec": s, "solver": by_id[s].verdict, "reason": by_id[s].reason, "execution": pbt[s].status}
            for s in self.deferred
        ]

    def to_dict(self, timings: bool = True) -> dict:
        data = {
            "program": self.program,
            "totals": self.totals,
            "layers": {
                layer: {"totals": self.layer_totals(layer), "checks": [c.to_dict() for c in self.layers[layer]]}
                for layer in LAYERS
            },
            "catalog": self.catalog,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "deferred": self.traceability(),
            "n_inputs": self.n_inputs,
            "solver_note": self.solver_note,
        }
        if timings:
            data["wall_time"] = self.wall_time
            data["timings"] = self.timings
        else:
            for v in data["verdicts"]:
                v.pop("solver_time", None)
        return data

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=True)

    def text_table(self) -> str:
        lines = [f"{'Layer':<28}{'Checks':>7}{'Pass':>9}  Notes", "-" * 64]
        for layer in LAYERS:
            t = self.layer_totals(layer)
            notes = [f"{t['warn']} warn"] if t["warn"] else []
            if t["fail"]:
                notes.append(f"{t['fail']} fail")
            if layer == "verify":
                counts = {}
                for v in self.verdicts:
                    counts[v.verdict] = counts.get(v.verdict, 0) + 1
                notes += [f"{n} {k}" for k, n in sorted(counts.items())]
            if layer == "pbt":
                notes.append(f"{self.n_inputs} inputs")
            lines.append(f"{LAYER_TITLES[layer]:<28}{t['checks']:>7}{t['pass']:>5}/{t['checks']:<3}  {', '.join(notes)}")
        t = self.totals
        lines.append("-" * 64)
        lines.append(f"{'Total':<28}{t['checks']:>7}{t['pass']:>5}/{t['checks']:<3}  {t['errors']} errors")
        for c in self.checks:
            if c.status != "pass":
                lines.append(f"  [{c.status}] {c.id} ({c.severity}): {c.message}")
        if self.solver_note:
            lines.append(f"  note: {self.solver_note}")
        return "\n".join(lines)

    def category_csv(self) -> str:
        """One row per (layer, category) with pass/warn/fail counts."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["layer", "category", *STATUSES])
        for layer in LAYERS:
            counts: dict[str, dict[str, int]] = {}
            for c in self.layers[layer]:
                counts.setdefault(c.category, dict.fromkeys(STATUSES, 0))[c.status] += 1
            for cat, row in counts.items():
                writer.writerow([layer, cat, *(row[s] for s in STATUSES)])
        return buf.getvalue()


def full_audit(
    program: HeuristicProgram,
    source: str | None = None,
    timeout: float = DEFAULT_TIMEOUT,
    command=None,
    artifacts=None,
    seed: int = 0,
    n_random: int = N_RANDOM,
    jobs: int = 4,
) -> AuditReport:
    """Layers 1 to 5 in order; solver trouble degrades layer 4, never aborts."""
    start = time.perf_counter()
    timings = {}
    text = source if source is not None else (program.source or pretty(program))

    t = time.perf_counter()
    iv = interval_eval(program)
    lint = run_lints(text, program, iv)
    timings["lint"] = time.perf_counter() - t

    t = time.perf_counter()
    ranges = range_checks(iv)
    timings["interval"] = time.perf_counter() - t

    catalog = [
        {"id": s.id, "category": s.category, "severity": s.severity, "description": s.description, "method": s.preferred_method}
        for s in CATALOG
    ]

    t = time.perf_counter()
    verdicts = verify_all(program, SOLVER_SPECS, timeout=timeout, command=command, artifacts=artifacts, jobs=jobs)
    timings["verify"] = time.perf_counter() - t
    note = None
    if any(v.reason and v.reason.startswith("solver unavailable") for v in verdicts):
        note = verdicts[0].reason
    spec_of = {s.id: s for s in SOLVER_SPECS}
    verify_rows = [verify_check(v, spec_of[v.spec_id].severity, spec_of[v.spec_id].category) for v in verdicts]
    deferred = [v.spec_id for v in verdicts if v.verdict in HANDED_OVER]

    t = time.perf_counter()
    inputs = pbt_inputs(seed, n_random)
    pbt = run_pbt(program, inputs, deferred, seed=seed)
    timings["pbt"] = time.perf_counter() - t

    return AuditReport(
        program=program.origin,
        layers={"lint": lint, "interval": ranges, "verify": verify_rows, "pbt": pbt},
        catalog=catalog,
        verdicts=verdicts,
        deferred=deferred,
        n_inputs=len(inputs),
        solver_note=note,
        wall_time=time.perf_counter() - start,
        timings=timings,
    )
