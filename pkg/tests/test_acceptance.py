"""Acceptance suite: one test per criterion, at the stated tolerances.

Each test is tagged ``@criterion(n, title)``; the conftest hook prints one
PASS/FAIL line per criterion at the end of the session.
"""

from __future__ import annotations

import inspect
import json
import math
import shutil
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from _support import interval_fuzz
from rollsynth.analysis import (
    RewardMatrix,
    best_portfolio,
    cdf_at_length,
    compose,
    exhaustive_mix,
    greedy_portfolio,
    optimal_mix,
    oracle_reward,
    uniform_plans,
)
from rollsynth.audit import (
    SOLVER_SPECS,
    SPECS,
    Interval,
    edge_cases,
    full_audit,
    interval_eval,
    pbt_inputs,
    run_pbt,
    validate_counterexample,
    verify_all,
)
from rollsynth.audit.solver import build_script
from rollsynth.audit.verify import DEFAULT_TIMEOUT
from rollsynth.cli import main as cli
from rollsynth.corpus import load_corpus
from rollsynth.domain import INPUT_KEYS, INPUT_RANGES, exact
from rollsynth.heurlang import parse
from rollsynth.rollsim import DEFAULT_CONSTANTS, ProcessState, action_mask, roll_pass, rollout, search_scenarios
from rollsynth.rollsim.physics import recrystallized_grain
from rollsynth.search import Proposal, Proposer, SearchConfig, luby, luby_schedule, run_search
from rollsynth.search.records import load_run

HAVE_SOLVER = shutil.which("z3") is not None
NO_SOLVER = "rollsynth-missing-solver-binary"


def criterion(n: int, title: str):
    def wrap(fn):
        fn.criterion = (n, title)
        return fn

    return wrap


@pytest.fixture(scope="module")
def corpus():
    return load_corpus()


# 1 ------------------------------------------------------------------------


@criterion(1, "Luby schedule exactness")
def test_ac01_luby_schedule():
    start = time.perf_counter()
    schedule = luby_schedule(5, 15)
    elapsed = time.perf_counter() - start
    assert schedule == [5, 5, 10, 5, 5, 10, 20, 5, 5, 10, 5, 5, 10, 20, 40]
    assert sum(schedule) == 160
    assert [luby(i) for i in range(1, 8)] == [1, 1, 2, 1, 1, 2, 4]
    assert elapsed < 1e-3


# 2 ------------------------------------------------------------------------


@criterion(2, "Interval anchor: remaining reduction is exactly [-10, 105]")
def test_ac02_interval_anchor():
    program = parse("let r = current_thickness - target_thickness\nreturn (0, 1, 1)\n")
    r = interval_eval(program).env["r"]
    assert (r.lo, r.hi) == (Fraction(-10), Fraction(105))
    assert r == Interval(Fraction(-10), Fraction(105))


# 3 ------------------------------------------------------------------------


@criterion(3, "Interval soundness fuzz: 10^4 inputs per corpus program, 0 escapes, < 10 s")
def test_ac03_interval_fuzz(corpus):
    assert len(corpus) >= 6
    assert {"baseline", "decoupled"} <= set(corpus)
    violators = {"overshoot_const", "unguarded_division", "velocity_inversion", "thickness_jump"} & set(corpus)
    assert len(violators) >= 3
    violations, runs, seconds, examples = interval_fuzz(corpus, n=10_000, seed=3)
    assert violations == 0, examples
    assert runs >= 6 * 10_000
    assert seconds < 10.0, f"{seconds:.2f} s"


# 4 ------------------------------------------------------------------------


def _verdicts(program, **kw):
    return {v.spec_id: v for v in verify_all(program, **kw)}


@criterion(4, "Solver layer: proofs, validated counterexample, two-translation, deferral, no-solver path")
@pytest.mark.skipif(not HAVE_SOLVER, reason="z3 binary not installed")
def test_ac04_solver_layer(corpus):
    # (a)
    v = _verdicts(corpus["mask_respecting"], timeout=DEFAULT_TIMEOUT)
    for sid in ("SPEC-001", "SPEC-002", "SPEC-003"):
        assert v[sid].verdict == "proved", (sid, v[sid])
    # (b)
    v = _verdicts(corpus["overshoot_const"], timeout=DEFAULT_TIMEOUT)
    cex = v["SPEC-001"]
    assert cex.verdict == "counterexample"
    assert validate_counterexample(corpus["overshoot_const"], cex.counterexample, SPECS["SPEC-001"])
    # (c)
    v = _verdicts(corpus["monotone_hr"], timeout=DEFAULT_TIMEOUT)
    assert v["SPEC-004"].verdict == "proved"
    assert v["SPEC-004"].method == "two-translation"
    # (d) exp only in the interpass output
    program = corpus["exp_interpass"]
    v = _verdicts(program, timeout=DEFAULT_TIMEOUT)
    deferred = {sid for sid, r in v.items() if r.verdict == "deferred"}
    assert deferred == {s.id for s in SOLVER_SPECS if s.output == 1}
    report = full_audit(program, timeout=DEFAULT_TIMEOUT)
    pbt = {c.id: c for c in report.layers["pbt"]}
    for sid in deferred:
        assert sid in report.deferred
        assert "deferred from solver" in pbt[sid].message
    # no solver: everything deferred, pipeline completes
    v = _verdicts(corpus["baseline"], command=NO_SOLVER)
    assert {r.verdict for r in v.values()} == {"deferred"}
    assert set(v) == {s.id for s in SOLVER_SPECS}
    report = full_audit(corpus["baseline"], command=NO_SOLVER)
    assert report.solver_note
    pbt = {c.id: c for c in report.layers["pbt"]}
    for s in SOLVER_SPECS:
        assert "deferred from solver" in pbt[s.id].message
    assert report.totals["checks"] == sum(len(layer) for layer in report.layers.values())


# 5 ------------------------------------------------------------------------

NOMINAL = dict(
    current_thickness=80.0,
    target_thickness=12.0,
    hr_limit=50.0,
    stock_temperature=1273.0,
    target_temperature=1173.0,
    current_grain_size=40.0,
    target_grain_size=10.0,
    rolling_force=2.0e6,
    rolling_torque=6.0e4,
    step_count=3,
)
EXPECTED_EDGES = [
    ("edge:near_target", {**NOMINAL, "current_thickness": 10.1, "target_thickness": 10.0}),
    ("edge:max_state", {k: float(INPUT_RANGES[k][1]) for k in INPUT_KEYS}),
    ("edge:min_state", {k: float(INPUT_RANGES[k][0]) for k in INPUT_KEYS}),
    ("edge:tight_mask", {**NOMINAL, "current_thickness": 10.5, "target_thickness": 10.0}),
    ("edge:force_sentinel", {**NOMINAL, "rolling_force": -100.0, "rolling_torque": -100.0, "step_count": 0}),
    ("edge:equal_grain", {**NOMINAL, "current_grain_size": 10.0, "target_grain_size": 10.0}),
    ("edge:equal_temperature", {**NOMINAL, "stock_temperature": 1173.0, "target_temperature": 1173.0}),
]


@criterion(5, "Property-testing protocol: 207 inputs, 7 edge cases, baseline clean on PBT-001..006")
def test_ac05_pbt_protocol(corpus):
    inputs = pbt_inputs(seed=0)
    assert len(inputs) == 207
    assert sum(t.label == "random" for t in inputs) == 200
    edges = edge_cases()
    assert [t.label for t in edges] == [label for label, _ in EXPECTED_EDGES]
    for t, (label, fields) in zip(edges, EXPECTED_EDGES):
        state = t.state.as_dict()
        assert set(state) == set(fields), label
        for key, value in fields.items():
            assert exact(state[key]) == exact(value), (label, key)
        assert t.mask == action_mask(t.state)
    assert edges[3].mask.max_valid_hr_idx == 5
    assert edges[0].mask.max_valid_hr_idx == 1
    basic = [c for c in run_pbt(corpus["baseline"], inputs) if c.id.startswith("PBT-")]
    assert sorted(c.id for c in basic) == [f"PBT-00{i}" for i in range(1, 7)]
    assert all(c.status == "pass" for c in basic), [c for c in basic if c.status != "pass"]


# 6 ------------------------------------------------------------------------


@criterion(6, "Decoupled best-heuristic audit: 0 errors in < 5 s, solver timeout capped at 10 s/spec")
def test_ac06_decoupled_audit(corpus):
    assert DEFAULT_TIMEOUT == 10.0
    assert inspect.signature(full_audit).parameters["timeout"].default == 10.0
    assert "(set-option :timeout 10000)" in build_script("", [], DEFAULT_TIMEOUT)
    start = time.perf_counter()
    report = full_audit(corpus["decoupled"])
    elapsed = time.perf_counter() - start
    assert report.totals["errors"] == 0, [c.to_dict() for c in report.errors]
    assert elapsed < 5.0, f"{elapsed:.2f} s"


# 7 ------------------------------------------------------------------------


@criterion(7, "Environment calibration: baseline 8/8 within 25 passes, error <= 0.05 mm; monotonicity contract")
def test_ac07_calibration(corpus):
    scenarios = search_scenarios()
    assert len(scenarios) == 8
    for s in scenarios:
        trace = rollout(corpus["baseline"], s)
        assert trace.completed, s.id
        assert trace.n_steps <= 25, s.id
        assert trace.final_thickness_error <= 0.05, s.id
    c = DEFAULT_CONSTANTS
    rng = np.random.default_rng(77)
    violations = 0
    for _ in range(1000):
        h = rng.uniform(5.5, 125.0)
        temp = rng.uniform(800.0, 1523.0)
        grain = rng.uniform(5.0, 500.0)
        draft = max(0.1, min(int(rng.integers(1, 501)) / 10, 0.7 * h))
        ip = int(rng.integers(1, 120))
        vel = int(rng.integers(1, 6))
        base = roll_pass(h, temp, grain, draft, ip, vel, c)
        violations += not roll_pass(h, temp, grain, draft, ip + 1, vel, c).temperature < base.temperature
        violations += not roll_pass(h, temp, grain, draft, ip, vel + 1, c).force > base.force
        heavier = min(draft + 0.1, 0.7 * h)
        if heavier > draft:
            e_a, e_b = math.log(h / (h - draft)), math.log(h / (h - heavier))
            violations += not recrystallized_grain(e_b, temp, c) < recrystallized_grain(e_a, temp, c)
    assert violations == 0


# 8 ------------------------------------------------------------------------


@criterion(8, "Mask semantics: boundary index equals brute force over 501 indices, 10^4 states")
def test_ac08_mask_semantics():
    rng = np.random.default_rng(88)
    for _ in range(10_000):
        t = rng.uniform(5, 15)
        s = ProcessState(
            current_thickness=rng.uniform(t, 110),
            target_thickness=t,
            current_grain_size=40.0,
            target_grain_size=10.0,
            stock_temperature=1200.0,
            target_temperature=1173.0,
            rolling_force=-100.0,
            rolling_torque=-100.0,
            hr_limit=rng.uniform(20, 50),
            step_count=0,
        )
        m = action_mask(s).max_valid_hr_idx
        h, tt, limit = exact(s.current_thickness), exact(s.target_thickness), exact(s.hr_limit)
        # exact comparison in integers: scale every quantity by 10 * d
        d = math.lcm(h.denominator, tt.denominator, limit.denominator)
        H, T, L = int(h * d), int(tt * d), int(limit * d)
        valid = [i * d <= 10 * L and 10 * i * d <= 70 * H and 10 * H - i * d >= 10 * T for i in range(501)]
        assert valid[m]
        assert all(valid[: m + 1]) and not any(valid[m + 1 :])


# 9 ------------------------------------------------------------------------


@criterion(9, "CDF algebra: composition vs Monte Carlo, optimal mix >= uniform, DP equals enumeration")
def test_ac09_cdf_algebra(synthetic_curves):
    curves = synthetic_curves
    assert len(curves) == 52
    rng = np.random.default_rng(9)
    for length in (5, 12, 25):
        base = cdf_at_length(curves, length)
        grid = sorted(set(base.values))
        samples = np.array(base.values)
        for k in (1, 2, 4):
            analytic = compose([base] * k).median
            draws = samples[rng.integers(0, len(samples), size=(100_000, k))].max(axis=1)
            mc = float(np.sort(draws)[math.ceil(0.5 * len(draws)) - 1])
            assert abs(grid.index(analytic) - grid.index(mc)) <= 1, (length, k, analytic, mc)
    for total in range(1, 31):
        opt = optimal_mix(curves, total)
        assert opt.total == total
        for plan in uniform_plans(curves, total):
            assert opt.median >= plan.median, (total, plan)
    for total in range(1, 13):
        dp, ref = optimal_mix(curves, total), exhaustive_mix(curves, total)
        assert dp.median == ref.median, total
        assert dp.lengths == ref.lengths, total


# 10 -----------------------------------------------------------------------


@criterion(10, "Portfolio: greedy curve shape and (1 - 1/e) bound against brute force")
def test_ac10_portfolio():
    bound = 1 - 1 / math.e
    for seed in range(10):
        rng = np.random.default_rng(seed)
        m = RewardMatrix.of(rng.uniform(0, 100, size=(6, 8)))
        order, curve = greedy_portfolio(m, 6)
        assert all(b >= a - 1e-12 for a, b in zip(curve, curve[1:]))
        assert curve[-1] == pytest.approx(oracle_reward(m, range(6)))
        assert curve[0] == pytest.approx(m.values.mean(axis=1).max())
        assert len(set(order)) == 6
        for k in (1, 2, 3):
            _, greedy_k = greedy_portfolio(m, k)
            _, opt = best_portfolio(m, k)
            assert greedy_k[-1] >= bound * opt - 1e-9, (seed, k)
            assert greedy_k[-1] <= opt + 1e-9


# 11 -----------------------------------------------------------------------


class _Broken(Proposer):
    name = "broken"

    def __init__(self):
        self.calls = 0

    def reset(self, seed: int) -> None:
        self.calls = 0

    def propose(self, ctx, diagnostics) -> Proposal:
        self.calls += 1
        return Proposal("return (", "unparseable")


def _monotone(values) -> bool:
    """None only as a prefix (no success yet), then non-decreasing."""
    seen = [v for v in values if v is not None]
    if values[len(values) - len(seen):] != seen:
        return False
    return all(b >= a for a, b in zip(seen, seen[1:]))


@criterion(11, "Search determinism, at most 4 proposer calls per iteration, monotone best-so-far")
def test_ac11_search_determinism(tmp_path):
    runner = CliRunner()
    files = []
    for name in ("a", "b"):
        out = tmp_path / name
        res = runner.invoke(cli, ["search", "--seed", "7", "--out", str(out)])
        assert res.exit_code == 0, res.output
        (path,) = sorted(out.glob("*.jsonl"))
        assert Path(str(path) + ".meta.json").exists()
        files.append(path)
    assert files[0].read_bytes() == files[1].read_bytes()
    record = load_run(files[0])
    assert len(record.entries) == 30
    assert 1 + SearchConfig().max_repairs == 4
    assert all(1 <= e.attempts <= 4 for e in record.entries)
    assert _monotone([e.best_so_far for e in record.entries])
    broken = _Broken()
    rec = run_search(broken, SearchConfig(iterations=3), seed=1)
    assert broken.calls == 12
    assert all(e.attempts == 4 and e.failed for e in rec.entries)
    assert [e.best_so_far for e in rec.entries] == [None, None, None]


# 12 -----------------------------------------------------------------------


@criterion(12, "End-to-end Luby campaign: 160 iterations in < 5 min, well-formed decomposition")
def test_ac12_luby_campaign(tmp_path):
    out = tmp_path / "campaign"
    start = time.perf_counter()
    res = CliRunner().invoke(cli, ["luby", "--unit", "5", "--subruns", "15", "--proposer", "mutation", "--seed", "0", "--out", str(out)])
    elapsed = time.perf_counter() - start
    assert res.exit_code == 0, res.output
    assert elapsed < 300, f"{elapsed:.1f} s"
    head = json.loads((out / "campaign.json").read_text())
    assert head["kind"] == "campaign"
    assert head["lengths"] == luby_schedule(5, 15)
    assert len(head["cumulative_best"]) == 160
    assert _monotone(head["cumulative_best"])
    total = 0
    for i, (summary, fname) in enumerate(zip(head["subruns"], head["run_files"])):
        run = load_run(out / fname)
        rewards = run.rewards
        total += len(rewards)
        assert summary["index"] == i
        assert summary["length"] == len(rewards) == head["lengths"][i]
        assert summary["first_reward"] == rewards[0]
        later = [r for r in rewards[1:] if r is not None]
        assert summary["later_best"] == (max(later) if later else None)
        finite = [r for r in rewards if r is not None]
        assert summary["best"] == (max(finite) if finite else None)
        assert all(1 <= e.attempts <= 4 for e in run.entries)
    assert total == 160
    assert head["global_best"] == max(s["best"] for s in head["subruns"] if s["best"] is not None)
