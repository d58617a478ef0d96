from __future__ import annotations

import json
import zlib
from fractions import Fraction

import numpy as np
import pytest

from _support import sample_env_inputs
from rollsynth.audit import (
    CATALOG,
    LINT_CATEGORIES,
    SOLVER_SPECS,
    SPECS,
    CheckResult,
    Interval,
    SolverUnavailable,
    edge_cases,
    full_audit,
    input_intervals,
    interval_eval,
    pbt_inputs,
    random_inputs,
    range_checks,
    run_lints,
    run_pbt,
    solver_run,
    translate,
    translated_outputs,
    validate_counterexample,
    verify_all,
    verify_spec,
)
from rollsynth.audit.solver import parse_sexprs, value_of
from rollsynth.audit.specs import relation_holds, returned_indices, run_indices, safety_holds
from rollsynth.corpus import load_corpus
from rollsynth.domain import INPUT_KEYS, INPUT_RANGES
from rollsynth.heurlang import RuntimeNumericError, evaluate_raw, parse

NO_SOLVER = "rollsynth-missing-solver-binary"


@pytest.fixture(scope="module")
def corpus():
    return load_corpus()


def _p(text: str):
    return parse(text)


# ---------------------------------------------------------------- lints


def test_lint_count_and_categories(corpus):
    for name, program in corpus.items():
        checks = run_lints(program.source, program)
        assert len(checks) == 29, name
        assert len({c.id for c in checks}) == 29
        assert {c.category for c in checks} == set(LINT_CATEGORIES)


def test_lints_deterministic(corpus):
    p = corpus["decoupled"]
    assert run_lints(p.source, p) == run_lints(p.source, p)


def test_constant_program_fails_control_logic():
    p = _p("return (0, 1, 1)\n")
    failing = {c.id for c in run_lints(p.source, p) if c.category == "control-logic" and c.status != "pass"}
    assert "CTL-001" in failing


def test_baseline_security_passes(corpus):
    p = corpus["baseline"]
    sec = [c for c in run_lints(p.source, p) if c.category == "security"]
    assert sec and all(c.status == "pass" for c in sec)


def test_unguarded_division_warns(corpus):
    p = corpus["unguarded_division"]
    div = {c.id: c for c in run_lints(p.source, p) if c.category == "division"}
    assert div["DIV-001"].status == "warn"
    assert div["DIV-001"].severity == "warning"


def test_guarded_division_passes():
    p = _p(
        "let remaining = current_thickness - target_thickness\n"
        "let hr = if remaining > 0 then 40 / remaining else 0\n"
        "return (clip(hr, 0, max_valid_hr_idx), 10, 3)\n"
    )
    div = {c.id: c for c in run_lints(p.source, p) if c.category == "division"}
    assert div["DIV-001"].status == "pass"


def test_severity_mapping(corpus):
    for program in corpus.values():
        for c in run_lints(program.source, program):
            if c.category in ("security", "structural"):
                assert c.severity == "error"
            if c.category in ("control-logic", "division"):
                assert c.severity in ("warning", "info")


def test_check_result_round_trip():
    c = CheckResult("X-1", "mask", "warning", "warn", "m", (1, 2), {"a": 1})
    assert CheckResult.from_dict(json.loads(json.dumps(c.to_dict()))) == c
    with pytest.raises(ValueError):
        CheckResult("X", "mask", "fatal", "warn", "m")


# ---------------------------------------------------------------- intervals


def test_input_intervals_match_table():
    env = input_intervals()
    for key in INPUT_KEYS:
        assert (env[key].lo, env[key].hi) == INPUT_RANGES[key]
    assert (env["rolling_force"].lo, env["rolling_force"].hi) == (Fraction(-100), Fraction(4_000_000))


def test_remaining_interval_anchor():
    p = _p("let remaining = current_thickness - target_thickness\nreturn (0, 1, 1)\n")
    r = interval_eval(p).env["remaining"]
    assert (r.lo, r.hi) == (-10, 105)


def test_clip_and_branch_union():
    p = _p(
        "let x = (current_thickness - target_thickness) * 10\n"
        "let c = clip(x, 0, 500)\n"
        "let b = if current_thickness > 50 then 3 else 7\n"
        "return (c, b, 1)\n"
    )
    res = interval_eval(p)
    assert (res.env["x"].lo, res.env["x"].hi) == (-100, 1050)
    assert (res.env["c"].lo, res.env["c"].hi) == (0, 500)
    assert (res.env["b"].lo, res.env["b"].hi) == (3, 7)


def test_division_by_zero_range_widens():
    p = _p("let r = current_thickness - target_thickness\nlet q = 1 / r\nreturn (0, 1, 1)\n")
    res = interval_eval(p)
    q = res.env["q"]
    assert q.may_be_nan or (q.lo == -float("inf") and q.hi == float("inf"))
    assert any(f.kind == "division-by-zero-range" for f in res.findings)


def test_range_checks_pass_and_warn():
    ok = _p("return (clip(int_trunc((current_thickness - target_thickness) * 10), 0, 500), 20, 3)\n")
    assert all(c.status == "pass" for c in range_checks(interval_eval(ok))[:3])
    wide = _p("return (int_trunc((current_thickness - target_thickness) * 10) - 100, 20, 3)\n")
    checks = {c.id: c for c in range_checks(interval_eval(wide))}
    assert checks["RNG-001"].status == "warn"
    const = _p("return (0, 1, 1)\n")
    assert all(c.status == "pass" for c in range_checks(interval_eval(const))[:3])
    assert len(range_checks(interval_eval(const))) == 9


def test_monotone_widening(corpus):
    narrow = dict(INPUT_RANGES)
    narrow["current_thickness"] = (Fraction(20), Fraction(60))
    narrow["stock_temperature"] = (Fraction(1000), Fraction(1200))
    for name, p in corpus.items():
        wide_res, narrow_res = interval_eval(p), interval_eval(p, narrow)
        for a, b in zip(narrow_res.outputs, wide_res.outputs):
            assert b.lo <= a.lo and a.hi <= b.hi, name
        for var, iv in narrow_res.env.items():
            w = wide_res.env[var]
            assert w.lo <= iv.lo and iv.hi <= w.hi, (name, var)


def test_interval_soundness_sample(corpus):
    # the full 10^4 sweep lives in the acceptance suite
    from _support import interval_fuzz

    violations, runs, _, examples = interval_fuzz(corpus, n=500, seed=11)
    assert violations == 0, examples
    assert runs > 0


# ---------------------------------------------------------------- solver


def test_solver_trivial_scripts():
    assert solver_run("(assert false)").status == "unsat"
    res = solver_run("(declare-const x Real)\n(assert (> x 0.0))", ["x"])
    assert res.status == "sat" and res.model["x"] > 0
    with pytest.raises(SolverUnavailable):
        solver_run("(assert true)", command=NO_SOLVER)


def test_sexpr_parsing():
    (tree,) = parse_sexprs("((x (- (/ 1.0 4.0))) (k 3) (b true))")
    values = {k: value_of(v) for k, v in tree}
    assert values == {"x": Fraction(-1, 4), "k": 3, "b": True}


def test_translation_marks_untranslatable_outputs(corpus):
    t = translate(corpus["exp_interpass"], "a_")
    assert t.outputs[0] is not None and t.outputs[2] is not None
    assert t.outputs[1] is None and "exp" in t.reasons[1]
    t = translate(_p("return (clip(int_trunc((current_thickness - target_thickness) * 10), 0, 500), 1, 1)\n"), "")
    assert all(o is not None for o in t.outputs)


def test_one_sided_ln_branch_is_excluded():
    p = _p(
        "let g = if current_grain_size > 100 then ln(current_grain_size) else 2\n"
        "return (clip(int_trunc(g * 10), 0, max_valid_hr_idx), 10, 3)\n"
    )
    t = translate(p, "")
    assert t.outputs[0] is None
    res = verify_spec(p, SPECS["SPEC-001"])
    assert res.verdict == "deferred"


@pytest.mark.parametrize(
    "name", ["baseline", "mask_respecting", "monotone_hr", "exp_interpass", "velocity_inversion", "thickness_jump"]
)
def test_translation_agrees_with_interpreter(corpus, name):
    program = corpus[name]
    inputs = sample_env_inputs(150, seed=zlib.crc32(name.encode()))
    inputs += [({k: Fraction(t.state.as_dict()[k]).limit_denominator(10**9) for k in INPUT_KEYS}, t.mask.max_valid_hr_idx) for t in edge_cases()]
    states = [s for s, _ in inputs]
    got = translated_outputs(program, states)
    for (state, mask), sym in zip(inputs, got):
        concrete = returned_indices(evaluate_raw(program, state, mask))
        assert sym is not None
        for c, s in zip(concrete, sym):
            if s is not None:
                assert c == s, (name, state)


def test_mask_respecting_proves_safety(corpus):
    v = {r.spec_id: r for r in verify_all(corpus["mask_respecting"])}
    assert all(v[s].verdict == "proved" for s in ("SPEC-001", "SPEC-002", "SPEC-003"))


def test_constant_500_counterexample(corpus):
    p = corpus["overshoot_const"]
    res = verify_spec(p, SPECS["SPEC-001"])
    assert res.verdict == "counterexample"
    cex = res.counterexample
    assert cex["current_thickness"] - cex["target_thickness"] < 50
    assert validate_counterexample(p, cex, SPECS["SPEC-001"])


def test_validate_rejects_non_violation(corpus):
    p = corpus["overshoot_const"]
    state = {k: INPUT_RANGES[k][1] for k in INPUT_KEYS}
    state["target_thickness"] = Fraction(5)
    assert not validate_counterexample(p, state, SPECS["SPEC-001"])  # 105 mm remaining: no overshoot
    out_of_range = dict(state, current_thickness=Fraction(500))
    assert not validate_counterexample(p, out_of_range, SPECS["SPEC-001"])


def test_relational_counterexamples_validate(corpus):
    res = verify_spec(corpus["unguarded_division"], SPECS["SPEC-004"])
    assert res.verdict == "counterexample"
    assert validate_counterexample(corpus["unguarded_division"], res.counterexample, SPECS["SPEC-004"])
    res = verify_spec(corpus["velocity_inversion"], SPECS["SPEC-006"])
    assert res.verdict == "counterexample"
    assert res.counterexample["a"]["rolling_force"] < 1000 or res.counterexample["b"]["rolling_force"] < 1000
    assert validate_counterexample(corpus["velocity_inversion"], res.counterexample, SPECS["SPEC-006"])


def test_step_velocity_proves_spec_006():
    p = _p("let v = if rolling_force > 2800000 then 2 else 5\nreturn (0, 10, v)\n")
    res = verify_spec(p, SPECS["SPEC-006"])
    assert res.verdict == "proved" and res.method == "two-translation"


def test_monotone_hr_two_translation(corpus):
    res = verify_spec(corpus["monotone_hr"], SPECS["SPEC-004"])
    assert (res.verdict, res.method) == ("proved", "two-translation")


def test_deferral_is_per_output(corpus):
    v = {r.spec_id: r.verdict for r in verify_all(corpus["exp_interpass"])}
    assert [s for s, verdict in v.items() if verdict == "deferred"] == ["SPEC-005"]
    v = {r.spec_id: r for r in verify_all(corpus["decoupled"])}
    assert {s for s, r in v.items() if r.verdict == "deferred"} == {"SPEC-001", "SPEC-002", "SPEC-003", "SPEC-004"}
    assert "exp" in v["SPEC-001"].reason


def test_every_spec_gets_one_verdict(corpus):
    for program in corpus.values():
        results = verify_all(program)
        assert [r.spec_id for r in results] == [s.id for s in SOLVER_SPECS]
        assert all(r.verdict in ("proved", "counterexample", "deferred", "unknown") for r in results)
        for r in results:
            if r.verdict == "counterexample":
                assert validate_counterexample(program, r.counterexample, SPECS[r.spec_id])


def test_missing_solver_defers_everything(corpus):
    results = verify_all(corpus["baseline"], command=NO_SOLVER)
    assert all(r.verdict == "deferred" and "unavailable" in r.reason for r in results)


def test_artifacts_written(tmp_path, corpus):
    verify_all(corpus["baseline"], artifacts=tmp_path)
    scripts = sorted(tmp_path.glob("*.smt2"))
    assert len(scripts) == len(SOLVER_SPECS)
    text = scripts[0].read_text()
    assert "(check-sat)" in text and "(set-option :timeout 10000)" in text


def _pair(rng, state, key):
    lo, hi = (float(x) for x in INPUT_RANGES[key])
    a, b = sorted(rng.uniform(lo, hi, 2))
    hi_state, lo_state = dict(state), dict(state)
    hi_state[key], lo_state[key] = Fraction(b), Fraction(a)
    if key == "current_thickness":
        floor = float(state["target_thickness"])
        a, b = sorted(rng.uniform(floor, hi, 2))
        hi_state[key], lo_state[key] = Fraction(b), Fraction(a)
    return hi_state, lo_state


@pytest.mark.parametrize("name", ["baseline", "mask_respecting", "monotone_hr", "exp_interpass", "thickness_jump"])
def test_proofs_are_sound_on_samples(corpus, name):
    """Every proved spec survives 10^4 concrete inputs (pairs for relational specs)."""
    program = corpus[name]
    proved = [SPECS[r.spec_id] for r in verify_all(program) if r.verdict == "proved"]
    assert proved
    rng = np.random.default_rng(5)
    inputs = sample_env_inputs(10_000, seed=17)
    for state, _ in inputs:
        out = run_indices(program, state)
        for spec in proved:
            if spec.relational:
                continue
            assert out is None or safety_holds(spec, state, out), (spec.id, state)
    for spec in (s for s in proved if s.relational):
        (key,) = spec.varied
        for state, _ in inputs[:10_000]:
            a, b = _pair(rng, state, key)
            out_a, out_b = run_indices(program, a), run_indices(program, b)
            if out_a is not None and out_b is not None:
                assert relation_holds(spec, out_a, out_b), (spec.id, a, b)


# ---------------------------------------------------------------- property testing


def test_input_counts_and_determinism():
    inputs = pbt_inputs(seed=4)
    assert len(inputs) == 207
    assert inputs == pbt_inputs(seed=4)
    assert random_inputs(200, 1) == random_inputs(200, 1)
    assert random_inputs(200, 1) != random_inputs(200, 2)
    with pytest.raises(ValueError):
        random_inputs(0)


def test_random_inputs_cover_ranges():
    inputs = random_inputs(200, seed=0)
    for t in inputs:
        assert t.state.current_thickness >= t.state.target_thickness
    for key in INPUT_KEYS:
        lo, hi = (float(x) for x in INPUT_RANGES[key])
        values = [float(getattr(t.state, key)) for t in inputs]
        if key == "current_thickness":
            continue  # the rejection step skews the low end
        assert (max(values) - min(values)) / (hi - lo) >= 0.9, key


def test_edge_case_anchors():
    edges = {t.label: t for t in edge_cases()}
    assert len(edges) == 7
    assert edges["edge:near_target"].state.current_thickness == 10.1
    assert edges["edge:near_target"].state.target_thickness == 10.0
    assert edges["edge:force_sentinel"].state.rolling_force == -100
    assert edges["edge:tight_mask"].mask.max_valid_hr_idx == 5
    assert edges["edge:max_state"].state.current_thickness == 110


def test_baseline_clean(corpus):
    checks = run_pbt(corpus["baseline"], pbt_inputs())
    basic = [c for c in checks if c.id.startswith("PBT-")]
    assert len(basic) == 6 and all(c.status == "pass" for c in basic)
    assert not [c for c in checks if c.is_error]


def test_velocity_zero_fails_pbt_005():
    p = _p("return (0, 10, 0)\n")
    checks = {c.id: c for c in run_pbt(p, pbt_inputs())}
    assert checks["PBT-005"].status == "fail"
    assert checks["PBT-005"].witness is not None


def test_runtime_fault_caught():
    p = _p("let x = 1 / (current_thickness - target_thickness)\nreturn (0, 10, 3)\n")
    checks = {c.id: c for c in run_pbt(p, pbt_inputs())}
    # equal thickness only occurs in the min-state edge case
    assert checks["PBT-001"].status == "fail"
    assert checks["PBT-001"].witness["label"] == "edge:min_state"


def test_continuity_witness_pair():
    p = _p(
        "let hr = if current_thickness > 50 then 130 else 100\n"
        "return (clip(hr, 0, max_valid_hr_idx), 10, 3)\n"
    )
    # one perturbation step across 50 mm must flag the 30-index jump
    checks = {c.id: c for c in run_pbt(p, pbt_inputs(n_random=2000))}
    assert checks["SPEC-011"].status == "warn"
    w = checks["SPEC-011"].witness
    assert {"a", "b"} <= set(w)


def test_responsiveness_and_determinism_specs(corpus):
    checks = {c.id: c for c in run_pbt(corpus["constant"], pbt_inputs())}
    assert checks["SPEC-007"].status == "warn"
    assert checks["SPEC-010"].status == "pass"
    checks = {c.id: c for c in run_pbt(corpus["baseline"], pbt_inputs())}
    assert checks["SPEC-007"].status == "pass"


def test_mask_violation_fails_pbt_006(corpus):
    checks = {c.id: c for c in run_pbt(corpus["overshoot_const"], pbt_inputs())}
    assert checks["PBT-006"].status == "fail"


# ---------------------------------------------------------------- report


def test_report_totals_consistent(corpus):
    report = full_audit(corpus["decoupled"])
    t = report.totals
    assert t["checks"] == len(report.checks) == 29 + 9 + 6 + 17
    assert t["pass"] + t["warn"] + sum(c.status == "fail" for c in report.checks) == t["checks"]
    assert sum(report.layer_totals(layer)["checks"] for layer in report.layers) == t["checks"]
    assert t["errors"] == 0


def test_report_traceability(corpus):
    report = full_audit(corpus["decoupled"])
    verify_ids = {c.id for c in report.layers["verify"]}
    pbt = {c.id: c for c in report.layers["pbt"]}
    assert report.deferred == ["SPEC-001", "SPEC-002", "SPEC-003", "SPEC-004"]
    for link in report.traceability():
        assert link["spec"] in verify_ids and link["spec"] in pbt
    for sid in report.deferred:
        assert "deferred from solver" in pbt[sid].message


def test_report_is_reproducible(corpus):
    a = full_audit(corpus["baseline"], seed=3).to_json(timings=False)
    b = full_audit(corpus["baseline"], seed=3).to_json(timings=False)
    assert a == b
    data = json.loads(a)
    assert data["totals"]["checks"] == 61


def test_report_text_and_csv(corpus):
    report = full_audit(corpus["overshoot_const"])
    assert report.totals["errors"] > 0
    assert {c.id for c in report.errors} >= {"SPEC-001", "PBT-006"}
    assert "SPEC-001" in report.text_table()
    rows = report.category_csv().strip().splitlines()
    assert rows[0] == "layer,category,pass,warn,fail"
    counts = {tuple(r.split(",")[:2]): [int(x) for x in r.split(",")[2:]] for r in rows[1:]}
    assert counts[("verify", "safety")][2] == 2  # SPEC-001 and SPEC-002
    assert sum(sum(v) for v in counts.values()) == report.totals["checks"]


def test_report_without_solver(corpus):
    report = full_audit(corpus["decoupled"], command=NO_SOLVER)
    assert report.solver_note and "unavailable" in report.solver_note
    assert report.deferred == [s.id for s in SOLVER_SPECS]
    assert report.totals["errors"] == 0


def test_constant_program_has_no_safety_errors(corpus):
    report = full_audit(corpus["constant"])
    assert not [c for c in report.errors if c.category == "safety"]
    assert any(c.category == "control-logic" and c.status != "pass" for c in report.checks)


def test_audit_never_reads_rewards():
    import pathlib

    import rollsynth.audit as audit_pkg

    root = pathlib.Path(audit_pkg.__file__).parent
    for path in root.glob("*.py"):
        text = path.read_text()
        assert "rollsim.env" not in text and "reward" not in text.lower(), path.name


def test_catalog_matches_table():
    assert [s.id for s in CATALOG] == [f"SPEC-{i:03d}" for i in range(1, 12)]
    assert [s.id for s in SOLVER_SPECS] == [f"SPEC-00{i}" for i in range(1, 7)]
    assert SPECS["SPEC-004"].direction == ">=" and SPECS["SPEC-005"].direction == "<="
    assert SPECS["SPEC-010"].severity == "error"


def test_runtime_fault_types():
    p = _p("let x = ln(current_thickness - target_thickness)\nreturn (0, 10, 3)\n")
    with pytest.raises(RuntimeNumericError):
        evaluate_raw(p, {k: INPUT_RANGES[k][0] for k in INPUT_KEYS})
