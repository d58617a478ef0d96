from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rollsynth.corpus import corpus_paths, load_corpus
from rollsynth.heurlang import (
    DslSyntaxError,
    ForbiddenConstruct,
    LexError,
    MissingReturnPath,
    RuntimeNumericError,
    SourceUnit,
    UnknownIdentifier,
    evaluate,
    evaluate_raw,
    free_inputs,
    parse,
    pretty,
)
from rollsynth.rollsim import ActionMask, ProcessState

NOMINAL = dict(
    current_thickness=80.0,
    target_thickness=12.0,
    hr_limit=20.0,
    stock_temperature=1373.0,
    target_temperature=1173.0,
    current_grain_size=80.0,
    target_grain_size=10.0,
    rolling_force=-100.0,
    rolling_torque=-100.0,
    step_count=0,
)


def state(**changes):
    return ProcessState(**{**NOMINAL, **changes})


def test_constant_program():
    p = parse("return (0, 1, 1)")
    assert evaluate(p, state()) == (0, 1, 1)
    assert free_inputs(p) == frozenset()
    assert p.referenced_inputs == frozenset()
    assert not p.uses_mask


def test_baseline_references_and_first_pass():
    p = load_corpus()["baseline"]
    assert p.referenced_inputs >= {
        "current_thickness",
        "target_thickness",
        "hr_limit",
        "stock_temperature",
        "target_temperature",
    }
    assert "stock_temperature" in free_inputs(p)
    # 80% of 20 mm -> 16.0 mm -> index 160; 200 K too hot -> slowest level
    assert evaluate(p, state()) == (160, 10, 1)


def test_thin_remaining_is_exact():
    p = parse("let r = current_thickness - target_thickness; return (int_trunc(r*10), 1, 1)")
    assert evaluate(p, state(current_thickness=10.1, target_thickness=10.0)) == (1, 1, 1)


def test_guarded_division_parses():
    p = parse("if false then\n let x = 1 / 0\n return (x, 1, 1)\nend\nreturn (0, 1, 1)")
    assert evaluate(p, state()) == (0, 1, 1)


def test_free_inputs_single_key():
    p = parse("return (0, 1, if rolling_force > 1 then 2 else 3)")
    assert free_inputs(p) == {"rolling_force"}


def test_mask_expands_to_its_inputs():
    p = parse("return (max_valid_hr_idx, 1, 1)")
    assert p.uses_mask
    assert free_inputs(p) == {"current_thickness", "target_thickness", "hr_limit"}


def test_control_dependency_counts():
    p = parse("if step_count > 3 then\n let v = 2\nelse\n let v = 3\nend\nreturn (0, 1, v)")
    assert free_inputs(p) == {"step_count"}


@pytest.mark.parametrize(
    "src, exc",
    [
        ("return (0, 1, $)", LexError),
        ("return (0, 1)", DslSyntaxError),
        ("let x = 1", MissingReturnPath),
        ("if current_thickness > 1 then\n return (0,1,1)\nend", MissingReturnPath),
        ("return (foo, 1, 1)", UnknownIdentifier),
        ("while true then end", ForbiddenConstruct),
        ("let current_thickness = 3; return (0,1,1)", ForbiddenConstruct),
        ("let max_valid_hr_idx = 3; return (0,1,1)", ForbiddenConstruct),
        ("return (true, 1, 1)", DslSyntaxError),
        ("return (clip(1, 2), 1, 1)", DslSyntaxError),
        ("return (import, 1, 1)", ForbiddenConstruct),
        ("if true then\n let y = 1\nend\nreturn (y, 1, 1)", UnknownIdentifier),
    ],
)
def test_parse_errors(src, exc):
    with pytest.raises(exc) as info:
        parse(SourceUnit(src, "case.heur"))
    err = info.value
    assert err.line >= 1 and err.col >= 1
    assert err.format().startswith("case.heur:")


def test_error_position():
    with pytest.raises(UnknownIdentifier) as info:
        parse("let a = 1\nlet b = a + nope\nreturn (a, b, 1)")
    assert (info.value.line, info.value.col) == (2, 13)


@pytest.mark.parametrize(
    "expr",
    ["1 / (current_thickness - current_thickness)", "ln(0)", "exp(10000)", "10 ** 400", "0 ** -1", "(-1) ** 0.5"],
)
def test_runtime_faults(expr):
    p = parse(f"return ({expr}, 1, 1)")
    with pytest.raises(RuntimeNumericError):
        evaluate(p, state())


def test_coercion_clips_then_truncates():
    p = parse("return (-3.7, 200.9, 6.99)")
    assert evaluate(p, state()) == (0, 120, 6)
    raw = evaluate_raw(p, state())
    assert raw == (Fraction(-37, 10), Fraction(2009, 10), Fraction(699, 100))


def test_builtins():
    p = parse(
        "return (round_half_even(2.5) + round_half_even(3.5), floor(-1.5) + ceil(1.2) + abs(-4), 7 // 2 + max(1, 2, 3) - min(4, 5))"
    )
    assert evaluate_raw(p, state()) == (6, 4, 2)


def test_mask_object_and_flags():
    p = parse("return (if interpass_zero_valid then 1 else max_valid_hr_idx, 1, 1)")
    assert evaluate(p, state(), ActionMask(42)) == (42, 1, 1)
    assert evaluate(p, state(), ActionMask(42, interpass_valid_from=0)) == (1, 1, 1)
    assert evaluate(p, state(), 7) == (7, 1, 1)
    assert evaluate(p, state()) == (200, 1, 1)


def test_short_circuit():
    p = parse("return (if false and 1 / 0 > 1 then 1 else 2, if true or ln(0) > 1 then 3 else 4, 1)")
    assert evaluate(p, state()) == (2, 3, 1)


@pytest.mark.parametrize("path", corpus_paths(), ids=lambda p: p.stem)
def test_round_trip(path):
    p = parse(path.read_text())
    again = parse(pretty(p))
    assert again.body == p.body
    assert pretty(again) == pretty(p)


finite = st.floats(min_value=0, max_value=1e6, allow_nan=False).map(lambda x: round(x, 3))


@settings(max_examples=150, deadline=None)
@given(a=finite, b=finite, c=st.sampled_from(["+", "-", "*", "/"]))
def test_printed_literals_reparse(a, b, c):
    src = f"let v = {a} {c} ({b} + 1)\nreturn (v, v, v)"
    p = parse(src)
    assert parse(pretty(p)).body == p.body


@settings(max_examples=200, deadline=None)
@given(
    x=st.floats(min_value=-1e9, max_value=1e9, allow_nan=False),
    y=st.floats(min_value=-1e9, max_value=1e9, allow_nan=False),
)
def test_coercion_in_bounds(x, y):
    p = parse(f"return ({x!r} * current_thickness, {y!r}, {x!r} - {y!r})")
    hr, ip, vel = evaluate(p, state())
    assert 0 <= hr <= 500 and 0 <= ip <= 120 and 0 <= vel <= 6


def test_determinism_over_corpus():
    for p in load_corpus().values():
        try:
            assert evaluate(p, state()) == evaluate(p, state())
        except RuntimeNumericError:
            pass
