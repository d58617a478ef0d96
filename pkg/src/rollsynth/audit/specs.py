"""The eleven domain specifications and their concrete (execution) predicates.

Every property is stated over the indices a program *returns*, truncated
toward zero but not clipped: the audit judges the controller, not the
runtime's defensive coercion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ..domain import exact
from ..heurlang import RuntimeNumericError, evaluate_raw


@dataclass(frozen=True)
class DomainSpec:
    id: str
    category: str  # safety | monotonicity | responsiveness | consistency
    severity: str  # error | warning | info
    description: str
    preferred_method: str  # solver | two-translation | execution
    output: int | None = None  # index into (hr, interpass, velocity)
    varied: tuple[str, ...] = ()
    # relational specs: when varied input grows, output must be ">=" or "<="
    direction: str | None = None

    @property
    def solver_amenable(self) -> bool:
        return self.preferred_method != "execution"

    @property
    def relational(self) -> bool:
        return self.direction is not None


CATALOG: tuple[DomainSpec, ...] = (
    DomainSpec("SPEC-001", "safety", "error", "hr_idx / 10 <= current_thickness - target_thickness", "solver", 0),
    DomainSpec("SPEC-002", "safety", "error", "hr_idx / 10 <= hr_limit", "solver", 0),
    DomainSpec("SPEC-003", "safety", "error", "hr_idx >= 0", "solver", 0),
    DomainSpec(
        "SPEC-004", "monotonicity", "warning", "thicker stock gives no smaller hr_idx", "two-translation", 0,
        ("current_thickness",), ">=",
    ),
    DomainSpec(
        "SPEC-005", "monotonicity", "info", "smaller grain gives no shorter interpass wait", "solver", 1,
        ("current_grain_size",), "<=",
    ),
    DomainSpec(
        "SPEC-006", "monotonicity", "info", "higher force gives no higher velocity", "two-translation", 2,
        ("rolling_force",), "<=",
    ),
    DomainSpec("SPEC-007", "responsiveness", "warning", "hr_idx varies with thickness", "execution", 0, ("current_thickness",)),
    DomainSpec(
        "SPEC-008", "responsiveness", "warning", "interpass varies with temperature or grain size", "execution", 1,
        ("stock_temperature", "current_grain_size"),
    ),
    DomainSpec(
        "SPEC-009", "responsiveness", "info", "velocity varies with force or temperature", "execution", 2,
        ("rolling_force", "stock_temperature"),
    ),
    DomainSpec("SPEC-010", "consistency", "error", "identical inputs give identical outputs", "execution"),
    DomainSpec("SPEC-011", "consistency", "warning", "small input changes give small output changes", "execution"),
)

SPECS = {s.id: s for s in CATALOG}
SOLVER_SPECS = tuple(s for s in CATALOG if s.solver_amenable)


def returned_indices(raw) -> tuple[int, int, int]:
    return tuple(int(math.trunc(v)) for v in raw)


def run_indices(program, state) -> tuple[int, int, int] | None:
    """Returned indices, or None when the program faults on ``state``."""
    try:
        return returned_indices(evaluate_raw(program, state))
    except RuntimeNumericError:
        return None


def safety_holds(spec: DomainSpec, state, out: tuple[int, int, int]) -> bool:
    """``state`` is a mapping over the input keys."""
    hr = Fraction(out[0])
    if spec.id == "SPEC-001":
        return hr / 10 <= exact(state["current_thickness"]) - exact(state["target_thickness"])
    if spec.id == "SPEC-002":
        return hr / 10 <= exact(state["hr_limit"])
    if spec.id == "SPEC-003":
        return hr >= 0
    raise ValueError(spec.id)


def relation_holds(spec: DomainSpec, out_a, out_b) -> bool:
    """``a`` is the run with the larger varied input."""
    i = spec.output
    return out_a[i] >= out_b[i] if spec.direction == ">=" else out_a[i] <= out_b[i]
