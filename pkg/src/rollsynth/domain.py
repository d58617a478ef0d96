"""Shared vocabulary: controller input keys, audit input ranges and action bounds."""

from __future__ import annotations

from fractions import Fraction
from types import MappingProxyType

INPUT_KEYS: tuple[str, ...] = (
    "current_thickness",
    "target_thickness",
    "hr_limit",
    "stock_temperature",
    "target_temperature",
    "current_grain_size",
    "target_grain_size",
    "rolling_force",
    "rolling_torque",
    "step_count",
)

INTEGER_INPUTS = frozenset({"step_count"})

# Verification ranges. Kept verbatim; the simulator widens thickness separately.
INPUT_RANGES: MappingProxyType[str, tuple[Fraction, Fraction]] = MappingProxyType(
    {
        "current_thickness": (Fraction(5), Fraction(110)),
        "target_thickness": (Fraction(5), Fraction(15)),
        "hr_limit": (Fraction(20), Fraction(50)),
        "stock_temperature": (Fraction(800), Fraction(1523)),
        "target_temperature": (Fraction(1073), Fraction(1273)),
        "current_grain_size": (Fraction(5), Fraction(500)),
        "target_grain_size": (Fraction(5), Fraction(25)),
        "rolling_force": (Fraction(-100), Fraction(4_000_000)),
        "rolling_torque": (Fraction(-100), Fraction(130_000)),
        "step_count": (Fraction(0), Fraction(25)),
    }
)

MASK_INDEX = "max_valid_hr_idx"
MASK_FLAGS: tuple[str, ...] = ("interpass_zero_valid", "velocity_zero_valid")

HR_LEVELS = 501
INTERPASS_LEVELS = 121
VELOCITY_LEVELS = 7

# Index ranges accepted by the return coercion.
INDEX_BOUNDS: tuple[tuple[int, int], ...] = ((0, 500), (0, 120), (0, 6))
# Ranges a well-behaved controller is expected to stay inside (index 0 is
# masked for interpass and velocity).
ACTION_BOUNDS: tuple[tuple[int, int], ...] = ((0, 500), (1, 120), (1, 6))
OUTPUT_NAMES: tuple[str, ...] = ("hr_idx", "interpass_idx", "velocity_idx")

THIN_PASS_RATIO = Fraction(7, 10)
MAX_PASSES = 25
FORCE_SENTINEL = -100.0


def exact(value) -> Fraction:
    """Exact rational for a number, reading floats by their shortest repr.

    ``exact(10.1) - exact(10.0)`` is exactly ``1/10``; this is what lets
    hand arithmetic, the interpreter and the solver agree.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(repr(float(value)))


def max_valid_hr_index(current_thickness, target_thickness, hr_limit) -> int:
    """Largest valid HR index: floor(10 * min(limit, 0.7*h, h - target)) in [0, 500]."""
    h = exact(current_thickness)
    allowed = min(exact(hr_limit), THIN_PASS_RATIO * h, h - exact(target_thickness))
    return max(0, min(HR_LEVELS - 1, (allowed * 10).__floor__()))
