from __future__ import annotations

from dataclasses import asdict, dataclass, replace

from ..domain import INPUT_KEYS, INPUT_RANGES, max_valid_hr_index


@dataclass(frozen=True)
class ProcessState:
    current_thickness: float  # mm
    target_thickness: float  # mm
    current_grain_size: float  # um
    target_grain_size: float  # um
    stock_temperature: float  # K
    target_temperature: float  # K
    rolling_force: float  # N
    rolling_torque: float  # N*m
    hr_limit: float  # mm
    step_count: int

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def with_(self, **changes) -> "ProcessState":
        return replace(self, **changes)

    @classmethod
    def from_mapping(cls, data) -> "ProcessState":
        return cls(**{k: data[k] for k in INPUT_KEYS})

    def out_of_range(self, ranges=INPUT_RANGES) -> list[str]:
        """Names of fields outside ``ranges`` (defaults to the audit ranges)."""
        bad = []
        for key in INPUT_KEYS:
            lo, hi = ranges[key]
            if not lo <= getattr(self, key) <= hi:
                bad.append(key)
        return bad


@dataclass(frozen=True)
class ActionMask:
    """Contiguous validity over the three action dimensions.

    HR index ``i`` is valid iff ``i <= max_valid_hr_idx``; interpass and
    velocity index 0 exist but are never valid.
    """

    max_valid_hr_idx: int
    interpass_valid_from: int = 1
    velocity_valid_from: int = 1

    def hr_valid(self, idx: int) -> bool:
        return 0 <= idx <= self.max_valid_hr_idx

    def hr_vector(self) -> list[bool]:
        return [i <= self.max_valid_hr_idx for i in range(501)]


def action_mask(state: ProcessState) -> ActionMask:
    return ActionMask(max_valid_hr_index(state.current_thickness, state.target_thickness, state.hr_limit))
