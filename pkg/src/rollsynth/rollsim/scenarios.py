"""Search-feedback catalog (8 scenarios) and held-out grid (81 scenarios).

Both vary four axes: thickness specification, target grain size, HR limit
and target temperature offset around a nominal 1173 K. The search catalog is
the 2^(4-1) half fraction with the temperature level set by parity of the
other three, so every axis appears at both levels four times. The grid is the
full 3^4 product with each axis's midpoint added as a third level.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from types import MappingProxyType

NOMINAL_TEMPERATURE = 1173.0
INITIAL_TEMPERATURE = 1373.0
INITIAL_GRAIN = 80.0

# Admissible scenario ranges. Initial thickness is wider than the audit range
# (110 mm) so that the 120 mm specification is representable.
SCENARIO_RANGES = MappingProxyType(
    {
        "initial_thickness": (5.0, 125.0),
        "target_thickness": (5.0, 15.0),
        "target_grain": (5.0, 25.0),
        "hr_limit": (20.0, 50.0),
        "target_temperature": (1073.0, 1273.0),
        "initial_temperature": (800.0, 1523.0),
        "initial_grain": (5.0, 500.0),
    }
)

THICKNESS_LEVELS = ((80.0, 12.0), (120.0, 8.0))
GRAIN_LEVELS = (10.0, 15.0)
HR_LEVELS = (50.0, 20.0)
TEMPERATURE_OFFSETS = (-50.0, 50.0)

GRID_THICKNESS = ((80.0, 12.0), (100.0, 10.0), (120.0, 8.0))
GRID_GRAIN = (10.0, 12.5, 15.0)
GRID_HR = (20.0, 35.0, 50.0)
GRID_TEMPERATURE_OFFSETS = (-50.0, 0.0, 50.0)


class InvalidScenario(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    initial_thickness: float
    target_thickness: float
    target_grain: float
    hr_limit: float
    target_temperature: float
    initial_temperature: float = INITIAL_TEMPERATURE
    initial_grain: float = INITIAL_GRAIN

    def validate(self) -> "ScenarioSpec":
        for name, (lo, hi) in SCENARIO_RANGES.items():
            value = getattr(self, name)
            if not lo <= value <= hi:
                raise InvalidScenario(f"{self.id}: {name}={value} outside [{lo}, {hi}]")
        if self.initial_thickness < self.target_thickness:
            raise InvalidScenario(f"{self.id}: initial thickness below target")
        return self


def _make(thickness, grain, hr, offset) -> ScenarioSpec:
    h0, h1 = thickness
    sid = f"{h0:g}to{h1:g}-g{grain:g}-hr{hr:g}-T{offset:+g}"
    return ScenarioSpec(sid, h0, h1, grain, hr, NOMINAL_TEMPERATURE + offset).validate()


def search_scenarios() -> list[ScenarioSpec]:
    out = []
    for a, b, c in itertools.product((0, 1), repeat=3):
        d = a ^ b ^ c
        out.append(_make(THICKNESS_LEVELS[a], GRAIN_LEVELS[b], HR_LEVELS[c], TEMPERATURE_OFFSETS[d]))
    return out


def heldout_grid() -> list[ScenarioSpec]:
    return [
        _make(t, g, h, o)
        for t, g, h, o in itertools.product(GRID_THICKNESS, GRID_GRAIN, GRID_HR, GRID_TEMPERATURE_OFFSETS)
    ]


def dump_catalog(scenarios, path: str | Path) -> None:
    Path(path).write_text(json.dumps([asdict(s) for s in scenarios], indent=2) + "\n")


def load_catalog(path: str | Path) -> list[ScenarioSpec]:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list):
        raise InvalidScenario("scenario catalog must be a JSON array")
    return [ScenarioSpec(**item).validate() for item in data]
