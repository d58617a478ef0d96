"""Calibrated surrogate for one rolling pass followed by an interpass wait.

These are not the laws of any external simulator. The constants live in
``surrogate.json`` and were tuned once so that the hand-coded baseline
completes every search scenario and the monotonicity contract holds:
longer waits cool the stock, heavier drafts refine the recrystallized grain,
faster rolling raises the force.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path


@dataclass(frozen=True)
class SurrogateConstants:
    version: str
    # geometry
    width_m: float
    roll_radius_m: float
    # flow stress: K * exp(A / T) * rate ** m
    flow_k_pa: float
    flow_a_k: float
    rate_per_level: float
    rate_exponent: float
    torque_arm: float
    # thermal
    ambient_k: float
    cooling_rate: float
    deformation_heating_k: float
    contact_loss_k: float
    # microstructure
    rex_coeff_um: float
    rex_strain_threshold: float
    growth_coeff: float
    growth_activation_k: float
    # reward shaping
    step_penalty: float
    grain_progress_gain: float
    grain_undershoot_penalty: float
    grain_progress_min: float
    grain_progress_max: float
    hr_efficiency_max: float
    terminal_max: float
    grain_scale_um: float
    temperature_scale_k: float
    crash_total: float
    completion_tol_mm: float
    # equipment limits; exceedances are counted, values clamped
    force_limit_n: float
    torque_limit_nm: float

    @classmethod
    def load(cls, path: str | Path | None = None) -> "SurrogateConstants":
        if path is None:
            text = resources.files(__package__).joinpath("surrogate.json").read_text()
        else:
            text = Path(path).read_text()
        data = json.loads(text)
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown surrogate constants: {sorted(unknown)}")
        return cls(**data)


DEFAULT_CONSTANTS = SurrogateConstants.load()


@dataclass(frozen=True)
class PassOutcome:
    thickness: float
    strain: float
    force: float
    torque: float
    temperature_after_pass: float
    temperature: float  # after the interpass wait
    grain_size: float
    recrystallized_grain: float | None


def true_strain(h_in: float, draft: float) -> float:
    if draft <= 0:
        return 0.0
    return math.log(h_in / (h_in - draft))


def flow_stress(temperature: float, velocity_level: int, c: SurrogateConstants) -> float:
    rate = c.rate_per_level * velocity_level
    return c.flow_k_pa * math.exp(c.flow_a_k / temperature) * rate**c.rate_exponent


def roll_force(draft_mm: float, temperature: float, velocity_level: int, c: SurrogateConstants) -> tuple[float, float]:
    """Force (N) and torque (N*m) for a draft; zero when nothing is rolled."""
    if draft_mm <= 0:
        return 0.0, 0.0
    contact = math.sqrt(c.roll_radius_m * draft_mm / 1000.0)
    force = flow_stress(temperature, velocity_level, c) * c.width_m * contact
    return force, force * contact * c.torque_arm


def recrystallized_grain(strain: float, temperature: float, c: SurrogateConstants) -> float:
    return c.rex_coeff_um * strain**-0.5 * (temperature / 1273.0) ** 2


def cool(temperature: float, seconds: float, c: SurrogateConstants) -> float:
    return c.ambient_k + (temperature - c.ambient_k) * math.exp(-c.cooling_rate * seconds)


def grow(grain: float, seconds: float, temperature: float, c: SurrogateConstants) -> float:
    return math.sqrt(grain**2 + c.growth_coeff * seconds * math.exp(-c.growth_activation_k / temperature))


def roll_pass(
    thickness: float,
    temperature: float,
    grain: float,
    draft_mm: float,
    interpass_s: float,
    velocity_level: int,
    c: SurrogateConstants = DEFAULT_CONSTANTS,
) -> PassOutcome:
    """Unclamped transition for one pass and the wait that follows it."""
    strain = true_strain(thickness, draft_mm)
    force, torque = roll_force(draft_mm, temperature, velocity_level, c)
    t_pass = temperature
    if draft_mm > 0:
        t_pass = temperature + c.deformation_heating_k * strain - c.contact_loss_k / velocity_level
    d_rex = None
    if strain > c.rex_strain_threshold:
        d_rex = recrystallized_grain(strain, temperature, c)
        grain = 0.5 * grain + 0.5 * d_rex
    grain = grow(grain, interpass_s, t_pass, c)
    return PassOutcome(
        thickness=round(thickness - draft_mm, 9),
        strain=strain,
        force=force,
        torque=torque,
        temperature_after_pass=t_pass,
        temperature=cool(t_pass, interpass_s, c),
        grain_size=grain,
        recrystallized_grain=d_rex,
    )
