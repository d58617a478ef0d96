"""Episode mechanics: reset, step, rollout and multi-scenario evaluation."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import repeat
from typing import NamedTuple

from ..domain import MAX_PASSES, FORCE_SENTINEL
from ..heurlang import ActionTriple, HeuristicProgram, RuntimeNumericError, evaluate
from .physics import DEFAULT_CONSTANTS, SurrogateConstants, roll_pass
from .scenarios import InvalidScenario, ScenarioSpec
from .state import ActionMask, ProcessState, action_mask


@dataclass(frozen=True)
class RewardBreakdown:
    step_penalty: float = 0.0
    grain_progress: float = 0.0
    hr_efficiency: float = 0.0
    terminal_grain_accuracy: float = 0.0
    terminal_temperature_accuracy: float = 0.0

    @property
    def total(self) -> float:
        return (
            self.step_penalty
            + self.grain_progress
            + self.hr_efficiency
            + self.terminal_grain_accuracy
            + self.terminal_temperature_accuracy
        )

    def to_dict(self) -> dict[str, float]:
        return asdict(self) | {"total": self.total}


COMPONENTS = tuple(RewardBreakdown.__dataclass_fields__)


@dataclass(frozen=True)
class StepInfo:
    requested: ActionTriple
    applied: ActionTriple
    mask: ActionMask
    mask_violations: int
    constraint_violations: tuple[str, ...]


class StepOutcome(NamedTuple):
    state: ProcessState
    reward: RewardBreakdown
    done: bool
    truncated: bool
    info: StepInfo


def reset(scenario: ScenarioSpec) -> ProcessState:
    scenario.validate()
    return ProcessState(
        current_thickness=scenario.initial_thickness,
        target_thickness=scenario.target_thickness,
        current_grain_size=scenario.initial_grain,
        target_grain_size=scenario.target_grain,
        stock_temperature=scenario.initial_temperature,
        target_temperature=scenario.target_temperature,
        rolling_force=FORCE_SENTINEL,
        rolling_torque=FORCE_SENTINEL,
        hr_limit=scenario.hr_limit,
        step_count=0,
    )


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def step(state: ProcessState, action, constants: SurrogateConstants = DEFAULT_CONSTANTS) -> StepOutcome:
    """Apply one pass. Masked-out choices are clamped to the nearest valid action and counted."""
    c = constants
    requested = ActionTriple(*(int(a) for a in action))
    mask = action_mask(state)
    hr, ip, vel = requested
    violations = 0
    if hr > mask.max_valid_hr_idx or hr < 0:
        hr = _clamp(hr, 0, mask.max_valid_hr_idx)
        violations += 1
    if ip < mask.interpass_valid_from:
        ip = mask.interpass_valid_from
        violations += 1
    if vel < mask.velocity_valid_from:
        vel = mask.velocity_valid_from
        violations += 1
    ip, vel = min(ip, 120), min(vel, 6)
    applied = ActionTriple(hr, ip, vel)

    draft = hr / 10.0
    remaining = state.current_thickness - state.target_thickness
    out = roll_pass(
        state.current_thickness, state.stock_temperature, state.current_grain_size, draft, ip, vel, c
    )
    constraint = []
    force, torque = out.force, out.torque
    if force > c.force_limit_n:
        constraint.append("force")
        force = c.force_limit_n
    if torque > c.torque_limit_nm:
        constraint.append("torque")
        torque = c.torque_limit_nm
    if draft <= 0:
        force = torque = 0.0

    nxt = ProcessState(
        current_thickness=out.thickness,
        target_thickness=state.target_thickness,
        current_grain_size=_clamp(out.grain_size, 5.0, 500.0),
        target_grain_size=state.target_grain_size,
        stock_temperature=_clamp(out.temperature, 800.0, 1523.0),
        target_temperature=state.target_temperature,
        rolling_force=force,
        rolling_torque=torque,
        hr_limit=state.hr_limit,
        step_count=state.step_count + 1,
    )
    done = abs(nxt.current_thickness - nxt.target_thickness) <= c.completion_tol_mm
    truncated = not done and nxt.step_count >= MAX_PASSES

    target_grain = state.target_grain_size
    prev_err = abs(state.current_grain_size - target_grain)
    new_err = abs(nxt.current_grain_size - target_grain)
    progress = c.grain_progress_gain * max(0.0, prev_err - new_err) - c.grain_undershoot_penalty * max(
        0.0, target_grain - nxt.current_grain_size
    )
    capacity = min(state.hr_limit, remaining)
    efficiency = 0.0
    if capacity > 0:
        efficiency = _clamp(c.hr_efficiency_max * draft / capacity, 0.0, c.hr_efficiency_max)
    grain_acc = temp_acc = 0.0
    if done:
        grain_acc = c.terminal_max * max(0.0, 1 - new_err / c.grain_scale_um)
        temp_err = abs(nxt.stock_temperature - nxt.target_temperature)
        temp_acc = c.terminal_max * max(0.0, 1 - temp_err / c.temperature_scale_k)
    reward = RewardBreakdown(
        step_penalty=c.step_penalty,
        grain_progress=_clamp(progress, c.grain_progress_min, c.grain_progress_max),
        hr_efficiency=efficiency,
        terminal_grain_accuracy=grain_acc,
        terminal_temperature_accuracy=temp_acc,
    )
    info = StepInfo(requested, applied, mask, violations, tuple(constraint))
    return StepOutcome(nxt, reward, done, truncated, info)


@dataclass(frozen=True)
class StepRecord:
    state: dict[str, float]
    max_valid_hr_idx: int
    requested: tuple[int, int, int]
    applied: tuple[int, int, int]
    reward: dict[str, float]


@dataclass(frozen=True)
class EpisodeTrace:
    scenario_id: str
    steps: tuple[StepRecord, ...]
    completed: bool
    truncated: bool
    crashed: bool
    crash_message: str | None
    total_reward: float
    final_thickness_error: float
    final_grain_error: float
    final_temperature_error: float
    mask_violations: int
    constraint_violations: int
    components: dict[str, float] = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def summary(self) -> dict:
        data = asdict(self)
        del data["steps"]
        data["steps"] = self.n_steps
        return data

    def to_dict(self) -> dict:
        return asdict(self)


def rollout(
    program: HeuristicProgram, scenario: ScenarioSpec, constants: SurrogateConstants = DEFAULT_CONSTANTS
) -> EpisodeTrace:
    """Run one episode. A numeric fault in the controller ends it with the crash total."""
    state = reset(scenario)
    records: list[StepRecord] = []
    components = dict.fromkeys(COMPONENTS, 0.0)
    mask_violations = constraint_violations = 0
    crashed, message = False, None
    done = truncated = False
    while not (done or truncated):
        mask = action_mask(state)
        try:
            action = evaluate(program, state, mask)
        except RuntimeNumericError as exc:
            crashed, message = True, f"step {state.step_count}: {exc}"
            break
        prev = state
        state, reward, done, truncated, info = step(state, action, constants)
        for name in COMPONENTS:
            components[name] += getattr(reward, name)
        mask_violations += info.mask_violations
        constraint_violations += len(info.constraint_violations)
        records.append(
            StepRecord(prev.as_dict(), mask.max_valid_hr_idx, tuple(info.requested), tuple(info.applied), reward.to_dict())
        )
    total = constants.crash_total if crashed else sum(r.reward["total"] for r in records)
    return EpisodeTrace(
        scenario_id=scenario.id,
        steps=tuple(records),
        completed=(not crashed) and done,
        truncated=truncated,
        crashed=crashed,
        crash_message=message,
        total_reward=total,
        final_thickness_error=abs(state.current_thickness - state.target_thickness),
        final_grain_error=abs(state.current_grain_size - state.target_grain_size),
        final_temperature_error=abs(state.stock_temperature - state.target_temperature),
        mask_violations=mask_violations,
        constraint_violations=constraint_violations,
        components=components,
    )


@dataclass(frozen=True)
class FeedbackBundle:
    """Per-scenario summaries plus the mean reward and completion rate."""

    scenarios: tuple[dict, ...]
    mean_reward: float
    completion_rate: float
    crashed: bool

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "FeedbackBundle":
        return cls(tuple(data["scenarios"]), data["mean_reward"], data["completion_rate"], data["crashed"])

    def weakest_component(self) -> str:
        totals = dict.fromkeys(COMPONENTS, 0.0)
        for s in self.scenarios:
            for name in COMPONENTS:
                totals[name] += s["components"][name]
        shaped = {k: v for k, v in totals.items() if k != "step_penalty"}
        return min(shaped, key=shaped.get)


def evaluate_suite(
    program: HeuristicProgram,
    catalog,
    constants: SurrogateConstants = DEFAULT_CONSTANTS,
    jobs: int = 1,
) -> FeedbackBundle:
    catalog = list(catalog)
    if jobs > 1 and len(catalog) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(rollout, repeat(program), catalog, repeat(constants)))
    else:
        traces = [rollout(program, s, constants) for s in catalog]
    if not traces:
        raise InvalidScenario("empty scenario catalog")
    return FeedbackBundle(
        scenarios=tuple(t.summary() for t in traces),
        mean_reward=sum(t.total_reward for t in traces) / len(traces),
        completion_rate=sum(t.completed for t in traces) / len(traces),
        crashed=any(t.crashed for t in traces),
    )
