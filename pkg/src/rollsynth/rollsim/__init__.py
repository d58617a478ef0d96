"""Surrogate multi-pass flat-rolling environment."""

from .env import (
    COMPONENTS,
    EpisodeTrace,
    FeedbackBundle,
    RewardBreakdown,
    StepInfo,
    StepOutcome,
    StepRecord,
    evaluate_suite,
    reset,
    rollout,
    step,
)
from .physics import DEFAULT_CONSTANTS, PassOutcome, SurrogateConstants, roll_pass
from .scenarios import (
    InvalidScenario,
    ScenarioSpec,
    dump_catalog,
    heldout_grid,
    load_catalog,
    search_scenarios,
)
from .state import ActionMask, ProcessState, action_mask

__all__ = [
    "COMPONENTS",
    "DEFAULT_CONSTANTS",
    "ActionMask",
    "EpisodeTrace",
    "FeedbackBundle",
    "InvalidScenario",
    "PassOutcome",
    "ProcessState",
    "RewardBreakdown",
    "ScenarioSpec",
    "StepInfo",
    "StepOutcome",
    "StepRecord",
    "SurrogateConstants",
    "action_mask",
    "dump_catalog",
    "evaluate_suite",
    "heldout_grid",
    "load_catalog",
    "reset",
    "roll_pass",
    "rollout",
    "search_scenarios",
    "step",
]
