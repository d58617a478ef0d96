"""Retrospective analyses: best-so-far curves, budget allocation, portfolios, convergence."""

from .budget import AllocationPlan, budget_series, exhaustive_mix, optimal_mix, plan_median, uniform_plans
from .cdf import (
    BestSoFarCurve,
    ComposedCdf,
    EmpiricalCdf,
    EmptyRun,
    NoEligibleRuns,
    best_so_far,
    cdf_at_length,
    compose,
    convergence_summary,
    median,
)
from .export import budget_csv, convergence_csv, curves_csv, iteration_of_best_csv, portfolio_csv, to_json
from .portfolio import EmptyMatrix, RewardMatrix, best_portfolio, greedy_portfolio, oracle_reward, reward_matrix

__all__ = [
    "AllocationPlan",
    "BestSoFarCurve",
    "ComposedCdf",
    "EmpiricalCdf",
    "EmptyMatrix",
    "EmptyRun",
    "NoEligibleRuns",
    "RewardMatrix",
    "best_portfolio",
    "best_so_far",
    "budget_csv",
    "budget_series",
    "cdf_at_length",
    "compose",
    "convergence_csv",
    "convergence_summary",
    "curves_csv",
    "exhaustive_mix",
    "greedy_portfolio",
    "iteration_of_best_csv",
    "median",
    "optimal_mix",
    "oracle_reward",
    "plan_median",
    "portfolio_csv",
    "reward_matrix",
    "to_json",
    "uniform_plans",
]
