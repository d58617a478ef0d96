"""Split an iteration budget across independent runs.

A plan ``[l_1, ..., l_k]`` with ``sum = T`` keeps the best of ``k`` runs,
so its outcome CDF is the product of the length-``l_i`` CDFs. Plans are
ranked by the median of that product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cdf import BestSoFarCurve, EmpiricalCdf, NoEligibleRuns, cdf_at_length, compose


@dataclass(frozen=True)
class AllocationPlan:
    lengths: tuple[int, ...]
    median: float

    @property
    def total(self) -> int:
        return sum(self.lengths)


def _rank(plan: AllocationPlan):
    """Sort key: higher median, then fewer parts, then larger parts."""
    return (plan.median, -len(plan.lengths), plan.lengths)


class _Table:
    """Every length CDF tabulated on one shared grid."""

    def __init__(self, curves: list[BestSoFarCurve], max_len: int):
        self.cdfs: dict[int, EmpiricalCdf] = {}
        for length in range(1, max_len + 1):
            try:
                self.cdfs[length] = cdf_at_length(curves, length)
            except NoEligibleRuns:
                break
        if not self.cdfs:
            raise NoEligibleRuns("no run has a single iteration")
        self.grid = np.array(sorted({v for c in self.cdfs.values() for v in c.values}))
        self.F = {
            length: np.searchsorted(np.array(c.values), self.grid, side="right") / c.n for length, c in self.cdfs.items()
        }

    @property
    def max_len(self) -> int:
        return max(self.cdfs)

    def median(self, vec: np.ndarray) -> float:
        idx = int(np.argmax(vec >= 0.5 - 1e-12))
        return float(self.grid[idx])


def _partitions(table: _Table, total: int):
    """(parts, composed CDF vector) for partitions of ``total`` into non-increasing parts.

    Depth-first over (remaining budget, largest allowed part); each node
    carries the product for its prefix, so a shared prefix is multiplied
    once for all of its completions.
    """

    def walk(prefix: tuple, vec, budget: int, cap: int):
        if budget == 0:
            yield prefix, vec
            return
        for part in range(min(cap, budget), 0, -1):
            f = table.F[part]
            yield from walk((*prefix, part), f if vec is None else vec * f, budget - part, part)

    return walk((), None, total, table.max_len)


def optimal_mix(curves: list[BestSoFarCurve], total: int, max_len: int | None = None) -> AllocationPlan:
    """Best median over all splits of ``total`` into parts no longer than the data."""
    if total < 1:
        raise ValueError("budget must be at least 1")
    longest = max(len(c) for c in curves)
    table = _Table(curves, min(max_len or longest, longest))
    best = None
    for parts, vec in _partitions(table, total):
        plan = AllocationPlan(parts, table.median(vec))
        if best is None or _rank(plan) > _rank(best):
            best = plan
    return best


def plan_median(curves: list[BestSoFarCurve], lengths) -> float:
    return compose(cdf_at_length(curves, length) for length in lengths).median


def exhaustive_mix(curves: list[BestSoFarCurve], total: int, max_len: int | None = None) -> AllocationPlan:
    """Reference search: every ordered composition of ``total``, scored from scratch."""
    longest = min(max_len or max(len(c) for c in curves), max(len(c) for c in curves))
    best = None

    def walk(prefix: list[int], left: int):
        nonlocal best
        if left == 0:
            lengths = tuple(sorted(prefix, reverse=True))
            plan = AllocationPlan(lengths, plan_median(curves, lengths))
            if best is None or _rank(plan) > _rank(best):
                best = plan
            return
        for part in range(1, min(left, longest) + 1):
            walk(prefix + [part], left - part)

    walk([], total)
    return best


def uniform_plans(curves: list[BestSoFarCurve], total: int) -> list[AllocationPlan]:
    """``[L] * (total // L)`` for every length with data."""
    longest = max(len(c) for c in curves)
    out = []
    for length in range(1, min(total, longest) + 1):
        lengths = (length,) * (total // length)
        out.append(AllocationPlan(lengths, plan_median(curves, lengths)))
    return out


def budget_series(curves: list[BestSoFarCurve], budgets) -> list[dict]:
    """Per budget: the optimal mix next to every uniform plan."""
    rows = []
    for total in budgets:
        opt = optimal_mix(curves, total)
        uni = uniform_plans(curves, total)
        rows.append(
            {
                "budget": total,
                "optimal": opt.median,
                "optimal_plan": list(opt.lengths),
                "uniform": {str(p.lengths[0]): p.median for p in uni},
                "best_uniform": max(p.median for p in uni),
            }
        )
    return rows
