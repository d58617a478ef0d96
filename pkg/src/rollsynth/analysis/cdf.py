"""Best-so-far curves, empirical CDFs and their max-of-k composition.

Medians and quantiles use the lower convention throughout: the smallest
sample value whose CDF reaches the level.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from ..search.records import RunRecord


class EmptyRun(ValueError):
    pass


class NoEligibleRuns(ValueError):
    pass


@dataclass(frozen=True)
class BestSoFarCurve:
    run_id: str
    values: tuple[float, ...]  # -inf before the first successful iteration

    def __len__(self) -> int:
        return len(self.values)


def best_so_far(run: RunRecord | list, run_id: str | None = None) -> BestSoFarCurve:
    """Running maximum over successful iterations (None marks a failure)."""
    if isinstance(run, RunRecord):
        rewards, run_id = run.rewards, run.run_id
    else:
        rewards = list(run)
    if not any(r is not None and math.isfinite(r) for r in rewards):
        raise EmptyRun(f"run {run_id or '?'} has no successful iteration")
    out, best = [], -math.inf
    for r in rewards:
        if r is not None and math.isfinite(r):
            best = max(best, r)
        out.append(best)
    return BestSoFarCurve(run_id or "run", tuple(out))


def _lower_quantile(sorted_values, q: float) -> float:
    n = len(sorted_values)
    k = max(1, math.ceil(q * n - 1e-12))
    return sorted_values[k - 1]


@dataclass(frozen=True)
class EmpiricalCdf:
    values: tuple[float, ...]  # sorted

    @classmethod
    def of(cls, samples) -> "EmpiricalCdf":
        values = tuple(sorted(float(v) for v in samples))
        if not values:
            raise NoEligibleRuns("empty sample")
        return cls(values)

    @property
    def n(self) -> int:
        return len(self.values)

    def __call__(self, x: float) -> float:
        return bisect.bisect_right(self.values, x) / self.n

    def quantile(self, q: float) -> float:
        return _lower_quantile(self.values, q)

    @property
    def median(self) -> float:
        return self.quantile(0.5)


def cdf_at_length(curves: list[BestSoFarCurve], length: int) -> EmpiricalCdf:
    """CDF of the best-so-far value after ``length`` iterations over runs that long."""
    if length < 1:
        raise ValueError("length must be at least 1")
    eligible = [c.values[length - 1] for c in curves if len(c) >= length]
    if not eligible:
        raise NoEligibleRuns(f"no run reaches length {length}")
    return EmpiricalCdf.of(eligible)


@dataclass(frozen=True)
class ComposedCdf:
    """CDF of the max of independent draws: the product of the parts."""

    parts: tuple[EmpiricalCdf, ...]

    @property
    def grid(self) -> tuple[float, ...]:
        return tuple(sorted({v for p in self.parts for v in p.values}))

    def __call__(self, x: float) -> float:
        out = 1.0
        for p in self.parts:
            out *= p(x)
        return out

    def quantile(self, q: float) -> float:
        grid = np.array(self.grid)
        F = np.ones(len(grid))
        for p in self.parts:
            F *= np.searchsorted(np.array(p.values), grid, side="right") / p.n
        hit = np.nonzero(F >= q - 1e-12)[0]
        return float(grid[hit[0]] if len(hit) else grid[-1])

    @property
    def median(self) -> float:
        return self.quantile(0.5)


def compose(cdfs) -> ComposedCdf:
    cdfs = tuple(cdfs)
    if not cdfs:
        raise ValueError("nothing to compose")
    return ComposedCdf(cdfs)


def median(c: EmpiricalCdf | ComposedCdf) -> float:
    return c.median


def convergence_summary(curves: list[BestSoFarCurve]) -> dict:
    """Per-iteration quantiles over the runs that reached it, and iteration-of-best."""
    if not curves:
        raise NoEligibleRuns("no runs")
    rows = []
    for t in range(max(len(c) for c in curves)):
        vals = sorted(c.values[t] for c in curves if len(c) > t)
        rows.append(
            {
                "iteration": t,
                "runs": len(vals),
                "median": _lower_quantile(vals, 0.5),
                "q25": _lower_quantile(vals, 0.25),
                "q75": _lower_quantile(vals, 0.75),
                "deciles": [_lower_quantile(vals, d / 10) for d in range(1, 10)],
            }
        )
    best_at = [c.values.index(c.values[-1]) for c in curves]
    return {
        "per_iteration": rows,
        "iteration_of_best": best_at,
        "iteration_of_best_median": _lower_quantile(sorted(best_at), 0.5),
    }
