"""Oracle portfolios: pick heuristics so the best member per test case is high."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations, repeat

import numpy as np

from ..rollsim import DEFAULT_CONSTANTS, rollout


class EmptyMatrix(ValueError):
    pass


@dataclass(frozen=True)
class RewardMatrix:
    values: np.ndarray  # rows = heuristics, columns = test cases
    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise EmptyMatrix("reward matrix must be a non-empty 2-D array")
        if v.shape != (len(self.row_ids), len(self.col_ids)):
            raise ValueError("ids do not match the matrix shape")
        if not np.all(np.isfinite(v)):
            raise ValueError("reward matrix has non-finite entries")
        object.__setattr__(self, "values", v)

    @classmethod
    def of(cls, values, row_ids=None, col_ids=None) -> "RewardMatrix":
        v = np.asarray(values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise EmptyMatrix("reward matrix must be a non-empty 2-D array")
        rows = tuple(row_ids) if row_ids is not None else tuple(f"h{i}" for i in range(v.shape[0]))
        cols = tuple(col_ids) if col_ids is not None else tuple(f"c{j}" for j in range(v.shape[1]))
        return cls(v, rows, cols)

    def index(self, row) -> int:
        return row if isinstance(row, (int, np.integer)) else self.row_ids.index(row)


def oracle_reward(m: RewardMatrix, subset) -> float:
    """Mean over test cases of the best reward any member achieves."""
    rows = [m.index(r) for r in subset]
    if not rows:
        raise ValueError("subset must be non-empty")
    return float(m.values[rows].max(axis=0).mean())


def greedy_portfolio(m: RewardMatrix, k: int) -> tuple[list[str], list[float]]:
    """Add the row that most raises the oracle reward, ``k`` times; ties go to the lower row."""
    n = len(m.row_ids)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    chosen: list[int] = []
    best = np.full(m.values.shape[1], -np.inf)
    curve: list[float] = []
    for _ in range(k):
        scores = [
            (np.maximum(best, m.values[r]).mean(), -r) for r in range(n) if r not in chosen
        ]
        score, neg = max(scores)
        chosen.append(-neg)
        best = np.maximum(best, m.values[-neg])
        curve.append(float(score))
    return [m.row_ids[r] for r in chosen], curve


def best_portfolio(m: RewardMatrix, k: int) -> tuple[tuple[str, ...], float]:
    """Brute force over all size-``k`` subsets."""
    best = max(combinations(range(len(m.row_ids)), k), key=lambda s: (oracle_reward(m, s), [-i for i in s]))
    return tuple(m.row_ids[i] for i in best), oracle_reward(m, best)


def _cell(program, scenario, constants):
    return rollout(program, scenario, constants).total_reward


def reward_matrix(programs: dict, catalog, constants=DEFAULT_CONSTANTS, jobs: int = 1) -> RewardMatrix:
    """Total reward of every program on every test case."""
    catalog = list(catalog)
    names = sorted(programs)
    pairs = [(programs[n], s) for n in names for s in catalog]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_cell, *zip(*pairs), repeat(constants)))
    else:
        cells = [_cell(p, s, constants) for p, s in pairs]
    values = np.array(cells, dtype=float).reshape(len(names), len(catalog))
    return RewardMatrix.of(values, names, [s.id for s in catalog])
