"""Luby restart sequence and scaled restart schedules."""

from __future__ import annotations


def luby(i: int) -> int:
    """i-th term (1-based) of 1, 1, 2, 1, 1, 2, 4, 1, 1, 2, ..."""
    if i < 1:
        raise ValueError("luby index starts at 1")
    while True:
        k = i.bit_length()
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1


def luby_schedule(unit: int, count: int) -> list[int]:
    """Sub-run lengths: the first ``count`` Luby terms scaled by ``unit``."""
    if unit < 1 or count < 0:
        raise ValueError("unit must be positive and count non-negative")
    return [unit * luby(i) for i in range(1, count + 1)]
