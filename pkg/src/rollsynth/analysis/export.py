"""Plot-ready CSV series and JSON summaries; nothing is drawn here."""

from __future__ import annotations

import csv
import io
import json
import math

from .cdf import BestSoFarCurve


def _num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return ""
    return v


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])
    return buf.getvalue()


def curves_csv(curves: list[BestSoFarCurve]) -> str:
    """Long format: run_id, iteration, best_so_far."""
    return _csv(["run_id", "iteration", "best_so_far"], ((c.run_id, t, v) for c in curves for t, v in enumerate(c.values)))


def budget_csv(series: list[dict]) -> str:
    lengths = sorted({int(k) for row in series for k in row["uniform"]})
    header = ["budget", "optimal", "optimal_plan", "best_uniform", *(f"uniform_{k}" for k in lengths)]
    rows = (
        [
            row["budget"],
            row["optimal"],
            "+".join(map(str, row["optimal_plan"])),
            row["best_uniform"],
            *(row["uniform"].get(str(k), "") for k in lengths),
        ]
        for row in series
    )
    return _csv(header, rows)


def portfolio_csv(order: list[str], curve: list[float]) -> str:
    return _csv(["k", "added", "oracle_reward"], ((i + 1, name, v) for i, (name, v) in enumerate(zip(order, curve))))


def convergence_csv(summary: dict) -> str:
    header = ["iteration", "runs", "median", "q25", "q75", *(f"d{d}" for d in range(1, 10))]
    rows = (
        [r["iteration"], r["runs"], r["median"], r["q25"], r["q75"], *r["deciles"]] for r in summary["per_iteration"]
    )
    return _csv(header, rows)


def iteration_of_best_csv(summary: dict) -> str:
    counts: dict[int, int] = {}
    for t in summary["iteration_of_best"]:
        counts[t] = counts.get(t, 0) + 1
    return _csv(["iteration", "runs"], sorted(counts.items()))


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def to_json(obj) -> str:
    """JSON with non-finite floats written as null."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"
