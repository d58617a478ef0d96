"""Run and campaign records: JSONL on disk, timestamps in a sidecar file.

A run file holds a header line followed by one line per iteration. Every
value written there is a function of the configuration and seed, so two
runs with the same inputs produce byte-identical files; wall-clock data
goes to ``<file>.meta.json`` instead.
"""

from __future__ import annotations

import json
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

SCHEMA_VERSION = 1
FAILED_REWARD = -1000.0  # sentinel for iterations with no usable candidate


class SchemaMismatch(ValueError):
    pass


@dataclass
class IterationEntry:
    iteration: int
    mode: str
    source: str | None
    rationale: str
    attempts: int  # proposer calls used, 1 + repairs
    diagnostics: list[str]
    feedback: dict | None
    mean_reward: float
    failed: bool
    best_so_far: float | None  # None until some iteration succeeds

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunRecord:
    run_id: str
    seed: int
    proposer: str
    config: dict
    entries: list[IterationEntry] = field(default_factory=list)

    @property
    def rewards(self) -> list[float | None]:
        """Mean reward per iteration, None for failed iterations."""
        return [None if e.failed else e.mean_reward for e in self.entries]

    @property
    def best(self) -> IterationEntry | None:
        ok = [e for e in self.entries if not e.failed]
        return max(ok, key=lambda e: e.mean_reward) if ok else None

    def header(self) -> dict:
        return {
            "kind": "run",
            "schema": SCHEMA_VERSION,
            "run_id": self.run_id,
            "seed": self.seed,
            "proposer": self.proposer,
            "config": self.config,
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header(), sort_keys=True)]
        lines += [json.dumps(e.to_dict(), sort_keys=True) for e in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "RunRecord":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows:
            raise SchemaMismatch("empty run file")
        head = rows[0]
        if head.get("kind") != "run" or head.get("schema") != SCHEMA_VERSION:
            raise SchemaMismatch(f"expected run schema {SCHEMA_VERSION}, got {head.get('kind')}/{head.get('schema')}")
        rec = cls(head["run_id"], head["seed"], head["proposer"], head["config"])
        rec.entries = [IterationEntry(**row) for row in rows[1:]]
        return rec


@dataclass
class SubRunSummary:
    index: int
    length: int
    run_id: str
    first_reward: float | None
    later_best: float | None  # best over iterations after the first
    best: float | None


@dataclass
class CampaignRecord:
    unit: int
    lengths: list[int]
    seeded: bool
    seed: int
    proposer: str
    runs: list[RunRecord]
    cumulative_best: list[float | None]
    global_best: float | None
    global_best_source: str | None

    def decomposition(self) -> list[SubRunSummary]:
        out = []
        for i, run in enumerate(self.runs):
            rewards = run.rewards
            later = [r for r in rewards[1:] if r is not None]
            finite = [r for r in rewards if r is not None]
            out.append(
                SubRunSummary(
                    i,
                    len(rewards),
                    run.run_id,
                    rewards[0] if rewards else None,
                    max(later) if later else None,
                    max(finite) if finite else None,
                )
            )
        return out

    def header(self) -> dict:
        return {
            "kind": "campaign",
            "schema": SCHEMA_VERSION,
            "unit": self.unit,
            "lengths": self.lengths,
            "seeded": self.seeded,
            "seed": self.seed,
            "proposer": self.proposer,
            "run_files": [f"{r.run_id}.jsonl" for r in self.runs],
            "cumulative_best": self.cumulative_best,
            "global_best": self.global_best,
            "global_best_source": self.global_best_source,
            "subruns": [asdict(s) for s in self.decomposition()],
        }


def write_meta(path: Path, started: float, finished: float, extra: dict | None = None) -> Path:
    meta = Path(str(path) + ".meta.json")
    data = {
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
        "wall_seconds": round(finished - started, 3),
        "host": platform.node(),
        "python": platform.python_version(),
        **(extra or {}),
    }
    meta.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return meta


def save_run(record: RunRecord, directory: str | Path, started: float | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{record.run_id}.jsonl"
    path.write_text(record.to_jsonl())
    if started is not None:
        write_meta(path, started, time.time())
    return path


def save_campaign(record: CampaignRecord, directory: str | Path, started: float | None = None) -> Path:
    directory = Path(directory)
    for run in record.runs:
        save_run(run, directory)
    path = directory / "campaign.json"
    path.write_text(json.dumps(record.header(), indent=2, sort_keys=True) + "\n")
    if started is not None:
        write_meta(path, started, time.time())
    return path


def load_run(path: str | Path) -> RunRecord:
    return RunRecord.from_jsonl(Path(path).read_text())


def load_runs(directory: str | Path) -> list[RunRecord]:
    """Every run file in ``directory``, sorted by file name."""
    return [load_run(p) for p in sorted(Path(directory).glob("*.jsonl"))]
