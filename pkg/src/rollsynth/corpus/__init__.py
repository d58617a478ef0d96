"""Shipped controller programs: the two reference controllers plus audit fixtures."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..heurlang import HeuristicProgram, SourceUnit, parse

# Programs that satisfy every safety property; the rest are deliberate violators.
REFERENCE = ("baseline", "decoupled", "mask_respecting", "monotone_hr")


def corpus_paths() -> list[Path]:
    root = resources.files(__package__)
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".heur"))


def corpus_source(name: str) -> str:
    return resources.files(__package__).joinpath(f"{name}.heur").read_text(encoding="utf-8")


def load_corpus() -> dict[str, HeuristicProgram]:
    return {p.stem: parse(SourceUnit(p.read_text(encoding="utf-8"), p.name)) for p in corpus_paths()}
