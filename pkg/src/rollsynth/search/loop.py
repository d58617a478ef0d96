"""The outer search loop and the Luby restart campaign."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..heurlang import parse
from ..heurlang.errors import Diagnostic
from ..rollsim import DEFAULT_CONSTANTS, SurrogateConstants, evaluate_suite, search_scenarios
from .luby import luby_schedule
from .proposers import Candidate, Proposer, ProposerContext, ProposerFailure
from .records import FAILED_REWARD, CampaignRecord, IterationEntry, RunRecord


@dataclass
class SearchConfig:
    iterations: int = 30
    stagnation_threshold: int = 6
    top_n: int = 3
    last_m: int = 3
    max_repairs: int = 3
    audit_filter: bool = False
    jobs: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class _History:
    entries: list[IterationEntry] = field(default_factory=list)
    best_index: int | None = None

    @property
    def incumbent(self) -> IterationEntry | None:
        return None if self.best_index is None else self.entries[self.best_index]


def stagnation(history: list[IterationEntry]) -> int | None:
    """Iterations since the running best last improved; None with no incumbent."""
    best, at = -math.inf, None
    for e in history:
        if not e.failed and e.mean_reward > best:
            best, at = e.mean_reward, e.iteration
    return None if at is None else len(history) - at


def mode_select(history: list[IterationEntry], stagnation_threshold: int = 6) -> str:
    """exploration with no incumbent, radical once stagnation reaches the threshold."""
    stale = stagnation(history)
    if stale is None:
        return "exploration"
    return "radical" if stale >= stagnation_threshold else "refinement"


def _candidates(entries, n: int, key) -> list[Candidate]:
    ok = [e for e in entries if not e.failed]
    return [Candidate(e.source, e.mean_reward, e.feedback) for e in key(ok)[:n]]


def _context(history: list[IterationEntry], config: SearchConfig, seeds) -> ProposerContext:
    mode = mode_select(history, config.stagnation_threshold)
    ranked = _candidates(history, config.top_n, lambda xs: sorted(xs, key=lambda e: (-e.mean_reward, e.iteration)))
    recent = _candidates(history, config.last_m, lambda xs: xs[::-1])
    return ProposerContext(
        mode=mode,
        iteration=len(history),
        incumbent=ranked[0] if ranked else None,
        top_best=ranked,
        recent=recent,
        stagnation=stagnation(history) or 0,
        seeds=list(seeds),
    )


def _audit_errors(program) -> list[str]:
    from ..audit import full_audit

    report = full_audit(program, jobs=1)
    return [f"{c.id}: {c.message}" for c in report.errors]


def run_search(
    proposer: Proposer,
    config: SearchConfig | None = None,
    seed: int = 0,
    catalog=None,
    constants: SurrogateConstants = DEFAULT_CONSTANTS,
    seeds=(),
    run_id: str | None = None,
) -> RunRecord:
    """Propose, repair, evaluate and record, for ``config.iterations`` rounds."""
    config = config or SearchConfig()
    catalog = list(catalog) if catalog is not None else search_scenarios()
    proposer.reset(seed)
    record = RunRecord(run_id or f"run-{seed}", seed, proposer.name, config.to_dict())
    best: float | None = None
    for it in range(config.iterations):
        ctx = _context(record.entries, config, seeds)
        diagnostics: list[str] = []
        source, rationale, bundle = None, "", None
        attempts = 0
        while attempts <= config.max_repairs:
            attempts += 1
            try:
                prop = proposer.propose(ctx, list(diagnostics))
            except ProposerFailure as exc:
                diagnostics.append(f"proposer failure: {exc}")
                continue
            source, rationale = prop.source, prop.rationale
            try:
                program = parse(source, origin=f"{record.run_id}:{it}")
            except Diagnostic as exc:
                diagnostics.append(f"parse error: {exc}")
                bundle = None
                continue
            if config.audit_filter:
                errors = _audit_errors(program)
                if errors:
                    diagnostics.append("audit errors: " + "; ".join(errors))
                    bundle = None
                    continue
            bundle = evaluate_suite(program, catalog, constants, jobs=config.jobs)
            if bundle.crashed:
                crash = next(s["crash_message"] for s in bundle.scenarios if s["crashed"])
                diagnostics.append(f"runtime fault: {crash}")
                continue
            break
        failed = bundle is None or bundle.crashed
        reward = FAILED_REWARD if failed else bundle.mean_reward
        if not failed:
            best = reward if best is None else max(best, reward)
        record.entries.append(
            IterationEntry(
                iteration=it,
                mode=ctx.mode,
                source=source,
                rationale=rationale,
                attempts=attempts,
                diagnostics=diagnostics,
                feedback=None if bundle is None else bundle.to_dict(),
                mean_reward=reward,
                failed=failed,
                best_so_far=best,
            )
        )
    return record


def subrun_seeds(seed: int, n: int) -> list[int]:
    """Independent per-sub-run seeds derived from one campaign seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1)[0]) for c in children]


def luby_campaign(
    proposer: Proposer,
    unit: int = 5,
    count: int = 15,
    seeded: bool = False,
    seed: int = 0,
    config: SearchConfig | None = None,
    catalog=None,
    constants: SurrogateConstants = DEFAULT_CONSTANTS,
    n_seeds: int = 3,
) -> CampaignRecord:
    """Restarted sub-runs with Luby lengths; optionally seed each with the global top programs."""
    config = config or SearchConfig()
    lengths = luby_schedule(unit, count)
    runs: list[RunRecord] = []
    pool: list[tuple[float, int, str]] = []  # (reward, order, source) over all successes
    cumulative: list[float | None] = []
    best: float | None = None
    best_source: str | None = None
    for i, (length, sub_seed) in enumerate(zip(lengths, subrun_seeds(seed, count))):
        seeds = [src for _, _, src in sorted(pool, key=lambda t: (-t[0], t[1]))[:n_seeds]] if seeded else []
        cfg = SearchConfig(**{**config.to_dict(), "iterations": length})
        run = run_search(proposer, cfg, sub_seed, catalog, constants, seeds, run_id=f"subrun-{i:02d}")
        runs.append(run)
        for e in run.entries:
            if not e.failed:
                pool.append((e.mean_reward, len(pool), e.source))
                if best is None or e.mean_reward > best:
                    best, best_source = e.mean_reward, e.source
            cumulative.append(best)
    return CampaignRecord(unit, lengths, seeded, seed, proposer.name, runs, cumulative, best, best_source)
