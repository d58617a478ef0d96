"""Outer search loop, Luby restarts, proposers and run records."""

from .loop import SearchConfig, luby_campaign, mode_select, run_search, stagnation, subrun_seeds
from .luby import luby, luby_schedule
from .proposers import (
    Candidate,
    MutationProposer,
    Proposal,
    Proposer,
    ProposerContext,
    ProposerFailure,
    RemoteProposer,
    mutation_proposer,
    remote_proposer,
)
from .records import (
    FAILED_REWARD,
    CampaignRecord,
    IterationEntry,
    RunRecord,
    SchemaMismatch,
    load_run,
    load_runs,
    save_campaign,
    save_run,
)

__all__ = [
    "FAILED_REWARD",
    "CampaignRecord",
    "Candidate",
    "IterationEntry",
    "MutationProposer",
    "Proposal",
    "Proposer",
    "ProposerContext",
    "ProposerFailure",
    "RemoteProposer",
    "RunRecord",
    "SchemaMismatch",
    "SearchConfig",
    "load_run",
    "load_runs",
    "luby",
    "luby_campaign",
    "luby_schedule",
    "mode_select",
    "mutation_proposer",
    "remote_proposer",
    "run_search",
    "save_campaign",
    "save_run",
    "stagnation",
    "subrun_seeds",
]
