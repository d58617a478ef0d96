"""Command-line entry point.

Exit codes: 0 success (or a clean audit), 2 audit policy failure, 1 tool
fault. Configuration comes from ``--config``, else ``$ROLLSYNTH_CONFIG``,
else ``./rollsynth.json``; explicit flags override the file.
"""

from __future__ import annotations

import json
import os
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import click

from .heurlang import Diagnostic, load, parse, pretty

CONFIG_ENV = "ROLLSYNTH_CONFIG"
DEFAULT_CONFIG = "rollsynth.json"

EXIT_OK, EXIT_FAULT, EXIT_POLICY = 0, 1, 2


@dataclass
class ToolConfig:
    solver: str | None = None
    solver_timeout: float = 10.0
    constants: str | None = None
    scenarios: str | None = None
    seed: int = 0
    iterations: int = 30
    stagnation_threshold: int = 6
    max_repairs: int = 3
    out: str = "out"
    jobs: int = 1
    endpoint: str | None = None
    endpoint_timeout: float = 60.0

    @classmethod
    def load(cls, path: str | None) -> "ToolConfig":
        chosen = path or os.environ.get(CONFIG_ENV)
        if chosen is None and Path(DEFAULT_CONFIG).exists():
            chosen = DEFAULT_CONFIG
        if chosen is None:
            return cls()
        try:
            data = json.loads(Path(chosen).read_text())
        except (OSError, ValueError) as exc:
            raise click.ClickException(f"cannot read config {chosen}: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise click.ClickException(f"unknown config keys in {chosen}: {', '.join(unknown)}")
        return cls(**data)

    def override(self, **flags) -> "ToolConfig":
        return ToolConfig(**{**asdict(self), **{k: v for k, v in flags.items() if v is not None}})


class _Group(click.Group):
    """Map ClickException and unexpected errors to the tool-fault exit code."""

    def main(self, *args, **kwargs):
        kwargs.setdefault("standalone_mode", False)
        try:
            rv = super().main(*args, **kwargs)
        except click.exceptions.Exit as exc:
            sys.exit(exc.exit_code)
        except click.ClickException as exc:
            exc.show()
            sys.exit(EXIT_FAULT)
        except click.exceptions.Abort:
            sys.exit(EXIT_FAULT)
        sys.exit(rv if isinstance(rv, int) else EXIT_OK)


def _constants(cfg: ToolConfig):
    from .rollsim import DEFAULT_CONSTANTS, SurrogateConstants

    return SurrogateConstants.load(cfg.constants) if cfg.constants else DEFAULT_CONSTANTS


def _catalog(cfg: ToolConfig, grid: bool = False):
    from .rollsim import heldout_grid, load_catalog, search_scenarios

    if grid:
        return heldout_grid()
    return load_catalog(cfg.scenarios) if cfg.scenarios else search_scenarios()


@click.group(cls=_Group)
@click.option("--config", "config_path", type=click.Path(), help="JSON config file.")
@click.pass_context
def main(ctx, config_path):
    """Synthesize, run, audit and analyze pass-schedule controllers."""
    ctx.obj = ToolConfig.load(config_path)


@main.command("parse")
@click.argument("paths", nargs=-1, required=True, type=click.Path())
def cmd_parse(paths):
    """Parse controllers and print them in canonical form."""
    status = EXIT_OK
    for path in paths:
        try:
            program = load(path)
        except OSError as exc:
            click.echo(f"{path}: {exc}", err=True)
            return EXIT_FAULT
        except Diagnostic as exc:
            click.echo(str(exc), err=True)
            status = EXIT_POLICY
            continue
        click.echo(pretty(program), nl=False)
    return status


@main.command("audit")
@click.argument("paths", nargs=-1, required=True, type=click.Path())
@click.option("--out", type=click.Path(), help="Directory for report files.")
@click.option("--solver", help="Solver command line, e.g. 'z3 -in'.")
@click.option("--timeout", type=float, help="Solver timeout per spec, seconds.")
@click.option("--artifacts", type=click.Path(), help="Keep the generated .smt2 scripts here.")
@click.option("--seed", type=int, help="Seed for the random test inputs.")
@click.option("--jobs", type=int, help="Parallel solver processes.")
@click.option("--quiet", is_flag=True, help="Only print the summary line per file.")
@click.pass_obj
def cmd_audit(cfg: ToolConfig, paths, out, solver, timeout, artifacts, seed, jobs, quiet):
    """Run the five-layer audit; exit 2 if any error-severity finding."""
    from .audit import full_audit

    cfg = cfg.override(out=out, solver=solver, solver_timeout=timeout, seed=seed, jobs=jobs)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    worst = EXIT_OK
    for path in paths:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            click.echo(f"{path}: {exc}", err=True)
            return EXIT_FAULT
        try:
            program = parse(text, origin=str(p))
        except Diagnostic as exc:
            click.echo(f"{path}: rejected: {exc}", err=True)
            worst = EXIT_POLICY
            continue
        report = full_audit(
            program, text, timeout=cfg.solver_timeout, command=cfg.solver, artifacts=artifacts, seed=cfg.seed,
            jobs=max(1, cfg.jobs),
        )
        stem = p.stem
        (out_dir / f"{stem}.audit.json").write_text(report.to_json() + "\n")
        (out_dir / f"{stem}.audit.txt").write_text(report.text_table() + "\n")
        (out_dir / f"{stem}.categories.csv").write_text(report.category_csv())
        t = report.totals
        click.echo(f"{path}: {t['checks']} checks, {t['pass']} pass, {t['warn']} warn, {t['errors']} errors ({report.wall_time:.2f} s)")
        if not quiet:
            click.echo(report.text_table())
        if t["errors"]:
            worst = EXIT_POLICY
    return worst


@main.command("run")
@click.argument("path", type=click.Path())
@click.option("--grid", is_flag=True, help="Use the 81-case held-out grid.")
@click.option("--scenarios", type=click.Path(), help="Scenario catalog JSON.")
@click.option("--out", type=click.Path(), help="Write traces and feedback JSON here.")
@click.option("--jobs", type=int)
@click.pass_obj
def cmd_run(cfg: ToolConfig, path, grid, scenarios, out, jobs):
    """Roll a controller out on a scenario catalog and print the feedback table."""
    from .rollsim import FeedbackBundle, rollout

    cfg = cfg.override(scenarios=scenarios, jobs=jobs)
    try:
        program = load(path)
    except OSError as exc:
        raise click.ClickException(str(exc)) from exc
    except Diagnostic as exc:
        raise click.ClickException(str(exc)) from exc
    catalog = _catalog(cfg, grid)
    constants = _constants(cfg)
    traces = [rollout(program, s, constants) for s in catalog]
    bundle = FeedbackBundle(
        tuple(t.summary() for t in traces),
        sum(t.total_reward for t in traces) / len(traces),
        sum(t.completed for t in traces) / len(traces),
        any(t.crashed for t in traces),
    )
    click.echo(f"{'scenario':<28}{'reward':>9}{'steps':>7}  {'done':<5}{'thick err':>10}{'grain err':>10}")
    for t in traces:
        click.echo(
            f"{t.scenario_id:<28}{t.total_reward:>9.2f}{t.n_steps:>7}  {'yes' if t.completed else 'no':<5}"
            f"{t.final_thickness_error:>10.3f}{t.final_grain_error:>10.2f}"
        )
    done = sum(t.completed for t in traces)
    click.echo(f"evaluations: {len(traces)}  completion: {done}/{len(traces)}  mean reward: {bundle.mean_reward:.2f}")
    click.echo(f"weakest component: {bundle.weakest_component()}")
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(
            json.dumps({"feedback": bundle.to_dict(), "traces": [t.to_dict() for t in traces]}, indent=2, sort_keys=True) + "\n"
        )
    return EXIT_OK


def _proposer(cfg: ToolConfig, name: str):
    from .search import mutation_proposer, remote_proposer

    if name == "mutation":
        return mutation_proposer(cfg.seed)
    if not cfg.endpoint:
        raise click.ClickException("the remote proposer needs --endpoint or 'endpoint' in the config")
    return remote_proposer(cfg.endpoint, cfg.endpoint_timeout)


def _search_config(cfg: ToolConfig, audit_filter: bool):
    from .search import SearchConfig

    return SearchConfig(
        iterations=cfg.iterations,
        stagnation_threshold=cfg.stagnation_threshold,
        max_repairs=cfg.max_repairs,
        audit_filter=audit_filter,
        jobs=max(1, cfg.jobs),
    )


_proposer_opts = [
    click.option("--proposer", type=click.Choice(["mutation", "remote"]), default="mutation", show_default=True),
    click.option("--endpoint", help="URL of the remote proposer."),
    click.option("--seed", type=int),
    click.option("--out", type=click.Path(), help="Output directory for records."),
    click.option("--filter", "audit_filter", is_flag=True, help="Drop candidates with audit errors before evaluation."),
    click.option("--jobs", type=int),
    click.option("--scenarios", type=click.Path(), help="Scenario catalog JSON."),
]


def _with(opts):
    def wrap(f):
        for opt in reversed(opts):
            f = opt(f)
        return f

    return wrap


@main.command("search")
@click.option("--iterations", type=int, help="Outer iterations (default 30).")
@_with(_proposer_opts)
@click.pass_obj
def cmd_search(cfg: ToolConfig, iterations, proposer, endpoint, seed, out, audit_filter, jobs, scenarios):
    """One search run; writes <out>/run-<seed>.jsonl."""
    from .search import run_search, save_run

    cfg = cfg.override(iterations=iterations, endpoint=endpoint, seed=seed, out=out, jobs=jobs, scenarios=scenarios)
    started = time.time()
    record = run_search(
        _proposer(cfg, proposer), _search_config(cfg, audit_filter), cfg.seed, _catalog(cfg), _constants(cfg)
    )
    path = save_run(record, cfg.out, started)
    best = record.best
    click.echo(f"{path}: {len(record.entries)} iterations, best {best.mean_reward:.2f}" if best else f"{path}: no successful iteration")
    return EXIT_OK


@main.command("luby")
@click.option("--unit", type=int, default=5, show_default=True)
@click.option("--subruns", type=int, default=15, show_default=True)
@click.option("--seeded", is_flag=True, help="Offer the global top-3 programs to each new sub-run.")
@_with(_proposer_opts)
@click.pass_obj
def cmd_luby(cfg: ToolConfig, unit, subruns, seeded, proposer, endpoint, seed, out, audit_filter, jobs, scenarios):
    """Luby-restarted campaign; writes sub-run files and campaign.json."""
    from .search import luby_campaign, save_campaign

    cfg = cfg.override(endpoint=endpoint, seed=seed, out=out, jobs=jobs, scenarios=scenarios)
    started = time.time()
    record = luby_campaign(
        _proposer(cfg, proposer), unit, subruns, seeded, cfg.seed, _search_config(cfg, audit_filter), _catalog(cfg),
        _constants(cfg),
    )
    path = save_campaign(record, cfg.out, started)
    click.echo(f"{path}: {sum(record.lengths)} iterations in {len(record.lengths)} sub-runs {record.lengths}")
    if record.global_best is not None:
        click.echo(f"global best {record.global_best:.2f}")
    return EXIT_OK


@main.group("analyze", cls=click.Group)
def cmd_analyze():
    """Budget, portfolio and convergence analyses over run records."""


def _curves(records: str):
    from .analysis import EmptyRun, best_so_far
    from .search import SchemaMismatch, load_runs

    directory = Path(records)
    if not directory.is_dir():
        raise click.ClickException(f"{records} is not a directory")
    try:
        runs = load_runs(directory)
    except (SchemaMismatch, ValueError, TypeError) as exc:
        raise click.ClickException(f"bad run record: {exc}") from exc
    curves = []
    for run in runs:
        try:
            curves.append(best_so_far(run))
        except EmptyRun:
            continue
    if not curves:
        raise click.ClickException(f"no usable run records in {records}")
    return runs, curves


def _write(out: str, name: str, text: str) -> Path:
    path = Path(out) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


@cmd_analyze.command("budget")
@click.argument("records", type=click.Path())
@click.option("--max-budget", type=int, default=30, show_default=True)
@click.option("--out", type=click.Path())
@click.pass_obj
def cmd_budget(cfg: ToolConfig, records, max_budget, out):
    """Optimal mixed allocation against uniform restarts, per budget."""
    from .analysis import budget_csv, budget_series, curves_csv, to_json

    cfg = cfg.override(out=out)
    _, curves = _curves(records)
    series = budget_series(curves, range(1, max_budget + 1))
    _write(cfg.out, "best_so_far.csv", curves_csv(curves))
    _write(cfg.out, "budget.csv", budget_csv(series))
    _write(cfg.out, "budget.json", to_json({"runs": len(curves), "series": series}))
    for row in series[-3:]:
        plan = "+".join(map(str, row["optimal_plan"]))
        click.echo(f"T={row['budget']}: optimal {row['optimal']:.2f} ({plan}), best uniform {row['best_uniform']:.2f}")
    return EXIT_OK


@cmd_analyze.command("portfolio")
@click.argument("records", type=click.Path())
@click.option("--k", "k", type=int, default=5, show_default=True)
@click.option("--grid/--search-scenarios", default=True, show_default=True, help="Test cases for the reward matrix.")
@click.option("--out", type=click.Path())
@click.option("--jobs", type=int)
@click.pass_obj
def cmd_portfolio(cfg: ToolConfig, records, k, grid, out, jobs):
    """Greedy oracle portfolio over the best program of each run (or .heur files)."""
    from .analysis import greedy_portfolio, portfolio_csv, reward_matrix, to_json

    cfg = cfg.override(out=out, jobs=jobs)
    directory = Path(records)
    programs = {}
    if directory.is_dir() and any(directory.glob("*.heur")):
        for p in sorted(directory.glob("*.heur")):
            programs[p.stem] = load(p)
    else:
        runs, _ = _curves(records)
        seen = set()
        for run in runs:
            best = run.best
            if best is not None and best.source not in seen:
                seen.add(best.source)
                programs[run.run_id] = parse(best.source, origin=run.run_id)
    if not programs:
        raise click.ClickException("empty heuristic pool")
    matrix = reward_matrix(programs, _catalog(cfg, grid), _constants(cfg), jobs=max(1, cfg.jobs))
    order, curve = greedy_portfolio(matrix, min(k, len(programs)))
    _write(cfg.out, "portfolio.csv", portfolio_csv(order, curve))
    _write(
        cfg.out,
        "portfolio.json",
        to_json({"order": order, "curve": curve, "rows": list(matrix.row_ids), "cols": list(matrix.col_ids), "matrix": matrix.values.tolist()}),
    )
    for i, (name, v) in enumerate(zip(order, curve), 1):
        click.echo(f"K={i}: +{name} -> {v:.2f}")
    return EXIT_OK


@cmd_analyze.command("convergence")
@click.argument("records", type=click.Path())
@click.option("--out", type=click.Path())
@click.pass_obj
def cmd_convergence(cfg: ToolConfig, records, out):
    """Per-iteration quantiles of best-so-far and the iteration-of-best distribution."""
    from .analysis import convergence_csv, convergence_summary, iteration_of_best_csv, to_json

    cfg = cfg.override(out=out)
    _, curves = _curves(records)
    summary = convergence_summary(curves)
    _write(cfg.out, "convergence.csv", convergence_csv(summary))
    _write(cfg.out, "iteration_of_best.csv", iteration_of_best_csv(summary))
    _write(cfg.out, "convergence.json", to_json(summary))
    click.echo(f"{len(curves)} runs; median iteration of best: {summary['iteration_of_best_median']}")
    return EXIT_OK


if __name__ == "__main__":
    main()
