"""Candidate proposers: a seeded mutation proposer and an HTTP client.

A proposer turns a :class:`ProposerContext` (mode, incumbent, recent
history, optional seeds, repair diagnostics) into candidate source text.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from dataclasses import dataclass, field

import numpy as np

from ..heurlang import tokenize
from ..heurlang.errors import Diagnostic

MODES = ("exploration", "refinement", "radical")


class ProposerFailure(RuntimeError):
    pass


@dataclass
class Candidate:
    source: str
    mean_reward: float
    feedback: dict | None = None


@dataclass
class ProposerContext:
    mode: str
    iteration: int
    incumbent: Candidate | None = None
    top_best: list[Candidate] = field(default_factory=list)
    recent: list[Candidate] = field(default_factory=list)
    stagnation: int = 0
    seeds: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def cand(c: Candidate | None):
            return None if c is None else {"source": c.source, "mean_reward": c.mean_reward, "feedback": c.feedback}

        return {
            "mode": self.mode,
            "iteration": self.iteration,
            "incumbent": cand(self.incumbent),
            "top_best": [cand(c) for c in self.top_best],
            "recent": [cand(c) for c in self.recent],
            "stagnation": self.stagnation,
            "seeds": list(self.seeds),
        }


@dataclass
class Proposal:
    source: str
    rationale: str


class Proposer:
    name = "abstract"

    def reset(self, seed: int) -> None:
        """Start a fresh conversation."""

    def propose(self, ctx: ProposerContext, diagnostics: list[str]) -> Proposal:
        raise NotImplementedError


# --- template families ---------------------------------------------------

FAMILY_TAG = "# family: "

TEMPLATES = {
    "baseline": """\
{tag}baseline
let remaining = current_thickness - target_thickness
let bulk_hr = {bulk} * hr_limit
if remaining > bulk_hr then
    let hr_mm = bulk_hr
else
    let hr_mm = remaining
end
let hr = clip(int_trunc(hr_mm * 10), 0, max_valid_hr_idx)
let interpass = {interpass}
let temp_error = stock_temperature - target_temperature
if temp_error < {t1} then
    let velocity = 6
elif temp_error < {t2} then
    let velocity = 5
elif temp_error < {t3} then
    let velocity = 4
elif temp_error < {t4} then
    let velocity = 3
elif temp_error < {t5} then
    let velocity = 2
else
    let velocity = 1
end
return (hr, interpass, velocity)
""",
    "decoupled": """\
{tag}decoupled
let max_hr_mm = max_valid_hr_idx / 10
let remaining = current_thickness - target_thickness
if remaining < max_hr_mm then
    let target_hr = remaining * {split}
else
    if current_grain_size > target_grain_size * {ratio} then
        let strain = {s_hi}
    elif current_grain_size > target_grain_size then
        let strain = {s_mid}
    else
        let strain = {s_lo}
    end
    let target_hr = current_thickness * (1 - exp(-strain))
end
let hr = clip(int_trunc(target_hr * 10), 0, max_valid_hr_idx)
let temp_error = stock_temperature - target_temperature
if temp_error > {deadband} then
    let frac = clip((temp_error - {deadband}) / {span}, 0, 1)
    let interpass = {ip_lo} + frac * {ip_span}
else
    let interpass = 1
end
if rolling_force > {f_hi} then
    let velocity = 2
elif rolling_force < {f_lo} then
    let velocity = 6
else
    let velocity = 5
end
return (hr, int_trunc(interpass), velocity)
""",
    "proportional": """\
{tag}proportional
let remaining = current_thickness - target_thickness
let hr_mm = min(max(remaining * {gain}, min(remaining, {floor_mm})), hr_limit * {cap})
let hr = clip(int_trunc(hr_mm * 10), 0, max_valid_hr_idx)
let temp_error = stock_temperature - target_temperature
let interpass = clip(int_trunc({ip_base} + temp_error * {ip_gain}), 1, 120)
let velocity = clip(int_trunc({v_base} - rolling_force / {f_scale}), 1, 6)
return (hr, interpass, velocity)
""",
}

DEFAULTS = {
    "baseline": dict(bulk=0.8, interpass=10, t1=-100, t2=-50, t3=0, t4=50, t5=100),
    "decoupled": dict(
        split=0.5, ratio=2.0, s_hi=0.8, s_mid=0.4, s_lo=0.1, deadband=25.0, span=125.0,
        ip_lo=5.0, ip_span=35.0, f_hi=2800000.0, f_lo=1000000.0,
    ),
    "proportional": dict(gain=0.6, floor_mm=1.0, cap=0.8, ip_base=5.0, ip_gain=0.1, v_base=6.0, f_scale=1000000.0),
}

# parameters whose order must survive randomization
ORDERED = {"baseline": ("t1", "t2", "t3", "t4", "t5")}


def fmt(value: float, integer: bool) -> str:
    if integer:
        return str(int(round(value)))
    text = repr(float(f"{value:.4g}"))
    return text


def render(family: str, params: dict) -> str:
    values = {k: fmt(v, isinstance(DEFAULTS[family][k], int)) for k, v in params.items()}
    return TEMPLATES[family].format(tag=FAMILY_TAG, **values)


def family_of(source: str) -> str | None:
    for line in source.splitlines():
        if line.startswith(FAMILY_TAG):
            name = line[len(FAMILY_TAG):].strip()
            return name if name in TEMPLATES else None
    return None


def number_tokens(source: str):
    try:
        return [t for t in tokenize(source) if t.kind == "number"]
    except Diagnostic:
        return []


def replace_token(source: str, tok, text: str) -> str:
    lines = source.split("\n")
    row = lines[tok.line - 1]
    start = tok.col - 1
    assert row[start : start + len(tok.text)] == tok.text
    lines[tok.line - 1] = row[:start] + text + row[start + len(tok.text) :]
    return "\n".join(lines)


class MutationProposer(Proposer):
    """Seeded stand-in for a language model.

    Exploration emits a randomly parameterized template (the unmutated
    baseline first, when ``identity_first`` and no seeds are offered) or,
    given seeds, often a one-literal variant of one of them; refinement changes exactly one
    numeric literal of the incumbent; radical mode switches to a template
    family other than the incumbent's.
    """

    name = "mutation"

    def __init__(self, seed: int = 0, identity_first: bool = True, spread: float = 0.3):
        self.identity_first = identity_first
        self.spread = spread
        self.reset(seed)

    def reset(self, seed: int) -> None:
        self.rng = np.random.default_rng(seed)
        self.emitted = 0

    # parameter sampling
    def _params(self, family: str) -> dict:
        params = {}
        for k, v in DEFAULTS[family].items():
            factor = 1.0 + self.rng.uniform(-self.spread, self.spread)
            params[k] = v * factor if v != 0 else self.rng.uniform(-20.0, 20.0)
        ordered = ORDERED.get(family)
        if ordered:
            for k, v in zip(ordered, sorted(params[k] for k in ordered)):
                params[k] = v
        return params

    def _template(self, family: str) -> Proposal:
        return Proposal(render(family, self._params(family)), f"explore {family} template with fresh parameters")

    def _mutate(self, source: str) -> Proposal:
        tokens = number_tokens(source)
        if not tokens:
            return self._template(str(self.rng.choice(sorted(TEMPLATES))))
        tok = tokens[int(self.rng.integers(len(tokens)))]
        old = float(tok.text.replace("_", ""))
        integer = all(c.isdigit() or c == "_" for c in tok.text)
        for _ in range(16):
            if integer:
                step = max(1, int(round(abs(old) * 0.2)))
                new = old + int(self.rng.integers(-step, step + 1))
            else:
                new = old * (1.0 + self.rng.uniform(-0.2, 0.2)) if old != 0 else self.rng.uniform(-1.0, 1.0)
            text = fmt(new, integer)
            if float(text) != old and not text.startswith("-"):
                break
        else:
            text = fmt(old + 1, integer)
        return Proposal(
            replace_token(source, tok, text), f"refine: line {tok.line} literal {tok.text} -> {text}"
        )

    def propose(self, ctx: ProposerContext, diagnostics: list[str]) -> Proposal:
        self.emitted += 1
        if self.identity_first and self.emitted == 1 and not diagnostics and not ctx.seeds:
            return Proposal(render("baseline", DEFAULTS["baseline"]), "start from the unmutated baseline template")
        if ctx.mode == "radical":
            current = family_of(ctx.incumbent.source) if ctx.incumbent else None
            choices = sorted(f for f in TEMPLATES if f != current)
            family = str(self.rng.choice(choices))
            prop = self._template(family)
            return Proposal(prop.source, f"radical: switch from {current or 'unknown'} to {family}")
        if ctx.mode == "refinement" and ctx.incumbent is not None:
            return self._mutate(ctx.incumbent.source)
        if ctx.seeds and self.rng.uniform() < 0.5:
            seed_src = ctx.seeds[int(self.rng.integers(len(ctx.seeds)))]
            prop = self._mutate(seed_src)
            return Proposal(prop.source, f"seeded {prop.rationale}")
        return self._template(str(self.rng.choice(sorted(TEMPLATES))))


def mutation_proposer(seed: int = 0, **kw) -> MutationProposer:
    return MutationProposer(seed, **kw)


class RemoteProposer(Proposer):
    """POSTs the context as JSON and expects ``{"source": ..., "rationale": ...}``."""

    name = "remote"

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self.seed = 0

    def reset(self, seed: int) -> None:
        self.seed = seed

    def propose(self, ctx: ProposerContext, diagnostics: list[str]) -> Proposal:
        body = {
            "mode": ctx.mode,
            "feedback": ctx.incumbent.feedback if ctx.incumbent else None,
            "context": ctx.to_dict(),
            "seeds": list(ctx.seeds),
            "diagnostics": list(diagnostics),
            "seed": self.seed,
        }
        req = urllib.request.Request(
            self.endpoint,
            data=json.dumps(body).encode(),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = resp.read()
        except (urllib.error.URLError, OSError, TimeoutError) as exc:
            raise ProposerFailure(f"proposer endpoint unreachable: {exc}") from exc
        try:
            data = json.loads(payload)
            source = data["source"]
            if not isinstance(source, str):
                raise TypeError("source is not a string")
        except (ValueError, KeyError, TypeError) as exc:
            raise ProposerFailure(f"malformed proposer response: {exc}") from exc
        return Proposal(source, str(data.get("rationale", "")))


def remote_proposer(endpoint: str, timeout: float = 60.0) -> RemoteProposer:
    return RemoteProposer(endpoint, timeout)
