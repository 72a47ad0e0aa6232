"""Randomized convergence fuzzing: seeded scenarios through the simulator,
divergence minimization, and replayable witnesses."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .logoot import BOUNDARY
from .ot import SITE_ORDER
from .scenario import (
    CAUSAL_ORDER,
    FULL_MESH,
    ScenarioScript,
    ScriptEvent,
    script_from_dict,
    script_to_dict,
)
from .sim import check_convergence, run_scenario
from .witness import DIVERGENCE, Witness


@dataclass(slots=True)
class FuzzSummary:
    engine: str
    runs: int = 0
    converged: int = 0
    divergences: int = 0
    witnesses: list[Witness] = field(default_factory=list)
    max_concurrency_seen: int = 0

    @property
    def clean(self) -> bool:
        return self.divergences == 0


def random_script(
    seed: int,
    *,
    num_sites: int = 3,
    ops_per_site: int = 20,
    horizon: int = 120,
    max_latency: int = 8,
    policy: str = CAUSAL_ORDER,
) -> ScenarioScript:
    """One seeded random scenario: timed single-char edits at every site with
    clamped positions and a seeded uniform latency."""
    rng = random.Random(seed)
    events = []
    for site in range(1, num_sites + 1):
        ticks = sorted(rng.randrange(horizon) for _ in range(ops_per_site))
        for t in ticks:
            if rng.random() < 0.7:
                events.append(
                    ScriptEvent(t, site, "insert", rng.randrange(40), rng.choice("abcdef"))
                )
            else:
                events.append(ScriptEvent(t, site, "delete", rng.randrange(40), length=1))
    return ScenarioScript.make(
        num_sites,
        events,
        seed=seed,
        topology=FULL_MESH,
        policy=policy,
        latency={"kind": "uniform", "low": 1, "high": max_latency},
        clamp=True,
    )


def _witness_from_script(engine: str, tie_break: str, strategy: str, script, texts) -> Witness:
    intents = tuple(
        (e.site, ("insert", e.pos, e.content) if e.kind == "insert" else ("delete", e.pos))
        for e in script.events
    )
    return Witness(
        classification=DIVERGENCE,
        engine=engine,
        tie_break=tie_break,
        strategy=strategy,
        seed=script.seed,
        initial=script.initial,
        intents=intents,
        delivery=f"sim:{script.policy}:latency={script.latency_model()}",
        texts=tuple(sorted(texts.items())),
        script_json=json.dumps(script_to_dict(script)),
    )


def minimize_script(script: ScenarioScript, engine: str, *, tie_break: str, strategy: str):
    """Greedy single-op removal: drop events while the divergence persists."""
    current = script
    changed = True
    while changed:
        changed = False
        for i in range(len(current.events)):
            candidate = ScenarioScript.make(
                current.num_sites,
                current.events[:i] + current.events[i + 1 :],
                seed=current.seed,
                initial=current.initial,
                topology=current.topology,
                policy=current.policy,
                latency=current.latency_model(),
                clamp=True,
            )
            result = run_scenario(candidate, engine, tie_break=tie_break, strategy=strategy)
            if not check_convergence(result).converged or result.failures:
                current = candidate
                changed = True
                break
    return current


def fuzz_convergence(
    engine: str,
    runs: int = 1000,
    *,
    ops_per_site: int = 20,
    num_sites: int = 3,
    seed0: int = 0,
    tie_break: str = SITE_ORDER,
    strategy: str = BOUNDARY,
    policy: str = CAUSAL_ORDER,
    minimize: bool = True,
) -> FuzzSummary:
    """Run ``runs`` seeded random scenarios; every run must converge. A
    divergence is minimized into a replayable witness; divergences are data,
    not crashes."""
    summary = FuzzSummary(engine)
    for i in range(runs):
        script = random_script(
            seed0 + i, num_sites=num_sites, ops_per_site=ops_per_site, policy=policy
        )
        result = run_scenario(script, engine, tie_break=tie_break, strategy=strategy)
        summary.runs += 1
        summary.max_concurrency_seen = max(
            summary.max_concurrency_seen,
            max((m.get("max_concurrency_observed", 0) for m in result.metrics.values()), default=0),
        )
        report = check_convergence(result)
        if report.converged and not result.failures:
            summary.converged += 1
            continue
        summary.divergences += 1
        shrunk = (
            minimize_script(script, engine, tie_break=tie_break, strategy=strategy)
            if minimize
            else script
        )
        final = run_scenario(shrunk, engine, tie_break=tie_break, strategy=strategy)
        summary.witnesses.append(
            _witness_from_script(engine, tie_break, strategy, shrunk, final.texts)
        )
    return summary


def replay_fuzz_witness(w: Witness) -> dict[int, str]:
    """Re-run a fuzz witness's embedded script; returns per-site final texts."""
    if not w.script_json:
        raise ValueError("witness carries no simulator script")
    script = script_from_dict(json.loads(w.script_json))
    result = run_scenario(script, w.engine, tie_break=w.tie_break, strategy=w.strategy)
    return result.texts
