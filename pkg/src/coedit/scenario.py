"""Scenario scripts: declarative timed edits per site, JSON (de)serialization,
and intent resolution against a live view.

JSON schema (one object per file)::

    {
      "m": 3,                      # number of editing sites (1..m)
      "seed": 42,
      "initial": "",               # starting document, shared by all sites
      "topology": "full-mesh",     # or "star-server"
      "policy": "causal-order",    # or "woot-precondition" | "random-order"
      "latency": {"kind": "fixed", "ticks": 1},
                                   # or {"kind": "uniform", "low": 1, "high": 5}
      "events": [
        {"t": 0, "site": 1, "kind": "insert", "pos": 0, "content": "a"},
        {"t": 2, "site": 2, "kind": "delete", "pos": 0, "length": 1}
      ]
    }

Intent positions refer to the issuing site's view at execution time; with
``clamp`` (the default) they are clipped into range so the same script stays
valid under every delivery schedule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .core import DELETE, INSERT, EditOp, delete_op, insert_op
from .errors import ConfigError

FULL_MESH = "full-mesh"
STAR_SERVER = "star-server"
TOPOLOGIES = (FULL_MESH, STAR_SERVER)

CAUSAL_ORDER = "causal-order"
WOOT_PRECONDITION = "woot-precondition"
RANDOM_ORDER = "random-order"
DELIVERY_POLICIES = (CAUSAL_ORDER, WOOT_PRECONDITION, RANDOM_ORDER)


@dataclass(frozen=True, slots=True)
class ScriptEvent:
    """One timed edit intent. ``pos`` is interpreted against the issuing
    site's view at time ``t``."""

    t: int
    site: int
    kind: str  # insert | delete
    pos: int
    content: str = ""
    length: int = 1


@dataclass(frozen=True, slots=True)
class ScenarioScript:
    num_sites: int
    events: tuple[ScriptEvent, ...] = ()
    seed: int = 0
    initial: str = ""
    topology: str = FULL_MESH
    policy: str = CAUSAL_ORDER
    latency: tuple[tuple[str, int], ...] = (("kind", 0), ("ticks", 1))
    clamp: bool = True

    @staticmethod
    def make(
        num_sites: int,
        events,
        seed: int = 0,
        initial: str = "",
        topology: str = FULL_MESH,
        policy: str = CAUSAL_ORDER,
        latency: Optional[dict] = None,
        clamp: bool = True,
    ) -> "ScenarioScript":
        lat = latency or {"kind": "fixed", "ticks": 1}
        return ScenarioScript(
            num_sites,
            tuple(events),
            seed,
            initial,
            topology,
            policy,
            _freeze_latency(lat),
            clamp,
        )

    def latency_model(self) -> dict:
        return dict(self.latency)

    def with_latency(self, model: dict) -> "ScenarioScript":
        return replace(self, latency=_freeze_latency(model))

    def validate(self) -> None:
        if self.num_sites < 1:
            raise ConfigError("scripts need at least one site")
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"unknown topology {self.topology!r}")
        if self.policy not in DELIVERY_POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}")
        for ev in self.events:
            if not 1 <= ev.site <= self.num_sites:
                raise ConfigError(f"event site {ev.site} outside 1..{self.num_sites}")
            if ev.kind not in (INSERT, DELETE):
                raise ConfigError(f"unknown event kind {ev.kind!r}")


def _freeze_latency(model: dict) -> tuple:
    kind = model.get("kind", "fixed")
    if kind == "fixed":
        return (("kind", "fixed"), ("ticks", int(model.get("ticks", 1))))
    if kind == "uniform":
        lo, hi = int(model.get("low", 1)), int(model.get("high", 5))
        if lo > hi:
            raise ConfigError("uniform latency needs low <= high")
        return (("kind", "uniform"), ("low", lo), ("high", hi))
    raise ConfigError(f"unknown latency kind {kind!r}")


def resolve_intent(ev: ScriptEvent, view_len: int, clamp: bool) -> Optional[EditOp]:
    """Turn a script intent into an EditOp against a view of ``view_len``
    characters. Returns None when a clamped delete has nothing to remove."""
    if ev.kind == INSERT:
        pos = min(ev.pos, view_len) if clamp else ev.pos
        return insert_op(pos, ev.content, ev.site)
    length = ev.length
    pos = ev.pos
    if clamp:
        if view_len == 0:
            return None
        pos = min(pos, view_len - 1)
        length = min(length, view_len - pos)
    return delete_op(pos, length, ev.site)


def script_to_dict(script: ScenarioScript) -> dict:
    return {
        "m": script.num_sites,
        "seed": script.seed,
        "initial": script.initial,
        "topology": script.topology,
        "policy": script.policy,
        "latency": script.latency_model(),
        "clamp": script.clamp,
        "events": [
            {
                "t": e.t,
                "site": e.site,
                "kind": e.kind,
                "pos": e.pos,
                **({"content": e.content} if e.kind == INSERT else {"length": e.length}),
            }
            for e in script.events
        ],
    }


def script_from_dict(data: dict) -> ScenarioScript:
    events = [
        ScriptEvent(
            t=int(e["t"]),
            site=int(e["site"]),
            kind=e["kind"],
            pos=int(e["pos"]),
            content=e.get("content", ""),
            length=int(e.get("length", 1)),
        )
        for e in data.get("events", [])
    ]
    script = ScenarioScript.make(
        num_sites=int(data["m"]),
        events=events,
        seed=int(data.get("seed", 0)),
        initial=data.get("initial", ""),
        topology=data.get("topology", FULL_MESH),
        policy=data.get("policy", CAUSAL_ORDER),
        latency=data.get("latency"),
        clamp=bool(data.get("clamp", True)),
    )
    script.validate()
    return script


def load_script(path: str | Path) -> ScenarioScript:
    return script_from_dict(json.loads(Path(path).read_text()))


def save_script(script: ScenarioScript, path: str | Path) -> None:
    Path(path).write_text(json.dumps(script_to_dict(script), indent=2) + "\n")
