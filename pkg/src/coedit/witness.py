"""Replayable counterexamples produced by searches, sweeps, and fuzzing."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
DIVERGENCE = "divergence"
INTERLEAVING = "interleaving"
ORDER_VIOLATION = "order-violation"


@dataclass(frozen=True, slots=True)
class Witness:
    """Everything needed to re-run one failing (or notable) case bit-exactly."""

    classification: str  # divergence | interleaving | order-violation
    engine: str
    tie_break: str
    strategy: str
    seed: int
    initial: str
    intents: tuple[tuple[int, tuple], ...]  # (site, (kind, pos, payload)) per op
    delivery: str  # human-readable order/policy description
    texts: tuple[tuple[int, str], ...]  # per-site final texts observed
    script_json: str = ""  # full timed script when the case came from the simulator

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "engine": self.engine,
            "tie_break": self.tie_break,
            "strategy": self.strategy,
            "seed": self.seed,
            "initial": self.initial,
            "intents": [[site, list(intent)] for site, intent in self.intents],
            "delivery": self.delivery,
            "texts": {str(s): t for s, t in self.texts},
            "script": json.loads(self.script_json) if self.script_json else None,
        }


def witness_from_dict(data: dict) -> Witness:
    script = data.get("script")
    return Witness(
        classification=data["classification"],
        engine=data["engine"],
        tie_break=data.get("tie_break", "site-order"),
        strategy=data.get("strategy", "boundary"),
        seed=int(data.get("seed", 0)),
        initial=data.get("initial", ""),
        intents=tuple((int(s), tuple(i)) for s, i in data["intents"]),
        delivery=data.get("delivery", ""),
        texts=tuple(sorted((int(s), t) for s, t in data["texts"].items())),
        script_json=json.dumps(script) if script else "",
    )


def save_witnesses(witnesses: list[Witness], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps([w.to_dict() for w in witnesses], indent=2, ensure_ascii=False) + "\n"
    )


def load_witnesses(path: str | Path) -> list[Witness]:
    return [witness_from_dict(d) for d in json.loads(Path(path).read_text())]
