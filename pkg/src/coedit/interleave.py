"""Concurrent-insert interleaving study: two sites type a word each at the
same spot, and we record whether each word survives contiguously in the
converged text.

OT propagates each word as one string op, so contiguity holds by
construction. WOOT chains each character onto its predecessor, which keeps
concurrent chains apart. Logoot allocates an independent identifier per
character; whether two concurrent words interleave depends on how the
allocated identifier sequences happen to order, so incidence is reported per
allocation strategy rather than asserted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import insert_op
from .engines import LOGOOT, OT, WOOT, make_replica
from .errors import ConfigError
from .logoot import BOUNDARY
from .ot import SITE_ORDER


@dataclass(slots=True)
class InterleavingReport:
    engine: str
    strategy: str
    word_a: str
    word_b: str
    runs: int = 0
    converged: int = 0
    contiguous: int = 0
    noncontiguous_examples: list[str] = field(default_factory=list)

    @property
    def noncontiguous(self) -> int:
        return self.runs - self.contiguous


def _type_word(replica, word: str) -> list:
    wires = []
    for i, ch in enumerate(word):
        wires.append(replica.local(insert_op(i, ch, replica.site)))
    return wires


def scenario_interleaving(
    word_a: str,
    word_b: str,
    engine: str,
    seeds: int = 100,
    *,
    strategy: str = BOUNDARY,
    tie_break: str = SITE_ORDER,
) -> InterleavingReport:
    """Both sites concurrently insert their word at position 0 of an empty
    shared doc; one run per seed. OT sends the word as a single string op;
    the CRDT engines type it left to right, each char anchored after its
    predecessor."""
    if not word_a or not word_b:
        raise ConfigError("interleaving scenario needs non-empty words")
    report = InterleavingReport(engine, strategy if engine == LOGOOT else "-", word_a, word_b)
    for seed in range(seeds):
        a = make_replica(engine, 1, tie_break=tie_break, strategy=strategy, seed=seed)
        b = make_replica(engine, 2, tie_break=tie_break, strategy=strategy, seed=seed)
        if engine == OT:
            wires_a = [a.local(insert_op(0, word_a, 1))]
            wires_b = [b.local(insert_op(0, word_b, 2))]
        else:
            wires_a = _type_word(a, word_a)
            wires_b = _type_word(b, word_b)
        for w in wires_b:
            a.remote(w)
        for w in wires_a:
            b.remote(w)
        report.runs += 1
        ta, tb = a.text(), b.text()
        if ta == tb:
            report.converged += 1
        if word_a in ta and word_b in ta:
            report.contiguous += 1
        elif len(report.noncontiguous_examples) < 5:
            report.noncontiguous_examples.append(ta)
    return report
