"""Exhaustive small-instance sweeps: the convergence oracle over concurrent
op sets, the false-tie puzzle search, and the WOOT precondition-delivery
check.

The sweep model fixes maximal concurrency: every scripted op is generated
before any delivery, so wire forms are identical at every site, and each
site's delivery schedule can then be enumerated independently (any
combination of per-site schedules is a realizable run). Generation-placement
interleavings are covered separately by ``sim.enumerate_orders`` on small
scripts; this module is the scale path.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Iterator

from .core import EditOp
from .engines import OT, make_replica
from .errors import CoEditError, ConfigError
from .logoot import BOUNDARY
from .ot import NAIVE_LEFT, SITE_ORDER
from .scenario import resolve_intent, ScriptEvent
from .witness import DIVERGENCE, ORDER_VIOLATION, Witness

Intent = tuple  # ("insert", pos, ch) | ("delete", pos)

CAUSAL = "causal"
PERMUTATIONS = "permutations"  # WOOT precondition mode: any order, gated


def iter_docs(max_len: int, alphabet: str = "ab") -> Iterator[str]:
    for n in range(max_len + 1):
        for tup in itertools.product(alphabet, repeat=n):
            yield "".join(tup)


def iter_intents(doc_len: int, alphabet: str = "ab") -> list[Intent]:
    out: list[Intent] = []
    for pos in range(doc_len + 1):
        for ch in alphabet:
            out.append(("insert", pos, ch))
    for pos in range(doc_len):
        out.append(("delete", pos))
    return out


def _intent_event(site: int, intent: Intent) -> ScriptEvent:
    if intent[0] == "insert":
        return ScriptEvent(0, site, "insert", intent[1], intent[2])
    return ScriptEvent(0, site, "delete", intent[1], length=1)


def distributions(max_ops: int) -> list[tuple[int, ...]]:
    """Ordered op-count-per-site shapes with at most ``max_ops`` ops total.

    Sites are distinguishable (tie-breaks look at site ids), so (2,1) and
    (1,2) are different shapes.
    """
    out = []
    for total in range(1, max_ops + 1):
        for parts in _compositions(total):
            out.append(parts)
    return out


def _compositions(total: int) -> Iterator[tuple[int, ...]]:
    if total == 0:
        yield ()
        return
    for first in range(total, 0, -1):
        for rest in _compositions(total - first):
            yield (first,) + rest


def _stream_interleavings(streams: list[list]) -> Iterator[list]:
    """All merges of the given FIFO streams."""
    nonempty = [s for s in streams if s]
    if not nonempty:
        yield []
        return
    for i, s in enumerate(nonempty):
        head, rest = s[0], nonempty[:i] + [s[1:]] + nonempty[i + 1 :]
        for tail in _stream_interleavings(rest):
            yield [head] + tail


@dataclass(slots=True)
class SweepReport:
    engine: str
    tie_break: str
    mode: str
    cases: int = 0
    orders_checked: int = 0
    witnesses: list[Witness] = field(default_factory=list)
    elapsed_s: float = 0.0
    stalls: int = 0

    @property
    def clean(self) -> bool:
        return not self.witnesses and not self.stalls


class _BaseCache:
    """Seeded start replicas per initial doc, cloned per case."""

    def __init__(self, engine: str, tie_break: str, strategy: str, seed: int):
        self.engine = engine
        self.tie_break = tie_break
        self.strategy = strategy
        self.seed = seed
        self._cache: dict[tuple[str, int], list] = {}

    def replicas(self, initial: str, num_sites: int) -> list:
        key = (initial, num_sites)
        base = self._cache.get(key)
        if base is None:
            base = [
                make_replica(
                    self.engine, s, tie_break=self.tie_break, strategy=self.strategy, seed=self.seed
                )
                for s in range(1, num_sites + 1)
            ]
            if initial:
                setup = make_replica(
                    self.engine, 0, tie_break=self.tie_break, strategy=self.strategy, seed=self.seed
                )
                for i, ch in enumerate(initial):
                    wire = setup.local(EditOp("insert", i, 0, content=ch))
                    for r in base:
                        r.remote(wire)
            self._cache[key] = base
        return [r.clone() for r in base]


def check_concurrent_case(
    cache: _BaseCache,
    initial: str,
    per_site: list[list[Intent]],
    mode: str = CAUSAL,
) -> tuple[set[str], int, int, list[str]]:
    """Generate all ops concurrently, then run every per-site delivery order.

    Returns (final texts seen, orders checked, stalls, order labels of
    divergent-or-stalled runs).
    """
    m = len(per_site)
    gen = cache.replicas(initial, m)
    streams: list[list] = []
    for i, intents in enumerate(per_site):
        wires = []
        for intent in intents:
            op = resolve_intent(_intent_event(i + 1, intent), len(gen[i].text()), clamp=True)
            if op is not None:
                wires.append(gen[i].local(op))
        streams.append(wires)

    texts: set[str] = set()
    labels: list[str] = []
    orders = 0
    stalls = 0
    errors = 0
    for i in range(m):
        foreign = [streams[j] for j in range(m) if j != i]
        if mode == CAUSAL:
            schedules = _stream_interleavings(foreign)
        else:
            flat = [w for s in foreign for w in s]
            schedules = itertools.permutations(flat)
        for schedule in schedules:
            orders += 1
            replica = gen[i].clone()
            broken = False
            if mode == CAUSAL:
                for wire in schedule:
                    try:
                        replica.remote(wire)
                    except CoEditError as exc:
                        # a flawed control scheme can produce out-of-range
                        # forms; that is a finding, not a crash
                        errors += 1
                        labels.append(f"site {i + 1}: {exc}")
                        broken = True
                        break
            else:
                pending = list(schedule)
                progressed = True
                while pending and progressed:
                    progressed = False
                    for wire in list(pending):
                        if replica.executable(wire):
                            pending.remove(wire)
                            replica.remote(wire)
                            progressed = True
                if pending:
                    stalls += 1
                    labels.append(f"site {i + 1}: stalled with {len(pending)} buffered")
                    continue
            if not broken:
                texts.add(replica.text())
    return texts, orders, stalls + errors, labels


def _case_witness(
    engine: str,
    tie_break: str,
    strategy: str,
    seed: int,
    initial: str,
    per_site: list[list[Intent]],
    classification: str,
    texts: set[str],
    delivery: str,
) -> Witness:
    intents = tuple(
        (i + 1, tuple(intent)) for i, intents in enumerate(per_site) for intent in intents
    )
    return Witness(
        classification=classification,
        engine=engine,
        tie_break=tie_break,
        strategy=strategy,
        seed=seed,
        initial=initial,
        intents=intents,
        delivery=delivery,
        texts=tuple(enumerate(sorted(texts))),
    )


def _assignments(dist: tuple[int, ...], intents: list[Intent]):
    """Every way to hand each site in the distribution its intent sequence."""
    pools = [itertools.product(intents, repeat=k) for k in dist]
    return itertools.product(*pools)


def _swap_ab(s: str) -> str:
    return s.translate(str.maketrans("ab", "ba"))


def _swap_intent(intent: Intent) -> Intent:
    if intent[0] == "insert":
        return ("insert", intent[1], _swap_ab(intent[2]))
    return intent


def _canonical_under_swap(initial: str, per_site) -> bool:
    """True when this case is the representative of its a<->b symmetry pair.

    Engines never compare character payloads, so swapping the alphabet maps
    runs onto runs; checking one representative per pair is exhaustive.
    """
    swapped = (
        _swap_ab(initial),
        tuple(tuple(_swap_intent(i) for i in site) for site in per_site),
    )
    original = (initial, tuple(tuple(tuple(i) for i in site) for site in per_site))
    return original <= swapped


def sweep_concurrent_convergence(
    engine: str,
    *,
    max_ops: int = 3,
    max_doc_len: int = 3,
    alphabet: str = "ab",
    tie_break: str = SITE_ORDER,
    strategy: str = BOUNDARY,
    seed: int = 0,
    mode: str = CAUSAL,
    symmetry_dedupe: bool = True,
    max_witnesses: int = 16,
) -> SweepReport:
    """Exhaustive convergence check over every concurrent op set of at most
    ``max_ops`` ops on every start doc of at most ``max_doc_len`` chars."""
    if mode == PERMUTATIONS and engine != "woot":
        raise ConfigError("permutation delivery is gated by the WOOT precondition only")
    report = SweepReport(engine, tie_break, mode)
    t0 = time.perf_counter()
    cache = _BaseCache(engine, tie_break, strategy, seed)
    for initial in iter_docs(max_doc_len, alphabet):
        intents = iter_intents(len(initial), alphabet)
        for dist in distributions(max_ops):
            sites = len(dist) if len(dist) > 1 else 2  # an idle observer still receives
            padded = dist + (0,) * (sites - len(dist))
            for assignment in _assignments(padded, intents):
                per_site = [list(seq) for seq in assignment]
                if symmetry_dedupe and not _canonical_under_swap(initial, per_site):
                    continue
                texts, orders, stalls, labels = check_concurrent_case(
                    cache, initial, per_site, mode
                )
                report.cases += 1
                report.orders_checked += orders
                report.stalls += stalls
                if len(texts) > 1 or stalls:
                    if len(report.witnesses) < max_witnesses:
                        report.witnesses.append(
                            _case_witness(
                                engine,
                                tie_break,
                                strategy,
                                seed,
                                initial,
                                per_site,
                                ORDER_VIOLATION if stalls else DIVERGENCE,
                                texts,
                                f"{mode}; {'; '.join(labels) or 'all per-site orders'}",
                            )
                        )
    report.elapsed_s = time.perf_counter() - t0
    return report


def search_ft_puzzle(
    max_ops: int = 3,
    doc_len: int = 3,
    alphabet: str = "ab",
    *,
    tie_break: str = NAIVE_LEFT,
    seed: int = 0,
    max_witnesses: int = 16,
) -> SweepReport:
    """Exhaustive search for tie-break divergence in the OT engine.

    Under the deliberately flawed naive-left policy this returns divergence
    witnesses (the classic false-tie failure shape: both sides of an
    equal-position tie keep their position); under site-order the same space
    comes back clean.
    """
    return sweep_concurrent_convergence(
        OT,
        max_ops=max_ops,
        max_doc_len=doc_len,
        alphabet=alphabet,
        tie_break=tie_break,
        seed=seed,
        max_witnesses=max_witnesses,
    )


def replay_concurrent_witness(w: Witness) -> set[str]:
    """Re-run a sweep witness; returns the set of final texts reached."""
    per_site: dict[int, list[Intent]] = {}
    for site, intent in w.intents:
        per_site.setdefault(site, []).append(intent)
    m = max(per_site, default=1)
    m = max(m, 2)
    cache = _BaseCache(w.engine, w.tie_break, w.strategy, w.seed)
    listed = [per_site.get(s + 1, []) for s in range(m)]
    mode = PERMUTATIONS if w.delivery.startswith(PERMUTATIONS) else CAUSAL
    texts, _, stalls, _ = check_concurrent_case(cache, w.initial, listed, mode)
    return texts
