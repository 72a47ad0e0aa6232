"""Deterministic discrete-event simulator for one co-editing session, plus
the exhaustive delivery-order explorer used as the convergence oracle.

``run_scenario`` drives one seeded run: integer-tick virtual time, seeded
latency draws, per-policy delivery gating, and a replayable event trace.
``enumerate_orders`` abandons time altogether and walks every distinct
per-site schedule (generation placement included) of a small script,
merging branches that reach identical semantic states.
"""

from __future__ import annotations

import heapq
import random
import time as _time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .core import EditOp, VectorClock, causally_ready
from .engines import (
    LOGOOT,
    OT,
    OT_SERVER,
    SYMMETRIC_ENGINES,
    WOOT,
    make_replica,
    split_for_engine,
    wire_clock,
    wire_key,
    wire_site,
)
from .errors import (
    CausalityError,
    CoEditError,
    ConfigError,
    DeliveryStall,
    PreconditionError,
    SizeError,
)
from .jupiter import OTClient, OTServer
from .logoot import BOUNDARY
from .ot import SITE_ORDER
from .scenario import (
    CAUSAL_ORDER,
    FULL_MESH,
    RANDOM_ORDER,
    STAR_SERVER,
    WOOT_PRECONDITION,
    ScenarioScript,
    ScriptEvent,
    resolve_intent,
)

SETUP_SITE = 0  # reserved site that types the initial document


@dataclass(slots=True)
class ConvergenceReport:
    converged: bool
    texts: dict[int, str]
    divergence_index: Optional[int] = None

    def __bool__(self) -> bool:
        return self.converged


@dataclass(slots=True)
class ScenarioResult:
    engine_kind: str
    script: ScenarioScript
    texts: dict[int, str]
    trace: list[str]
    metrics: dict[int, dict]
    failures: list[str] = field(default_factory=list)
    order_label: Optional[tuple] = None  # set by enumerate_orders

    def report(self) -> ConvergenceReport:
        return check_convergence(self)


def check_convergence(result: ScenarioResult) -> ConvergenceReport:
    """Equal-texts check with the first differing index on divergence."""
    texts = result.texts
    values = list(texts.values())
    if not values or all(t == values[0] for t in values[1:]):
        return ConvergenceReport(True, dict(texts))
    a = min(values)
    b = max(values)
    idx = next((i for i, (x, y) in enumerate(zip(a, b)) if x != y), min(len(a), len(b)))
    return ConvergenceReport(False, dict(texts), idx)


def inject_latency(script: ScenarioScript, model: dict) -> ScenarioScript:
    """Same script, different seeded delivery-delay distribution."""
    return script.with_latency(model)


def _check_compat(engine_kind: str, script: ScenarioScript) -> None:
    if script.policy == WOOT_PRECONDITION and engine_kind != WOOT:
        raise ConfigError("woot-precondition delivery is only valid with the woot engine")
    if engine_kind == OT_SERVER:
        if script.topology != STAR_SERVER:
            raise ConfigError("server-based OT needs the star-server topology")
        if script.policy != CAUSAL_ORDER:
            raise ConfigError("server-based OT delivers in server revision order")
    if engine_kind not in (*SYMMETRIC_ENGINES, OT_SERVER):
        raise ConfigError(f"unknown engine kind {engine_kind!r}")


def _gate(policy: str, replica, wire) -> bool:
    if policy == CAUSAL_ORDER:
        return causally_ready(wire_clock(wire), wire_site(wire), replica.clock_view())
    if policy == WOOT_PRECONDITION:
        return replica.executable(wire)
    if policy == RANDOM_ORDER:
        # WOOT keeps its own precondition even on a random network; engines
        # without one take deliveries as they come (failures become data).
        return replica.executable(wire) if hasattr(replica, "executable") else True
    raise ConfigError(f"unknown policy {policy!r}")


class _SymmetricSite:
    """Adapter giving every symmetric replica a uniform clock view."""

    def __init__(self, replica):
        self.replica = replica

    def clock_view(self) -> VectorClock:
        r = self.replica
        return r.delivered if hasattr(r, "delivered") else r.clock

    def __getattr__(self, name):
        # forwards `executable` for engines that define a delivery precondition
        return getattr(self.replica, name)


def _concurrency(delivered: VectorClock, wire) -> int:
    """Ops at the receiver that the incoming op's context does not cover."""
    ctx = dict(wire_clock(wire).items())
    sender = wire_site(wire)
    if sender in ctx:
        ctx[sender] -= 1
    return sum(max(0, n - ctx.get(s, 0)) for s, n in delivered.items())


def run_scenario(
    script: ScenarioScript,
    engine_kind: str,
    *,
    tie_break: str = SITE_ORDER,
    strategy: str = BOUNDARY,
) -> ScenarioResult:
    """One deterministic seeded run; all ops delivered everywhere by the end."""
    script.validate()
    _check_compat(engine_kind, script)
    if engine_kind == OT_SERVER:
        return _run_server_based(script, tie_break)
    return _run_symmetric(script, engine_kind, tie_break, strategy)


# --------------------------------------------------------------------------------
# symmetric engines (distributed OT, WOOT, Logoot)
# --------------------------------------------------------------------------------


def _make_sites(script: ScenarioScript, engine_kind: str, tie_break: str, strategy: str):
    sites = {}
    for s in range(1, script.num_sites + 1):
        sites[s] = _SymmetricSite(
            make_replica(engine_kind, s, tie_break=tie_break, strategy=strategy, seed=script.seed)
        )
    return sites


def _seed_initial(script: ScenarioScript, engine_kind: str, sites: dict) -> None:
    """A reserved setup site types the initial document; every replica
    integrates those ops before the scripted session starts."""
    if not script.initial:
        return
    setup = _SymmetricSite(
        make_replica(
            engine_kind,
            SETUP_SITE,
            tie_break=sites[1].replica.policy if engine_kind == OT else SITE_ORDER,
            strategy=getattr(sites[1].replica, "strategy", BOUNDARY),
            seed=script.seed,
        )
    )
    for i, ch in enumerate(script.initial):
        wire = setup.replica.local(EditOp("insert", i, SETUP_SITE, content=ch))
        for site in sites.values():
            site.replica.remote(wire)


class _LatencyDraw:
    def __init__(self, script: ScenarioScript):
        self.model = script.latency_model()
        self.rng = random.Random(script.seed ^ 0x5EED)

    def __call__(self) -> int:
        if self.model["kind"] == "fixed":
            return self.model["ticks"]
        return self.rng.randint(self.model["low"], self.model["high"])


def _run_symmetric(
    script: ScenarioScript, engine_kind: str, tie_break: str, strategy: str
) -> ScenarioResult:
    sites = _make_sites(script, engine_kind, tie_break, strategy)
    _seed_initial(script, engine_kind, sites)
    draw = _LatencyDraw(script)
    order_rng = random.Random(script.seed ^ 0x0D0E)

    trace: list[str] = []
    failures: list[str] = []
    heap: list[tuple] = []
    counter = 0
    last_link_time: dict[tuple, int] = {}
    pending: dict[int, list] = {s: [] for s in sites}
    max_c = {s: 0 for s in sites}
    max_buffered = {s: 0 for s in sites}
    timings = {s: {"local_s": 0.0, "remote_s": 0.0, "local_ops": 0, "remote_ops": 0} for s in sites}

    def push(t: int, site: int, payload) -> None:
        nonlocal counter
        counter += 1
        heapq.heappush(heap, (t, site, counter, payload))

    def schedule_delivery(t: int, sender: int, receiver: int, wire) -> None:
        d = draw()
        if script.policy == RANDOM_ORDER:
            at = t + 1 + order_rng.randint(0, 9)  # deliberately reorderable
        else:
            link = (sender, receiver)
            at = max(t + d, last_link_time.get(link, 0))  # FIFO per link
            last_link_time[link] = at
        push(at, receiver, ("deliver", sender, wire))

    def integrate(t: int, receiver: int, sender: int, wire) -> None:
        site = sites[receiver]
        c = _concurrency(site.clock_view(), wire)
        max_c[receiver] = max(max_c[receiver], c)
        t0 = _time.perf_counter()
        patches = site.replica.remote(wire)
        timings[receiver]["remote_s"] += _time.perf_counter() - t0
        timings[receiver]["remote_ops"] += 1
        trace.append(f"{t} recv site={receiver} from={sender} c={c} patches={patches!r}")

    def drain_pending(t: int, receiver: int) -> None:
        site = sites[receiver]
        progressed = True
        while progressed:
            progressed = False
            for item in list(pending[receiver]):
                sender, wire = item
                if _gate(script.policy, site, wire):
                    pending[receiver].remove(item)
                    integrate(t, receiver, sender, wire)
                    progressed = True

    for ev in sorted(script.events, key=lambda e: (e.t, e.site)):
        push(ev.t, ev.site, ("edit", ev))

    while heap:
        t, site_id, _, payload = heapq.heappop(heap)
        if payload[0] == "edit":
            ev: ScriptEvent = payload[1]
            site = sites[site_id]
            op = resolve_intent(ev, len(site.replica.text()), script.clamp)
            if op is None:
                trace.append(f"{t} skip site={site_id} empty-view delete")
                continue
            targets = [s for s in sites if s != site_id]
            hub_at = t + draw() if script.topology == STAR_SERVER else None
            for unit in split_for_engine(engine_kind, op):
                t0 = _time.perf_counter()
                wire = site.replica.local(unit)
                timings[site_id]["local_s"] += _time.perf_counter() - t0
                timings[site_id]["local_ops"] += 1
                trace.append(f"{t} edit site={site_id} op={unit!r}")
                if script.topology == FULL_MESH:
                    for r in targets:
                        schedule_delivery(t, site_id, r, wire)
                else:  # star relay: one hop in, one hop out
                    for r in targets:
                        schedule_delivery(hub_at, site_id, r, wire)
        else:
            _, sender, wire = payload
            site = sites[site_id]
            if _gate(script.policy, site, wire):
                try:
                    integrate(t, site_id, sender, wire)
                except CoEditError as exc:
                    # flawed configurations may reject or misplace ops;
                    # that is a recorded finding, not a crash
                    failures.append(f"site {site_id}: {exc}")
                    trace.append(f"{t} fail site={site_id} {exc}")
                    continue
                drain_pending(t, site_id)
            else:
                pending[site_id].append((sender, wire))
                max_buffered[site_id] = max(max_buffered[site_id], len(pending[site_id]))
                trace.append(f"{t} buffer site={site_id} from={sender}")

    stalled = {s: len(p) for s, p in pending.items() if p}
    if stalled:
        if script.policy == RANDOM_ORDER or failures:
            failures.append(f"undrained buffers: {stalled}")
        else:
            raise DeliveryStall(f"pending buffers never drained: {stalled}")

    metrics = {}
    for s, site in sites.items():
        m = site.replica.metrics()
        m["max_concurrency_observed"] = max_c[s]
        m["buffered_max"] = max_buffered[s]
        m.update(timings[s])
        metrics[s] = m
    return ScenarioResult(
        engine_kind,
        script,
        {s: site.replica.text() for s, site in sites.items()},
        trace,
        metrics,
        failures,
    )


# --------------------------------------------------------------------------------
# server-based OT (transforming server, star topology)
# --------------------------------------------------------------------------------


def _run_server_based(script: ScenarioScript, tie_break: str) -> ScenarioResult:
    server = OTServer(policy=tie_break, text=script.initial)
    clients = {
        s: OTClient(s, policy=tie_break, text=script.initial) for s in range(1, script.num_sites + 1)
    }
    draw = _LatencyDraw(script)
    trace: list[str] = []
    heap: list[tuple] = []
    counter = 0
    last_link_time: dict[tuple, int] = {}

    def push(t: int, site: int, payload) -> None:
        nonlocal counter
        counter += 1
        heapq.heappush(heap, (t, site, counter, payload))

    def fifo_at(t: int, link: tuple) -> int:
        at = max(t + draw(), last_link_time.get(link, 0))
        last_link_time[link] = at
        return at

    for ev in sorted(script.events, key=lambda e: (e.t, e.site)):
        push(ev.t, ev.site, ("edit", ev))

    while heap:
        t, site_id, _, payload = heapq.heappop(heap)
        kind = payload[0]
        if kind == "edit":
            ev = payload[1]
            client = clients[site_id]
            op = resolve_intent(ev, len(client.text), script.clamp)
            if op is None:
                continue
            wire = client.local(op)
            trace.append(f"{t} edit site={site_id} op={op!r}")
            if wire is not None:
                push(fifo_at(t, (site_id, "srv")), 0, ("submit", site_id, wire))
        elif kind == "submit":
            _, sender, wire = payload
            rebased = server.integrate(wire)
            trace.append(f"{t} server rev={rebased.revision} from={sender}")
            for cid in clients:
                push(fifo_at(t, ("srv", cid)), cid, ("broadcast", rebased))
        else:
            _, rebased = payload
            client = clients[site_id]
            applied = client.incoming(rebased)
            trace.append(f"{t} recv site={site_id} rev={rebased.revision} applied={applied!r}")
            nxt = client.take_outgoing()
            if nxt is not None:
                push(fifo_at(t, (site_id, "srv")), 0, ("submit", site_id, nxt))

    texts = {s: c.text for s, c in clients.items()}
    texts[0] = server.text  # server document participates in the check
    metrics = {
        s: {"pending": len(c.pending), "revision": c.revision} for s, c in clients.items()
    }
    metrics[0] = {"revision": server.revision, "history_len": len(server.log)}
    return ScenarioResult(OT_SERVER, script, texts, trace, metrics)


# --------------------------------------------------------------------------------
# exhaustive order enumeration (the oracle)
# --------------------------------------------------------------------------------

MAX_ENUM_OPS = 6


@dataclass(slots=True)
class _EnumState:
    replicas: dict
    cursors: list[int]  # per site index into its intent list
    sent: list[list]  # per site: wires in generation order
    delivered: dict[tuple[int, int], frozenset]  # (receiver, sender) -> indices
    labels: dict[int, tuple]  # per-site projection of local events
    failure: Optional[str] = None  # an engine rejected an op on this path


def enumerate_orders(
    script: ScenarioScript,
    engine_kind: str,
    *,
    tie_break: str = SITE_ORDER,
    strategy: str = BOUNDARY,
    dedupe: str = "projection",
    on_leaf: Optional[Callable[[dict, dict], None]] = None,
) -> list[ScenarioResult]:
    """Walk every distinct per-site schedule of a small script.

    A schedule interleaves each site's own generations with deliveries of the
    other sites' ops, subject to the delivery policy's gating. Two global
    schedules that project to the same per-site event sequences are the same
    interleaving; with ``dedupe="state"`` schedules are additionally merged
    as soon as they reach identical replica states (faster, same reachable
    outcomes, but no interleaving count).
    """
    script.validate()
    _check_compat(engine_kind, script)
    if engine_kind == OT_SERVER:
        raise ConfigError("order enumeration drives symmetric engines only")
    if len(script.events) > MAX_ENUM_OPS:
        raise SizeError(f"{len(script.events)} ops exceed the enumeration guard ({MAX_ENUM_OPS})")

    per_site: dict[int, list[ScriptEvent]] = {s: [] for s in range(1, script.num_sites + 1)}
    for ev in sorted(script.events, key=lambda e: (e.t, e.site)):
        per_site[ev.site].append(ev)
    sites = sorted(per_site)

    base = _make_sites(script, engine_kind, tie_break, strategy)
    _seed_initial(script, engine_kind, base)

    fifo = script.policy == CAUSAL_ORDER

    # replicas/wires are frozen once placed in a state, so caching their keys
    # by identity is sound; the cache also pins the objects so ids stay unique
    key_cache: dict[int, tuple] = {}

    def replica_key(rep) -> tuple:
        hit = key_cache.get(id(rep))
        if hit is None:
            hit = (rep, rep.state_key())
            key_cache[id(rep)] = hit
        return hit[1]

    start = _EnumState(
        replicas={s: base[s].replica for s in sites},
        cursors=[0] * len(sites),
        sent=[[] for _ in sites],
        delivered={(r, s): frozenset() for r in sites for s in sites if r != s},
        labels={s: () for s in sites},
    )

    def moves(st: _EnumState) -> list[tuple]:
        out = []
        for i, s in enumerate(sites):
            if st.cursors[i] < len(per_site[s]):
                out.append(("g", s))
        for r in sites:
            wrapped = _SymmetricSite(st.replicas[r])
            for j, s in enumerate(sites):
                if s == r:
                    continue
                got = st.delivered[(r, s)]
                if fifo:
                    nxt = len(got)
                    if nxt < len(st.sent[j]) and _gate(
                        script.policy, wrapped, st.sent[j][nxt]
                    ):
                        out.append(("d", r, s, nxt))
                else:
                    for idx, wire in enumerate(st.sent[j]):
                        if idx not in got and _gate(script.policy, wrapped, wire):
                            out.append(("d", r, s, idx))
        return out

    def apply_move(st: _EnumState, mv: tuple) -> _EnumState:
        # copy-on-write: only the replica touched by the move is cloned
        reps = dict(st.replicas)
        cursors = st.cursors[:]
        sent = st.sent[:]
        delivered = dict(st.delivered)
        labels = dict(st.labels)
        if mv[0] == "g":
            s = mv[1]
            i = sites.index(s)
            ev = per_site[s][cursors[i]]
            cursors[i] += 1
            rep = st.replicas[s].clone()
            reps[s] = rep
            op = resolve_intent(ev, len(rep.text()), script.clamp)
            if op is not None:  # a clamped-away delete generates nothing
                wire = rep.local(op)
                sent[i] = sent[i] + [wire]
            labels[s] = labels[s] + (("g", cursors[i] - 1),)
        else:
            _, r, s, idx = mv
            wire = st.sent[sites.index(s)][idx]
            rep = st.replicas[r].clone()
            reps[r] = rep
            failure = None
            try:
                rep.remote(wire)
            except CoEditError as exc:  # flawed schemes can reject; record, don't crash
                failure = f"site {r}: {exc}"
            delivered[(r, s)] = st.delivered[(r, s)] | {idx}
            labels[r] = labels[r] + (("d", s, idx),)
            if failure is not None:
                return _EnumState(reps, cursors, sent, delivered, labels, failure)
        return _EnumState(reps, cursors, sent, delivered, labels)

    wire_keys: dict[int, tuple] = {}

    def state_key(st: _EnumState) -> tuple:
        sent_part = []
        for lst in st.sent:
            part = []
            for w in lst:
                hit = wire_keys.get(id(w))
                if hit is None:
                    hit = (w, wire_key(w))
                    wire_keys[id(w)] = hit
                part.append(hit[1])
            sent_part.append(tuple(part))
        return (
            tuple(replica_key(st.replicas[s]) for s in sites),
            tuple(st.cursors),
            tuple(sent_part),
            tuple(sorted(st.delivered.items())),
        )

    def projection_key(st: _EnumState) -> tuple:
        return tuple(st.labels[s] for s in sites)

    def is_leaf(st: _EnumState) -> bool:
        if any(st.cursors[i] < len(per_site[s]) for i, s in enumerate(sites)):
            return False
        for r in sites:
            for j, s in enumerate(sites):
                if s == r:
                    continue
                if len(st.delivered[(r, s)]) < len(st.sent[j]):
                    return False
        return True

    results: list[ScenarioResult] = []
    seen_leaves: set = set()
    visited: set = set()
    key_fn = state_key if dedupe == "state" else projection_key

    stack = [start]
    visited.add(key_fn(start))
    while stack:
        st = stack.pop()
        if st.failure is not None:
            results.append(
                ScenarioResult(
                    engine_kind,
                    script,
                    {s: st.replicas[s].text() for s in sites},
                    [],
                    {},
                    failures=[st.failure],
                    order_label=projection_key(st),
                )
            )
            continue
        mv_list = moves(st)
        if not mv_list:
            if is_leaf(st):
                leaf_label = projection_key(st)
                if leaf_label in seen_leaves:
                    continue
                seen_leaves.add(leaf_label)
                texts = {s: st.replicas[s].text() for s in sites}
                if on_leaf is not None:
                    on_leaf(texts, {s: st.replicas[s].metrics() for s in sites})
                results.append(
                    ScenarioResult(
                        engine_kind,
                        script,
                        texts,
                        [],
                        {s: st.replicas[s].metrics() for s in sites},
                        order_label=leaf_label,
                    )
                )
            else:
                results.append(
                    ScenarioResult(
                        engine_kind,
                        script,
                        {s: st.replicas[s].text() for s in sites},
                        [],
                        {s: st.replicas[s].metrics() for s in sites},
                        failures=["delivery stalled: pending buffer cannot drain"],
                        order_label=projection_key(st),
                    )
                )
            continue
        for mv in mv_list:
            nxt = apply_move(st, mv)
            k = key_fn(nxt)
            if k in visited:
                continue
            visited.add(k)
            stack.append(nxt)
    return results
