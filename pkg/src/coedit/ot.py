"""Operational-transformation engine, distributed flavor.

Two-layer design: ``it_transform`` holds the four primitive string-wise
inclusion transforms (insert/delete against insert/delete); ``OTReplica``
is the control algorithm that decides what to transform against what.

Control scheme: every delivered op keeps its *original* form, its generation
context (a vector clock), and a Lamport stamp. All replicas maintain their
document as the fold of delivered ops along one static total order
((lamport, site, seq), which extends causality), with each op's form derived
by transforming its original against the canonically earlier ops outside its
context, in canonical order. Because that fold is a pure function of the
delivered *set*, replicas that have seen the same ops hold the same text, no
matter the delivery order - tie-break pathologies (the classic false-tie
shape) can move where an op lands but not break convergence.

Integrating an op that lands mid-order undoes the canonically later ops,
splices the newcomer, and replays the tail in freshly derived forms. Local
ops always land last (their Lamport stamp tops everything seen), so local
processing is one splice and one append. Remote cost is driven by the
concurrent tail, never by document or history length; re-deriving tail forms
makes this the re-transformation variant (order c^2 transform calls in
adversarial windows, c in one-sided ones).
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, replace
from typing import Optional

from .core import (
    DELETE,
    INSERT,
    EditOp,
    VectorClock,
    causally_ready,
    delete_op,
    insert_op,
    noop_marker,
)
from .errors import CausalityError, RangeError

SITE_ORDER = "site-order"
NAIVE_LEFT = "naive-left"  # deliberately flawed tie-break, for puzzle searches

TIE_BREAK_POLICIES = (SITE_ORDER, NAIVE_LEFT)


def _wins_tie(o1: EditOp, o2: EditOp, policy: str) -> bool:
    """Does o1 keep its position on an equal-position insert/insert tie?"""
    if policy == NAIVE_LEFT:
        return True
    return o1.site < o2.site


def it_transform(o1: EditOp, o2: EditOp, policy: str = SITE_ORDER) -> EditOp:
    """Include o2's effect into o1. Both ops must be defined on the same
    document state. Total on valid inputs; may return a zero-effect marker.

    Constructs results positionally (hot path for the engines' transform
    loops)."""
    k1, k2 = o1.kind, o2.kind
    if (k1 == DELETE and o1.length == 0) or (k2 == DELETE and o2.length == 0):
        return o1
    p1, p2 = o1.pos, o2.pos

    if k1 == INSERT:
        if k2 == INSERT:
            if p1 < p2 or (p1 == p2 and _wins_tie(o1, o2, policy)):
                return o1
            return EditOp(INSERT, p1 + len(o2.content), o1.site, o1.seq, o1.content, 0)
        if p1 <= p2:
            return o1
        if p1 >= p2 + o2.length:
            return EditOp(INSERT, p1 - o2.length, o1.site, o1.seq, o1.content, 0)
        # Insert target sits strictly inside the deleted range: the insert is
        # swallowed so that the concurrent delete can stay a single range op.
        return EditOp(DELETE, 0, o1.site, o1.seq, "", 0)

    if k2 == INSERT:
        if p2 >= p1 + o1.length:
            return o1
        if p2 <= p1:
            return EditOp(DELETE, p1 + len(o2.content), o1.site, o1.seq, "", o1.length)
        # Insert landed inside the range being deleted; extend the range so
        # the two executions converge (mirror of the swallow rule above).
        return EditOp(DELETE, p1, o1.site, o1.seq, "", o1.length + len(o2.content))

    # delete against delete: subtract the overlap, shift by what o2 removed
    # before o1's range. Survivors are contiguous after o2's splice.
    a1 = p1 + o1.length
    b1 = p2 + o2.length
    overlap = min(a1, b1) - max(p1, p2)
    if overlap <= 0:
        overlap = 0
    new_len = o1.length - overlap
    if new_len == 0:
        return EditOp(DELETE, 0, o1.site, o1.seq, "", 0)
    shift = min(p1, b1) - p2
    if shift < 0:
        shift = 0
    return EditOp(DELETE, p1 - shift, o1.site, o1.seq, "", new_len)


@dataclass(frozen=True, slots=True)
class OTWireOp:
    """Propagated OT operation.

    Distributed mode stamps a vector clock (clock[op.site] == op.seq) plus a
    Lamport scalar; server mode stamps the server revision the op was
    generated against.
    """

    op: EditOp
    clock: Optional[VectorClock] = None
    lamport: int = 0
    revision: Optional[int] = None


@dataclass(slots=True)
class HistoryEntry:
    key: tuple[int, int]  # (site, seq)
    original: EditOp
    context: VectorClock  # clock of ops the original was generated on
    lamport: int
    form: EditOp = None  # canonical form currently folded into the document
    prefix: VectorClock = None  # clock of ops canonically before this one
    removed: str = ""  # what a delete form removed (undo data)

    def sort_key(self) -> tuple[int, int, int]:
        return (self.lamport, self.key[0], self.key[1])


class OTReplica:
    """One co-editing site running the distributed OT algorithm."""

    engine_kind = "ot"

    def __init__(self, site: int, policy: str = SITE_ORDER, text: str = ""):
        self.site = site
        self.policy = policy
        self._chars: list[str] = list(text)
        self.delivered = VectorClock()
        self.log: dict[tuple[int, int], HistoryEntry] = {}
        self.history: list[tuple[int, int]] = []  # arrival order, for metrics
        self.canon: list[tuple] = []  # (lamport, site, seq) sort keys
        self._max_lamport = 0
        self._seq = 0
        # instrumentation
        self.transform_calls_total = 0
        self.last_transform_calls = 0
        self.max_transform_calls = 0
        self.last_concurrency = 0
        self.max_concurrency = 0

    # -- uniform replica contract -------------------------------------------------

    def text(self) -> str:
        return "".join(self._chars)

    def local(self, op: EditOp) -> OTWireOp:
        """Apply a locally generated edit and stamp it for propagation.

        A local op tops every Lamport stamp seen, so it lands at the end of
        the canonical order: one splice, one append, no transforms.
        """
        self._seq += 1
        stamped = replace(op, site=self.site, seq=self._seq)
        key = (self.site, self._seq)
        lamport = self._max_lamport + 1
        self._max_lamport = lamport
        entry = HistoryEntry(
            key, stamped, self.delivered, lamport, form=stamped, prefix=self.delivered
        )
        self._apply(entry)
        self.delivered = self.delivered.tick(self.site)
        self.log[key] = entry
        self.history.append(key)
        self.canon.append(entry.sort_key())
        return OTWireOp(stamped, clock=self.delivered, lamport=lamport)

    def remote(self, wire: OTWireOp) -> list[EditOp]:
        """Integrate a causally ready remote op; returns the position-based
        op(s) actually applied, in order (undo/replay included when the op
        lands before already-executed concurrent ops)."""
        op, clock = wire.op, wire.clock
        if clock is None:
            raise CausalityError("distributed wire op carries no clock")
        if not causally_ready(clock, op.site, self.delivered):
            raise CausalityError(
                f"op {(op.site, op.seq)} with clock {clock} not ready at "
                f"site {self.site} (delivered {self.delivered})"
            )
        context = _strip_own(clock, op.site, op.seq)
        key = (op.site, op.seq)
        entry = HistoryEntry(key, op, context, wire.lamport)
        self.log[key] = entry
        self._max_lamport = max(self._max_lamport, wire.lamport)

        self.last_transform_calls = 0
        self.last_concurrency = sum(
            n - context.get(s) for s, n in self.delivered.items() if n > context.get(s)
        )
        self.max_concurrency = max(self.max_concurrency, self.last_concurrency)

        if self.policy == NAIVE_LEFT:
            return self._remote_naive(entry)

        skey = entry.sort_key()
        k = bisect_left(self.canon, skey)
        tail = [self.log[(sk[1], sk[2])] for sk in self.canon[k:]]
        patch: list[EditOp] = []

        # 1. undo canonically later ops (they were executed without this op)
        for late in reversed(tail):
            undo = self._undo(late)
            if undo is not None:
                patch.append(undo)

        # 2. derive and apply the newcomer's form over the canonical prefix
        prefix_clock = self.delivered
        for late in tail:
            prefix_clock = _untick(prefix_clock, late.key[0])
        memo: dict = {}
        form = self._form(key, prefix_clock, memo)
        entry.form = form
        entry.prefix = prefix_clock
        self._apply(entry)
        if not form.is_noop:
            patch.append(form)

        # 3. replay the tail in freshly derived forms (now including the newcomer)
        run = prefix_clock.tick(key[0])
        for late in tail:
            late.form = self._form(late.key, run, memo)
            late.prefix = run
            self._apply(late)
            if not late.form.is_noop:
                patch.append(late.form)
            run = run.tick(late.key[0])

        self.delivered = self.delivered.tick(key[0])
        self.history.append(key)
        self.canon.insert(k, skey)
        self.max_transform_calls = max(self.max_transform_calls, self.last_transform_calls)
        return patch

    def metrics(self) -> dict:
        return {
            "history_len": len(self.history),
            "transform_calls_total": self.transform_calls_total,
            "max_transform_calls_per_remote": self.max_transform_calls,
            "max_concurrency": self.max_concurrency,
        }

    def clone(self) -> "OTReplica":
        other = OTReplica(self.site, self.policy)
        other._chars = self._chars[:]
        other.delivered = self.delivered
        other.log = {
            k: HistoryEntry(e.key, e.original, e.context, e.lamport, e.form, e.prefix, e.removed)
            for k, e in self.log.items()
        }
        other.history = self.history[:]
        other.canon = self.canon[:]
        other._max_lamport = self._max_lamport
        other._seq = self._seq
        return other

    def state_key(self) -> tuple:
        """Semantic snapshot for the exhaustive oracle's state merging."""
        return (
            self.text(),
            self.delivered,
            self._seq,
            tuple(sorted((k, e.original, e.context) for k, e in self.log.items())),
        )

    def _remote_naive(self, entry: HistoryEntry) -> list[EditOp]:
        """Historical control discipline: transform the newcomer against
        concurrent history ops in local arrival order and apply. Paired with
        the naive-left tie-break this reproduces the classic divergence
        (false ties resolved inconsistently across sites)."""
        ctx = entry.context
        form = entry.original
        for hkey in self.history:
            if ctx.get(hkey[0]) >= hkey[1]:
                continue  # causally included already
            form = it_transform(form, self.log[hkey].form, self.policy)
            self.transform_calls_total += 1
            self.last_transform_calls += 1
        entry.form = form
        self._apply(entry)
        self.delivered = self.delivered.tick(entry.key[0])
        self.history.append(entry.key)
        self.canon.append(entry.sort_key())
        self.max_transform_calls = max(self.max_transform_calls, self.last_transform_calls)
        return [] if form.is_noop else [form]

    # -- canonical-fold bookkeeping -------------------------------------------------

    def _apply(self, entry: HistoryEntry) -> None:
        form = entry.form
        if form.is_noop:
            entry.removed = ""
            return
        if form.kind == INSERT:
            self._splice(form)
        else:
            entry.removed = "".join(self._chars[form.pos : form.pos + form.length])
            self._splice(form)

    def _undo(self, entry: HistoryEntry) -> Optional[EditOp]:
        """Reverse the entry's current form on the document; returns the
        position-based op that realizes the reversal."""
        form = entry.form
        site, seq = entry.key
        if form.is_noop:
            return None
        if form.kind == INSERT:
            undo = delete_op(form.pos, len(form.content), site, seq)
        else:
            undo = insert_op(form.pos, entry.removed, site, seq)
        self._splice(undo)
        return undo

    def _splice(self, op: EditOp) -> None:
        if op.kind == INSERT:
            if not 0 <= op.pos <= len(self._chars):
                raise RangeError(f"insert pos {op.pos} outside len {len(self._chars)}")
            self._chars[op.pos : op.pos] = op.content
        else:
            if op.pos < 0 or op.pos + op.length > len(self._chars):
                raise RangeError(
                    f"delete [{op.pos},{op.pos + op.length}) outside len {len(self._chars)}"
                )
            del self._chars[op.pos : op.pos + op.length]

    def _ops_in(self, clock: VectorClock, below: VectorClock) -> list[tuple[int, int]]:
        """Keys present in ``clock`` but not in ``below``."""
        out = []
        for s, n in clock.items():
            lo = below.get(s)
            for q in range(lo + 1, n + 1):
                out.append((s, q))
        return out

    def _form(self, key: tuple[int, int], target: VectorClock, memo: dict) -> EditOp:
        """Form of op ``key`` in context ``target``: its original transformed
        against every non-context op in ``target``, in canonical order.

        When a needed op's required context coincides with its stored
        canonical prefix, its stored form is exactly the form required, so
        aligned windows cost one transform per concurrent op; misaligned
        contexts re-derive recursively (the re-transformation variant)."""
        entry = self.log[key]
        if target == entry.prefix:
            return entry.form
        mk = (key, target)
        hit = memo.get(mk)
        if hit is not None:
            return hit
        need = self._ops_in(target, entry.context)
        if key in need:
            need.remove(key)
        form = entry.original
        if need:
            need.sort(key=lambda nk: self.log[nk].sort_key())
            cur = entry.context
            for other in need:
                other_entry = self.log[other]
                if cur == other_entry.prefix:
                    other_form = other_entry.form
                else:
                    other_form = self._form(other, cur, memo)
                form = it_transform(form, other_form, self.policy)
                self.transform_calls_total += 1
                self.last_transform_calls += 1
                cur = cur.tick(other[0])
        memo[mk] = form
        return form


def _strip_own(clock: VectorClock, site: int, seq: int) -> VectorClock:
    """Generation context of an op = its wire clock minus its own entry."""
    out = {s: n for s, n in clock.items()}
    if out.get(site) != seq:
        raise CausalityError(f"wire clock {clock} inconsistent with op ({site},{seq})")
    out[site] = seq - 1
    return VectorClock.of(out)


def _untick(clock: VectorClock, site: int) -> VectorClock:
    out = dict(clock.items())
    out[site] = out.get(site, 0) - 1
    if out[site] < 0:
        raise CausalityError("canonical tail not covered by the delivered clock")
    return VectorClock.of(out)
