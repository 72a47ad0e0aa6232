"""Non-tombstone sequence CRDT engine (Logoot family).

Characters carry variable-depth position identifiers: tuples of
(digit, site, clock) triples compared lexicographically, shorter prefix
sorting first. Deletes remove the pair outright, so the visible text and the
internal sequence are the same length; correctness of concurrent
delete/insert pairs therefore leans on causal delivery.

The allocator is written to dodge the two classic identifier-allocation
failure modes: emitting an id outside the requested interval, and looping
forever on adjacent bounds. It only ever narrows intervals in ways that are
provably safe:

* a free digit strictly between the bounds' digits -> place it there;
* otherwise descend *under the lower bound* by copying its triple, which
  keeps the result below the upper bound no matter what follows;
* when the lower bound is a strict prefix of the upper, go under the upper
  bound's next triple, stepping through a reserved bottom marker when that
  triple's digit leaves no room.

Every allocated id ends with a (digit >= 1, site, clock) triple unique to the
allocator, which also keeps upper-bound digits 0 confined to the reserved
marker and makes the descent rules total.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Optional

from .core import DELETE, INSERT, EditOp, VectorClock, delete_op, insert_op
from .errors import OrderError, RangeError

BASE = 1 << 16  # digits per level

BOTTOM = (0, -1, 0)  # reserved: sorts below any real triple at its level

Triple = tuple[int, int, int]


@dataclass(frozen=True, slots=True, order=True)
class LogootId:
    """Position identifier: non-empty path of (digit, site, clock) triples.

    Tuple comparison gives exactly the intended order: triples compare
    digit-first, and a path that is a strict prefix of another sorts first.
    """

    path: tuple[Triple, ...]

    def depth(self) -> int:
        return len(self.path)


MIN_ID = LogootId((BOTTOM,))
MAX_ID = LogootId(((BASE, 0, 0),))

BOUNDARY = "boundary"  # small deterministic offset from the left bound
UNIFORM = "uniform"  # uniform-random digit in the open interval

ALLOCATION_STRATEGIES = (BOUNDARY, UNIFORM)

LESS, EQUAL, GREATER = -1, 0, 1


def lid_compare(a: LogootId, b: LogootId) -> int:
    """Total order on ids: -1, 0, or 1."""
    if a.path == b.path:
        return EQUAL
    return LESS if a.path < b.path else GREATER


def _pick_digit(lo: int, hi: int, strategy: str, rng: random.Random) -> int:
    """Integer strictly between lo and hi; callers guarantee hi - lo >= 2."""
    if strategy == BOUNDARY:
        return lo + rng.randint(1, min(10, hi - lo - 1))
    return rng.randint(lo + 1, hi - 1)


def lid_between(
    p: LogootId,
    q: LogootId,
    site: int,
    clock: int,
    strategy: str = BOUNDARY,
    rng: Optional[random.Random] = None,
) -> LogootId:
    """Allocate an id strictly between p and q. Terminates for every p < q."""
    if rng is None:
        rng = random.Random()
    if lid_compare(p, q) != LESS:
        raise OrderError(f"cannot allocate between {p} and {q}")
    pp, qp = p.path, q.path
    k = 0
    limit = min(len(pp), len(qp))
    while k < limit and pp[k] == qp[k]:
        k += 1

    if k < len(pp):
        # paths diverge at k with pp[k] < qp[k]
        gap_hi = qp[k][0] if k < len(qp) else BASE  # unreachable None-guard: p<q forces k<len(qp)
        if gap_hi - pp[k][0] >= 2:
            digit = _pick_digit(pp[k][0], gap_hi, strategy, rng)
            return LogootId(pp[:k] + ((digit, site, clock),))
        # No room at this level. Stay under the lower bound: copying pp[k]
        # keeps us below q regardless of deeper content.
        return LogootId(pp[: k + 1] + _extend_over_tail(pp, k + 1, site, clock, strategy, rng))

    # p is a strict prefix of q: any extension of p clears the lower bound;
    # squeeze below q's next triple.
    while True:
        digit = qp[k][0]
        if digit >= 2:
            return LogootId(qp[:k] + ((_pick_digit(0, digit, strategy, rng), site, clock),))
        if digit == 1:
            return LogootId(qp[:k] + (BOTTOM, (_pick_digit(0, BASE, strategy, rng), site, clock)))
        # digit == 0 can only be the bottom marker, which is never terminal
        # and never repeats, so the next level has digit >= 1.
        k += 1


def _extend_over_tail(
    path: tuple[Triple, ...], j: int, site: int, clock: int, strategy: str, rng: random.Random
) -> tuple[Triple, ...]:
    """Suffix sorting strictly after path[j:], with no upper constraint."""
    out: list[Triple] = []
    while j < len(path):
        digit = path[j][0]
        if digit <= BASE - 2:
            out.append((_pick_digit(digit, BASE, strategy, rng), site, clock))
            return tuple(out)
        out.append(path[j])
        j += 1
    out.append((_pick_digit(0, BASE, strategy, rng), site, clock))
    return tuple(out)


class _CountingRandom:
    """Seeded RNG whose state is summarized by (seed, draw count); lets the
    exhaustive oracle merge replica states without hashing RNG internals."""

    __slots__ = ("_rng", "draws", "_seed")

    def __init__(self, seed: int, draws: int = 0):
        self._seed = seed
        self._rng = random.Random(seed)
        self.draws = 0
        for _ in range(draws):
            self._rng.random()
        self.draws = draws

    def randint(self, a: int, b: int) -> int:
        # exactly one underlying draw per call keeps (seed, draws) a complete
        # state summary; random() < 1.0 keeps the result inside [a, b]
        self.draws += 1
        return a + int(self._rng.random() * (b - a + 1))

    def copy(self) -> "_CountingRandom":
        return _CountingRandom(self._seed, self.draws)


@dataclass(frozen=True, slots=True)
class LogootWireOp:
    kind: str  # insert | delete
    ident: LogootId
    ch: str = ""
    site: int = 0
    seq: int = 0
    clock: VectorClock = field(default_factory=VectorClock)


class LogootReplica:
    """One co-editing site running the non-tombstone CRDT."""

    engine_kind = "logoot"

    def __init__(self, site: int, strategy: str = BOUNDARY, seed: int = 0):
        self.site = site
        self.strategy = strategy
        self.seed = seed
        self._rng = _CountingRandom((seed << 8) ^ site)
        self._pairs: list[tuple[LogootId, str]] = []
        self._alloc_clock = 0
        self._op_seq = 0
        self.clock = VectorClock()
        # instrumentation
        self.comparisons_total = 0
        self.last_comparisons = 0
        self.max_comparisons = 0

    # -- uniform replica contract -------------------------------------------------

    def text(self) -> str:
        return "".join(ch for _, ch in self._pairs)

    def local(self, op: EditOp) -> LogootWireOp:
        if op.kind == INSERT:
            if len(op.content) != 1:
                raise RangeError("identifier CRDT ops are character-wise")
            return self.gen_insert(op.pos, op.content)
        if op.length != 1:
            raise RangeError("identifier CRDT ops are character-wise")
        return self.gen_delete(op.pos)

    def remote(self, wire: LogootWireOp) -> list[EditOp]:
        return self.integrate(wire)

    def metrics(self) -> dict:
        return {
            "visible": len(self._pairs),
            "id_triples": sum(len(i.path) for i, _ in self._pairs),
            "max_depth": max((len(i.path) for i, _ in self._pairs), default=0),
            "id_comparisons_total": self.comparisons_total,
            "max_comparisons_per_op": self.max_comparisons,
        }

    def clone(self) -> "LogootReplica":
        other = LogootReplica(self.site, self.strategy, self.seed)
        other._rng = self._rng.copy()
        other._pairs = self._pairs[:]
        other._alloc_clock = self._alloc_clock
        other._op_seq = self._op_seq
        other.clock = self.clock
        return other

    def state_key(self) -> tuple:
        return (
            tuple(self._pairs),
            self.clock,
            self._alloc_clock,
            self._op_seq,
            self._rng.draws,
        )

    # -- local generation ----------------------------------------------------------

    def gen_insert(self, pos: int, ch: str) -> LogootWireOp:
        if not 0 <= pos <= len(self._pairs):
            raise RangeError(f"insert pos {pos} outside length {len(self._pairs)}")
        left = self._pairs[pos - 1][0] if pos > 0 else MIN_ID
        right = self._pairs[pos][0] if pos < len(self._pairs) else MAX_ID
        self._alloc_clock += 1
        ident = lid_between(left, right, self.site, self._alloc_clock, self.strategy, self._rng)
        self._pairs.insert(pos, (ident, ch))
        return self._stamp(LogootWireOp(INSERT, ident, ch, site=self.site))

    def gen_delete(self, pos: int) -> LogootWireOp:
        if not 0 <= pos < len(self._pairs):
            raise RangeError(f"delete pos {pos} outside length {len(self._pairs)}")
        ident, _ = self._pairs.pop(pos)
        return self._stamp(LogootWireOp(DELETE, ident, site=self.site))

    def _stamp(self, wire: LogootWireOp) -> LogootWireOp:
        self._op_seq += 1
        self.clock = self.clock.tick(self.site)
        return replace(wire, seq=self._op_seq, clock=self.clock)

    # -- integration ---------------------------------------------------------------

    def integrate(self, wire: LogootWireOp) -> list[EditOp]:
        self.last_comparisons = 0
        if wire.site != self.site:
            self.clock = self.clock.merge(wire.clock)
        try:
            idx, present = self._search(wire.ident)
            if wire.kind == INSERT:
                if present:  # duplicate delivery
                    return []
                self._pairs.insert(idx, (wire.ident, wire.ch))
                return [insert_op(idx, wire.ch, wire.site, wire.seq)]
            if not present:  # benign: concurrent delete of the same id
                return []
            self._pairs.pop(idx)
            return [delete_op(idx, 1, wire.site, wire.seq)]
        finally:
            self.comparisons_total += self.last_comparisons
            self.max_comparisons = max(self.max_comparisons, self.last_comparisons)

    def _search(self, ident: LogootId) -> tuple[int, bool]:
        """Binary search by id order; returns (index, found)."""
        lo, hi = 0, len(self._pairs)
        while lo < hi:
            mid = (lo + hi) // 2
            self.last_comparisons += 1
            c = lid_compare(self._pairs[mid][0], ident)
            if c == EQUAL:
                return mid, True
            if c == LESS:
                lo = mid + 1
            else:
                hi = mid
        return lo, False
