"""Tombstone sequence CRDT engine (WOOT family).

Characters live in one internal object sequence ordered between BEGIN/END
sentinels; deletes only flip visibility, so the sequence grows for the life
of the session. Local edits are converted from visible positions to
identifier-anchored wire ops; remote wire ops are converted back into
visible-position patches after integration. Both conversions, and the
integration scans, are instrumented with object-visit counters because the
whole point of this engine is measuring how cost tracks sequence size.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .core import DELETE, INSERT, EditOp, VectorClock, delete_op, insert_op
from .errors import PreconditionError, RangeError

# Sentinel ids: site numbers below any real site keep them out of sibling
# comparisons, which only ever examine interior candidates anyway.
BEGIN_ID = (-2, 0)
END_ID = (-1, 0)


@dataclass(slots=True)
class WChar:
    """One sequence object: id, payload, visibility, and insert anchors."""

    wid: tuple[int, int]  # (site, per-site insert counter)
    ch: str
    visible: bool
    prev: tuple[int, int]
    next: tuple[int, int]

    def copy(self) -> "WChar":
        return WChar(self.wid, self.ch, self.visible, self.prev, self.next)


@dataclass(frozen=True, slots=True)
class WootWireOp:
    kind: str  # insert | delete
    char: Optional[WChar] = None  # complete anchors for inserts
    target: Optional[tuple[int, int]] = None  # id for deletes
    site: int = 0
    seq: int = 0
    clock: VectorClock = field(default_factory=VectorClock)


class WootReplica:
    """One co-editing site running the tombstone CRDT."""

    engine_kind = "woot"

    def __init__(self, site: int):
        self.site = site
        self._seq: list[WChar] = [
            WChar(BEGIN_ID, "", False, BEGIN_ID, BEGIN_ID),
            WChar(END_ID, "", False, END_ID, END_ID),
        ]
        self._by_id: dict[tuple[int, int], WChar] = {
            BEGIN_ID: self._seq[0],
            END_ID: self._seq[1],
        }
        self._id_clock = 0  # insert counter feeding new ids
        self._op_seq = 0  # all ops, feeding the vector clock
        self.clock = VectorClock()
        self.visible_count = 0
        self.inserts_integrated = 0
        self.tombstones = 0
        # instrumentation
        self.visits_total = 0
        self.last_visits = 0
        self.max_visits = 0

    # -- uniform replica contract -------------------------------------------------

    def text(self) -> str:
        return "".join(c.ch for c in self._seq if c.visible)

    def local(self, op: EditOp) -> WootWireOp:
        if op.kind == INSERT:
            if len(op.content) != 1:
                raise RangeError("tombstone CRDT ops are character-wise")
            return self.gen_insert(op.pos, op.content)
        if op.length != 1:
            raise RangeError("tombstone CRDT ops are character-wise")
        return self.gen_delete(op.pos)

    def remote(self, wire: WootWireOp) -> list[EditOp]:
        return self.integrate(wire)

    def metrics(self) -> dict:
        return {
            "visible": self.visible_count,
            "objects": len(self._seq),
            "tombstones": self.tombstones,
            "inserts_integrated": self.inserts_integrated,
            "object_visits_total": self.visits_total,
            "max_visits_per_remote": self.max_visits,
        }

    def clone(self) -> "WootReplica":
        other = WootReplica(self.site)
        other._seq = [c.copy() for c in self._seq]
        other._by_id = {c.wid: c for c in other._seq}
        other._id_clock = self._id_clock
        other._op_seq = self._op_seq
        other.clock = self.clock
        other.visible_count = self.visible_count
        other.inserts_integrated = self.inserts_integrated
        other.tombstones = self.tombstones
        return other

    def state_key(self) -> tuple:
        return (
            tuple((c.wid, c.ch, c.visible) for c in self._seq),
            self.clock,
            self._id_clock,
            self._op_seq,
        )

    # -- local generation: visible position -> identifier-anchored wire op --------

    def gen_insert(self, pos: int, ch: str) -> WootWireOp:
        """Anchor a new character on the visible neighbors bounding ``pos``."""
        if not 0 <= pos <= self.visible_count:
            raise RangeError(f"insert pos {pos} outside visible length {self.visible_count}")
        self.last_visits = 0
        prev_id, next_id = self._visible_bounds(pos)
        self._id_clock += 1
        char = WChar((self.site, self._id_clock), ch, True, prev_id, next_id)
        wire = self._stamp(WootWireOp(INSERT, char=char, site=self.site))
        self._place(wire)
        self.visits_total += self.last_visits
        return wire

    def gen_delete(self, pos: int) -> WootWireOp:
        if not 0 <= pos < self.visible_count:
            raise RangeError(f"delete pos {pos} outside visible length {self.visible_count}")
        self.last_visits = 0
        target = self._visible_char(pos)
        wire = self._stamp(WootWireOp(DELETE, target=target.wid, site=self.site))
        self._place(wire)
        self.visits_total += self.last_visits
        return wire

    def _stamp(self, wire: WootWireOp) -> WootWireOp:
        self._op_seq += 1
        self.clock = self.clock.tick(self.site)
        return replace(wire, seq=self._op_seq, clock=self.clock)

    # -- integration ---------------------------------------------------------------

    def executable(self, wire: WootWireOp) -> bool:
        """WOOT's own delivery precondition: anchors (insert) or target
        (delete) already present in the sequence."""
        if wire.kind == INSERT:
            c = wire.char
            return c.prev in self._by_id and c.next in self._by_id
        return wire.target in self._by_id

    def integrate(self, wire: WootWireOp) -> list[EditOp]:
        """Place a remote wire op in the object sequence; returns the
        visible-position patch for the editor (empty when nothing visible
        changed)."""
        self.last_visits = 0
        if wire.site != self.site:
            self.clock = self.clock.merge(wire.clock)
        patch = self._place(wire)
        self.visits_total += self.last_visits
        self.max_visits = max(self.max_visits, self.last_visits)
        return patch

    def _place(self, wire: WootWireOp) -> list[EditOp]:
        if not self.executable(wire):
            raise PreconditionError(f"op {wire.kind} from site {wire.site} not executable")
        if wire.kind == INSERT:
            return self._integrate_insert(wire)
        return self._integrate_delete(wire)

    def _integrate_insert(self, wire: WootWireOp) -> list[EditOp]:
        if wire.char.wid in self._by_id:  # duplicate delivery is a relay bug; stay idempotent
            return []
        char = wire.char.copy()  # replicas never share sequence objects
        lo = self._index_of(char.prev)
        hi = self._index_of(char.next)
        while hi - lo > 1:
            # keep only candidates whose own anchors lie outside (lo, hi):
            # concurrent siblings, ordered among themselves by id
            cands = [lo]
            for i in range(lo + 1, hi):
                d = self._seq[i]
                self.last_visits += 1
                if self._index_of(d.prev) <= lo and self._index_of(d.next) >= hi:
                    cands.append(i)
            cands.append(hi)
            j = 1
            while j < len(cands) - 1 and self._seq[cands[j]].wid < char.wid:
                self.last_visits += 1
                j += 1
            lo, hi = cands[j - 1], cands[j]
        self._seq.insert(hi, char)
        self._by_id[char.wid] = char
        self.inserts_integrated += 1
        self.visible_count += 1
        return [insert_op(self._visible_index(hi), char.ch, wire.site, wire.seq)]

    def _integrate_delete(self, wire: WootWireOp) -> list[EditOp]:
        char = self._by_id[wire.target]
        if not char.visible:  # concurrent double delete
            return []
        pos = self._visible_index(self._index_of(char.wid))
        char.visible = False
        self.visible_count -= 1
        self.tombstones += 1
        return [delete_op(pos, 1, wire.site, wire.seq)]

    # -- position <-> object scans (instrumented) -----------------------------------

    def _index_of(self, wid: tuple[int, int]) -> int:
        if wid == BEGIN_ID:
            return 0
        if wid == END_ID:
            return len(self._seq) - 1
        for i in range(len(self._seq) - 2, -1, -1):  # edits cluster near the end
            self.last_visits += 1
            if self._seq[i].wid == wid:
                return i
        raise PreconditionError(f"id {wid} not in sequence")

    def _visible_char(self, pos: int) -> WChar:
        seen = -1
        for c in self._seq:
            self.last_visits += 1
            if c.visible:
                seen += 1
                if seen == pos:
                    return c
        raise RangeError(f"visible pos {pos} beyond {self.visible_count}")

    def _visible_bounds(self, pos: int) -> tuple[tuple[int, int], tuple[int, int]]:
        """Ids of the visible chars bounding visible slot ``pos`` (sentinels
        at the extremes)."""
        if pos == self.visible_count:  # append fast path: scan from the right
            for i in range(len(self._seq) - 2, 0, -1):
                self.last_visits += 1
                if self._seq[i].visible:
                    return self._seq[i].wid, END_ID
            return BEGIN_ID, END_ID
        prev_id = BEGIN_ID
        seen = 0
        for c in self._seq[1:-1]:
            self.last_visits += 1
            if c.visible:
                if seen == pos:
                    return prev_id, c.wid
                prev_id = c.wid
                seen += 1
        raise RangeError(f"no visible char at {pos}")

    def _visible_index(self, obj_index: int) -> int:
        """Visible chars before ``obj_index``, scanning the nearer end."""
        if obj_index * 2 <= len(self._seq):
            n = 0
            for i in range(obj_index):
                self.last_visits += 1
                if self._seq[i].visible:
                    n += 1
            return n
        n = 0
        for i in range(obj_index, len(self._seq)):
            self.last_visits += 1
            if self._seq[i].visible:
                n += 1
        return self.visible_count - n
