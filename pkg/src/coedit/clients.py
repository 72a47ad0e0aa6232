"""Reference relay clients (sans-IO): the engine-free mirror client used by
the browser demo and headless tests, and an engine-bearing client for
pure-relay sessions.

The mirror client is the whole client-side algorithm: an optimistic local
text mirror, a pending queue of unacknowledged edits, and a plain
position-transform of every incoming patch against the pending queue (the
server symmetrically rebases client ops against unseen patches using the
``basis`` tag). No clocks, identifiers, or history live on the client.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from .core import INSERT, EditOp, apply_to_text, causally_ready, delete_op, insert_op
from .engines import make_replica, wire_clock, wire_site
from .ot import SITE_ORDER, it_transform
from .protocol import (
    ACK,
    ERROR,
    JOINED,
    LEAVE,
    OP,
    PATCH,
    SNAPSHOT,
    edit_from_dict,
    edit_to_dict,
    wire_from_dict,
    wire_to_dict,
)


@dataclass(slots=True)
class MirrorClient:
    session: str = ""
    site: int = 0
    mirror: str = ""
    basis: int = 0  # patches received
    seq: int = 0  # own ops sent
    pending: list[EditOp] = field(default_factory=list)
    members: list[int] = field(default_factory=list)
    joined: bool = False
    caret: int = 0

    def join_msg(self) -> dict:
        return {"type": "join", "session": self.session}

    def leave_msg(self) -> dict:
        return {"type": "leave", "session": self.session, "site": self.site}

    # -- local edits -----------------------------------------------------------

    def edit(self, op: EditOp) -> dict:
        """Apply a local edit optimistically and build the op message."""
        stamped = EditOp(op.kind, op.pos, self.site, 0, op.content, op.length)
        self.mirror = apply_to_text(self.mirror, stamped)
        self.pending.append(stamped)
        self.seq += 1
        if op.kind == INSERT:
            self.caret = op.pos + len(op.content)
        else:
            self.caret = op.pos
        return {
            "type": OP,
            "session": self.session,
            "site": self.site,
            "seq": self.seq,
            "basis": self.basis,
            "op": edit_to_dict(stamped),
        }

    def insert(self, pos: int, content: str) -> dict:
        return self.edit(insert_op(pos, content, self.site))

    def delete(self, pos: int, length: int) -> dict:
        return self.edit(delete_op(pos, length, self.site))

    # -- incoming messages -------------------------------------------------------

    def handle(self, msg: dict) -> None:
        kind = msg.get("type")
        if kind == JOINED and not self.joined:
            self.site = int(msg["site"])
            self.mirror = msg.get("text", "")
            self.basis = int(msg.get("basis", 0))
            self.members = list(msg.get("members", []))
            self.joined = True
        elif kind == JOINED:
            self.members = list(msg.get("members", self.members))
        elif kind == LEAVE:
            site = int(msg.get("site", 0))
            self.members = [m for m in self.members if m != site]
        elif kind == PATCH:
            self._apply_patch([edit_from_dict(d) for d in msg.get("ops", [])])
            self.basis += 1
        elif kind == ACK:
            if self.pending:
                self.pending.pop(0)
        elif kind == SNAPSHOT and "text" in msg:
            # resync: abandon optimistic state
            self.mirror = msg["text"]
            self.basis = int(msg.get("basis", self.basis))
            self.pending.clear()
            self.caret = min(self.caret, len(self.mirror))

    def _apply_patch(self, ops: list[EditOp]) -> None:
        for op in ops:
            for i, pend in enumerate(self.pending):
                op, self.pending[i] = (
                    it_transform(op, pend, SITE_ORDER),
                    it_transform(pend, op, SITE_ORDER),
                )
            if op.is_noop:
                continue
            self.mirror = apply_to_text(self.mirror, op)
            self.caret = transpose_caret(self.caret, op)


def transpose_caret(caret: int, op: EditOp) -> int:
    """Keep the local caret on the same logical spot across a remote patch."""
    if op.kind == INSERT:
        if op.pos <= caret:
            return caret + len(op.content)
        return caret
    if op.pos >= caret:
        return caret
    return max(op.pos, caret - min(op.length, caret - op.pos))


@dataclass(slots=True)
class EngineClient:
    """Pure-relay client that runs a real engine replica locally."""

    session: str
    engine: str
    replica: object = None
    site: int = 0
    seq: int = 0
    joined: bool = False
    buffered: list = field(default_factory=list)

    def join_msg(self) -> dict:
        return {"type": "join", "session": self.session}

    def text(self) -> str:
        return self.replica.text() if self.replica else ""

    def edit(self, op: EditOp) -> dict:
        wire = self.replica.local(op)
        self.seq += 1
        return {
            "type": OP,
            "session": self.session,
            "site": self.site,
            "seq": self.seq,
            "wire": wire_to_dict(wire),
        }

    def handle(self, msg: dict) -> None:
        kind = msg.get("type")
        if kind == JOINED and not self.joined:
            self.site = int(msg["site"])
            self.replica = make_replica(self.engine, self.site)
            self.joined = True
            for entry in msg.get("log", []):
                self._integrate(entry)
        elif kind == OP:
            self._integrate(msg)

    def _ready(self, wire) -> bool:
        if hasattr(self.replica, "executable"):
            return self.replica.executable(wire)
        view = (
            self.replica.delivered if hasattr(self.replica, "delivered") else self.replica.clock
        )
        return causally_ready(wire_clock(wire), wire_site(wire), view)

    def _integrate(self, msg: dict) -> None:
        """Gated integration (causal or engine precondition) with buffering."""
        self.buffered.append(wire_from_dict(msg["wire"]))
        progressed = True
        while progressed:
            progressed = False
            for wire in list(self.buffered):
                if self._ready(wire):
                    self.buffered.remove(wire)
                    self.replica.remote(wire)
                    progressed = True
