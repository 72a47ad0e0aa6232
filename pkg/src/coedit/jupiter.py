"""Server-based OT: a transforming server holding a totally ordered revision
log, and thin clients that keep a single in-flight op plus a send queue.

The server rebases each submitted op against every log entry the submitting
client had not seen; clients rebase incoming broadcasts against their pending
ops. Different algorithms run at the two ends, unlike the distributed engine.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

from .core import EditOp, apply_to_text
from .errors import StaleRevisionError
from .ot import SITE_ORDER, OTWireOp, it_transform


class OTServer:
    """Holds the document of record and the transforming revision log."""

    def __init__(self, policy: str = SITE_ORDER, text: str = ""):
        self.policy = policy
        self.text = text
        self.log: list[EditOp] = []  # applied forms, index == revision landed at

    @property
    def revision(self) -> int:
        return len(self.log)

    def integrate(self, wire: OTWireOp) -> OTWireOp:
        """Rebase a client op submitted against ``wire.revision`` and land it.

        Returns the broadcast form stamped with the new server revision.
        """
        if wire.revision is None:
            raise StaleRevisionError("server wire op carries no revision")
        if wire.revision > self.revision:
            raise StaleRevisionError(
                f"client revision {wire.revision} beyond server {self.revision}"
            )
        op = wire.op
        for landed in self.log[wire.revision :]:
            op = it_transform(op, landed, self.policy)
        self.log.append(op)
        if not op.is_noop:
            self.text = apply_to_text(self.text, op)
        return OTWireOp(op, revision=self.revision)


class OTClient:
    """Single-pending-op client: sends one op at a time, queues the rest,
    and rebases incoming broadcasts against everything unacknowledged."""

    def __init__(self, site: int, policy: str = SITE_ORDER, text: str = "", revision: int = 0):
        self.site = site
        self.policy = policy
        self.text = text
        self.revision = revision  # server log entries processed
        self.pending: list[EditOp] = []  # pending[0] is in flight once sent
        self._inflight = False
        self._seq = 0

    def local(self, op: EditOp) -> Optional[OTWireOp]:
        """Apply a local edit; returns a wire op when the line is free,
        otherwise queues it for ``take_outgoing`` after the next ack."""
        self._seq += 1
        stamped = replace(op, site=self.site, seq=self._seq)
        self.text = apply_to_text(self.text, stamped)
        self.pending.append(stamped)
        return self.take_outgoing()

    def take_outgoing(self) -> Optional[OTWireOp]:
        """Next op to put on the wire, if any and the line is free."""
        if self._inflight or not self.pending:
            return None
        self._inflight = True
        return OTWireOp(self.pending[0], revision=self.revision)

    def incoming(self, wire: OTWireOp) -> Optional[EditOp]:
        """Process one server broadcast, in revision order.

        Own ops come back as acks and change nothing; foreign ops are
        rebased against the pending queue and applied. Returns the op
        applied locally, or None for acks and zero-effect results.
        """
        assert wire.revision == self.revision + 1, "broadcasts must arrive in order"
        self.revision = wire.revision
        op = wire.op
        if op.site == self.site:
            self.pending.pop(0)
            self._inflight = False
            return None
        for i, pend in enumerate(self.pending):
            op, self.pending[i] = (
                it_transform(op, pend, self.policy),
                it_transform(pend, op, self.policy),
            )
        if op.is_noop:
            return None
        self.text = apply_to_text(self.text, op)
        return op
