"""Uniform replica contract and engine factory.

Every symmetric engine exposes the same five methods, so the simulator,
harness, and relay drive them interchangeably:

    local(EditOp) -> wire op        apply a user edit, stamp for propagation
    remote(wire) -> list[EditOp]    integrate, return the editor patch
    text() -> str                   current visible document
    metrics() -> dict               engine-specific counters
    clone() -> replica              independent deep fork (oracle use)

The server-based OT pair (transforming server + thin clients) is asymmetric
and is wired up by the simulator/relay directly rather than through this
factory.
"""

from __future__ import annotations

from typing import Protocol, runtime_checkable

from .core import EditOp, VectorClock
from .errors import ConfigError
from .logoot import BOUNDARY, LogootReplica, LogootWireOp
from .ot import SITE_ORDER, OTReplica, OTWireOp
from .woot import WootReplica, WootWireOp

OT = "ot"
OT_SERVER = "ot-server"
WOOT = "woot"
LOGOOT = "logoot"

ENGINE_KINDS = (OT, OT_SERVER, WOOT, LOGOOT)
SYMMETRIC_ENGINES = (OT, WOOT, LOGOOT)

WireOp = OTWireOp | WootWireOp | LogootWireOp


@runtime_checkable
class ReplicaEngine(Protocol):
    engine_kind: str
    site: int

    def local(self, op: EditOp) -> WireOp: ...

    def remote(self, wire: WireOp) -> list[EditOp]: ...

    def text(self) -> str: ...

    def metrics(self) -> dict: ...

    def clone(self) -> "ReplicaEngine": ...


def make_replica(
    kind: str,
    site: int,
    *,
    tie_break: str = SITE_ORDER,
    strategy: str = BOUNDARY,
    seed: int = 0,
) -> ReplicaEngine:
    if kind == OT:
        return OTReplica(site, policy=tie_break)
    if kind == WOOT:
        return WootReplica(site)
    if kind == LOGOOT:
        return LogootReplica(site, strategy=strategy, seed=seed)
    raise ConfigError(f"no symmetric replica for engine kind {kind!r}")


def split_for_engine(kind: str, op: EditOp) -> list[EditOp]:
    """Identifier CRDT engines are character-wise; expand string edits into
    unit ops (inserts left to right at ascending positions, deletes repeated
    at the same position). OT takes string ops natively."""
    if kind == OT or kind == OT_SERVER or op.is_noop:
        return [op]
    if op.kind == "insert":
        if len(op.content) <= 1:
            return [op]
        return [
            EditOp("insert", op.pos + i, op.site, 0, ch, 0) for i, ch in enumerate(op.content)
        ]
    if op.length <= 1:
        return [op]
    return [EditOp("delete", op.pos, op.site, 0, "", 1) for _ in range(op.length)]


def wire_site(wire: WireOp) -> int:
    """Originating site of any engine's wire op."""
    if isinstance(wire, OTWireOp):
        return wire.op.site
    return wire.site


def wire_clock(wire: WireOp) -> VectorClock:
    if isinstance(wire, OTWireOp):
        if wire.clock is None:
            raise ConfigError("server-mode wire op has no vector clock")
        return wire.clock
    return wire.clock


def wire_key(wire: WireOp) -> tuple:
    """Hashable identity+content snapshot of a wire op (oracle state keys)."""
    if isinstance(wire, OTWireOp):
        return ("ot", wire.op, wire.clock, wire.revision)
    if isinstance(wire, WootWireOp):
        c = wire.char
        char_key = None if c is None else (c.wid, c.ch, c.prev, c.next)
        return ("woot", wire.kind, char_key, wire.target, wire.site, wire.seq, wire.clock)
    return ("logoot", wire.kind, wire.ident, wire.ch, wire.site, wire.seq, wire.clock)
