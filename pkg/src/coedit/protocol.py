"""Wire protocol for the relay service: one JSON object per websocket frame.

Message types: join, joined, leave, op, patch, ack, snapshot, error. Every
op/patch carries the sender site and a monotone per-site sequence. Engine
wire ops have a JSON form so pure-relay sessions can ferry them verbatim.
"""

from __future__ import annotations

import json
from .core import INSERT, EditOp, VectorClock
from .logoot import LogootId, LogootWireOp
from .ot import OTWireOp
from .woot import WChar, WootWireOp

JOIN = "join"
JOINED = "joined"
LEAVE = "leave"
OP = "op"
PATCH = "patch"
ACK = "ack"
SNAPSHOT = "snapshot"
ERROR = "error"


def edit_to_dict(op: EditOp) -> dict:
    d = {"kind": op.kind, "pos": op.pos, "site": op.site, "seq": op.seq}
    if op.kind == INSERT:
        d["content"] = op.content
    else:
        d["length"] = op.length
    return d


def edit_from_dict(d: dict) -> EditOp:
    return EditOp(
        d["kind"],
        int(d["pos"]),
        int(d.get("site", 0)),
        int(d.get("seq", 0)),
        d.get("content", ""),
        int(d.get("length", 0)),
    )


def _clock_to_list(clock: VectorClock | None) -> list | None:
    return None if clock is None else [[s, n] for s, n in clock.items()]


def _clock_from_list(data) -> VectorClock:
    if not data:
        return VectorClock()
    return VectorClock(tuple(sorted((int(s), int(n)) for s, n in data)))


def wire_to_dict(wire) -> dict:
    if isinstance(wire, OTWireOp):
        return {
            "engine": "ot",
            "op": edit_to_dict(wire.op),
            "clock": _clock_to_list(wire.clock),
            "lamport": wire.lamport,
            "revision": wire.revision,
        }
    if isinstance(wire, WootWireOp):
        d = {
            "engine": "woot",
            "kind": wire.kind,
            "site": wire.site,
            "seq": wire.seq,
            "clock": _clock_to_list(wire.clock),
        }
        if wire.char is not None:
            c = wire.char
            d["char"] = {
                "id": list(c.wid),
                "ch": c.ch,
                "prev": list(c.prev),
                "next": list(c.next),
            }
        if wire.target is not None:
            d["target"] = list(wire.target)
        return d
    if isinstance(wire, LogootWireOp):
        return {
            "engine": "logoot",
            "kind": wire.kind,
            "ident": [list(t) for t in wire.ident.path],
            "ch": wire.ch,
            "site": wire.site,
            "seq": wire.seq,
            "clock": _clock_to_list(wire.clock),
        }
    raise TypeError(f"unknown wire op {wire!r}")


def wire_from_dict(d: dict):
    engine = d["engine"]
    if engine == "ot":
        return OTWireOp(
            edit_from_dict(d["op"]),
            clock=_clock_from_list(d.get("clock")),
            lamport=int(d.get("lamport", 0)),
            revision=d.get("revision"),
        )
    if engine == "woot":
        char = None
        if "char" in d:
            c = d["char"]
            char = WChar(tuple(c["id"]), c["ch"], True, tuple(c["prev"]), tuple(c["next"]))
        target = tuple(d["target"]) if "target" in d else None
        return WootWireOp(
            d["kind"],
            char=char,
            target=target,
            site=int(d["site"]),
            seq=int(d["seq"]),
            clock=_clock_from_list(d.get("clock")),
        )
    if engine == "logoot":
        ident = LogootId(tuple(tuple(int(x) for x in t) for t in d["ident"]))
        return LogootWireOp(
            d["kind"],
            ident,
            d.get("ch", ""),
            site=int(d["site"]),
            seq=int(d["seq"]),
            clock=_clock_from_list(d.get("clock")),
        )
    raise ValueError(f"unknown wire engine {engine!r}")


def encode(msg: dict) -> str:
    """One newline-free JSON frame."""
    return json.dumps(msg, separators=(",", ":"), ensure_ascii=False)


def decode(frame: str | bytes) -> dict:
    msg = json.loads(frame)
    if not isinstance(msg, dict) or "type" not in msg:
        raise ValueError("protocol frames are JSON objects with a 'type'")
    return msg


def error_msg(session: str, code: str, message: str) -> dict:
    return {"type": ERROR, "session": session, "code": code, "message": message}
