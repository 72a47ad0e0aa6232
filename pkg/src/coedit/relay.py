"""Live co-editing session server: session management, membership, op
broadcast, and snapshots over websockets.

Three session modes:

* ``replica-proxy`` (default): the server hosts one engine replica per
  client plus a hub replica; browsers exchange only position-based edits,
  so all engine logic stays server-side. Client ops are rebased against the
  patches that were in flight to that client (tagged with a ``basis``
  counter); clients symmetrically rebase incoming patches against their
  pending ops.
* ``transforming-server``: the classic revision-log server (OT only); the
  per-client bridge agents run server-side, and browsers speak the same
  position-based protocol.
* ``pure-relay``: opaque engine wire ops are logged and forwarded unchanged
  for engine-bearing clients; snapshots hand back the log for replay.

Within a session, message handling is serialized by one asyncio lock; each
engine replica is confined to its session.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .core import EditOp
from .engines import (
    LOGOOT,
    OT,
    OT_SERVER,
    SYMMETRIC_ENGINES,
    WOOT,
    make_replica,
    split_for_engine,
)
from .errors import CoEditError, ConfigError, SequenceGapError, StaleRevisionError, UnknownSession
from .jupiter import OTClient, OTServer
from .ot import SITE_ORDER, it_transform
from .protocol import (
    ACK,
    ERROR,
    JOIN,
    JOINED,
    LEAVE,
    OP,
    PATCH,
    SNAPSHOT,
    decode,
    edit_from_dict,
    edit_to_dict,
    encode,
    error_msg,
    wire_from_dict,
    wire_to_dict,
)

REPLICA_PROXY = "replica-proxy"
TRANSFORMING_SERVER = "transforming-server"
PURE_RELAY = "pure-relay"
MODES = (REPLICA_PROXY, TRANSFORMING_SERVER, PURE_RELAY)


@dataclass(slots=True)
class Member:
    site: int
    socket: Optional[WebSocket] = None
    agent: object = None  # engine replica or jupiter client, mode-dependent
    patch_log: list = field(default_factory=list)  # messages sent, for rebasing/replay
    last_seq: int = 0
    connected: bool = True


class Session:
    """One co-editing session: engine kind, mode, members, hub state."""

    def __init__(self, sid: str, engine: str, mode: str, log_path: Optional[Path] = None):
        self.sid = sid
        self.engine = engine
        self.mode = mode
        self.members: dict[int, Member] = {}
        self.lock = asyncio.Lock()
        self.touched = time.monotonic()
        self._site_counter = itertools.count(1)
        self.relay_log: list[dict] = []  # forwarded op messages, pure-relay replay
        self.log_path = log_path
        if mode == TRANSFORMING_SERVER:
            self.ot_server = OTServer(policy=SITE_ORDER)
            self.hub = None
        else:
            self.ot_server = None
            self.hub = make_replica(engine, 0) if mode == REPLICA_PROXY else None

    # -- bookkeeping ---------------------------------------------------------

    def touch(self) -> None:
        self.touched = time.monotonic()

    def log_message(self, direction: str, msg: dict) -> None:
        if self.log_path is not None:
            with self.log_path.open("a") as fh:
                fh.write(json.dumps({"dir": direction, "msg": msg}) + "\n")

    def snapshot_text(self) -> Optional[str]:
        if self.mode == TRANSFORMING_SERVER:
            return self.ot_server.text
        if self.mode == REPLICA_PROXY:
            return self.hub.text()
        return None  # pure relay: clients replay the log

    # -- membership ----------------------------------------------------------

    def join(self) -> Member:
        site = next(self._site_counter)
        member = Member(site)
        if self.mode == REPLICA_PROXY:
            clone = self.hub.clone()
            clone.site = site
            member.agent = clone
        elif self.mode == TRANSFORMING_SERVER:
            member.agent = OTClient(
                site, policy=SITE_ORDER, text=self.ot_server.text, revision=self.ot_server.revision
            )
        self.members[site] = member
        return member

    def leave(self, site: int) -> None:
        member = self.members.get(site)
        if member is None:
            return  # double leave is idempotent
        member.connected = False
        member.socket = None

    @property
    def empty(self) -> bool:
        return all(not m.connected for m in self.members.values())

    # -- op handling (one call per incoming op message, under the lock) -------

    def handle_op(self, site: int, msg: dict) -> list[tuple[int, dict]]:
        """Process one op message; returns (site, message) pairs to send."""
        member = self.members.get(site)
        if member is None:
            raise UnknownSession(f"site {site} not in session {self.sid}")
        seq = int(msg.get("seq", 0))
        if seq != member.last_seq + 1:
            raise SequenceGapError(f"expected seq {member.last_seq + 1}, got {seq}")
        member.last_seq = seq
        self.touch()
        if self.mode == PURE_RELAY:
            return self._relay_op(member, msg)
        op = edit_from_dict(msg["op"])
        basis = int(msg.get("basis", 0))
        if self.mode == REPLICA_PROXY:
            return self._proxy_op(member, op, basis, seq)
        return self._jupiter_op(member, op, basis, seq)

    def _relay_op(self, member: Member, msg: dict) -> list[tuple[int, dict]]:
        out_msg = {
            "type": OP,
            "session": self.sid,
            "site": member.site,
            "seq": msg["seq"],
            "wire": msg["wire"],
        }
        self.relay_log.append(out_msg)
        outgoing = [
            (m.site, out_msg) for m in self.members.values() if m.site != member.site and m.connected
        ]
        outgoing.append((member.site, {"type": ACK, "session": self.sid, "seq": msg["seq"]}))
        return outgoing

    def _rebase_against_unseen(self, member: Member, op: EditOp, basis: int) -> EditOp:
        """Walk a client op past every patch sent to that client after the
        basis it was generated on.

        The stored entries are updated symmetrically (the same mutual
        transform the client applies to its pending queue), so every entry
        stays expressed in the frame the client will actually be in when it
        receives it - a one-sided walk would mix frames as soon as both
        sides have several ops in flight.
        """
        if basis > len(member.patch_log):
            raise SequenceGapError(f"basis {basis} beyond patch log {len(member.patch_log)}")
        for entry in member.patch_log[basis:]:
            for j, patch_op in enumerate(entry):
                entry[j] = it_transform(patch_op, op, SITE_ORDER)
                op = it_transform(op, patch_op, SITE_ORDER)
        return op

    def _queue_patch(self, member: Member, ops: list[EditOp], origin: int) -> tuple[int, dict]:
        member.patch_log.append(ops)
        return (
            member.site,
            {
                "type": PATCH,
                "session": self.sid,
                "site": origin,
                "index": len(member.patch_log),
                "ops": [edit_to_dict(o) for o in ops],
            },
        )

    def _proxy_op(self, member: Member, op: EditOp, basis: int, seq: int) -> list[tuple[int, dict]]:
        rebased = self._rebase_against_unseen(member, op, basis)
        outgoing: list[tuple[int, dict]] = [
            (member.site, {"type": ACK, "session": self.sid, "seq": seq})
        ]
        if rebased.is_noop:
            return outgoing
        per_member_patches: dict[int, list[EditOp]] = {}
        for unit in split_for_engine(self.engine, rebased):
            wire = member.agent.local(unit)
            self.hub.remote(wire)
            for other in self.members.values():
                if other.site == member.site:
                    continue
                per_member_patches.setdefault(other.site, []).extend(other.agent.remote(wire))
        for other_site, patches in per_member_patches.items():
            other = self.members[other_site]
            if patches and other.connected:
                outgoing.append(self._queue_patch(other, patches, member.site))
            elif patches:
                other.patch_log.append(patches)  # keep the log consistent while away
        return outgoing

    def _jupiter_op(self, member: Member, op: EditOp, basis: int, seq: int) -> list[tuple[int, dict]]:
        rebased = self._rebase_against_unseen(member, op, basis)
        outgoing: list[tuple[int, dict]] = []
        outgoing.append((member.site, {"type": ACK, "session": self.sid, "seq": seq}))
        if rebased.is_noop:
            return outgoing
        wire = member.agent.local(rebased)
        # pump the server-side jupiter loop until every agent is drained
        while wire is not None:
            landed = self.ot_server.integrate(wire)
            wire = None
            for other in self.members.values():
                applied = other.agent.incoming(landed)
                if other.site == member.site:
                    nxt = other.agent.take_outgoing()
                    if nxt is not None:
                        wire = nxt
                elif applied is not None:
                    if other.connected:
                        outgoing.append(self._queue_patch(other, [applied], landed.op.site))
                    else:
                        other.patch_log.append([applied])
        return outgoing


class RelayApp:
    """All sessions plus the idle-reclamation loop."""

    def __init__(
        self,
        default_engine: str = OT,
        default_mode: str = REPLICA_PROXY,
        idle_timeout_s: float = 600.0,
        log_dir: Optional[str] = None,
    ):
        self.sessions: dict[str, Session] = {}
        self.default_engine = default_engine
        self.default_mode = default_mode
        self.idle_timeout_s = idle_timeout_s
        self.log_dir = Path(log_dir) if log_dir else None

    def create_session(self, engine: str, mode: str) -> Session:
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r}")
        if engine == OT_SERVER:  # alias: ot engine behind the transforming server
            engine, mode = OT, TRANSFORMING_SERVER
        if mode == TRANSFORMING_SERVER and engine != OT:
            raise ConfigError("the transforming server mode is OT-only")
        if engine not in SYMMETRIC_ENGINES:
            raise ConfigError(f"unknown engine {engine!r}")
        sid = uuid.uuid4().hex[:12]
        log_path = None
        if self.log_dir is not None:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            log_path = self.log_dir / f"{sid}.jsonl"
        session = Session(sid, engine, mode, log_path)
        self.sessions[sid] = session
        return session

    def get(self, sid: str) -> Session:
        session = self.sessions.get(sid)
        if session is None:
            raise UnknownSession(f"no session {sid!r}")
        return session

    async def reap_idle(self) -> None:
        while True:
            await asyncio.sleep(min(self.idle_timeout_s / 4 + 0.05, 30.0))
            now = time.monotonic()
            for sid in list(self.sessions):
                s = self.sessions[sid]
                if s.empty and now - s.touched > self.idle_timeout_s:
                    del self.sessions[sid]


def create_app(
    default_engine: str = OT,
    default_mode: str = REPLICA_PROXY,
    idle_timeout_s: float = 600.0,
    log_dir: Optional[str] = None,
    static_dir: Optional[str] = None,
) -> FastAPI:
    relay = RelayApp(default_engine, default_mode, idle_timeout_s, log_dir)

    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        reaper = asyncio.create_task(relay.reap_idle())
        try:
            yield
        finally:
            reaper.cancel()

    app = FastAPI(title="coedit relay", lifespan=lifespan)
    app.state.relay = relay

    @app.get("/health")
    async def health():
        return {
            "status": "ok",
            "sessions": len(relay.sessions),
            "clients": sum(
                sum(1 for m in s.members.values() if m.connected) for s in relay.sessions.values()
            ),
        }

    @app.post("/sessions")
    async def create_session(body: dict | None = None):
        body = body or {}
        engine = body.get("engine", relay.default_engine)
        mode = body.get("mode", relay.default_mode)
        try:
            session = relay.create_session(engine, mode)
        except ConfigError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        return {"session": session.sid, "engine": session.engine, "mode": session.mode}

    @app.get("/sessions/{sid}")
    async def session_info(sid: str):
        try:
            session = relay.get(sid)
        except UnknownSession:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        return {
            "session": sid,
            "engine": session.engine,
            "mode": session.mode,
            "members": sorted(m.site for m in session.members.values() if m.connected),
            "text": session.snapshot_text(),
        }

    @app.websocket("/ws/{sid}")
    async def websocket_endpoint(ws: WebSocket, sid: str):
        await ws.accept()
        try:
            session = relay.get(sid)
        except UnknownSession:
            await ws.send_text(encode(error_msg(sid, "unknown-session", "no such session")))
            await ws.close()
            return
        member: Optional[Member] = None
        try:
            while True:
                frame = await ws.receive_text()
                try:
                    msg = decode(frame)
                except ValueError as exc:
                    await ws.send_text(encode(error_msg(sid, "bad-frame", str(exc))))
                    continue
                async with session.lock:
                    session.log_message("in", msg)
                    member = await _dispatch(session, ws, member, msg)
                    if member is None and msg.get("type") == LEAVE:
                        return
        except WebSocketDisconnect:
            pass
        finally:
            if member is not None:
                async with session.lock:
                    session.leave(member.site)
                    session.touch()
                    await _broadcast(
                        session,
                        {"type": LEAVE, "session": sid, "site": member.site},
                        exclude=member.site,
                    )

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="demo")

    return app


async def _send(session: Session, site: int, msg: dict) -> None:
    member = session.members.get(site)
    if member is None or member.socket is None or not member.connected:
        return
    session.log_message("out", msg)
    try:
        await member.socket.send_text(encode(msg))
    except Exception:
        session.leave(site)


async def _broadcast(session: Session, msg: dict, exclude: Optional[int] = None) -> None:
    for m in list(session.members.values()):
        if m.site != exclude:
            await _send(session, m.site, msg)


async def _dispatch(
    session: Session, ws: WebSocket, member: Optional[Member], msg: dict
) -> Optional[Member]:
    kind = msg.get("type")
    sid = session.sid

    if kind == JOIN:
        session.touch()
        rejoin_site = msg.get("site")
        if rejoin_site is not None and int(rejoin_site) in session.members:
            member = session.members[int(rejoin_site)]
            member.socket = ws
            member.connected = True
        else:
            member = session.join()
            member.socket = ws
        basis = len(member.patch_log)
        joined = {
            "type": JOINED,
            "session": sid,
            "site": member.site,
            "engine": session.engine,
            "mode": session.mode,
            "basis": basis,
            "members": sorted(m.site for m in session.members.values() if m.connected),
        }
        text = session.snapshot_text()
        if text is not None:
            joined["text"] = text
        else:
            joined["log"] = list(session.relay_log)
        await _send(session, member.site, joined)
        # replay anything the client missed since its declared basis
        declared = int(msg.get("basis", basis))
        for idx in range(declared, len(member.patch_log)):
            ops = member.patch_log[idx]
            await _send(
                session,
                member.site,
                {
                    "type": PATCH,
                    "session": sid,
                    "site": 0,
                    "index": idx + 1,
                    "ops": [edit_to_dict(o) for o in ops],
                },
            )
        await _broadcast(
            session, {"type": JOINED, "session": sid, "site": member.site, "members": joined["members"]},
            exclude=member.site,
        )
        return member

    if member is None:
        await ws.send_text(encode(error_msg(sid, "not-joined", "join the session first")))
        return None

    if kind == OP:
        try:
            outgoing = session.handle_op(member.site, msg)
        except (SequenceGapError, StaleRevisionError) as exc:
            await _send(session, member.site, error_msg(sid, "resync", str(exc)))
            text = session.snapshot_text()
            if text is not None:
                await _send(
                    session,
                    member.site,
                    {
                        "type": SNAPSHOT,
                        "session": sid,
                        "text": text,
                        "basis": len(member.patch_log),
                    },
                )
            return member
        except CoEditError as exc:
            await _send(session, member.site, error_msg(sid, "rejected", str(exc)))
            return member
        for target, out in outgoing:
            await _send(session, target, out)
        return member

    if kind == SNAPSHOT:
        session.touch()
        text = session.snapshot_text()
        reply = {"type": SNAPSHOT, "session": sid, "basis": len(member.patch_log)}
        if text is not None:
            reply["text"] = text
        else:
            reply["log"] = list(session.relay_log)
        await _send(session, member.site, reply)
        return member

    if kind == LEAVE:
        session.leave(member.site)
        session.touch()
        await _broadcast(session, {"type": LEAVE, "session": sid, "site": member.site})
        return None

    await _send(session, member.site, error_msg(sid, "bad-type", f"unknown type {kind!r}"))
    return member
