"""Relay service over the real websocket protocol: sessions, membership,
sequence discipline, snapshots, and convergence in every mode."""

import json
import random
import time

import pytest
from starlette.testclient import TestClient

from coedit.clients import EngineClient, MirrorClient
from coedit.protocol import SNAPSHOT, decode, encode
from coedit.relay import create_app


@pytest.fixture()
def client():
    app = create_app(idle_timeout_s=600)
    with TestClient(app) as tc:
        yield tc


def make_session(client, engine="ot", mode="replica-proxy"):
    r = client.post("/sessions", json={"engine": engine, "mode": mode})
    assert r.status_code == 200
    return r.json()["session"]


class Harness:
    """One mirror client bound to one websocket."""

    def __init__(self, client, sid):
        self.ws = client.websocket_connect(f"/ws/{sid}").__enter__()
        self.mc = MirrorClient(session=sid)

    def join(self):
        self.ws.send_text(encode(self.mc.join_msg()))
        self.recv()

    def send_edit(self, msg):
        self.ws.send_text(encode(msg))

    def recv(self):
        msg = decode(self.ws.receive_text())
        self.mc.handle(msg)
        return msg

    def drain_until_snapshot(self):
        self.ws.send_text(encode({"type": "snapshot", "session": self.mc.session}))
        while True:
            msg = self.recv()
            if msg["type"] == SNAPSHOT:
                return msg

    def close(self):
        self.ws.__exit__(None, None, None)


class TestSessionLifecycle:
    def test_create_and_health(self, client):
        sid = make_session(client, "woot")
        health = client.get("/health").json()
        assert health["status"] == "ok" and health["sessions"] == 1
        info = client.get(f"/sessions/{sid}").json()
        assert info["engine"] == "woot" and info["text"] == ""

    def test_duplicate_create_distinct_ids(self, client):
        assert make_session(client) != make_session(client)

    def test_transforming_mode_is_ot_only(self, client):
        r = client.post("/sessions", json={"engine": "logoot", "mode": "transforming-server"})
        assert r.status_code == 400

    def test_ot_server_alias(self, client):
        r = client.post("/sessions", json={"engine": "ot-server"})
        assert r.status_code == 200
        assert r.json()["mode"] == "transforming-server"

    def test_join_unknown_session(self, client):
        with client.websocket_connect("/ws/nope") as ws:
            msg = decode(ws.receive_text())
            assert msg["type"] == "error" and msg["code"] == "unknown-session"

    def test_first_join_gets_site_1_and_empty_snapshot(self, client):
        sid = make_session(client)
        h = Harness(client, sid)
        h.join()
        assert h.mc.site == 1 and h.mc.mirror == ""
        h.close()

    def test_mid_session_join_sees_server_text(self, client):
        sid = make_session(client)
        h1 = Harness(client, sid)
        h1.join()
        h1.send_edit(h1.mc.insert(0, "hello"))
        h1.recv()  # ack
        h2 = Harness(client, sid)
        h2.join()
        assert h2.mc.mirror == "hello"
        server_text = client.get(f"/sessions/{sid}").json()["text"]
        assert h2.mc.mirror == server_text
        h1.close()
        h2.close()

    def test_leave_then_rejoin_new_site(self, client):
        sid = make_session(client)
        h1 = Harness(client, sid)
        h1.join()
        h1.ws.send_text(encode(h1.mc.leave_msg()))
        h1.close()
        h2 = Harness(client, sid)
        h2.join()
        assert h2.mc.site == 2
        h2.close()

    def test_idle_session_reclaimed(self):
        app = create_app(idle_timeout_s=0.2)
        with TestClient(app) as tc:
            sid = make_session(tc)
            assert tc.get(f"/sessions/{sid}").status_code == 200
            time.sleep(0.6)
            assert tc.get(f"/sessions/{sid}").status_code == 404


class TestSequenceDiscipline:
    def test_gap_triggers_resync(self, client):
        sid = make_session(client)
        h = Harness(client, sid)
        h.join()
        msg = h.mc.insert(0, "a")
        msg["seq"] = 5  # gap
        h.send_edit(msg)
        err = decode(h.ws.receive_text())
        assert err["type"] == "error" and err["code"] == "resync"
        snap = decode(h.ws.receive_text())
        assert snap["type"] == SNAPSHOT
        h.close()

    def test_snapshot_token_no_duplicate_patches(self, client):
        sid = make_session(client)
        h1, h2 = Harness(client, sid), Harness(client, sid)
        h1.join()
        h2.join()
        h1.recv()  # membership update about h2
        h1.send_edit(h1.mc.insert(0, "x"))
        h1.recv()  # ack
        snap = h2.drain_until_snapshot()
        assert h2.mc.mirror == "x"
        assert snap["basis"] == h2.mc.basis  # token == patches already seen
        # a second snapshot does not rewind or duplicate anything
        snap2 = h2.drain_until_snapshot()
        assert snap2["basis"] == snap["basis"]
        assert h2.mc.mirror == "x"
        h1.close()
        h2.close()


def converge_two_clients(client, engine, edits_per_side=40, seed=0):
    """Both clients type concurrently without reading, then drain; the
    unread inbound queues act as the injected latency window."""
    sid = make_session(client, engine)
    h1, h2 = Harness(client, sid), Harness(client, sid)
    h1.join()
    h2.join()
    h1.recv()  # membership update
    rng = random.Random(seed)

    def one_edit(h):
        text = h.mc.mirror
        if text and rng.random() < 0.35:
            pos = rng.randrange(len(text))
            h.send_edit(h.mc.delete(pos, min(1 + rng.randrange(2), len(text) - pos)))
        else:
            pos = rng.randrange(len(text) + 1)
            h.send_edit(h.mc.insert(pos, rng.choice("abcdef" if h.mc.site == 1 else "uvwxyz")))

    for _ in range(edits_per_side):
        one_edit(h1)
    for _ in range(edits_per_side):
        one_edit(h2)

    t0 = time.perf_counter()
    h1.drain_until_snapshot()
    h2.drain_until_snapshot()
    drain_s = time.perf_counter() - t0
    server_text = client.get(f"/sessions/{sid}").json()["text"]
    h1.close()
    h2.close()
    return h1.mc.mirror, h2.mc.mirror, server_text, drain_s


class TestConvergence:
    @pytest.mark.parametrize("engine", ["ot", "woot", "logoot"])
    def test_replica_proxy_two_clients(self, client, engine):
        m1, m2, server, _ = converge_two_clients(client, engine)
        assert m1 == m2 == server

    def test_transforming_server_two_clients(self, client):
        m1, m2, server, _ = converge_two_clients(client, "ot-server")
        assert m1 == m2 == server

    @pytest.mark.parametrize("engine", ["ot", "woot", "logoot", "ot-server"])
    def test_interleaved_arrivals_both_sides_multiple_in_flight(self, engine):
        """Ops from both clients arrive at the session alternately while
        neither has seen any patches: the server-side bridge walk and the
        client-side pending walk must stay frame-consistent throughout."""
        import asyncio

        from coedit.clients import MirrorClient
        from coedit.relay import RelayApp

        relay = RelayApp()
        session = relay.create_session(engine, "replica-proxy" if engine != "ot-server" else "transforming-server")
        clients = {}
        inboxes = {1: [], 2: []}
        for i in (1, 2):
            member = session.join()
            mc = MirrorClient(session=session.sid)
            mc.site = member.site
            mc.joined = True
            clients[member.site] = mc

        def pump(site, msg):
            for target, out in session.handle_op(site, msg):
                inboxes[target].append(out)

        rng = random.Random(4)
        queued = {1: [], 2: []}
        for step in range(30):
            site = 1 if step % 2 == 0 else 2
            mc = clients[site]
            text = mc.mirror
            if text and rng.random() < 0.3:
                pos = rng.randrange(len(text))
                queued[site].append(mc.delete(pos, 1))
            else:
                queued[site].append(
                    mc.insert(rng.randrange(len(text) + 1), "ab" if site == 1 else "z")
                )
        # alternate arrival at the server while both bases stay stale
        while any(queued.values()):
            for site in (1, 2):
                if queued[site]:
                    pump(site, queued[site].pop(0))
        for site, mc in clients.items():
            for msg in inboxes[site]:
                mc.handle(msg)
        text1, text2 = clients[1].mirror, clients[2].mirror
        server = session.snapshot_text()
        assert text1 == text2 == server
        assert not clients[1].pending and not clients[2].pending


class TestPureRelay:
    def test_engine_clients_exchange_wire_ops(self, client):
        sid = make_session(client, "woot", mode="pure-relay")
        with client.websocket_connect(f"/ws/{sid}") as ws1, client.websocket_connect(
            f"/ws/{sid}"
        ) as ws2:
            c1, c2 = EngineClient(sid, "woot"), EngineClient(sid, "woot")
            ws1.send_text(encode(c1.join_msg()))
            c1.handle(decode(ws1.receive_text()))
            ws2.send_text(encode(c2.join_msg()))
            c2.handle(decode(ws2.receive_text()))
            decode(ws1.receive_text())  # membership update

            from coedit.core import insert_op

            ws1.send_text(encode(c1.edit(insert_op(0, "h", c1.site))))
            ws1.send_text(encode(c1.edit(insert_op(1, "i", c1.site))))
            ws2.send_text(encode(c2.edit(insert_op(0, "y", c2.site))))
            # c1: 2 acks + 1 op; c2: 2 ops + 1 ack
            for _ in range(3):
                c1.handle(decode(ws1.receive_text()))
                c2.handle(decode(ws2.receive_text()))
            assert c1.text() == c2.text()
            assert not c1.buffered and not c2.buffered

    def test_late_joiner_replays_log(self, client):
        sid = make_session(client, "logoot", mode="pure-relay")
        with client.websocket_connect(f"/ws/{sid}") as ws1:
            c1 = EngineClient(sid, "logoot")
            ws1.send_text(encode(c1.join_msg()))
            c1.handle(decode(ws1.receive_text()))
            from coedit.core import insert_op

            for i, ch in enumerate("abc"):
                ws1.send_text(encode(c1.edit(insert_op(i, ch, c1.site))))
            for _ in range(3):
                decode(ws1.receive_text())  # acks
            with client.websocket_connect(f"/ws/{sid}") as ws2:
                c2 = EngineClient(sid, "logoot")
                ws2.send_text(encode(c2.join_msg()))
                c2.handle(decode(ws2.receive_text()))
                assert c2.text() == "abc"
