"""Server-based OT: the transforming revision log and the single-pending-op
client bridge."""

import random

import pytest

from coedit.core import delete_op, insert_op
from coedit.errors import StaleRevisionError
from coedit.jupiter import OTClient, OTServer
from coedit.ot import OTWireOp


def test_head_revision_lands_unchanged():
    srv = OTServer(text="ab")
    out = srv.integrate(OTWireOp(insert_op(1, "x", 1), revision=0))
    assert out.op == insert_op(1, "x", 1)
    assert out.revision == 1
    assert srv.text == "axb"


def test_behind_by_one_concurrent_insert_shifts():
    srv = OTServer(text="ab")
    srv.integrate(OTWireOp(insert_op(0, "q", 2), revision=0))
    out = srv.integrate(OTWireOp(insert_op(1, "x", 1), revision=0))
    assert out.op.pos == 2  # shifted right past the landed insert
    assert srv.text == "qaxb"


def test_future_revision_rejected():
    srv = OTServer()
    with pytest.raises(StaleRevisionError):
        srv.integrate(OTWireOp(insert_op(0, "x", 1), revision=3))


def test_client_no_pending_applies_verbatim():
    cl = OTClient(2, text="ab", revision=0)
    applied = cl.incoming(OTWireOp(insert_op(0, "x", 1), revision=1))
    assert applied == insert_op(0, "x", 1)
    assert cl.text == "xab"


def test_client_ack_changes_nothing():
    cl = OTClient(1)
    wire = cl.local(insert_op(0, "a", 1))
    assert wire is not None
    before = cl.text
    assert cl.incoming(OTWireOp(wire.op, revision=1)) is None
    assert cl.text == before
    assert not cl.pending


def test_client_tie_break_matches_server():
    # pending local insert at 0 vs incoming insert at 0 from the lower site
    cl = OTClient(2)
    cl.local(insert_op(0, "b", 2))
    applied = cl.incoming(OTWireOp(insert_op(0, "a", 1), revision=1))
    assert applied == insert_op(0, "a", 1)  # smaller site keeps position
    assert cl.text == "ab"


def _pump(server, clients, wire):
    """Deliver one submission and its broadcast synchronously."""
    queue = [wire]
    while queue:
        landed = server.integrate(queue.pop(0))
        for cl in clients:
            cl.incoming(landed)
            nxt = cl.take_outgoing()
            if nxt is not None:
                queue.append(nxt)


def test_two_clients_converge_with_server():
    rng = random.Random(5)
    srv = OTServer()
    clients = [OTClient(1), OTClient(2)]
    backlog = []
    for step in range(40):
        cl = clients[rng.randrange(2)]
        if cl.text and rng.random() < 0.3:
            pos = rng.randrange(len(cl.text))
            wire = cl.local(delete_op(pos, 1, cl.site))
        else:
            pos = rng.randrange(len(cl.text) + 1)
            wire = cl.local(insert_op(pos, rng.choice("abc"), cl.site))
        if wire is not None:
            backlog.append(wire)
        if backlog and rng.random() < 0.7:
            _pump(srv, clients, backlog.pop(0))
    while backlog:
        _pump(srv, clients, backlog.pop(0))
    assert clients[0].text == clients[1].text == srv.text
    assert all(not c.pending for c in clients)


def test_log_replay_equals_server_text():
    srv = OTServer()
    clients = [OTClient(1), OTClient(2)]
    w1 = clients[0].local(insert_op(0, "hello", 1))
    _pump(srv, clients, w1)
    w2 = clients[1].local(insert_op(5, " world", 2))
    _pump(srv, clients, w2)
    replay = ""
    from coedit.core import apply_to_text

    for op in srv.log:
        if not op.is_noop:
            replay = apply_to_text(replay, op)
    assert replay == srv.text == "hello world"
