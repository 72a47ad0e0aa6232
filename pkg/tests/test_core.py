import pytest
from hypothesis import given, strategies as st

from coedit.core import (
    CausalOrder,
    Document,
    VectorClock,
    apply_edit,
    causally_ready,
    delete_op,
    insert_op,
    vc_compare,
)
from coedit.errors import RangeError


def vc(d):
    return VectorClock.of(d)


class TestApplyEdit:
    def test_insert_into_empty(self):
        doc = apply_edit(Document(""), insert_op(0, "x", 1))
        assert doc.text == "x"
        assert doc.version.get(1) == 1

    def test_delete_splice(self):
        assert apply_edit(Document("abcd"), delete_op(1, 2, 1)).text == "ad"

    def test_insert_splice(self):
        assert apply_edit(Document("abcd"), insert_op(2, "yz", 1)).text == "abyzcd"

    def test_out_of_range_insert(self):
        with pytest.raises(RangeError):
            apply_edit(Document("ab"), insert_op(3, "x", 1))

    def test_out_of_range_delete(self):
        with pytest.raises(RangeError):
            apply_edit(Document("ab"), delete_op(1, 2, 1))

    def test_zero_length_delete_rejected(self):
        with pytest.raises(RangeError):
            apply_edit(Document("ab"), delete_op(0, 0, 1))

    def test_value_semantics(self):
        d0 = Document("ab")
        apply_edit(d0, insert_op(0, "x", 1))
        assert d0.text == "ab"
        assert d0.version.get(1) == 0

    @given(
        st.text(alphabet="ab", max_size=6),
        st.integers(0, 6),
        st.text(alphabet="xy", min_size=1, max_size=3),
    )
    def test_insert_then_delete_restores(self, text, pos, content):
        pos = min(pos, len(text))
        d1 = apply_edit(Document(text), insert_op(pos, content, 1))
        d2 = apply_edit(d1, delete_op(pos, len(content), 1))
        assert d2.text == text


class TestVectorClock:
    def test_equal(self):
        assert vc_compare(vc({1: 1}), vc({1: 1, 2: 0})) is CausalOrder.EQUAL

    def test_before(self):
        assert vc_compare(vc({1: 1}), vc({1: 1, 2: 1})) is CausalOrder.BEFORE

    def test_concurrent(self):
        assert vc_compare(vc({1: 2}), vc({2: 1})) is CausalOrder.CONCURRENT

    clocks = st.dictionaries(st.integers(1, 3), st.integers(0, 3), max_size=3)

    @given(clocks, clocks)
    def test_antisymmetry(self, a, b):
        ca, cb = vc(a), vc(b)
        fwd, rev = vc_compare(ca, cb), vc_compare(cb, ca)
        flip = {
            CausalOrder.BEFORE: CausalOrder.AFTER,
            CausalOrder.AFTER: CausalOrder.BEFORE,
            CausalOrder.EQUAL: CausalOrder.EQUAL,
            CausalOrder.CONCURRENT: CausalOrder.CONCURRENT,
        }
        assert rev is flip[fwd]

    def test_tick_monotone(self):
        c = vc({1: 1})
        assert c.tick(1).get(1) == 2
        assert c.tick(2).get(2) == 1


class TestCausalReadiness:
    def test_first_op_of_site(self):
        assert causally_ready(vc({1: 1}), 1, vc({}))

    def test_gap_in_sender_sequence(self):
        assert not causally_ready(vc({1: 2}), 1, vc({}))

    def test_cross_site_dependency(self):
        assert causally_ready(vc({1: 1, 2: 1}), 2, vc({1: 1}))
        assert not causally_ready(vc({1: 1, 2: 1}), 2, vc({}))

    @given(st.lists(st.integers(1, 3), min_size=1, max_size=12))
    def test_gated_stream_never_skips(self, senders):
        """Delivering any shuffled stream through the gate admits each op only
        after all its causal predecessors."""
        # build a causally consistent history: each op's clock is the running
        # clock of its (single) site sequence
        clocks = []
        running = {s: VectorClock() for s in set(senders)}
        everything = VectorClock()
        for s in senders:
            everything = everything.tick(s)
            running[s] = everything  # each site has seen all prior ops (chain)
            clocks.append((everything, s))
        delivered = VectorClock()
        pending = list(clocks)
        # greedy gated delivery must drain completely and in causal order
        while pending:
            ready = [c for c in pending if causally_ready(c[0], c[1], delivered)]
            assert ready, "causal gating stalled on a consistent stream"
            clock, site = ready[0]
            for s, n in clock.items():
                if s != site:
                    assert delivered.get(s) >= n
            delivered = delivered.tick(site)
            pending.remove((clock, site))
