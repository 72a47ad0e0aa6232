"""Primitive inclusion transforms, checked against the two-order oracle:
applying (o1, T(o2,o1)) and (o2, T(o1,o2)) must produce identical text."""

import itertools

from hypothesis import given, strategies as st

from coedit.core import apply_to_text, delete_op, insert_op
from coedit.ot import NAIVE_LEFT, SITE_ORDER, it_transform


def apply_pair(doc, first, second_transformed):
    out = apply_to_text(doc, first) if not first.is_noop else doc
    if not second_transformed.is_noop:
        out = apply_to_text(out, second_transformed)
    return out


def two_order_converges(doc, o1, o2, policy=SITE_ORDER):
    left = apply_pair(doc, o1, it_transform(o2, o1, policy))
    right = apply_pair(doc, o2, it_transform(o1, o2, policy))
    return left == right, left, right


def valid_ops(doc_len, site, contents=("a", "b", "ab")):
    for pos in range(doc_len + 1):
        for c in contents:
            yield insert_op(pos, c, site)
    for pos in range(doc_len):
        for ln in range(1, doc_len - pos + 1):
            yield delete_op(pos, ln, site)


def docs(max_len, alphabet="ab"):
    for n in range(max_len + 1):
        for tup in itertools.product(alphabet, repeat=n):
            yield "".join(tup)


class TestExamples:
    def test_insert_shifts_past_earlier_insert(self):
        # two-order oracle fixes the expected form
        doc = "abcd"
        o1, o2 = insert_op(3, "x", 1), insert_op(1, "y", 2)
        ok, left, right = two_order_converges(doc, o1, o2)
        assert ok and left == right
        assert it_transform(o1, o2) == insert_op(3 + 1, "x", 1)

    def test_insert_before_deleted_region_unchanged(self):
        o1, o2 = insert_op(1, "x", 1), delete_op(3, 1, 2)
        assert it_transform(o1, o2) == o1

    def test_delete_shifts_right_of_insert(self):
        doc = "abcd"
        o1, o2 = delete_op(2, 1, 1), insert_op(0, "y", 2)
        ok, *_ = two_order_converges(doc, o1, o2)
        assert ok
        assert it_transform(o1, o2) == delete_op(3, 1, 1)

    def test_equal_position_tie_smaller_site_keeps(self):
        doc = "abcd"
        o1, o2 = insert_op(2, "x", 1), insert_op(2, "y", 2)
        assert it_transform(o1, o2, SITE_ORDER) == o1
        # both application orders land on the same text with x before y
        ok, left, right = two_order_converges(doc, o1, o2)
        assert ok and left == "abxycd"

    def test_delete_covered_becomes_marker(self):
        o1, o2 = delete_op(1, 1, 1), delete_op(0, 3, 2)
        assert it_transform(o1, o2).is_noop

    def test_marker_is_inert(self):
        marker = it_transform(delete_op(1, 1, 1), delete_op(0, 3, 2))
        assert it_transform(marker, insert_op(0, "q", 2)).is_noop
        assert it_transform(insert_op(0, "q", 2), marker) == insert_op(0, "q", 2)


class TestTransformPairProperty:
    def test_exhaustive_site_order(self):
        """Both transformed application orders agree for every valid op pair
        from distinct sites on docs up to length 4 over {a, b}."""
        checked = 0
        for doc in docs(4):
            for o1 in valid_ops(len(doc), 1):
                for o2 in valid_ops(len(doc), 2):
                    ok, left, right = two_order_converges(doc, o1, o2)
                    assert ok, f"{doc!r}: {o1} vs {o2} -> {left!r} != {right!r}"
                    checked += 1
        assert checked == 13_275  # 31 docs, every distinct-site op pair

    def test_naive_left_breaks_somewhere(self):
        broken = 0
        for doc in docs(2):
            for o1 in valid_ops(len(doc), 1):
                for o2 in valid_ops(len(doc), 2):
                    if not two_order_converges(doc, o1, o2, NAIVE_LEFT)[0]:
                        broken += 1
        assert broken > 0

    @given(
        st.text(alphabet="abc", min_size=0, max_size=12),
        st.data(),
    )
    def test_random_pairs(self, doc, data):
        def one_op(site):
            if data.draw(st.booleans()) or not doc:
                pos = data.draw(st.integers(0, len(doc)))
                return insert_op(pos, data.draw(st.text("xy", min_size=1, max_size=3)), site)
            pos = data.draw(st.integers(0, len(doc) - 1))
            return delete_op(pos, data.draw(st.integers(1, len(doc) - pos)), site)

        o1, o2 = one_op(1), one_op(2)
        ok, left, right = two_order_converges(doc, o1, o2)
        assert ok, f"{doc!r}: {o1} vs {o2} -> {left!r} != {right!r}"
