"""Shared document/operation model: position-based edits, vector clocks,
and the causal-readiness test used by every engine and the simulator.

Everything here has value semantics: operations return new values and never
mutate their inputs, so exhaustive-order oracles can fork states cheaply.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping

from .errors import RangeError

INSERT = "insert"
DELETE = "delete"


@dataclass(frozen=True, slots=True)
class EditOp:
    """Position-based user-level edit on a plain character document.

    ``pos`` counts Unicode scalar values. ``content`` is set for inserts,
    ``length`` for deletes. ``site`` identifies the generating replica and
    ``seq`` is that site's 1-based local counter. A delete with length 0 is
    the zero-effect marker produced by transformation; callers skip applying
    it.
    """

    kind: str
    pos: int
    site: int
    seq: int = 0
    content: str = ""
    length: int = 0

    @property
    def is_noop(self) -> bool:
        return self.kind == DELETE and self.length == 0

    @property
    def span(self) -> int:
        """Number of characters inserted or removed."""
        return len(self.content) if self.kind == INSERT else self.length

    def with_pos(self, pos: int) -> "EditOp":
        return replace(self, pos=pos)


def insert_op(pos: int, content: str, site: int, seq: int = 0) -> EditOp:
    return EditOp(INSERT, pos, site, seq, content=content)


def delete_op(pos: int, length: int, site: int, seq: int = 0) -> EditOp:
    return EditOp(DELETE, pos, site, seq, length=length)


NOOP_MARKER_KIND = DELETE


def noop_marker(site: int, seq: int = 0) -> EditOp:
    """Zero-effect delete marker (length 0 at pos 0)."""
    return EditOp(DELETE, 0, site, seq, length=0)


class CausalOrder(enum.Enum):
    BEFORE = "before"
    AFTER = "after"
    CONCURRENT = "concurrent"
    EQUAL = "equal"


class VectorClock:
    """Per-site op counters; an absent site reads as 0. Immutable value type
    with a cached hash (clocks key the transform memo tables)."""

    __slots__ = ("counters", "_hash")

    def __init__(self, counters: tuple[tuple[int, int], ...] = ()):
        self.counters = counters
        self._hash = hash(counters)

    @staticmethod
    def of(mapping: Mapping[int, int] | None = None) -> "VectorClock":
        if not mapping:
            return VectorClock()
        items = tuple(sorted((s, n) for s, n in mapping.items() if n))
        return VectorClock(items)

    def __eq__(self, other) -> bool:
        return isinstance(other, VectorClock) and self.counters == other.counters

    def __hash__(self) -> int:
        return self._hash

    def get(self, site: int) -> int:
        for s, n in self.counters:
            if s == site:
                return n
        return 0

    def tick(self, site: int) -> "VectorClock":
        """New clock with ``site``'s counter incremented by one."""
        cs = self.counters
        for i, (s, n) in enumerate(cs):
            if s == site:
                return VectorClock(cs[:i] + ((s, n + 1),) + cs[i + 1 :])
            if s > site:
                return VectorClock(cs[:i] + ((site, 1),) + cs[i:])
        return VectorClock(cs + ((site, 1),))

    def merge(self, other: "VectorClock") -> "VectorClock":
        out = dict(self.counters)
        for s, n in other.counters:
            if n > out.get(s, 0):
                out[s] = n
        return VectorClock(tuple(sorted(out.items())))

    def items(self) -> Iterator[tuple[int, int]]:
        return iter(self.counters)

    def sites(self) -> list[int]:
        return [s for s, _ in self.counters]

    def total(self) -> int:
        return sum(n for _, n in self.counters)

    def as_dict(self) -> dict[int, int]:
        return dict(self.counters)

    def __repr__(self) -> str:  # compact traces
        inner = ",".join(f"{s}:{n}" for s, n in self.counters)
        return "{" + inner + "}"


def vc_compare(a: VectorClock, b: VectorClock) -> CausalOrder:
    """Happen-before comparison of two clocks."""
    a_le_b = True
    b_le_a = True
    sites = {s for s, _ in a.counters} | {s for s, _ in b.counters}
    for s in sites:
        na, nb = a.get(s), b.get(s)
        if na > nb:
            a_le_b = False
        elif na < nb:
            b_le_a = False
    if a_le_b and b_le_a:
        return CausalOrder.EQUAL
    if a_le_b:
        return CausalOrder.BEFORE
    if b_le_a:
        return CausalOrder.AFTER
    return CausalOrder.CONCURRENT


def causally_ready(op_clock: VectorClock, op_site: int, delivered: VectorClock) -> bool:
    """True iff the op is the next expected one from its site and all its
    cross-site dependencies are already delivered."""
    if op_clock.get(op_site) != delivered.get(op_site) + 1:
        return False
    for s, n in op_clock.items():
        if s != op_site and n > delivered.get(s):
            return False
    return True


@dataclass(frozen=True, slots=True)
class Document:
    """Character document plus the clock of ops applied to it."""

    text: str = ""
    version: VectorClock = field(default_factory=VectorClock)


def splice_insert(text: str, pos: int, content: str) -> str:
    if not content:
        raise RangeError("insert content must be non-empty")
    if not 0 <= pos <= len(text):
        raise RangeError(f"insert pos {pos} outside document of length {len(text)}")
    return text[:pos] + content + text[pos:]


def splice_delete(text: str, pos: int, length: int) -> str:
    if length < 1:
        raise RangeError("delete length must be >= 1")
    if pos < 0 or pos + length > len(text):
        raise RangeError(
            f"delete [{pos},{pos + length}) outside document of length {len(text)}"
        )
    return text[:pos] + text[pos + length :]


def apply_to_text(text: str, op: EditOp) -> str:
    """Splice a single valid (non-marker) edit into a plain string."""
    if op.kind == INSERT:
        return splice_insert(text, op.pos, op.content)
    return splice_delete(text, op.pos, op.length)


def apply_edit(doc: Document, op: EditOp) -> Document:
    """Apply one edit, returning a new document with the site counter bumped.

    Raises RangeError when the op violates its range invariants; that always
    signals a buggy engine conversion upstream, never user input.
    """
    return Document(apply_to_text(doc.text, op), doc.version.tick(op.site))
