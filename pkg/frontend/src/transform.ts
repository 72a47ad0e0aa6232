// Position transforms for the engine-free client: include the effect of one
// edit into another so patches can apply over a mirror that carries
// unacknowledged local edits. Must mirror the server's rules exactly, tie
// broken by smaller-site-first.

import { EditOp, isNoop } from "./protocol.js";

const noop = (o: EditOp): EditOp => ({ kind: "delete", pos: 0, site: o.site, seq: o.seq, length: 0 });

export function itTransform(o1: EditOp, o2: EditOp): EditOp {
  if (isNoop(o1) || isNoop(o2)) return o1;
  const p1 = o1.pos;
  const p2 = o2.pos;

  if (o1.kind === "insert" && o2.kind === "insert") {
    const l2 = (o2.content ?? "").length;
    if (p1 < p2 || (p1 === p2 && o1.site < o2.site)) return o1;
    return { ...o1, pos: p1 + l2 };
  }

  if (o1.kind === "insert") {
    // against a delete
    const l2 = o2.length ?? 0;
    if (p1 <= p2) return o1;
    if (p1 >= p2 + l2) return { ...o1, pos: p1 - l2 };
    return noop(o1); // swallowed by the concurrent deletion
  }

  if (o2.kind === "insert") {
    // delete against an insert
    const l1 = o1.length ?? 0;
    const l2 = (o2.content ?? "").length;
    if (p2 >= p1 + l1) return o1;
    if (p2 <= p1) return { ...o1, pos: p1 + l2 };
    return { ...o1, length: l1 + l2 }; // extend over the inserted text
  }

  // delete against delete
  const l1 = o1.length ?? 0;
  const l2 = o2.length ?? 0;
  const overlap = Math.max(0, Math.min(p1 + l1, p2 + l2) - Math.max(p1, p2));
  const newLen = l1 - overlap;
  if (newLen === 0) return noop(o1);
  const shift = Math.max(0, Math.min(p1, p2 + l2) - p2);
  return { ...o1, pos: p1 - shift, length: newLen };
}

export function applyEdit(text: string, op: EditOp): string {
  if (isNoop(op)) return text;
  if (op.kind === "insert") {
    const content = op.content ?? "";
    if (op.pos < 0 || op.pos > text.length) throw new Error(`insert pos ${op.pos} out of range`);
    return text.slice(0, op.pos) + content + text.slice(op.pos);
  }
  const len = op.length ?? 0;
  if (op.pos < 0 || op.pos + len > text.length) throw new Error(`delete out of range`);
  return text.slice(0, op.pos) + text.slice(op.pos + len);
}

// Keep the local caret on the same logical spot across a remote patch.
export function transposeCaret(caret: number, op: EditOp): number {
  if (isNoop(op)) return caret;
  if (op.kind === "insert") {
    return op.pos <= caret ? caret + (op.content ?? "").length : caret;
  }
  const len = op.length ?? 0;
  if (op.pos >= caret) return caret;
  return Math.max(op.pos, caret - Math.min(len, caret - op.pos));
}
