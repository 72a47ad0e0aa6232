// Textarea capture: diff the editing surface against the mirror and express
// the change as at most two position-based edits (delete then insert, for
// selection replacement). The caret hint disambiguates runs of repeated
// characters toward where the user actually typed.

import { EditOp } from "./protocol.js";

export interface Splice {
  pos: number;
  removed: string;
  inserted: string;
}

export function diffTexts(prev: string, next: string, caretAfter?: number): Splice | null {
  if (prev === next) return null;
  let start = 0;
  const maxStart = Math.min(prev.length, next.length);
  while (start < maxStart && prev[start] === next[start]) start++;
  // with a caret hint, the edit cannot extend past the caret in the new text
  if (caretAfter !== undefined && start > caretAfter) start = caretAfter;
  let endPrev = prev.length;
  let endNext = next.length;
  while (endPrev > start && endNext > start && prev[endPrev - 1] === next[endNext - 1]) {
    endPrev--;
    endNext--;
  }
  return {
    pos: start,
    removed: prev.slice(start, endPrev),
    inserted: next.slice(start, endNext),
  };
}

export function spliceToOps(s: Splice, site: number): EditOp[] {
  const ops: EditOp[] = [];
  if (s.removed.length > 0) {
    ops.push({ kind: "delete", pos: s.pos, site, length: s.removed.length });
  }
  if (s.inserted.length > 0) {
    ops.push({ kind: "insert", pos: s.pos, site, content: s.inserted });
  }
  return ops;
}
