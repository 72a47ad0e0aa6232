import { describe, expect, it } from "vitest";

import { EditOp, isNoop } from "../src/protocol.js";
import { applyEdit, itTransform, transposeCaret } from "../src/transform.js";

const ins = (pos: number, content: string, site: number): EditOp => ({
  kind: "insert",
  pos,
  content,
  site,
});
const del = (pos: number, length: number, site: number): EditOp => ({
  kind: "delete",
  pos,
  length,
  site,
});

function applyMaybe(text: string, op: EditOp): string {
  return isNoop(op) ? text : applyEdit(text, op);
}

function bothOrders(doc: string, o1: EditOp, o2: EditOp): [string, string] {
  const left = applyMaybe(applyMaybe(doc, o1), itTransform(o2, o1));
  const right = applyMaybe(applyMaybe(doc, o2), itTransform(o1, o2));
  return [left, right];
}

describe("itTransform", () => {
  it("shifts an insert past an earlier insert", () => {
    expect(itTransform(ins(3, "x", 1), ins(1, "y", 2))).toEqual(ins(4, "x", 1));
  });

  it("breaks equal-position ties by smaller site", () => {
    expect(itTransform(ins(2, "x", 1), ins(2, "y", 2))).toEqual(ins(2, "x", 1));
    expect(itTransform(ins(2, "y", 2), ins(2, "x", 1))).toEqual(ins(3, "y", 2));
  });

  it("swallows an insert inside a concurrent delete range", () => {
    expect(isNoop(itTransform(ins(2, "x", 1), del(1, 3, 2)))).toBe(true);
  });

  it("extends a delete over a concurrent insert inside its range", () => {
    expect(itTransform(del(1, 3, 1), ins(2, "xy", 2))).toEqual(del(1, 5, 1));
  });

  it("converges for both application orders on random pairs", () => {
    // deterministic mini-fuzz mirroring the backend's exhaustive check
    let seed = 1234;
    const rnd = (n: number) => {
      seed = (seed * 1103515245 + 12345) & 0x7fffffff;
      return seed % n;
    };
    for (let trial = 0; trial < 3000; trial++) {
      const doc = "abcdef".slice(0, rnd(7));
      const mk = (site: number): EditOp => {
        if (doc.length === 0 || rnd(2) === 0) {
          return ins(rnd(doc.length + 1), "xy".slice(0, rnd(2) + 1), site);
        }
        const pos = rnd(doc.length);
        return del(pos, rnd(doc.length - pos) + 1, site);
      };
      const o1 = mk(1);
      const o2 = mk(2);
      const [left, right] = bothOrders(doc, o1, o2);
      expect(left, `${doc} ${JSON.stringify([o1, o2])}`).toBe(right);
    }
  });
});

describe("transposeCaret", () => {
  it("shifts right for inserts at or before the caret", () => {
    expect(transposeCaret(3, ins(1, "ab", 2))).toBe(5);
    expect(transposeCaret(3, ins(3, "a", 2))).toBe(4);
    expect(transposeCaret(3, ins(4, "a", 2))).toBe(3);
  });

  it("pulls back over deletions before the caret", () => {
    expect(transposeCaret(5, del(1, 2, 2))).toBe(3);
    expect(transposeCaret(5, del(3, 4, 2))).toBe(3); // caret inside the range
    expect(transposeCaret(2, del(4, 1, 2))).toBe(2);
  });

  it("stays inside the document", () => {
    for (let caret = 0; caret <= 6; caret++) {
      const text = "abcdef";
      const op = del(2, 3, 2);
      const next = applyEdit(text, op);
      const moved = transposeCaret(caret, op);
      expect(moved).toBeGreaterThanOrEqual(0);
      expect(moved).toBeLessThanOrEqual(next.length);
    }
  });
});
