// Engine-free co-editing client state machine (transport-agnostic).
//
// The mirror is updated optimistically on local edits; every incoming patch
// is transformed against the pending (unacknowledged) edits before applying,
// and each op message carries `basis` = patches received so far, which the
// server uses to rebase symmetrically. No clocks, identifiers, or history
// live here - the engines run server-side.

import { EditOp, ServerMsg, isNoop } from "./protocol.js";
import { applyEdit, itTransform, transposeCaret } from "./transform.js";

export type ConnState = "idle" | "joining" | "connected" | "closed";

export class CoClient {
  session: string;
  site = 0;
  mirror = "";
  basis = 0;
  seq = 0;
  pending: EditOp[] = [];
  members: number[] = [];
  caret = 0;
  state: ConnState = "idle";
  lastError = "";

  constructor(session: string) {
    this.session = session;
  }

  joinMsg(): object {
    this.state = "joining";
    return { type: "join", session: this.session };
  }

  leaveMsg(): object {
    return { type: "leave", session: this.session, site: this.site };
  }

  snapshotRequest(): object {
    return { type: "snapshot", session: this.session };
  }

  // Local edit already applied to the textarea; record + build the message.
  localEdit(op: EditOp): object {
    const stamped: EditOp = { ...op, site: this.site };
    this.mirror = applyEdit(this.mirror, stamped);
    this.pending.push(stamped);
    this.seq += 1;
    this.caret =
      stamped.kind === "insert"
        ? stamped.pos + (stamped.content ?? "").length
        : stamped.pos;
    return {
      type: "op",
      session: this.session,
      site: this.site,
      seq: this.seq,
      basis: this.basis,
      op: stamped,
    };
  }

  handle(msg: ServerMsg): void {
    switch (msg.type) {
      case "joined":
        if (this.state !== "connected") {
          this.site = msg.site;
          this.mirror = msg.text ?? "";
          this.basis = msg.basis ?? 0;
          this.members = msg.members ?? [];
          this.caret = 0;
          this.state = "connected";
        } else {
          this.members = msg.members ?? this.members;
        }
        break;
      case "patch": {
        for (let op of msg.ops) {
          for (let i = 0; i < this.pending.length; i++) {
            const pend = this.pending[i];
            const opNext = itTransform(op, pend);
            this.pending[i] = itTransform(pend, op);
            op = opNext;
          }
          if (isNoop(op)) continue;
          this.mirror = applyEdit(this.mirror, op);
          this.caret = transposeCaret(this.caret, op);
        }
        this.basis += 1;
        break;
      }
      case "ack":
        this.pending.shift();
        break;
      case "snapshot":
        if (msg.text !== undefined && this.pending.length > 0) {
          // resync path: abandon optimistic state
          this.mirror = msg.text;
          this.basis = msg.basis ?? this.basis;
          this.pending = [];
          this.caret = Math.min(this.caret, this.mirror.length);
        }
        break;
      case "leave":
        this.members = this.members.filter((m) => m !== msg.site);
        break;
      case "error":
        this.lastError = `${msg.code}: ${msg.message}`;
        break;
    }
  }

  quiescent(): boolean {
    return this.pending.length === 0;
  }
}

// djb2 - enough to compare a mirror against a server snapshot on demand
export function textHash(text: string): string {
  let h = 5381;
  for (let i = 0; i < text.length; i++) {
    h = ((h << 5) + h + text.charCodeAt(i)) >>> 0;
  }
  return h.toString(16);
}
