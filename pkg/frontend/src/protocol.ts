// Wire protocol mirror of the relay: one JSON object per websocket frame.

export type EditKind = "insert" | "delete";

export interface EditOp {
  kind: EditKind;
  pos: number;
  site: number;
  seq?: number;
  content?: string; // inserts
  length?: number; // deletes
}

export interface JoinedMsg {
  type: "joined";
  session: string;
  site: number;
  engine?: string;
  mode?: string;
  basis?: number;
  text?: string;
  members?: number[];
}

export interface PatchMsg {
  type: "patch";
  session: string;
  site: number; // origin
  index: number;
  ops: EditOp[];
}

export interface AckMsg {
  type: "ack";
  session: string;
  seq: number;
}

export interface SnapshotMsg {
  type: "snapshot";
  session: string;
  text?: string;
  basis?: number;
}

export interface LeaveMsg {
  type: "leave";
  session: string;
  site: number;
}

export interface ErrorMsg {
  type: "error";
  session: string;
  code: string;
  message: string;
}

export type ServerMsg = JoinedMsg | PatchMsg | AckMsg | SnapshotMsg | LeaveMsg | ErrorMsg;

export function decode(frame: string): ServerMsg {
  const msg = JSON.parse(frame);
  if (typeof msg !== "object" || msg === null || typeof msg.type !== "string") {
    throw new Error("bad protocol frame");
  }
  return msg as ServerMsg;
}

export function encode(msg: object): string {
  return JSON.stringify(msg);
}

export function span(op: EditOp): number {
  return op.kind === "insert" ? (op.content ?? "").length : op.length ?? 0;
}

export function isNoop(op: EditOp): boolean {
  return op.kind === "delete" && (op.length ?? 0) === 0;
}
