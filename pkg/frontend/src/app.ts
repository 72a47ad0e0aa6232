// Browser wiring: session controls, the textarea editing surface, the
// latency slider (delays both directions client-side so concurrency effects
// are visible), and the convergence indicator.

import { CoClient, textHash } from "./client.js";
import { diffTexts, spliceToOps } from "./diff.js";
import { decode, encode, ServerMsg } from "./protocol.js";

const $ = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

class LatencyLink {
  // holds frames for the configured delay in both directions
  constructor(
    private ws: WebSocket,
    private onMessage: (msg: ServerMsg) => void,
    public delayMs: () => number,
  ) {
    ws.onmessage = (ev) => {
      const msg = decode(ev.data as string);
      window.setTimeout(() => this.onMessage(msg), this.delayMs());
    };
  }

  send(msg: object): void {
    window.setTimeout(() => {
      if (this.ws.readyState === WebSocket.OPEN) this.ws.send(encode(msg));
    }, this.delayMs());
  }

  close(): void {
    this.ws.close();
  }
}

let client: CoClient | null = null;
let link: LatencyLink | null = null;

const editor = () => $<HTMLTextAreaElement>("editor");

function render() {
  if (!client) return;
  const area = editor();
  if (area.value !== client.mirror) {
    area.value = client.mirror;
    area.setSelectionRange(client.caret, client.caret);
  }
  $<HTMLSpanElement>("status").textContent =
    client.state === "connected"
      ? `session ${client.session} · site ${client.site} · ${client.pending.length} pending`
      : client.state;
  $<HTMLSpanElement>("members").textContent = client.members.join(", ");
  if (client.lastError) {
    $<HTMLDivElement>("banner").textContent = client.lastError;
    $<HTMLDivElement>("banner").style.display = "block";
  }
}

function handleServerMsg(msg: ServerMsg) {
  if (!client) return;
  client.handle(msg);
  if (msg.type === "snapshot" && msg.text !== undefined) {
    const same = textHash(client.mirror) === textHash(msg.text);
    const el = $<HTMLSpanElement>("converged");
    el.textContent = same
      ? `converged (hash ${textHash(msg.text)})`
      : `DIVERGED: mirror ${textHash(client.mirror)} vs server ${textHash(msg.text)}`;
    el.className = same ? "ok" : "bad";
  }
  render();
}

function captureEdit() {
  if (!client || client.state !== "connected" || !link) return;
  const area = editor();
  const splice = diffTexts(client.mirror, area.value, area.selectionStart ?? undefined);
  if (!splice) return;
  for (const op of spliceToOps(splice, client.site)) {
    link.send(client.localEdit(op));
  }
  client.caret = area.selectionStart ?? client.caret;
  render();
}

async function createSession(): Promise<string> {
  const engine = $<HTMLSelectElement>("engine").value;
  const res = await fetch("/sessions", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ engine }),
  });
  if (!res.ok) throw new Error(`session create failed: ${await res.text()}`);
  const body = await res.json();
  return body.session as string;
}

function connect(sessionId: string) {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  const ws = new WebSocket(`${proto}://${location.host}/ws/${sessionId}`);
  client = new CoClient(sessionId);
  const slider = $<HTMLInputElement>("latency");
  link = new LatencyLink(ws, handleServerMsg, () => Number(slider.value));
  ws.onopen = () => link!.send(client!.joinMsg());
  ws.onclose = () => {
    if (client) client.state = "closed";
    render();
  };
  $<HTMLSelectElement>("engine").disabled = true; // new session required to switch
  $<HTMLInputElement>("session").value = sessionId;
  render();
}

function main() {
  $<HTMLButtonElement>("create").onclick = async () => {
    try {
      connect(await createSession());
    } catch (err) {
      $<HTMLDivElement>("banner").textContent = String(err);
      $<HTMLDivElement>("banner").style.display = "block";
    }
  };
  $<HTMLButtonElement>("join").onclick = () => {
    const sid = $<HTMLInputElement>("session").value.trim();
    if (sid) connect(sid);
  };
  $<HTMLButtonElement>("leave").onclick = () => {
    if (client && link) {
      link.send(client.leaveMsg());
      link.close();
    }
  };
  $<HTMLButtonElement>("check").onclick = () => {
    if (client && link) link.send(client.snapshotRequest());
  };
  const slider = $<HTMLInputElement>("latency");
  slider.oninput = () => {
    $<HTMLSpanElement>("latency-label").textContent = `${slider.value} ms`;
  };
  const area = editor();
  area.addEventListener("input", captureEdit);
  area.addEventListener("keyup", () => {
    if (client) client.caret = area.selectionStart ?? client.caret;
  });
}

window.addEventListener("load", main);
