/** Session console client: one event socket per session view, seq-based
 * resume on reconnect, and optimistic tag commands reconciled against the
 * server's echoed events. The socket is injected so the transport is testable.
 */

import { isRejection, type SessionEvent, type TagCommand } from "./events.js";
import {
  applyEvent,
  initialModel,
  renderLines,
  type ConsoleModel,
  type TagLane,
} from "./viewModel.js";

export interface EventSocket {
  send(data: string): void;
  close(): void;
  onmessage: ((data: string) => void) | null;
  onclose: (() => void) | null;
}

export type SocketFactory = (url: string) => EventSocket;

export interface Rejection {
  error: string;
  message: string;
}

export class ConsoleClient {
  private model: ConsoleModel = initialModel();
  private socket: EventSocket | null = null;
  private pending: TagCommand[] = [];
  readonly rejections: Rejection[] = [];
  connected = false;

  constructor(
    private readonly sessionId: string,
    private readonly openSocket: SocketFactory,
  ) {}

  /** Connect (or reconnect). Resumes from the last applied seq, so a
   * mid-session drop produces neither duplicate nor missing bars. */
  connect(): void {
    const url = `/v1/sessions/${this.sessionId}/events?from_seq=${this.model.lastSeq + 1}`;
    this.socket = this.openSocket(url);
    this.connected = true;
    this.socket.onmessage = (data) => this.receive(data);
    this.socket.onclose = () => {
      this.connected = false;
    };
  }

  disconnect(): void {
    this.socket?.close();
    this.socket = null;
    this.connected = false;
  }

  /** Send a tag command; the lane updates optimistically until the server
   * echoes the event (confirm) or rejects the command (roll back). */
  tag(requirementId: string, action: "open" | "close", t: number, label?: string): void {
    if (!this.socket) throw new Error("not connected");
    const command: TagCommand = { cmd: "tag", requirement_id: requirementId, action, t };
    if (label !== undefined) command.label = label;
    this.pending.push(command);
    this.socket.send(JSON.stringify(command));
  }

  private receive(data: string): void {
    const msg = JSON.parse(data) as unknown;
    if (isRejection(msg)) {
      // server refused the oldest outstanding command: roll back the overlay
      this.pending.shift();
      this.rejections.push({ error: msg.error, message: msg.message });
      return;
    }
    const event = msg as SessionEvent;
    if (event.seq <= this.model.lastSeq) return; // duplicate from an old socket
    if (event.kind === "requirement_tagged") {
      const p = event.payload as { requirement_id: string; action: string };
      const at = this.pending.findIndex(
        (c) => c.requirement_id === p.requirement_id && c.action === p.action,
      );
      if (at !== -1) this.pending.splice(at, 1); // confirmed: drop the overlay
    }
    this.model = applyEvent(this.model, event);
  }

  /** Server-confirmed model plus the optimistic overlay of in-flight tags. */
  view(): ConsoleModel {
    if (this.pending.length === 0) return this.model;
    const lanes: Record<string, TagLane> = Object.fromEntries(
      Object.entries(this.model.lanes).map(([k, lane]) => [
        k,
        { ...lane, intervals: lane.intervals.map((iv) => ({ ...iv })) },
      ]),
    );
    for (const c of this.pending) {
      const lane = (lanes[c.requirement_id] ??= {
        requirementId: c.requirement_id,
        label: c.label ?? "",
        intervals: [],
      });
      if (c.action === "open") {
        lane.intervals.push({ tStart: c.t, tEnd: null });
      } else {
        const open = lane.intervals.find((iv) => iv.tEnd === null);
        if (open) open.tEnd = c.t;
      }
    }
    return { ...this.model, lanes };
  }

  render(): string[] {
    return renderLines(this.view());
  }
}
