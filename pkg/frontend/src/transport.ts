// Connection plumbing: one WebSocket per session, reconnect with log
// re-sync so the feed never silently loses entries.

import { parseServerFrame, type EventFrame, type ServerFrame } from "./wire.js";

export interface TransportCallbacks {
  onFrame: (frame: ServerFrame) => void;
  onOpen: () => void;
  onClose: () => void;
  /** Fired after every successful connect with the authoritative log text. */
  onResync: (logText: string) => void;
}

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: unknown }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: ((err: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;
export type Fetcher = (url: string) => Promise<string>;

export async function createSession(baseUrl: string, fetchJson: (url: string, init?: object) => Promise<unknown>): Promise<string> {
  const body = await fetchJson(`${baseUrl}/sessions`, { method: "POST" });
  const data = body as { session_id?: string };
  if (!data.session_id) throw new Error("session creation failed");
  return data.session_id;
}

export class PlayConnection {
  private socket: SocketLike | null = null;
  private closedByUser = false;
  private everConnected = false;
  private reconnectDelayMs = 500;

  constructor(
    private readonly baseUrl: string,
    private readonly sessionId: string,
    private readonly callbacks: TransportCallbacks,
    private readonly makeSocket: SocketFactory,
    private readonly fetchText: Fetcher,
  ) {}

  get logUrl(): string {
    return `${this.baseUrl}/sessions/${this.sessionId}/log`;
  }

  get playUrl(): string {
    const ws = this.baseUrl.replace(/^http/, "ws");
    return `${ws}/sessions/${this.sessionId}/play`;
  }

  connect(): void {
    const socket = this.makeSocket(this.playUrl);
    this.socket = socket;
    socket.onopen = () => {
      void this.handleOpen();
    };
    socket.onmessage = (event) => {
      const frame = parseServerFrame(String(event.data));
      if (frame) this.callbacks.onFrame(frame);
    };
    socket.onclose = () => {
      this.socket = null;
      this.callbacks.onClose();
      if (!this.closedByUser) {
        setTimeout(() => this.connect(), this.reconnectDelayMs);
        this.reconnectDelayMs = Math.min(this.reconnectDelayMs * 2, 10_000);
      }
    };
    socket.onerror = () => {
      // the close handler owns recovery
    };
  }

  private async handleOpen(): Promise<void> {
    this.reconnectDelayMs = 500;
    this.everConnected = true;
    this.callbacks.onOpen();
    // entries logged before this socket existed (session creation, or a gap
    // while we were away) only live in the log: it is authoritative
    try {
      const text = await this.fetchText(this.logUrl);
      this.callbacks.onResync(text);
    } catch {
      // next disconnect cycle will retry
    }
  }

  get isOpen(): boolean {
    return this.socket !== null;
  }

  send(frame: EventFrame): boolean {
    if (!this.socket) return false;
    this.socket.send(JSON.stringify(frame));
    return true;
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
  }
}
