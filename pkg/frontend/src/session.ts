// Client session: server-authoritative world state and the collection flow.
//
// The client never simulates physics; the world it renders is always the
// block list from the last observation. The collection phase only moves
// forward: building -> writing_instruction -> done.

import {
  ActionRequest,
  Observation,
  Sequencer,
  ServerMessage,
  decodeServer,
  encodeAction,
  encodeConfig,
  encodeExport,
  encodeHello,
  encodeInstruction,
} from "./protocol.js";

export type Phase = "connecting" | "building" | "writing_instruction" | "done";

/** Minimal transport surface; satisfied by browser WebSocket and by `ws`. */
export interface Transport {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: ((event: unknown) => void) | null;
  onerror: ((event: unknown) => void) | null;
  onopen: ((event: unknown) => void) | null;
}

export interface SessionEvents {
  onObservation?: (obs: Observation) => void;
  onPhase?: (phase: Phase) => void;
  onRecord?: (record: Record<string, unknown>) => void;
  onError?: (message: string) => void;
  onDisconnect?: () => void;
}

interface PendingReply {
  resolve: (msg: ServerMessage) => void;
  reject: (err: Error) => void;
}

export class ClientSession {
  readonly seq = new Sequencer();
  phase: Phase = "connecting";
  sessionId: number | null = null;
  latest: Observation | null = null;
  actionsSent = 0;
  disconnected = false;

  private pending: PendingReply[] = []; // FIFO: replies arrive in send order
  private events: SessionEvents;

  constructor(private transport: Transport, events: SessionEvents = {}) {
    this.events = events;
    transport.onmessage = (event) => this.onRaw(String(event.data));
    transport.onclose = () => {
      this.disconnected = true;
      this.events.onDisconnect?.();
      const err = new Error("connection closed");
      for (const p of this.pending.splice(0)) p.reject(err);
    };
    transport.onerror = transport.onclose;
  }

  private onRaw(raw: string): void {
    let msg: ServerMessage;
    try {
      msg = this.seq.accept(decodeServer(raw));
    } catch (err) {
      this.events.onError?.(String(err));
      return;
    }
    const waiter = this.pending.shift();
    if (msg.type === "error" && !waiter) {
      this.events.onError?.(msg.message ?? "server error");
      return;
    }
    waiter?.resolve(msg);
  }

  private request(payload: string): Promise<ServerMessage> {
    return new Promise((resolve, reject) => {
      if (this.disconnected) {
        reject(new Error("disconnected"));
        return;
      }
      this.pending.push({ resolve, reject });
      this.transport.send(payload);
    });
  }

  private setPhase(phase: Phase): void {
    this.phase = phase;
    this.events.onPhase?.(phase);
  }

  private takeObservation(msg: ServerMessage): Observation {
    if (msg.type === "error") throw new Error(msg.message ?? "server error");
    const obs = msg as unknown as Observation;
    this.latest = obs;
    this.events.onObservation?.(obs);
    return obs;
  }

  /** Handshake and initial reset; resolves once the world is visible. */
  async start(config: Record<string, unknown> = {}): Promise<Observation> {
    const hello = await this.request(encodeHello(this.seq));
    if (hello.type !== "hello") {
      throw new Error(hello.message ?? "handshake refused");
    }
    this.sessionId = hello.session_id ?? null;
    const obs = this.takeObservation(await this.request(encodeConfig(this.seq, config)));
    this.setPhase("building");
    return obs;
  }

  /** One input-mapped action; replies update the authoritative world. */
  async sendAction(action: ActionRequest): Promise<Observation> {
    if (this.phase !== "building") throw new Error(`cannot act in phase ${this.phase}`);
    this.actionsSent += 1;
    return this.takeObservation(await this.request(encodeAction(this.seq, action)));
  }

  /** Ends the building phase; empty text is rejected client-side. */
  async submitInstruction(text: string): Promise<void> {
    if (this.phase !== "building") throw new Error(`cannot submit in phase ${this.phase}`);
    if (!text.trim()) throw new Error("instruction must not be empty");
    this.setPhase("writing_instruction");
    const reply = await this.request(encodeInstruction(this.seq, text.trim()));
    if (reply.type !== "ack") {
      this.setPhase("building"); // server refused; let the user try again
      throw new Error(reply.message ?? "instruction rejected");
    }
  }

  /** Fetches the raw-format session record; moves the phase to done. */
  async exportRecord(): Promise<Record<string, unknown>> {
    if (this.phase !== "writing_instruction") {
      throw new Error(`cannot export in phase ${this.phase}`);
    }
    const reply = await this.request(encodeExport(this.seq));
    if (reply.type !== "record" || !reply.record) {
      throw new Error(reply.message ?? "export failed");
    }
    this.setPhase("done");
    this.events.onRecord?.(reply.record);
    return reply.record;
  }

  close(): void {
    this.transport.close();
  }
}
