// Wire protocol: JSON messages over one WebSocket, strictly increasing seq
// per direction; every server reply echoes the client seq it answers.

export const PROTOCOL_VERSION = 1;

export const VERBS = [
  "noop",
  "step_forward",
  "step_backward",
  "step_right",
  "step_left",
  "jump",
  "break_block",
  "place_block",
  "select_1",
  "select_2",
  "select_3",
  "select_4",
  "select_5",
  "select_6",
] as const;

export type Verb = (typeof VERBS)[number];

export type BlockQuad = [number, number, number, number]; // x, y, z, color

export interface Observation {
  step: number;
  reward: number;
  done: boolean;
  info: Record<string, unknown>;
  chat: string;
  compass: number;
  inventory: number[];
  selected: number;
  grid?: BlockQuad[];
  pose?: [number, number, number, number, number];
  pov_png?: string;
}

export interface ServerMessage {
  type: "hello" | "observation" | "ack" | "record" | "error";
  seq: number;
  echo?: number;
  message?: string;
  fatal?: boolean;
  session_id?: number;
  mode?: string;
  version?: number;
  record?: Record<string, unknown>;
  [key: string]: unknown;
}

export interface ActionRequest {
  verb: Verb;
  camera: [number, number];
}

/** Client-side sequencer: stamps outgoing messages, checks incoming order. */
export class Sequencer {
  private nextSeq = 1;
  private lastServerSeq = 0;

  stamp<T extends Record<string, unknown>>(msg: T): T & { seq: number } {
    return { ...msg, seq: this.nextSeq++ };
  }

  /** Throws when the server's seq stream goes backwards. */
  accept(msg: ServerMessage): ServerMessage {
    if (typeof msg.seq !== "number" || msg.seq <= this.lastServerSeq) {
      throw new Error(`server seq ${msg.seq} not after ${this.lastServerSeq}`);
    }
    this.lastServerSeq = msg.seq;
    return msg;
  }
}

export function encodeHello(seq: Sequencer): string {
  return JSON.stringify(seq.stamp({ type: "hello", version: PROTOCOL_VERSION }));
}

export function encodeConfig(
  seq: Sequencer,
  config: Record<string, unknown> = {},
): string {
  return JSON.stringify(seq.stamp({ type: "config", config }));
}

export function encodeAction(seq: Sequencer, action: ActionRequest): string {
  return JSON.stringify(
    seq.stamp({ type: "action", verb: action.verb, camera: action.camera }),
  );
}

export function encodeInstruction(seq: Sequencer, text: string): string {
  return JSON.stringify(seq.stamp({ type: "instruction_submit", text }));
}

export function encodeExport(seq: Sequencer): string {
  return JSON.stringify(seq.stamp({ type: "export_log" }));
}

export function decodeServer(raw: string): ServerMessage {
  const msg = JSON.parse(raw) as ServerMessage;
  if (typeof msg !== "object" || msg === null || typeof msg.type !== "string") {
    throw new Error("malformed server message");
  }
  return msg;
}
