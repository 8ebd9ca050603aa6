import { describe, expect, it } from "vitest";

import {
  PROTOCOL_VERSION,
  Sequencer,
  VERBS,
  decodeServer,
  encodeAction,
  encodeConfig,
  encodeHello,
  encodeInstruction,
} from "../src/protocol.js";

describe("sequencer", () => {
  it("stamps strictly increasing seq numbers", () => {
    const seq = new Sequencer();
    const a = JSON.parse(encodeHello(seq));
    const b = JSON.parse(encodeConfig(seq));
    const c = JSON.parse(encodeAction(seq, { verb: "noop", camera: [0, 0] }));
    expect([a.seq, b.seq, c.seq]).toEqual([1, 2, 3]);
  });

  it("rejects stale or repeated server seq", () => {
    const seq = new Sequencer();
    seq.accept({ type: "hello", seq: 1 });
    seq.accept({ type: "ack", seq: 2 });
    expect(() => seq.accept({ type: "ack", seq: 2 })).toThrow(/seq/);
    expect(() => seq.accept({ type: "ack", seq: 1 })).toThrow(/seq/);
  });
});

describe("encoding", () => {
  it("hello carries the protocol version", () => {
    const msg = JSON.parse(encodeHello(new Sequencer()));
    expect(msg).toMatchObject({ type: "hello", version: PROTOCOL_VERSION });
  });

  it("actions carry verb and camera pair", () => {
    const msg = JSON.parse(
      encodeAction(new Sequencer(), { verb: "place_block", camera: [-2.5, 5] }),
    );
    expect(msg).toMatchObject({ type: "action", verb: "place_block", camera: [-2.5, 5] });
  });

  it("instruction text is embedded verbatim", () => {
    const msg = JSON.parse(encodeInstruction(new Sequencer(), "two towers"));
    expect(msg.text).toBe("two towers");
  });

  it("decode refuses non-objects", () => {
    expect(() => decodeServer("42")).toThrow();
    expect(decodeServer('{"type":"ack","seq":1}').type).toBe("ack");
  });

  it("verb list matches the 14 base actions", () => {
    expect(VERBS).toHaveLength(14);
    expect(VERBS[0]).toBe("noop");
    expect(VERBS[13]).toBe("select_6");
  });
});
