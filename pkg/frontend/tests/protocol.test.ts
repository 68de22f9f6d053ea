import { describe, expect, it } from "vitest";

import {
  concatBytes,
  decodeFrames,
  encodeFrame,
  Envelope,
  jsonEnvelope,
  payloadJson,
  ProtocolError,
} from "../src/protocol.js";

const GOLDEN = new Uint8Array([0x01, 0x00, 0x00, 0x00, 0x61, 0x00, 0x00, 0x00, 0x00]);

function randomEnvelope(rand: () => number): Envelope {
  const chars = "abcdefg/_0123456789";
  const len = 1 + Math.floor(rand() * 30);
  let topic = "";
  for (let i = 0; i < len; i++) topic += chars[Math.floor(rand() * chars.length)];
  const payload = new Uint8Array(Math.floor(rand() * 100));
  for (let i = 0; i < payload.length; i++) payload[i] = Math.floor(rand() * 256);
  return { topic, payload };
}

// Small deterministic PRNG so failures reproduce.
function mulberry32(seed: number): () => number {
  let a = seed;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("framing", () => {
  it("matches the golden frame byte for byte", () => {
    expect(encodeFrame({ topic: "a", payload: new Uint8Array(0) })).toEqual(GOLDEN);
  });

  it("rejects an empty topic", () => {
    expect(() => encodeFrame({ topic: "", payload: new Uint8Array(0) })).toThrow(ProtocolError);
  });

  it("round-trips random envelopes", () => {
    const rand = mulberry32(1);
    const envs = Array.from({ length: 500 }, () => randomEnvelope(rand));
    let blob = new Uint8Array(0);
    for (const env of envs) blob = concatBytes(blob, encodeFrame(env));
    const { frames, rest } = decodeFrames(blob);
    expect(rest.length).toBe(0);
    expect(frames).toEqual(envs);
  });

  it("is chunk-invariant at every split of the golden frame", () => {
    for (let cut = 0; cut <= GOLDEN.length; cut++) {
      const first = decodeFrames(GOLDEN.slice(0, cut));
      const second = decodeFrames(concatBytes(first.rest, GOLDEN.slice(cut)));
      const frames = [...first.frames, ...second.frames];
      expect(frames).toEqual([{ topic: "a", payload: new Uint8Array(0) }]);
      expect(second.rest.length).toBe(0);
    }
  });

  it("is chunk-invariant under random splits", () => {
    const rand = mulberry32(2);
    for (let trial = 0; trial < 100; trial++) {
      const envs = Array.from({ length: 1 + Math.floor(rand() * 5) }, () => randomEnvelope(rand));
      let blob = new Uint8Array(0);
      for (const env of envs) blob = concatBytes(blob, encodeFrame(env));
      const cuts = Array.from({ length: 1 + Math.floor(rand() * 20) }, () =>
        Math.floor(rand() * (blob.length + 1))
      ).sort((a, b) => a - b);
      const got: Envelope[] = [];
      let buf = new Uint8Array(0);
      let prev = 0;
      for (const cut of [...cuts, blob.length]) {
        buf = concatBytes(buf, blob.slice(prev, cut));
        prev = cut;
        const { frames, rest } = decodeFrames(buf);
        got.push(...frames);
        buf = rest;
      }
      expect(got).toEqual(envs);
      expect(buf.length).toBe(0);
    }
  });

  it("raises a protocol error on an absurd declared length", () => {
    expect(() => decodeFrames(new Uint8Array([0xff, 0xff, 0xff, 0xff]))).toThrow(ProtocolError);
  });

  it("json envelopes round-trip", () => {
    const env = jsonEnvelope("/holo/command", { cmd: "stand" });
    expect(payloadJson(env)).toEqual({ cmd: "stand" });
  });
});
