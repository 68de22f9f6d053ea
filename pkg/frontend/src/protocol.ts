// Wire framing shared with the core:
// [u32 LE topic byte-length][topic utf-8][u32 LE payload byte-length][payload]

export const MAX_TOPIC_BYTES = 255;
export const MAX_PAYLOAD_BYTES = 1 << 20;

export interface Envelope {
  topic: string;
  payload: Uint8Array;
}

export class ProtocolError extends Error {}

const encoder = new TextEncoder();
const decoder = new TextDecoder("utf-8", { fatal: true });

export function encodeFrame(env: Envelope): Uint8Array {
  const topicBytes = encoder.encode(env.topic);
  if (topicBytes.length === 0) throw new ProtocolError("empty topic");
  if (topicBytes.length > MAX_TOPIC_BYTES) throw new ProtocolError("topic too long");
  if (env.payload.length > MAX_PAYLOAD_BYTES) throw new ProtocolError("payload too large");
  const out = new Uint8Array(8 + topicBytes.length + env.payload.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, topicBytes.length, true);
  out.set(topicBytes, 4);
  view.setUint32(4 + topicBytes.length, env.payload.length, true);
  out.set(env.payload, 8 + topicBytes.length);
  return out;
}

export function decodeFrames(buf: Uint8Array): { frames: Envelope[]; rest: Uint8Array } {
  const frames: Envelope[] = [];
  let pos = 0;
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  for (;;) {
    if (buf.length - pos < 4) break;
    const topicLen = view.getUint32(pos, true);
    if (topicLen === 0 || topicLen > MAX_TOPIC_BYTES) {
      throw new ProtocolError(`bad topic length: ${topicLen}`);
    }
    if (buf.length - pos < 4 + topicLen + 4) break;
    const payloadLen = view.getUint32(pos + 4 + topicLen, true);
    if (payloadLen > MAX_PAYLOAD_BYTES) {
      throw new ProtocolError(`bad payload length: ${payloadLen}`);
    }
    if (buf.length - pos < 8 + topicLen + payloadLen) break;
    let topic: string;
    try {
      topic = decoder.decode(buf.subarray(pos + 4, pos + 4 + topicLen));
    } catch {
      throw new ProtocolError("topic is not valid UTF-8");
    }
    const start = pos + 8 + topicLen;
    frames.push({ topic, payload: buf.slice(start, start + payloadLen) });
    pos = start + payloadLen;
  }
  return { frames, rest: buf.slice(pos) };
}

export function concatBytes(a: Uint8Array, b: Uint8Array): Uint8Array {
  const out = new Uint8Array(a.length + b.length);
  out.set(a, 0);
  out.set(b, a.length);
  return out;
}

export function jsonEnvelope(topic: string, value: unknown): Envelope {
  return { topic, payload: encoder.encode(JSON.stringify(value)) };
}

export function payloadJson(env: Envelope): unknown {
  return JSON.parse(new TextDecoder().decode(env.payload));
}
