// Input mapping: the browser stands in for the headset sensors.
// Mouse position over the viewport casts the gaze ray, WASD translates
// the head and dragging yaws it, Q/E tilt head roll, and submitted text
// becomes a voice-command token.

import { Camera, unproject, add, scale, v3, Vec3 } from "./geom.js";
import { Envelope, jsonEnvelope } from "./protocol.js";

export const HEAD_SPEED = 1.5; // m/s
export const ROLL_RATE = 1.0; // rad/s
export const DRAG_YAW_PER_PX = 0.005; // rad/px
export const BUFFER_MS = 1000;

export interface HeadState {
  pos: Vec3;
  yawDeg: number;
  pitchDeg: number;
  rollDeg: number;
}

export function defaultHead(): HeadState {
  return { pos: v3(0, 1.6, -2), yawDeg: 0, pitchDeg: 0, rollDeg: 0 };
}

/** Local-frame head velocity for the held movement keys. */
export function headVelocity(keys: Set<string>): Vec3 {
  let vx = 0;
  let vz = 0;
  if (keys.has("w")) vz += HEAD_SPEED;
  if (keys.has("s")) vz -= HEAD_SPEED;
  if (keys.has("d")) vx += HEAD_SPEED;
  if (keys.has("a")) vx -= HEAD_SPEED;
  return v3(vx, 0, vz);
}

/** Q tilts the head roll down (negative), E up; zero with neither held. */
export function rollRate(keys: Set<string>): number {
  let rate = 0;
  if (keys.has("q")) rate -= ROLL_RATE;
  if (keys.has("e")) rate += ROLL_RATE;
  return rate;
}

export function integrateHead(
  head: HeadState,
  keys: Set<string>,
  dragDx: number,
  dt: number
): HeadState {
  const yaw = (head.yawDeg * Math.PI) / 180 + dragDx * DRAG_YAW_PER_PX;
  const vel = headVelocity(keys);
  const cy = Math.cos(yaw);
  const sy = Math.sin(yaw);
  // Move in the yawed local frame: +z forward, +x right.
  const world = v3(vel.x * cy + vel.z * sy, 0, -vel.x * sy + vel.z * cy);
  return {
    pos: add(head.pos, scale(world, dt)),
    yawDeg: (yaw * 180) / Math.PI,
    pitchDeg: head.pitchDeg,
    rollDeg: head.rollDeg + (rollRate(keys) * dt * 180) / Math.PI,
  };
}

export function headEnvelope(head: HeadState): Envelope {
  return jsonEnvelope("/ui/head", {
    pos: [head.pos.x, head.pos.y, head.pos.z],
    yaw_deg: head.yawDeg,
    pitch_deg: head.pitchDeg,
    roll_deg: head.rollDeg,
  });
}

/** Cast the gaze ray through a viewport pixel; far point feeds the core. */
export function gazeEnvelope(
  cam: Camera,
  mouseX: number,
  mouseY: number,
  width: number,
  height: number
): Envelope {
  const ray = unproject(cam, mouseX, mouseY, width, height);
  const toward = add(ray.origin, scale(ray.dir, 100));
  return jsonEnvelope("/ui/gaze", {
    from: [ray.origin.x, ray.origin.y, ray.origin.z],
    toward: [toward.x, toward.y, toward.z],
  });
}

export function commandEnvelope(text: string): Envelope {
  return jsonEnvelope("/holo/command", { cmd: text });
}

/** Outbound queue that buffers while disconnected, dropping after 1 s. */
export class OutboundBuffer {
  private items: { env: Envelope; at: number }[] = [];
  dropped = false;

  push(env: Envelope, connected: boolean, nowMs: number): Envelope[] {
    if (connected) {
      const flushed = this.flush(nowMs);
      flushed.push(env);
      return flushed;
    }
    this.items.push({ env, at: nowMs });
    return [];
  }

  flush(nowMs: number): Envelope[] {
    const fresh = this.items.filter((item) => nowMs - item.at <= BUFFER_MS);
    if (fresh.length !== this.items.length) this.dropped = true;
    this.items = [];
    return fresh.map((item) => item.env);
  }

  get pending(): number {
    return this.items.length;
  }
}
