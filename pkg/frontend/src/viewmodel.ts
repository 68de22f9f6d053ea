// The console's view model: everything on screen is derived from
// envelopes received from the core. The browser holds no authoritative
// state, so replaying the same envelopes reproduces the same view.

import type { Quat, Vec3 } from "./geom.js";

export const TOOLTIP_MS = 2000;
export const TELEMETRY_STALE_MS = 1000;

export interface SceneBox {
  min: Vec3;
  max: Vec3;
}

export interface SceneView {
  groundHeight: number;
  boxes: SceneBox[];
  markers: { id: string; pos: Vec3 }[];
}

export interface RobotView {
  status: {
    power: string;
    lease: string;
    posture: string;
    body_pose: { pos: number[]; quat: number[] };
  } | null;
  joints: {
    gripper_rotation: number;
    gripper_open: number;
    arm_pose: { pos: number[]; quat: number[] };
  } | null;
  lastTelemetryAt: number | null;
}

export interface ViewModel {
  connected: boolean;
  scene: SceneView | null;
  t: number;
  mode: string;
  active: boolean;
  helpVisible: boolean;
  visualize: boolean;
  selection: Vec3 | null;
  cursor: Vec3 | null;
  head: { pos: Vec3; quat: Quat; roll: number } | null;
  robot: RobotView;
  tooltip: { text: string; shownAt: number } | null;
  rejection: { token: string; reason: string; shownAt: number } | null;
  banner: string | null;
}

export function initialViewModel(): ViewModel {
  return {
    connected: false,
    scene: null,
    t: 0,
    mode: "none",
    active: false,
    helpVisible: false,
    visualize: false,
    selection: null,
    cursor: null,
    head: null,
    robot: { status: null, joints: null, lastTelemetryAt: null },
    tooltip: null,
    rejection: null,
    banner: null,
  };
}

function asVec(value: unknown): Vec3 | null {
  if (!Array.isArray(value) || value.length !== 3) return null;
  return { x: Number(value[0]), y: Number(value[1]), z: Number(value[2]) };
}

export function applyEnvelope(
  vm: ViewModel,
  topic: string,
  payload: Record<string, unknown>,
  nowMs: number
): ViewModel {
  switch (topic) {
    case "/ui/scene": {
      const boxes = ((payload.boxes as { min: number[]; max: number[] }[]) ?? []).map((b) => ({
        min: asVec(b.min)!,
        max: asVec(b.max)!,
      }));
      const markers = ((payload.markers as { id: string; pos: number[] }[]) ?? []).map((m) => ({
        id: m.id,
        pos: asVec(m.pos)!,
      }));
      vm.scene = { groundHeight: Number(payload.ground_height ?? 0), boxes, markers };
      break;
    }
    case "/ui/state": {
      vm.t = Number(payload.t ?? vm.t);
      vm.mode = String(payload.mode ?? vm.mode);
      vm.active = Boolean(payload.active);
      vm.helpVisible = Boolean(payload.help_visible);
      vm.visualize = Boolean(payload.visualize);
      vm.selection = asVec(payload.selection);
      vm.cursor = asVec(payload.cursor);
      const head = payload.head as { pos: number[]; quat: number[]; roll: number } | null;
      if (head) {
        const q = head.quat;
        vm.head = {
          pos: asVec(head.pos)!,
          quat: { x: q[0], y: q[1], z: q[2], w: q[3] },
          roll: Number(head.roll ?? 0),
        };
      }
      const robot = payload.robot as { status: RobotView["status"]; joints: RobotView["joints"] };
      if (robot) {
        if (robot.status) vm.robot.status = robot.status;
        if (robot.joints) {
          vm.robot.joints = robot.joints;
          vm.robot.lastTelemetryAt = nowMs;
        }
      }
      // Reconnection: reconstruct a still-fresh tooltip from the snapshot.
      const lastTooltip = payload.last_tooltip as { text: string; t: number } | null;
      if (lastTooltip && vm.tooltip === null) {
        const ageMs = (vm.t - lastTooltip.t) * 1000;
        if (ageMs >= 0 && ageMs < TOOLTIP_MS) {
          vm.tooltip = { text: lastTooltip.text, shownAt: nowMs - ageMs };
        }
      }
      break;
    }
    case "/ui/events": {
      const kind = String(payload.kind ?? "");
      const data = (payload.data as Record<string, unknown>) ?? {};
      if (kind === "tooltip") {
        vm.tooltip = { text: String(data.text ?? ""), shownAt: nowMs };
      } else if (kind === "rejected") {
        vm.rejection = {
          token: String(data.token ?? ""),
          reason: String(data.reason ?? ""),
          shownAt: nowMs,
        };
      } else if (kind === "warning") {
        vm.banner = String((data as { reason?: string }).reason ?? "warning");
      }
      break;
    }
    case "/spot/joint_states": {
      vm.robot.joints = payload as RobotView["joints"];
      vm.robot.lastTelemetryAt = nowMs;
      break;
    }
    case "/spot/status": {
      vm.robot.status = payload as RobotView["status"];
      break;
    }
  }
  return vm;
}

export function tooltipVisible(vm: ViewModel, nowMs: number): boolean {
  return vm.tooltip !== null && nowMs - vm.tooltip.shownAt < TOOLTIP_MS;
}

export function rejectionVisible(vm: ViewModel, nowMs: number): boolean {
  return vm.rejection !== null && nowMs - vm.rejection.shownAt < TOOLTIP_MS * 2;
}

export function telemetryStale(vm: ViewModel, nowMs: number): boolean {
  return (
    vm.robot.lastTelemetryAt === null || nowMs - vm.robot.lastTelemetryAt > TELEMETRY_STALE_MS
  );
}
