// Canvas renderer: operator-convention scene with the robot drawn from
// telemetry, plus the de-rotated gripper-camera panel.

import { derotationAngle } from "./derotate.js";
import {
  add,
  Camera,
  normalize,
  project,
  quatRotate,
  Quat,
  rosToUnityPoint,
  rosToUnityQuat,
  sub,
  v3,
  Vec3,
} from "./geom.js";
import { telemetryStale, ViewModel } from "./viewmodel.js";

const COLORS = {
  bg: "#10141a",
  grid: "#27313f",
  box: "#3d4c5f",
  boxTop: "#4c6075",
  marker: "#d8a93a",
  selection: "#f2f2f2",
  cursor: "#4fc3f7",
  robot: "#7bd88f",
  hand: "#e58fe5",
  panelBg: "#05070a",
};

function boxCorners(min: Vec3, max: Vec3): Vec3[] {
  return [
    v3(min.x, min.y, min.z),
    v3(max.x, min.y, min.z),
    v3(max.x, min.y, max.z),
    v3(min.x, min.y, max.z),
    v3(min.x, max.y, min.z),
    v3(max.x, max.y, min.z),
    v3(max.x, max.y, max.z),
    v3(min.x, max.y, max.z),
  ];
}

const BOX_EDGES: [number, number][] = [
  [0, 1], [1, 2], [2, 3], [3, 0],
  [4, 5], [5, 6], [6, 7], [7, 4],
  [0, 4], [1, 5], [2, 6], [3, 7],
];

function strokeBox(
  ctx: CanvasRenderingContext2D,
  cam: Camera,
  corners: Vec3[],
  w: number,
  h: number,
  color: string
): void {
  const pts = corners.map((c) => project(cam, c, w, h));
  ctx.strokeStyle = color;
  ctx.beginPath();
  for (const [a, b] of BOX_EDGES) {
    const pa = pts[a];
    const pb = pts[b];
    if (!pa || !pb) continue;
    ctx.moveTo(pa.x, pa.y);
    ctx.lineTo(pb.x, pb.y);
  }
  ctx.stroke();
}

function orientedCorners(center: Vec3, half: Vec3, rot: Quat): Vec3[] {
  const out: Vec3[] = [];
  for (const sx of [-1, 1]) {
    for (const sy of [-1, 1]) {
      for (const sz of [-1, 1]) {
        out.push(add(center, quatRotate(rot, v3(sx * half.x, sy * half.y, sz * half.z))));
      }
    }
  }
  // Reorder into the boxCorners edge layout (bottom ring, then top ring).
  return [out[0], out[4], out[6], out[2], out[1], out[5], out[7], out[3]];
}

function drawGrid(
  ctx: CanvasRenderingContext2D,
  cam: Camera,
  groundY: number,
  w: number,
  h: number
): void {
  ctx.strokeStyle = COLORS.grid;
  ctx.lineWidth = 1;
  ctx.beginPath();
  for (let i = -10; i <= 10; i += 1) {
    const a = project(cam, v3(i, groundY, -10), w, h);
    const b = project(cam, v3(i, groundY, 10), w, h);
    if (a && b) {
      ctx.moveTo(a.x, a.y);
      ctx.lineTo(b.x, b.y);
    }
    const c = project(cam, v3(-10, groundY, i), w, h);
    const d = project(cam, v3(10, groundY, i), w, h);
    if (c && d) {
      ctx.moveTo(c.x, c.y);
      ctx.lineTo(d.x, d.y);
    }
  }
  ctx.stroke();
}

function drawSceneInto(
  ctx: CanvasRenderingContext2D,
  cam: Camera,
  vm: ViewModel,
  w: number,
  h: number
): void {
  if (vm.scene) {
    drawGrid(ctx, cam, vm.scene.groundHeight, w, h);
    for (const box of vm.scene.boxes) {
      strokeBox(ctx, cam, boxCorners(box.min, box.max), w, h, COLORS.box);
    }
    for (const marker of vm.scene.markers) {
      const half = v3(0.06, 0.06, 0.06);
      strokeBox(
        ctx,
        cam,
        boxCorners(sub(marker.pos, half), add(marker.pos, half)),
        w,
        h,
        COLORS.marker
      );
    }
  }
  if (vm.selection) {
    const half = v3(0.08, 0.08, 0.08);
    strokeBox(ctx, cam, boxCorners(sub(vm.selection, half), add(vm.selection, half)), w, h, COLORS.selection);
  }
  drawRobot(ctx, cam, vm, w, h);
}

export function robotWorldPoses(
  vm: ViewModel
): { body: { pos: Vec3; rot: Quat }; hand: { pos: Vec3; rot: Quat } } | null {
  const status = vm.robot.status;
  const joints = vm.robot.joints;
  if (!status) return null;
  const bp = status.body_pose;
  const bodyRos = {
    pos: v3(bp.pos[0], bp.pos[1], bp.pos[2]),
    rot: { x: bp.quat[0], y: bp.quat[1], z: bp.quat[2], w: bp.quat[3] },
  };
  let handRos = bodyRos;
  if (joints) {
    const hp = joints.arm_pose;
    const local = {
      pos: v3(hp.pos[0], hp.pos[1], hp.pos[2]),
      rot: { x: hp.quat[0], y: hp.quat[1], z: hp.quat[2], w: hp.quat[3] },
    };
    handRos = {
      pos: add(bodyRos.pos, quatRotate(bodyRos.rot, local.pos)),
      rot: mulQuat(bodyRos.rot, local.rot),
    };
  }
  return {
    body: { pos: rosToUnityPoint(bodyRos.pos), rot: rosToUnityQuat(bodyRos.rot) },
    hand: { pos: rosToUnityPoint(handRos.pos), rot: rosToUnityQuat(handRos.rot) },
  };
}

function mulQuat(a: Quat, b: Quat): Quat {
  return {
    x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
    y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
    z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
  };
}

function drawRobot(
  ctx: CanvasRenderingContext2D,
  cam: Camera,
  vm: ViewModel,
  w: number,
  h: number
): void {
  const poses = robotWorldPoses(vm);
  if (!poses) return;
  const bodyCenter = add(poses.body.pos, v3(0, 0.35, 0));
  strokeBox(ctx, cam, orientedCorners(bodyCenter, v3(0.25, 0.18, 0.55), poses.body.rot), w, h, COLORS.robot);
  strokeBox(ctx, cam, orientedCorners(poses.hand.pos, v3(0.07, 0.07, 0.1), poses.hand.rot), w, h, COLORS.hand);
  const a = project(cam, bodyCenter, w, h);
  const b = project(cam, poses.hand.pos, w, h);
  if (a && b) {
    ctx.strokeStyle = COLORS.hand;
    ctx.beginPath();
    ctx.moveTo(a.x, a.y);
    ctx.lineTo(b.x, b.y);
    ctx.stroke();
  }
}

export function renderMain(canvas: HTMLCanvasElement, cam: Camera, vm: ViewModel): void {
  const ctx = canvas.getContext("2d")!;
  const { width: w, height: h } = canvas;
  ctx.fillStyle = COLORS.bg;
  ctx.fillRect(0, 0, w, h);
  drawSceneInto(ctx, cam, vm, w, h);
  if (vm.cursor) {
    const p = project(cam, vm.cursor, w, h);
    if (p) {
      ctx.fillStyle = COLORS.cursor;
      ctx.beginPath();
      ctx.arc(p.x, p.y, Math.max(3, 40 / p.depth), 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}

/** The gripper-camera panel: a synthetic view from the hand pose whose
 * content is counter-rotated so the horizon stays level. */
export function renderGripperPanel(
  canvas: HTMLCanvasElement,
  vm: ViewModel,
  nowMs: number
): void {
  const ctx = canvas.getContext("2d")!;
  const { width: w, height: h } = canvas;
  ctx.fillStyle = COLORS.panelBg;
  ctx.fillRect(0, 0, w, h);
  const poses = robotWorldPoses(vm);
  const joints = vm.robot.joints;
  if (poses && joints) {
    // Hand-mounted camera: look along the hand's forward axis.
    const fwd = quatRotate(poses.hand.rot, v3(0, 0, 1));
    let dir: Vec3;
    try {
      dir = normalize(v3(fwd.x, fwd.y, fwd.z));
    } catch {
      dir = v3(0, 0, 1);
    }
    const camH: Camera = {
      pos: poses.hand.pos,
      yaw: Math.atan2(dir.x, dir.z),
      pitch: Math.asin(Math.max(-1, Math.min(1, dir.y))),
      fovY: Math.PI / 2.5,
    };
    ctx.save();
    ctx.translate(w / 2, h / 2);
    ctx.rotate(derotationAngle(joints.gripper_rotation));
    ctx.translate(-w / 2, -h / 2);
    drawSceneInto(ctx, camH, vm, w, h);
    ctx.restore();
    // Horizon reference line for the operator.
    ctx.strokeStyle = "#888";
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(0, h / 2);
    ctx.lineTo(w, h / 2);
    ctx.stroke();
    ctx.setLineDash([]);
  }
  if (telemetryStale(vm, nowMs)) {
    ctx.fillStyle = "rgba(60, 60, 60, 0.75)";
    ctx.fillRect(0, 0, w, h);
    ctx.fillStyle = "#ccc";
    ctx.font = "12px monospace";
    ctx.fillText("telemetry stale", 8, h / 2);
  }
}
