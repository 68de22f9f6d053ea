// Minimal 3D math for the console: vectors, quaternions, the two world
// conventions, and the perspective camera used for picking and drawing.
//
// The view renders in the operator's convention (left-handed y-up, same
// axes the scene file uses); robot telemetry arrives in the wire
// convention (right-hand z-up) and is converted on display.

export interface Vec3 {
  x: number;
  y: number;
  z: number;
}

export interface Quat {
  x: number;
  y: number;
  z: number;
  w: number;
}

export const v3 = (x: number, y: number, z: number): Vec3 => ({ x, y, z });

export function add(a: Vec3, b: Vec3): Vec3 {
  return v3(a.x + b.x, a.y + b.y, a.z + b.z);
}

export function sub(a: Vec3, b: Vec3): Vec3 {
  return v3(a.x - b.x, a.y - b.y, a.z - b.z);
}

export function scale(a: Vec3, k: number): Vec3 {
  return v3(a.x * k, a.y * k, a.z * k);
}

export function dot(a: Vec3, b: Vec3): number {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return v3(a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x);
}

export function norm(a: Vec3): number {
  return Math.sqrt(dot(a, a));
}

export function normalize(a: Vec3): Vec3 {
  const n = norm(a);
  if (n < 1e-12) throw new Error("cannot normalize zero vector");
  return scale(a, 1 / n);
}

export function quatRotate(q: Quat, v: Vec3): Vec3 {
  const qv = v3(q.x, q.y, q.z);
  const t = scale(cross(qv, v), 2);
  return add(add(v, scale(t, q.w)), cross(qv, t));
}

// Wire (z-up) <-> view (y-up) conversions; exact signed permutations.
// view -> wire: (x, y, z) -> (z, -x, y); wire -> view is the inverse.
export function unityToRosPoint(p: Vec3): Vec3 {
  return v3(p.z, -p.x + 0, p.y); // "+ 0" folds -0 to +0
}

export function rosToUnityPoint(p: Vec3): Vec3 {
  return v3(-p.y + 0, p.z, p.x);
}

function quatToMat(q: Quat): number[][] {
  const { x, y, z, w } = q;
  return [
    [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
    [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
    [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
  ];
}

function matToQuat(m: number[][]): Quat {
  const tr = m[0][0] + m[1][1] + m[2][2];
  if (tr > 0) {
    const s = Math.sqrt(tr + 1) * 2;
    return { x: (m[2][1] - m[1][2]) / s, y: (m[0][2] - m[2][0]) / s, z: (m[1][0] - m[0][1]) / s, w: 0.25 * s };
  }
  if (m[0][0] > m[1][1] && m[0][0] > m[2][2]) {
    const s = Math.sqrt(1 + m[0][0] - m[1][1] - m[2][2]) * 2;
    return { x: 0.25 * s, y: (m[0][1] + m[1][0]) / s, z: (m[0][2] + m[2][0]) / s, w: (m[2][1] - m[1][2]) / s };
  }
  if (m[1][1] > m[2][2]) {
    const s = Math.sqrt(1 + m[1][1] - m[0][0] - m[2][2]) * 2;
    return { x: (m[0][1] + m[1][0]) / s, y: 0.25 * s, z: (m[1][2] + m[2][1]) / s, w: (m[0][2] - m[2][0]) / s };
  }
  const s = Math.sqrt(1 + m[2][2] - m[0][0] - m[1][1]) * 2;
  return { x: (m[0][2] + m[2][0]) / s, y: (m[1][2] + m[2][1]) / s, z: 0.25 * s, w: (m[1][0] - m[0][1]) / s };
}

// Basis change wire->view as a matrix: rows express view axes in wire terms.
const ROS_TO_UNITY: number[][] = [
  [0, -1, 0],
  [0, 0, 1],
  [1, 0, 0],
];
const UNITY_TO_ROS: number[][] = [
  [0, 0, 1],
  [-1, 0, 0],
  [0, 1, 0],
];

function matMul(a: number[][], b: number[][]): number[][] {
  const out = [
    [0, 0, 0],
    [0, 0, 0],
    [0, 0, 0],
  ];
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
    }
  }
  return out;
}

export function rosToUnityQuat(q: Quat): Quat {
  return matToQuat(matMul(matMul(ROS_TO_UNITY, quatToMat(q)), UNITY_TO_ROS));
}

// -- camera ------------------------------------------------------------

export interface Camera {
  pos: Vec3;
  yaw: number; // radians about +y
  pitch: number; // radians, positive looks up
  fovY: number; // radians
}

export function defaultCamera(): Camera {
  return { pos: v3(0, 1.6, -2), yaw: 0, pitch: 0, fovY: Math.PI / 3 };
}

export interface CameraBasis {
  forward: Vec3;
  right: Vec3;
  up: Vec3;
}

export function cameraBasis(cam: Camera): CameraBasis {
  const cy = Math.cos(cam.yaw);
  const sy = Math.sin(cam.yaw);
  const cp = Math.cos(cam.pitch);
  const sp = Math.sin(cam.pitch);
  const forward = v3(sy * cp, sp, cy * cp);
  const right = v3(cy, 0, -sy);
  const up = cross(forward, right); // left-handed: forward x right = up
  return { forward, right, up };
}

export function project(
  cam: Camera,
  p: Vec3,
  width: number,
  height: number
): { x: number; y: number; depth: number } | null {
  const { forward, right, up } = cameraBasis(cam);
  const d = sub(p, cam.pos);
  const zv = dot(d, forward);
  if (zv < 1e-3) return null;
  const f = height / 2 / Math.tan(cam.fovY / 2);
  return {
    x: width / 2 + (f * dot(d, right)) / zv,
    y: height / 2 - (f * dot(d, up)) / zv,
    depth: zv,
  };
}

export function unproject(
  cam: Camera,
  sx: number,
  sy: number,
  width: number,
  height: number
): { origin: Vec3; dir: Vec3 } {
  const { forward, right, up } = cameraBasis(cam);
  const f = height / 2 / Math.tan(cam.fovY / 2);
  const dir = normalize(
    add(add(forward, scale(right, (sx - width / 2) / f)), scale(up, (height / 2 - sy) / f))
  );
  return { origin: cam.pos, dir };
}
