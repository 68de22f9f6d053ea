import { describe, expect, it } from "vitest";

import {
  add,
  cross,
  defaultCamera,
  dot,
  norm,
  normalize,
  project,
  quatRotate,
  rosToUnityPoint,
  rosToUnityQuat,
  scale,
  sub,
  unityToRosPoint,
  unproject,
  v3,
} from "../src/geom.js";

describe("convention conversion", () => {
  it("maps view (1,2,3) to wire (3,-1,2)", () => {
    expect(unityToRosPoint(v3(1, 2, 3))).toEqual(v3(3, -1, 2));
  });

  it("round-trips exactly", () => {
    for (const p of [v3(1, 2, 3), v3(-4.5, 0.25, 9), v3(0, 0, 0)]) {
      expect(rosToUnityPoint(unityToRosPoint(p))).toEqual(p);
      expect(unityToRosPoint(rosToUnityPoint(p))).toEqual(p);
    }
  });

  it("keeps up pointing up", () => {
    expect(unityToRosPoint(v3(0, 1, 0))).toEqual(v3(0, 0, 1));
    expect(rosToUnityPoint(v3(0, 0, 1))).toEqual(v3(0, 1, 0));
  });

  it("quaternion conversion commutes with point conversion", () => {
    // yaw 90 degrees about the wire up-axis
    const s = Math.SQRT1_2;
    const qRos = { x: 0, y: 0, z: s, w: s };
    const qUnity = rosToUnityQuat(qRos);
    for (const p of [v3(1, 0, 0), v3(0.3, -2, 1.7), v3(0, 5, 0)]) {
      const lhs = rosToUnityPoint(quatRotate(qRos, p));
      const rhs = quatRotate(qUnity, rosToUnityPoint(p));
      expect(norm(sub(lhs, rhs))).toBeLessThan(1e-9);
    }
  });
});

describe("camera", () => {
  it("projects the look-at point to the viewport center", () => {
    const cam = defaultCamera();
    const p = project(cam, add(cam.pos, v3(0, 0, 5)), 800, 600);
    expect(p).not.toBeNull();
    expect(Math.abs(p!.x - 400)).toBeLessThan(1e-9);
    expect(Math.abs(p!.y - 300)).toBeLessThan(1e-9);
  });

  it("returns null behind the camera", () => {
    const cam = defaultCamera();
    expect(project(cam, add(cam.pos, v3(0, 0, -5)), 800, 600)).toBeNull();
  });

  it("unproject inverts project", () => {
    const cam = { pos: v3(0.4, 1.7, -1), yaw: 0.3, pitch: -0.15, fovY: Math.PI / 3 };
    const points = [v3(1, 0, 4), v3(-2, 0.5, 6), v3(0.5, 2.5, 3)];
    for (const target of points) {
      const s = project(cam, target, 960, 600);
      expect(s).not.toBeNull();
      const ray = unproject(cam, s!.x, s!.y, 960, 600);
      // The ray must pass through the original point.
      const toTarget = sub(target, ray.origin);
      const along = dot(toTarget, ray.dir);
      const offAxis = norm(sub(toTarget, scale(ray.dir, along)));
      expect(along).toBeGreaterThan(0);
      expect(offAxis).toBeLessThan(1e-9);
    }
  });

  it("camera basis is orthonormal", () => {
    const cam = { pos: v3(0, 0, 0), yaw: 0.7, pitch: 0.2, fovY: 1 };
    const ray = unproject(cam, 480, 300, 960, 600);
    expect(Math.abs(norm(ray.dir) - 1)).toBeLessThan(1e-12);
    expect(Math.abs(norm(cross(ray.dir, normalize(ray.dir))))).toBeLessThan(1e-9);
  });
});
