import { describe, expect, it } from "vitest";

import { derotationAngle, derotationResidual, wrapAngle } from "../src/derotate.js";

const HALF_DEG = (0.5 * Math.PI) / 180;

describe("gripper camera de-rotation", () => {
  it("cancels the wrist roll within 0.5 degrees over a full sweep", () => {
    // Acceptance: gripper rotation sweeping 0 -> 2pi, sampled every degree.
    for (let deg = 0; deg < 360; deg++) {
      const rotation = (deg * Math.PI) / 180;
      const panel = derotationAngle(rotation);
      expect(Math.abs(derotationResidual(rotation, panel))).toBeLessThan(HALF_DEG);
    }
  });

  it("handles unbounded accumulated rotation", () => {
    for (const rotation of [7.5, 31.4, -12.2, 100.0]) {
      const panel = derotationAngle(rotation);
      expect(Math.abs(derotationResidual(rotation, panel))).toBeLessThan(HALF_DEG);
      expect(Math.abs(panel)).toBeLessThanOrEqual(Math.PI + 1e-12);
    }
  });

  it("zero rotation leaves the panel upright", () => {
    expect(derotationAngle(0)).toBe(-0);
  });

  it("wrap folds multiples of a turn back to the half-turn boundary", () => {
    expect(Math.abs(wrapAngle(3 * Math.PI))).toBeCloseTo(Math.PI, 12);
    expect(Math.abs(wrapAngle(-3 * Math.PI))).toBeCloseTo(Math.PI, 12);
    expect(wrapAngle(0.5)).toBeCloseTo(0.5, 12);
  });
});
