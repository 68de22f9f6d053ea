// Gripper-camera panel de-rotation: the wrist roll published in
// joint_states is cancelled on the image plane so the horizon stays level.

export function wrapAngle(a: number): number {
  return Math.atan2(Math.sin(a), Math.cos(a));
}

/** Rotation to apply to the panel content for a given wrist roll. */
export function derotationAngle(gripperRotation: number): number {
  return wrapAngle(-gripperRotation);
}

/** Residual horizon tilt after de-rotation; zero when cancelled. */
export function derotationResidual(gripperRotation: number, panelRotation: number): number {
  return wrapAngle(gripperRotation + panelRotation);
}
