// Help panel: placed at a fixed offset in front of the camera at the
// moment it is shown, then left world-fixed — it does not follow the
// camera afterwards.

import { add, Camera, cameraBasis, scale, Vec3 } from "./geom.js";

export const HELP_OFFSET = { right: -0.5, up: 0.25, forward: 2.5 };

export const HELP_LINES: string[] = [
  "sit / stand / power on / power off",
  "claim / release / self right",
  "roll over left / roll over right",
  "spin left / spin right / come here",
  "follow mode / select mode / arm mode",
  "activate / terminate",
  "select item / delete selection (select mode)",
  "grasp / rotate hand / stop rotate hand (arm mode)",
  "visualize on / visualize off (arm mode)",
  "show help / hide help",
];

export function helpWorldPosition(cam: Camera): Vec3 {
  const basis = cameraBasis(cam);
  return add(
    add(add(cam.pos, scale(basis.right, HELP_OFFSET.right)), scale(basis.up, HELP_OFFSET.up)),
    scale(basis.forward, HELP_OFFSET.forward)
  );
}

export interface HelpPanel {
  visible: boolean;
  worldPos: Vec3 | null;
}

export function initialHelpPanel(): HelpPanel {
  return { visible: false, worldPos: null };
}

/** Follow the core's visibility flag; anchor the panel on the rising edge. */
export function updateHelpPanel(panel: HelpPanel, visible: boolean, cam: Camera): HelpPanel {
  if (visible && !panel.visible) {
    return { visible: true, worldPos: helpWorldPosition(cam) };
  }
  if (!visible && panel.visible) {
    return { visible: false, worldPos: null };
  }
  return panel;
}
