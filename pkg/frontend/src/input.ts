// Input mapping: every key press, click, or pointer drag becomes exactly one
// wire action. The mapping is total over the handled inputs and injective
// per frame: one input event never produces zero or two actions.

import type { ActionRequest, Verb } from "./protocol.js";

export const CAMERA_CLAMP = 5.0; // degrees per frame per axis, server-enforced too
export const DRAG_SENSITIVITY = 0.4; // degrees per pixel

const KEY_VERBS: Record<string, Verb> = {
  KeyW: "step_forward",
  KeyS: "step_backward",
  KeyD: "step_right",
  KeyA: "step_left",
  Space: "jump",
  Digit1: "select_1",
  Digit2: "select_2",
  Digit3: "select_3",
  Digit4: "select_4",
  Digit5: "select_5",
  Digit6: "select_6",
};

export function clampCamera(dp: number, dy: number): [number, number] {
  const clamp = (v: number) => Math.max(-CAMERA_CLAMP, Math.min(CAMERA_CLAMP, v));
  return [clamp(dp), clamp(dy)];
}

/** Key press to action; unhandled keys return null (browser keeps them). */
export function actionForKey(code: string): ActionRequest | null {
  const verb = KEY_VERBS[code];
  if (!verb) return null;
  return { verb, camera: [0, 0] };
}

/** Click places, alt-click (or right click) breaks. */
export function actionForClick(altOrRight: boolean): ActionRequest {
  return { verb: altOrRight ? "break_block" : "place_block", camera: [0, 0] };
}

/** Pointer drag to a camera-only action; dy pixels tilt, dx pixels pan. */
export function actionForDrag(dxPixels: number, dyPixels: number): ActionRequest {
  const [dp, dy] = clampCamera(-dyPixels * DRAG_SENSITIVITY, dxPixels * DRAG_SENSITIVITY);
  return { verb: "noop", camera: [dp, dy] };
}

export function handledKeys(): string[] {
  return Object.keys(KEY_VERBS);
}
