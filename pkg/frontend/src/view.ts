// Isometric projection of the zone: pure geometry here, canvas in main.ts,
// so the draw order and screen math are testable without a DOM.

import type { BlockQuad, Observation } from "./protocol.js";

export const ZONE_X = 11;
export const ZONE_Y = 9;
export const ZONE_Z = 11;

export const BLOCK_COLORS: Record<number, string> = {
  1: "#3f60d9",
  2: "#4ca049",
  3: "#cc3a30",
  4: "#e08524",
  5: "#8a42b8",
  6: "#e8d03f",
};

export interface IsoParams {
  tile: number; // half-width of a cell diamond in pixels
  originX: number;
  originY: number;
}

export interface Quad {
  points: [number, number][]; // screen-space polygon
  fill: string;
  stroke?: string;
}

/** Cell corner to screen. Classic 2:1 isometric, y is world height. */
export function isoPoint(x: number, y: number, z: number, p: IsoParams): [number, number] {
  return [
    p.originX + (x - z) * p.tile,
    p.originY + (x + z) * p.tile * 0.5 - y * p.tile,
  ];
}

function shade(hex: string, factor: number): string {
  const n = parseInt(hex.slice(1), 16);
  const ch = (v: number) => Math.max(0, Math.min(255, Math.round(v * factor)));
  const r = ch((n >> 16) & 255);
  const g = ch((n >> 8) & 255);
  const b = ch(n & 255);
  return `#${((r << 16) | (g << 8) | b).toString(16).padStart(6, "0")}`;
}

/** Blocks in back-to-front paint order: increasing x+z, then height. */
export function paintOrder(blocks: BlockQuad[]): BlockQuad[] {
  return [...blocks].sort((a, b) => a[0] + a[2] - (b[0] + b[2]) || a[1] - b[1]);
}

/** Three visible faces of one block as screen quads (top, left, right). */
export function blockQuads(block: BlockQuad, p: IsoParams): Quad[] {
  const [x, y, z, color] = block;
  const base = BLOCK_COLORS[color] ?? "#999999";
  const top = [
    isoPoint(x, y + 1, z, p),
    isoPoint(x + 1, y + 1, z, p),
    isoPoint(x + 1, y + 1, z + 1, p),
    isoPoint(x, y + 1, z + 1, p),
  ] as [number, number][];
  const left = [
    isoPoint(x, y + 1, z + 1, p),
    isoPoint(x + 1, y + 1, z + 1, p),
    isoPoint(x + 1, y, z + 1, p),
    isoPoint(x, y, z + 1, p),
  ] as [number, number][];
  const right = [
    isoPoint(x + 1, y + 1, z + 1, p),
    isoPoint(x + 1, y + 1, z, p),
    isoPoint(x + 1, y, z, p),
    isoPoint(x + 1, y, z + 1, p),
  ] as [number, number][];
  return [
    { points: top, fill: base, stroke: "#00000033" },
    { points: left, fill: shade(base, 0.72), stroke: "#00000033" },
    { points: right, fill: shade(base, 0.55), stroke: "#00000033" },
  ];
}

/** Floor grid lines for the zone footprint. */
export function floorLines(p: IsoParams): [number, number][][] {
  const lines: [number, number][][] = [];
  for (let x = 0; x <= ZONE_X; x++) {
    lines.push([isoPoint(x, 0, 0, p), isoPoint(x, 0, ZONE_Z, p)]);
  }
  for (let z = 0; z <= ZONE_Z; z++) {
    lines.push([isoPoint(0, 0, z, p), isoPoint(ZONE_X, 0, z, p)]);
  }
  return lines;
}

export interface HudState {
  step: number;
  reward: number;
  compass: number;
  inventory: number[];
  selected: number;
  blocks: number;
}

export function hudState(obs: Observation, rewardSum: number): HudState {
  return {
    step: obs.step,
    reward: rewardSum,
    compass: Math.round(obs.compass),
    inventory: obs.inventory,
    selected: obs.selected,
    blocks: obs.grid?.length ?? 0,
  };
}

/** Agent marker: a small diamond at the feet plus a facing tick. */
export function agentMarker(
  pose: [number, number, number, number, number],
  p: IsoParams,
): { center: [number, number]; facing: [number, number] } {
  const [x, y, z, , yaw] = pose;
  const center = isoPoint(x, y, z, p);
  const rad = (yaw * Math.PI) / 180;
  const fx = x + Math.sin(rad) * 0.8;
  const fz = z - Math.cos(rad) * 0.8;
  return { center, facing: isoPoint(fx, y, fz, p) };
}
