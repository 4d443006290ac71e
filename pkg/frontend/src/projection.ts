// Spherical <-> screen math shared by the renderer, the marker overlay and
// the admin click-to-place flow. One convention everywhere: yaw in degrees
// [0, 360) increasing to the right, pitch in degrees [-90, +90] increasing
// upward; the camera at (0, 0) looks down -z with +x to the right.

import type { Direction } from "./types.js";

const DEG = Math.PI / 180;

export interface Viewport {
  width: number;
  height: number;
  vfovDeg: number;
}

export interface ScreenPoint {
  x: number;
  y: number;
  visible: boolean; // false when the direction is behind the camera plane
}

export type Vec3 = [number, number, number];

export function wrapYaw(yawDeg: number): number {
  const w = yawDeg % 360;
  return w < 0 ? w + 360 : w;
}

export function clampPitch(pitchDeg: number): number {
  return Math.max(-90, Math.min(90, pitchDeg));
}

export function dirToVector(dir: Direction): Vec3 {
  const yaw = dir.yaw * DEG;
  const pitch = dir.pitch * DEG;
  const cp = Math.cos(pitch);
  return [cp * Math.sin(yaw), Math.sin(pitch), -cp * Math.cos(yaw)];
}

export function vectorToDir(v: Vec3): Direction {
  const [x, y, z] = v;
  const norm = Math.hypot(x, y, z) || 1; // asin needs a unit vector
  const pitch = Math.asin(Math.max(-1, Math.min(1, y / norm))) / DEG;
  const yaw = wrapYaw(Math.atan2(x, -z) / DEG);
  return { yaw, pitch };
}

// Rotations picked so rotY(dirToVector({yaw, 0}), a) lands on yaw + a and
// rotX does the same for pitch; world->camera applies the negated angles.
function rotY(v: Vec3, deg: number): Vec3 {
  const a = deg * DEG;
  const c = Math.cos(a);
  const s = Math.sin(a);
  const [x, y, z] = v;
  return [x * c - z * s, y, z * c + x * s];
}

function rotX(v: Vec3, deg: number): Vec3 {
  const a = deg * DEG;
  const c = Math.cos(a);
  const s = Math.sin(a);
  const [x, y, z] = v;
  return [x, y * c - z * s, z * c + y * s];
}

export function focalLengthPx(vp: Viewport): number {
  return vp.height / 2 / Math.tan((vp.vfovDeg / 2) * DEG);
}

/** Project a world direction into viewport pixels for the given camera. */
export function projectToScreen(
  target: Direction,
  camera: Direction,
  vp: Viewport,
): ScreenPoint {
  const cam = rotX(rotY(dirToVector(target), -camera.yaw), -camera.pitch);
  const [x, y, z] = cam;
  if (z > -1e-9) {
    return { x: NaN, y: NaN, visible: false };
  }
  const f = focalLengthPx(vp);
  return {
    x: vp.width / 2 + (f * x) / -z,
    y: vp.height / 2 - (f * y) / -z,
    visible: true,
  };
}

/** Invert projectToScreen: which direction does this pixel look at? */
export function screenToDirection(
  px: number,
  py: number,
  camera: Direction,
  vp: Viewport,
): Direction {
  const f = focalLengthPx(vp);
  const ray: Vec3 = [(px - vp.width / 2) / f, (vp.height / 2 - py) / f, -1];
  return vectorToDir(rotY(rotX(ray, camera.pitch), camera.yaw));
}

/** Great-circle separation in degrees; the tolerance metric for placement. */
export function angularDistanceDeg(a: Direction, b: Direction): number {
  const va = dirToVector(a);
  const vb = dirToVector(b);
  const dot = va[0] * vb[0] + va[1] * vb[1] + va[2] * vb[2];
  const cross: Vec3 = [
    va[1] * vb[2] - va[2] * vb[1],
    va[2] * vb[0] - va[0] * vb[2],
    va[0] * vb[1] - va[1] * vb[0],
  ];
  // atan2 keeps precision for tiny angles where acos(dot) collapses
  return Math.atan2(Math.hypot(...cross), dot) / DEG;
}

export function withinViewport(p: ScreenPoint, vp: Viewport, marginPx = 0): boolean {
  return (
    p.visible &&
    p.x >= -marginPx &&
    p.x <= vp.width + marginPx &&
    p.y >= -marginPx &&
    p.y <= vp.height + marginPx
  );
}
