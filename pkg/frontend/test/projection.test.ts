import { describe, expect, it } from "vitest";

import {
  angularDistanceDeg,
  clampPitch,
  dirToVector,
  focalLengthPx,
  projectToScreen,
  screenToDirection,
  vectorToDir,
  withinViewport,
  wrapYaw,
  type Viewport,
} from "../src/projection.js";
import type { Direction } from "../src/types.js";

const VP: Viewport = { width: 960, height: 540, vfovDeg: 75 };

// Independent oracle: explicit rotation matrices and the gnomonic
// projection written from scratch, sharing nothing with the implementation.
type Mat3 = [number, number, number, number, number, number, number, number, number];

function matVec(m: Mat3, v: [number, number, number]): [number, number, number] {
  return [
    m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
    m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
    m[6] * v[0] + m[7] * v[1] + m[8] * v[2],
  ];
}

function oracleProject(target: Direction, camera: Direction, vp: Viewport) {
  const d = Math.PI / 180;
  const t: [number, number, number] = [
    Math.cos(target.pitch * d) * Math.sin(target.yaw * d),
    Math.sin(target.pitch * d),
    -Math.cos(target.pitch * d) * Math.cos(target.yaw * d),
  ];
  const cy = Math.cos(-camera.yaw * d);
  const sy = Math.sin(-camera.yaw * d);
  const yawMat: Mat3 = [cy, 0, -sy, 0, 1, 0, sy, 0, cy];
  const cp = Math.cos(-camera.pitch * d);
  const sp = Math.sin(-camera.pitch * d);
  const pitchMat: Mat3 = [1, 0, 0, 0, cp, -sp, 0, sp, cp];
  const [x, y, z] = matVec(pitchMat, matVec(yawMat, t));
  if (z >= 0) return null;
  const f = vp.height / 2 / Math.tan(((vp.vfovDeg / 2) * Math.PI) / 180);
  return { x: vp.width / 2 + (f * x) / -z, y: vp.height / 2 - (f * y) / -z };
}

// deterministic PRNG for sampled directions
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("angle helpers", () => {
  it("wraps yaw into [0, 360)", () => {
    expect(wrapYaw(0)).toBe(0);
    expect(wrapYaw(360)).toBe(0);
    expect(wrapYaw(-0.5)).toBeCloseTo(359.5, 12);
    expect(wrapYaw(719)).toBeCloseTo(359, 12);
  });

  it("clamps pitch to [-90, 90]", () => {
    expect(clampPitch(95)).toBe(90);
    expect(clampPitch(-123)).toBe(-90);
    expect(clampPitch(12.5)).toBe(12.5);
  });

  it("direction <-> vector round trips", () => {
    const rand = mulberry32(7);
    for (let i = 0; i < 200; i++) {
      const dir = { yaw: rand() * 360, pitch: (rand() - 0.5) * 178 };
      const back = vectorToDir(dirToVector(dir));
      expect(angularDistanceDeg(dir, back)).toBeLessThan(1e-9);
    }
  });
});

describe("projectToScreen", () => {
  it("puts the camera direction at the viewport center", () => {
    const cam = { yaw: 132, pitch: -17 };
    const p = projectToScreen(cam, cam, VP);
    expect(p.visible).toBe(true);
    expect(p.x).toBeCloseTo(VP.width / 2, 6);
    expect(p.y).toBeCloseTo(VP.height / 2, 6);
  });

  it("matches the analytic oracle within 1 px for random scenes", () => {
    const rand = mulberry32(42);
    let checked = 0;
    while (checked < 500) {
      const camera = { yaw: rand() * 360, pitch: (rand() - 0.5) * 160 };
      const target = { yaw: rand() * 360, pitch: (rand() - 0.5) * 170 };
      const want = oracleProject(target, camera, VP);
      const got = projectToScreen(target, camera, VP);
      if (want === null) {
        expect(got.visible).toBe(false);
        continue;
      }
      expect(got.visible).toBe(true);
      expect(Math.abs(got.x - want.x)).toBeLessThan(1);
      expect(Math.abs(got.y - want.y)).toBeLessThan(1);
      checked += 1;
    }
  });

  it("marks directions behind the camera invisible", () => {
    const p = projectToScreen({ yaw: 180, pitch: 0 }, { yaw: 0, pitch: 0 }, VP);
    expect(p.visible).toBe(false);
    expect(withinViewport(p, VP)).toBe(false);
  });

  it("moves markers opposite to camera yaw", () => {
    const target = { yaw: 10, pitch: 0 };
    const left = projectToScreen(target, { yaw: 0, pitch: 0 }, VP);
    const right = projectToScreen(target, { yaw: 20, pitch: 0 }, VP);
    expect(left.x).toBeGreaterThan(VP.width / 2);
    expect(right.x).toBeLessThan(VP.width / 2);
  });
});

describe("screenToDirection", () => {
  it("recovers the clicked direction exactly (float pixels)", () => {
    const rand = mulberry32(99);
    let checked = 0;
    while (checked < 300) {
      const camera = { yaw: rand() * 360, pitch: (rand() - 0.5) * 160 };
      const target = { yaw: rand() * 360, pitch: (rand() - 0.5) * 170 };
      const p = projectToScreen(target, camera, VP);
      if (!withinViewport(p, VP)) continue;
      const back = screenToDirection(p.x, p.y, camera, VP);
      expect(angularDistanceDeg(target, back)).toBeLessThan(1e-9);
      checked += 1;
    }
  });

  it("stays within 0.5 degrees after rounding to whole pixels", () => {
    const rand = mulberry32(1234);
    let checked = 0;
    while (checked < 300) {
      const camera = { yaw: rand() * 360, pitch: (rand() - 0.5) * 160 };
      const target = { yaw: rand() * 360, pitch: (rand() - 0.5) * 170 };
      const p = projectToScreen(target, camera, VP);
      if (!withinViewport(p, VP)) continue;
      const back = screenToDirection(Math.round(p.x), Math.round(p.y), camera, VP);
      expect(angularDistanceDeg(target, back)).toBeLessThan(0.5);
      checked += 1;
    }
  });

  it("maps the viewport center to the camera direction", () => {
    // the click-to-place example: camera at (10, 0), click dead center
    const dir = screenToDirection(VP.width / 2, VP.height / 2, { yaw: 10, pitch: 0 }, VP);
    expect(angularDistanceDeg(dir, { yaw: 10, pitch: 0 })).toBeLessThan(0.5);
    expect(dir.yaw).toBeCloseTo(10, 6);
    expect(dir.pitch).toBeCloseTo(0, 6);
  });
});

describe("focalLengthPx", () => {
  it("derives from the vertical field of view", () => {
    const f = focalLengthPx(VP);
    expect(f).toBeCloseTo(270 / Math.tan((37.5 * Math.PI) / 180), 9);
  });
});
