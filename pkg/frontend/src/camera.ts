// Drag-to-look camera state. Pointer deltas become yaw/pitch changes scaled
// so a full-viewport drag sweeps roughly one field of view.

import { clampPitch, wrapYaw, type Viewport } from "./projection.js";
import type { Direction } from "./types.js";

export class CameraController {
  yaw: number;
  pitch: number;
  private dragging = false;
  private lastX = 0;
  private lastY = 0;
  private listeners: Array<(cam: Direction) => void> = [];

  constructor(initial: Direction) {
    this.yaw = wrapYaw(initial.yaw);
    this.pitch = clampPitch(initial.pitch);
  }

  get direction(): Direction {
    return { yaw: this.yaw, pitch: this.pitch };
  }

  onChange(fn: (cam: Direction) => void): void {
    this.listeners.push(fn);
  }

  jumpTo(dir: Direction): void {
    this.yaw = wrapYaw(dir.yaw);
    this.pitch = clampPitch(dir.pitch);
    this.notify();
  }

  pointerDown(x: number, y: number): void {
    this.dragging = true;
    this.lastX = x;
    this.lastY = y;
  }

  pointerMove(x: number, y: number, vp: Viewport): void {
    if (!this.dragging) return;
    const degPerPx = vp.vfovDeg / vp.height;
    // dragging right pulls the scene right, i.e. the camera turns left
    this.yaw = wrapYaw(this.yaw - (x - this.lastX) * degPerPx);
    this.pitch = clampPitch(this.pitch + (y - this.lastY) * degPerPx);
    this.lastX = x;
    this.lastY = y;
    this.notify();
  }

  pointerUp(): void {
    this.dragging = false;
  }

  private notify(): void {
    for (const fn of this.listeners) fn(this.direction);
  }
}
