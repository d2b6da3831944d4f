/**
 * Orbit/pan/dolly camera over a fixed target, plus the per-refresh
 * coalescer that keeps camera traffic to at most one update per
 * display refresh no matter how fast input events arrive.
 */
import { CameraControl, Vec3 } from "./protocol.js";

const add = (a: Vec3, b: Vec3): Vec3 => [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
const sub = (a: Vec3, b: Vec3): Vec3 => [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
const scale = (a: Vec3, s: number): Vec3 => [a[0] * s, a[1] * s, a[2] * s];
const dot = (a: Vec3, b: Vec3) => a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
const cross = (a: Vec3, b: Vec3): Vec3 => [
  a[1] * b[2] - a[2] * b[1],
  a[2] * b[0] - a[0] * b[2],
  a[0] * b[1] - a[1] * b[0],
];
const length = (a: Vec3) => Math.hypot(a[0], a[1], a[2]);
const normalize = (a: Vec3): Vec3 => scale(a, 1 / (length(a) || 1));

export class OrbitCamera {
  position: Vec3;
  target: Vec3;
  up: Vec3;
  fovY: number;

  constructor(position: Vec3, target: Vec3, up: Vec3 = [0, 1, 0],
              fovY = 50) {
    this.position = [...position];
    this.target = [...target];
    this.up = normalize([...up]);
    this.fovY = fovY;
  }

  get distance(): number {
    return length(sub(this.position, this.target));
  }

  /** Rotate the position about the target: yaw about `up`, then pitch
   * about the view-plane right axis. Angles in radians. */
  orbit(yaw: number, pitch: number): void {
    let offset = sub(this.position, this.target);
    offset = rotateAxis(offset, this.up, yaw);
    const right = normalize(cross(offset, this.up));
    // clamp pitch so the view direction never crosses the pole
    const elev = Math.asin(
      Math.max(-1, Math.min(1, dot(normalize(offset), this.up))));
    const maxPitch = Math.PI / 2 - 1e-3;
    const clamped = Math.max(-maxPitch - elev, Math.min(maxPitch - elev, pitch));
    offset = rotateAxis(offset, right, clamped);
    this.position = add(this.target, offset);
  }

  /** Scale camera-to-target distance; factor 2 doubles it, target fixed. */
  dolly(factor: number): void {
    const offset = sub(this.position, this.target);
    this.position = add(this.target, scale(offset, factor));
  }

  /** Translate position and target together in the view plane. */
  pan(dx: number, dy: number): void {
    const view = normalize(sub(this.target, this.position));
    const right = normalize(cross(view, this.up));
    const planeUp = normalize(cross(right, view));
    const move = add(scale(right, dx), scale(planeUp, dy));
    this.position = add(this.position, move);
    this.target = add(this.target, move);
  }

  toControl(): CameraControl {
    return {
      type: "camera",
      position: [...this.position],
      lookAt: [...this.target],
      up: [...this.up],
      fovY: this.fovY,
    };
  }
}

/** Rodrigues rotation of v about unit axis by angle (radians). */
function rotateAxis(v: Vec3, axis: Vec3, angle: number): Vec3 {
  const k = normalize(axis);
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  const kxv = cross(k, v);
  const kdv = dot(k, v);
  return add(add(scale(v, c), scale(kxv, s)), scale(k, kdv * (1 - c)));
}

/**
 * Collects camera edits between display refreshes and emits at most one
 * CameraUpdate per flush(), which the UI calls once per animation frame.
 */
export class CameraCoalescer {
  private dirty = false;
  sent = 0;

  constructor(
    readonly camera: OrbitCamera,
    private readonly send: (msg: CameraControl) => void,
  ) {}

  orbit(yaw: number, pitch: number): void {
    this.camera.orbit(yaw, pitch);
    this.dirty = true;
  }

  dolly(factor: number): void {
    this.camera.dolly(factor);
    this.dirty = true;
  }

  pan(dx: number, dy: number): void {
    this.camera.pan(dx, dy);
    this.dirty = true;
  }

  /** Called once per display refresh; sends only if anything changed. */
  flush(): boolean {
    if (!this.dirty) return false;
    this.dirty = false;
    this.sent += 1;
    this.send(this.camera.toControl());
    return true;
  }
}
