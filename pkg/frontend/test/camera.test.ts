import { describe, expect, it } from "vitest";
import { CameraCoalescer, OrbitCamera } from "../src/camera.js";
import { CameraControl, Vec3 } from "../src/protocol.js";

const close = (a: Vec3, b: Vec3, tol = 1e-9) => {
  expect(Math.hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2])).toBeLessThan(tol);
};

describe("OrbitCamera", () => {
  it("orbit 180 degrees mirrors the position through the target", () => {
    const cam = new OrbitCamera([3, 0, 0], [1, 0, 0]);
    cam.orbit(Math.PI, 0);
    close(cam.position, [-1, 0, 0]);
    close(cam.target, [1, 0, 0]);
  });

  it("orbit preserves distance to the target", () => {
    const cam = new OrbitCamera([2, 3, 5], [0, 1, 0]);
    const d0 = cam.distance;
    cam.orbit(0.7, 0.3);
    cam.orbit(-1.9, -0.2);
    expect(cam.distance).toBeCloseTo(d0, 9);
  });

  it("pitch is clamped before the pole", () => {
    const cam = new OrbitCamera([0, 0, 4], [0, 0, 0]);
    cam.orbit(0, Math.PI); // would flip past the pole if unclamped
    const dir = cam.position.map((p) => p / cam.distance);
    expect(Math.abs(dir[1])).toBeLessThan(1); // never exactly on the up axis
    expect(cam.distance).toBeCloseTo(4, 9);
  });

  it("dolly x2 doubles the distance and leaves the target fixed", () => {
    const cam = new OrbitCamera([1, 2, 2], [1, 0, 0]);
    cam.dolly(2);
    expect(cam.distance).toBeCloseTo(2 * Math.hypot(2, 2), 9);
    close(cam.target, [1, 0, 0]);
  });

  it("pan moves position and target by the same view-plane offset", () => {
    const cam = new OrbitCamera([0, 0, 5], [0, 0, 0]);
    cam.pan(1, 2);
    const delta: Vec3 = [
      cam.position[0] - 0, cam.position[1] - 0, cam.position[2] - 5];
    close(delta, [cam.target[0], cam.target[1], cam.target[2]]);
    expect(cam.distance).toBeCloseTo(5, 9);
  });

  it("serializes to the wire camera control", () => {
    const cam = new OrbitCamera([1, 2, 3], [0, 0, 0], [0, 1, 0], 45);
    const msg = cam.toControl();
    expect(msg.type).toBe("camera");
    expect(msg.position).toEqual([1, 2, 3]);
    expect(msg.fovY).toBe(45);
  });
});

describe("CameraCoalescer", () => {
  it("sends at most one update per flush regardless of input rate", () => {
    const sent: CameraControl[] = [];
    const c = new CameraCoalescer(new OrbitCamera([0, 0, 5], [0, 0, 0]),
                                  (m) => sent.push(m));
    for (let i = 0; i < 50; i++) c.orbit(0.01, 0); // a burst of pointermoves
    c.dolly(1.1);
    expect(sent.length).toBe(0); // nothing until the display refresh
    c.flush();
    expect(sent.length).toBe(1);
    c.flush(); // idle refresh sends nothing
    expect(sent.length).toBe(1);
  });

  it("the flushed message carries the final coalesced pose", () => {
    const sent: CameraControl[] = [];
    const c = new CameraCoalescer(new OrbitCamera([0, 0, 5], [0, 0, 0]),
                                  (m) => sent.push(m));
    c.orbit(Math.PI / 2, 0);
    c.orbit(Math.PI / 2, 0);
    c.flush();
    close(sent[0].position, [0, 0, -5], 1e-9);
  });
});
