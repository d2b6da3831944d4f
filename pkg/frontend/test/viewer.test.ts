import { describe, expect, it } from "vitest";
import { OrbitCamera } from "../src/camera.js";
import { rgbToRgba } from "../src/display.js";
import { FORMAT_RAW, FrameMessage, packFrame } from "../src/protocol.js";
import { SocketLike, ViewerState, attach } from "../src/viewer.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;
  onmessage: ((event: { data: ArrayBuffer | string }) => void) | null = null;

  send(data: string): void { this.sent.push(data); }
  close(): void { this.closed = true; }
  // server-side helpers
  deliver(data: ArrayBuffer | string): void { this.onmessage?.({ data }); }
  open(): void { this.onopen?.(); }
}

function frame(frameIndex: number, frameInSequence: number,
               mode = 0): ArrayBuffer {
  const msg: FrameMessage = {
    frameIndex, frameInSequence, mode,
    format: FORMAT_RAW, width: 2, height: 2,
    payload: new Uint8Array(12).fill(frameInSequence),
  };
  return packFrame(msg);
}

function session() {
  const socket = new FakeSocket();
  const displayed: FrameMessage[] = [];
  const state = attach(socket, new OrbitCamera([0, 0, 5], [0, 0, 0]),
                       { onFrame: (f) => displayed.push(f) });
  socket.open();
  return { socket, state, displayed };
}

describe("frame display", () => {
  it("displays frames in increasing frameIndex and drops stale ones", () => {
    const { socket, state, displayed } = session();
    socket.deliver(frame(1, 1));
    socket.deliver(frame(2, 2));
    socket.deliver(frame(1, 1)); // late duplicate from a retransmit
    socket.deliver(frame(3, 3));
    expect(displayed.map((f) => f.frameIndex)).toEqual([1, 2, 3]);
    expect(state.droppedStale).toBe(1);
    const shown = displayed.map((f) => f.frameIndex);
    expect([...shown].sort((a, b) => a - b)).toEqual(shown); // monotonic
  });

  it("counts malformed frames without displaying them", () => {
    const { socket, state, displayed } = session();
    socket.deliver(new ArrayBuffer(4));
    expect(state.malformedCount).toBe(1);
    expect(displayed.length).toBe(0);
  });

  it("decodes a 2x2 raw frame pixel-exactly", () => {
    const { socket, displayed } = session();
    socket.deliver(frame(1, 5));
    const f = displayed[0];
    const rgba = rgbToRgba(f.payload, f.width, f.height);
    expect(rgba.length).toBe(16);
    expect(rgba[0]).toBe(5);
    expect(rgba[3]).toBe(255); // opaque alpha
  });

  it("populates the stats overlay from stats JSON", () => {
    const { socket, state } = session();
    socket.deliver(JSON.stringify({
      type: "stats", frameMillis: 20, raysPerPixel: 5, spp: 4,
      sharePercents: { traversal_intersect: 60, other: 40 },
    }));
    expect(state.stats?.frameMillis).toBe(20);
  });
});

describe("accumulation reset contract", () => {
  it("camera update -> next frame reports frameInSequence 1", () => {
    const { socket, state } = session();
    socket.deliver(frame(1, 1));
    socket.deliver(frame(2, 2));
    state.controls.orbit(0.2, 0);
    state.tick(); // display refresh flushes the coalesced camera update
    expect(socket.sent.length).toBe(1);
    expect(JSON.parse(socket.sent[0]).type).toBe("camera");
    expect(state.restartSeen).toBe(false);
    // accumulation visibly restarts: sequence counter back to 1
    socket.deliver(frame(3, 1));
    expect(state.restartSeen).toBe(true);
    expect(state.framesSinceControl).toBe(1);
    expect(state.lastFrame?.frameInSequence).toBe(1);
  });

  it("mode toggle takes effect within two frames", () => {
    const { socket, state, displayed } = session();
    socket.deliver(frame(1, 1, 0));
    state.setMode("costheat");
    const sent = JSON.parse(socket.sent[0]);
    expect(sent).toEqual({ type: "config", mode: "costheat" });
    // the head may have one path-traced frame in flight, then switches
    socket.deliver(frame(2, 2, 0));
    socket.deliver(frame(3, 1, 4));
    expect(state.framesSinceControl).toBe(2);
    expect(displayed[2].mode).toBe(4);
    expect(state.restartSeen).toBe(true);
  });

  it("denoise toggle sends a config control and expects a restart", () => {
    const { socket, state } = session();
    state.setDenoise(true);
    expect(JSON.parse(socket.sent[0])).toEqual(
      { type: "config", denoise: true });
    expect(state.denoiseOn).toBe(true);
    expect(state.restartSeen).toBe(false);
    socket.deliver(frame(1, 1));
    expect(state.restartSeen).toBe(true);
  });
});

describe("connection state", () => {
  it("tracks open, error, and close transitions", () => {
    const socket = new FakeSocket();
    const states: string[] = [];
    const state = attach(socket, new OrbitCamera([0, 0, 5], [0, 0, 0]),
                         { onState: (s) => states.push(s) });
    expect(state.connectionState).toBe("connecting");
    socket.open();
    expect(state.connectionState).toBe("connected");
    socket.onerror?.();
    socket.onclose?.(); // error sticks through the close that follows it
    expect(state.connectionState).toBe("error");
    expect(states).toEqual(["connected", "error"]);
  });

  it("clean close reports closed", () => {
    const socket = new FakeSocket();
    const state = attach(socket, new OrbitCamera([0, 0, 5], [0, 0, 0]));
    socket.open();
    socket.onclose?.();
    expect(state.connectionState).toBe("closed");
  });
});

describe("stats request", () => {
  it("sends the stats-request control without touching the reset state", () => {
    const { socket, state } = session();
    socket.deliver(frame(1, 1));
    state.requestStats();
    expect(JSON.parse(socket.sent[0])).toEqual({ type: "stats-request" });
    expect(state.restartSeen).toBe(true); // stats never restart accumulation
  });
});
