/**
 * Transport-agnostic viewer state machine: feed it the raw websocket
 * traffic and it tracks the displayed frame, accumulation restarts,
 * stats overlay, and outgoing control messages. The DOM layer in main.ts
 * is a thin shell around this so the logic is testable against a fake
 * socket.
 */
import { CameraCoalescer, OrbitCamera } from "./camera.js";
import {
  ConfigControl,
  Control,
  FrameMessage,
  MalformedFrame,
  RenderMode,
  StatsMessage,
  encodeControl,
  parseStats,
  unpackFrame,
} from "./protocol.js";

export type ConnectionState = "connecting" | "connected" | "error" | "closed";

export interface DisplayedFrame {
  frameIndex: number;
  frameInSequence: number;
  image: FrameMessage;
}

export class ViewerState {
  connectionState: ConnectionState = "connecting";
  lastFrame: DisplayedFrame | null = null;
  stats: StatsMessage | null = null;
  mode: RenderMode = "pathtrace";
  denoiseOn = false;
  malformedCount = 0;
  droppedStale = 0;
  /** Frames received since the last control we sent; the reset contract
   * says the restart must show up within two of them. */
  framesSinceControl = -1;
  /** True once a frameInSequence===1 frame arrived after our last control. */
  restartSeen = true;

  readonly controls: CameraCoalescer;

  constructor(
    camera: OrbitCamera,
    private readonly send: (text: string) => void,
  ) {
    this.controls = new CameraCoalescer(camera, (msg) => this.sendControl(msg));
  }

  private sendControl(msg: Control): void {
    this.send(encodeControl(msg));
    this.framesSinceControl = 0;
    this.restartSeen = false;
  }

  setMode(mode: RenderMode): void {
    this.mode = mode;
    this.sendControl({ type: "config", mode });
  }

  setDenoise(on: boolean): void {
    this.denoiseOn = on;
    this.sendControl({ type: "config", denoise: on });
  }

  setConfig(config: Omit<ConfigControl, "type">): void {
    this.sendControl({ type: "config", ...config });
  }

  requestStats(): void {
    this.send(encodeControl({ type: "stats-request" }));
  }

  /** Once per display refresh: flush any pending camera edit. */
  tick(): void {
    this.controls.flush();
  }

  /** Handle one binary frame; returns the frame to display, or null if
   * the message was stale or malformed. */
  onBinary(data: ArrayBuffer): FrameMessage | null {
    let frame: FrameMessage;
    try {
      frame = unpackFrame(data);
    } catch (e) {
      if (e instanceof MalformedFrame) {
        this.malformedCount += 1;
        return null;
      }
      throw e;
    }
    // display order is by frameIndex; anything older is stale
    if (this.lastFrame && frame.frameIndex <= this.lastFrame.frameIndex) {
      this.droppedStale += 1;
      return null;
    }
    if (this.framesSinceControl >= 0) this.framesSinceControl += 1;
    if (frame.frameInSequence === 1) this.restartSeen = true;
    this.lastFrame = {
      frameIndex: frame.frameIndex,
      frameInSequence: frame.frameInSequence,
      image: frame,
    };
    return frame;
  }

  /** Handle one text frame (stats JSON). */
  onText(text: string): StatsMessage | null {
    const stats = parseStats(text);
    if (stats) this.stats = stats;
    return stats;
  }
}

/** Minimal socket surface so tests can drive the session without a network. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((event: { data: ArrayBuffer | string }) => void) | null;
}

export interface SessionCallbacks {
  onFrame?: (frame: FrameMessage) => void;
  onStats?: (stats: StatsMessage) => void;
  onState?: (state: ConnectionState) => void;
}

/** Wire a ViewerState to a (real or fake) websocket. */
export function attach(
  socket: SocketLike,
  camera: OrbitCamera,
  callbacks: SessionCallbacks = {},
): ViewerState {
  const state = new ViewerState(camera, (text) => socket.send(text));
  const setState = (s: ConnectionState) => {
    state.connectionState = s;
    callbacks.onState?.(s);
  };
  socket.onopen = () => setState("connected");
  socket.onerror = () => setState("error");
  socket.onclose = () => {
    if (state.connectionState !== "error") setState("closed");
  };
  socket.onmessage = (event) => {
    if (typeof event.data === "string") {
      const stats = state.onText(event.data);
      if (stats) callbacks.onStats?.(stats);
      return;
    }
    const frame = state.onBinary(event.data);
    if (frame) callbacks.onFrame?.(frame);
  };
  return state;
}
