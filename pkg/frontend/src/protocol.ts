/**
 * Wire protocol spoken with the render head over one duplex websocket.
 *
 * Text frames carry control JSON ({type: "camera"|"config"|"stats-request"});
 * binary frames carry a 20-byte little-endian header
 * {u32 frameIndex, u32 frameInSequence, u16 mode, u16 format,
 *  u32 width, u32 height} followed by the image payload.
 * format 0 = raw 8-bit sRGB rows, format 1 = PNG.
 */

export const FORMAT_RAW = 0;
export const FORMAT_PNG = 1;

export const HEADER_BYTES = 20;

/** Render modes in wire order; index in this array is the u16 mode field. */
export const MODES = [
  "pathtrace",
  "primid",
  "geomid",
  "instanceid",
  "costheat",
  "albedo",
  "normal",
] as const;

export type RenderMode = (typeof MODES)[number];

export interface FrameMessage {
  frameIndex: number;
  frameInSequence: number;
  mode: number;
  format: number;
  width: number;
  height: number;
  payload: Uint8Array;
}

export interface StatsMessage {
  type: "stats";
  frameMillis: number;
  sharePercents: Record<string, number>;
  raysPerPixel: number;
  spp: number;
}

export class MalformedFrame extends Error {}

export function unpackFrame(data: ArrayBuffer): FrameMessage {
  if (data.byteLength < HEADER_BYTES) {
    throw new MalformedFrame(`frame message of ${data.byteLength} bytes`);
  }
  const v = new DataView(data);
  const msg: FrameMessage = {
    frameIndex: v.getUint32(0, true),
    frameInSequence: v.getUint32(4, true),
    mode: v.getUint16(8, true),
    format: v.getUint16(10, true),
    width: v.getUint32(12, true),
    height: v.getUint32(16, true),
    payload: new Uint8Array(data, HEADER_BYTES),
  };
  if (msg.format === FORMAT_RAW &&
      msg.payload.length !== msg.width * msg.height * 3) {
    throw new MalformedFrame(
      `raw payload ${msg.payload.length} for ${msg.width}x${msg.height}`);
  }
  return msg;
}

export function packFrame(msg: FrameMessage): ArrayBuffer {
  const buf = new ArrayBuffer(HEADER_BYTES + msg.payload.length);
  const v = new DataView(buf);
  v.setUint32(0, msg.frameIndex, true);
  v.setUint32(4, msg.frameInSequence, true);
  v.setUint16(8, msg.mode, true);
  v.setUint16(10, msg.format, true);
  v.setUint32(12, msg.width, true);
  v.setUint32(16, msg.height, true);
  new Uint8Array(buf, HEADER_BYTES).set(msg.payload);
  return buf;
}

export type Vec3 = [number, number, number];

export interface CameraControl {
  type: "camera";
  position: Vec3;
  lookAt: Vec3;
  up: Vec3;
  fovY: number;
}

export interface ConfigControl {
  type: "config";
  mode?: RenderMode;
  spp?: number;
  maxDepth?: number;
  denoise?: boolean;
  exposure?: number;
  format?: "raw" | "png";
}

export type Control =
  | CameraControl
  | ConfigControl
  | { type: "stats-request" };

export function encodeControl(msg: Control): string {
  return JSON.stringify(msg);
}

export function parseStats(text: string): StatsMessage | null {
  let msg: unknown;
  try {
    msg = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null) return null;
  const m = msg as Record<string, unknown>;
  if (m["type"] !== "stats") return null;
  return m as unknown as StatsMessage;
}
