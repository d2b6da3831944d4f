import { describe, expect, it } from "vitest";
import {
  FORMAT_PNG,
  FORMAT_RAW,
  FrameMessage,
  HEADER_BYTES,
  MODES,
  MalformedFrame,
  encodeControl,
  packFrame,
  parseStats,
  unpackFrame,
} from "../src/protocol.js";

function rawFrame(overrides: Partial<FrameMessage> = {}): FrameMessage {
  const width = overrides.width ?? 2;
  const height = overrides.height ?? 2;
  return {
    frameIndex: 7,
    frameInSequence: 3,
    mode: 0,
    format: FORMAT_RAW,
    width,
    height,
    payload: new Uint8Array(width * height * 3).map((_, i) => i % 251),
    ...overrides,
  };
}

describe("frame packing", () => {
  it("round-trips every header field and the payload", () => {
    const msg = rawFrame({ frameIndex: 123456, frameInSequence: 42, mode: 4 });
    const back = unpackFrame(packFrame(msg));
    expect(back.frameIndex).toBe(123456);
    expect(back.frameInSequence).toBe(42);
    expect(back.mode).toBe(4);
    expect(back.format).toBe(FORMAT_RAW);
    expect(back.width).toBe(2);
    expect(back.height).toBe(2);
    expect([...back.payload]).toEqual([...msg.payload]);
  });

  it("lays the header out little-endian at fixed offsets", () => {
    const buf = packFrame(rawFrame({ frameIndex: 0x01020304 }));
    const bytes = new Uint8Array(buf);
    expect(bytes[0]).toBe(0x04); // low byte of frameIndex first
    expect(bytes[3]).toBe(0x01);
    expect(buf.byteLength).toBe(HEADER_BYTES + 12);
  });

  it("decodes a 2x2 raw frame to exactly 12 payload bytes", () => {
    const back = unpackFrame(packFrame(rawFrame()));
    expect(back.payload.length).toBe(2 * 2 * 3);
  });

  it("rejects short and size-mismatched messages", () => {
    expect(() => unpackFrame(new ArrayBuffer(10))).toThrow(MalformedFrame);
    const bad = rawFrame();
    bad.payload = bad.payload.slice(0, 5);
    expect(() => unpackFrame(packFrame(bad))).toThrow(MalformedFrame);
  });

  it("passes PNG payloads through without a size check", () => {
    const msg = rawFrame({ format: FORMAT_PNG,
                           payload: new Uint8Array([1, 2, 3]) });
    expect(unpackFrame(packFrame(msg)).format).toBe(FORMAT_PNG);
  });
});

describe("control encoding", () => {
  it("emits the camera JSON shape the head expects", () => {
    const text = encodeControl({
      type: "camera",
      position: [1, 2, 3],
      lookAt: [0, 0, 0],
      up: [0, 1, 0],
      fovY: 45,
    });
    const msg = JSON.parse(text);
    expect(msg.type).toBe("camera");
    expect(msg.position).toEqual([1, 2, 3]);
    expect(msg.lookAt).toEqual([0, 0, 0]);
    expect(msg.fovY).toBe(45);
  });

  it("mode strings line up with their wire indices", () => {
    expect(MODES[0]).toBe("pathtrace");
    expect(MODES[4]).toBe("costheat");
    expect(MODES.length).toBe(7);
  });
});

describe("stats parsing", () => {
  it("accepts the head's stats JSON", () => {
    const stats = parseStats(JSON.stringify({
      type: "stats",
      frameMillis: 12.5,
      sharePercents: { traversal_intersect: 70, other: 30 },
      raysPerPixel: 4.2,
      spp: 16,
    }));
    expect(stats?.frameMillis).toBe(12.5);
    expect(stats?.sharePercents["traversal_intersect"]).toBe(70);
  });

  it("returns null on junk", () => {
    expect(parseStats("not json")).toBeNull();
    expect(parseStats('{"type":"other"}')).toBeNull();
  });
});
