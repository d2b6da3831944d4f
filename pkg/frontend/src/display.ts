/** Frame-to-canvas blitting and the stats overlay text. */
import { FORMAT_PNG, FrameMessage, StatsMessage } from "./protocol.js";

/** Expand the wire's packed RGB rows to RGBA for ImageData. */
export function rgbToRgba(
  payload: Uint8Array, width: number, height: number,
): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(width * height * 4);
  for (let i = 0, j = 0; i < payload.length; i += 3, j += 4) {
    out[j] = payload[i];
    out[j + 1] = payload[i + 1];
    out[j + 2] = payload[i + 2];
    out[j + 3] = 255;
  }
  return out;
}

export async function blit(canvas: HTMLCanvasElement,
                           frame: FrameMessage): Promise<void> {
  canvas.width = frame.width;
  canvas.height = frame.height;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  if (frame.format === FORMAT_PNG) {
    const bitmap = await createImageBitmap(
      new Blob([frame.payload.slice().buffer], { type: "image/png" }));
    ctx.drawImage(bitmap, 0, 0);
    bitmap.close();
    return;
  }
  const rgba = rgbToRgba(frame.payload, frame.width, frame.height);
  ctx.putImageData(new ImageData(rgba, frame.width, frame.height), 0, 0);
}

export function overlayText(stats: StatsMessage | null, spp: number,
                            frameIndex: number): string {
  const lines = [`frame ${frameIndex}  accumulated ${spp} spp`];
  if (stats) {
    const mray = stats.raysPerPixel * 1000 / Math.max(stats.frameMillis, 1e-6);
    lines.push(
      `${stats.frameMillis.toFixed(1)} ms/frame  ` +
      `${stats.raysPerPixel.toFixed(2)} rays/px  ` +
      `${mray.toFixed(2)} Mray/s/Mpx`);
    const shares = Object.entries(stats.sharePercents)
      .map(([k, v]) => `${k} ${v.toFixed(1)}%`)
      .join("  ");
    lines.push(shares);
  }
  return lines.join("\n");
}
