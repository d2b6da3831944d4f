/**
 * Browser entry point. Query parameters: ?server=ws://host:port selects the
 * render head (default ws://127.0.0.1:8090).
 *
 * Mouse: drag = orbit, shift-drag = pan, wheel = dolly. Keys: 1-7 switch
 * render modes, d toggles the denoiser, s requests a stats refresh.
 */
import { OrbitCamera } from "./camera.js";
import { blit, overlayText } from "./display.js";
import { MODES } from "./protocol.js";
import { SocketLike, attach } from "./viewer.js";

function start(): void {
  const params = new URLSearchParams(window.location.search);
  const url = params.get("server") ?? "ws://127.0.0.1:8090";

  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const overlay = document.getElementById("overlay") as HTMLElement;
  const banner = document.getElementById("banner") as HTMLElement;

  const camera = new OrbitCamera([0, 1.5, 6], [0, 0.5, 0]);
  const socket = new WebSocket(url);
  socket.binaryType = "arraybuffer";

  const state = attach(socket as unknown as SocketLike, camera, {
    onFrame: (frame) => {
      void blit(canvas, frame);
      overlay.textContent = overlayText(
        state.stats, frame.frameInSequence, frame.frameIndex);
    },
    onStats: () => {
      if (state.lastFrame) {
        overlay.textContent = overlayText(
          state.stats, state.lastFrame.frameInSequence,
          state.lastFrame.frameIndex);
      }
    },
    onState: (s) => {
      banner.textContent = s === "connected" ? "" : `connection: ${s}`;
      banner.style.display = s === "connected" ? "none" : "block";
    },
  });

  let dragging = false;
  canvas.addEventListener("pointerdown", (e) => {
    dragging = true;
    canvas.setPointerCapture(e.pointerId);
  });
  canvas.addEventListener("pointerup", () => { dragging = false; });
  canvas.addEventListener("pointermove", (e) => {
    if (!dragging) return;
    if (e.shiftKey) {
      const scale = camera.distance * 0.002;
      state.controls.pan(-e.movementX * scale, e.movementY * scale);
    } else {
      state.controls.orbit(-e.movementX * 0.005, -e.movementY * 0.005);
    }
  });
  canvas.addEventListener("wheel", (e) => {
    e.preventDefault();
    state.controls.dolly(Math.exp(e.deltaY * 0.001));
  }, { passive: false });

  window.addEventListener("keydown", (e) => {
    const modeIndex = "1234567".indexOf(e.key);
    if (modeIndex >= 0) state.setMode(MODES[modeIndex]);
    else if (e.key === "d") state.setDenoise(!state.denoiseOn);
    else if (e.key === "s") state.requestStats();
  });

  const refresh = () => {
    state.tick(); // coalesced: at most one camera update per refresh
    requestAnimationFrame(refresh);
  };
  requestAnimationFrame(refresh);
}

window.addEventListener("DOMContentLoaded", start);
