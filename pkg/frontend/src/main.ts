// Browser wiring: canvas, keyboard/mouse, HUD, the instruction form, and
// the exported-record download link. All world truth comes from the server.

import { actionForClick, actionForDrag, actionForKey } from "./input.js";
import type { ActionRequest, Observation } from "./protocol.js";
import { ClientSession, Transport } from "./session.js";
import {
  IsoParams,
  agentMarker,
  blockQuads,
  floorLines,
  hudState,
  paintOrder,
} from "./view.js";

const canvas = document.getElementById("zone") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const hud = document.getElementById("hud")!;
const banner = document.getElementById("banner")!;
const form = document.getElementById("instruction-form") as HTMLFormElement;
const textBox = document.getElementById("instruction") as HTMLTextAreaElement;
const doneButton = document.getElementById("done") as HTMLButtonElement;
const downloads = document.getElementById("downloads")!;

const iso: IsoParams = { tile: 24, originX: canvas.width / 2, originY: 90 };
let rewardSum = 0;

function draw(obs: Observation): void {
  ctx.fillStyle = "#10131a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#2c3344";
  for (const [a, b] of floorLines(iso)) {
    ctx.beginPath();
    ctx.moveTo(a[0], a[1]);
    ctx.lineTo(b[0], b[1]);
    ctx.stroke();
  }
  for (const block of paintOrder(obs.grid ?? [])) {
    for (const quad of blockQuads(block, iso)) {
      ctx.beginPath();
      const [first, ...rest] = quad.points;
      ctx.moveTo(first[0], first[1]);
      for (const [px, py] of rest) ctx.lineTo(px, py);
      ctx.closePath();
      ctx.fillStyle = quad.fill;
      ctx.fill();
      if (quad.stroke) {
        ctx.strokeStyle = quad.stroke;
        ctx.stroke();
      }
    }
  }
  if (obs.pose) {
    const marker = agentMarker(obs.pose, iso);
    ctx.fillStyle = "#ffffff";
    ctx.beginPath();
    ctx.arc(marker.center[0], marker.center[1], 5, 0, Math.PI * 2);
    ctx.fill();
    ctx.strokeStyle = "#ffffff";
    ctx.beginPath();
    ctx.moveTo(marker.center[0], marker.center[1]);
    ctx.lineTo(marker.facing[0], marker.facing[1]);
    ctx.stroke();
  }
  const state = hudState(obs, rewardSum);
  hud.textContent =
    `step ${state.step}  blocks ${state.blocks}  reward ${state.reward.toFixed(2)}  ` +
    `compass ${state.compass}°  color ${state.selected}`;
}

const url = `ws://${location.host}/session`;
const socket = new WebSocket(url) as unknown as Transport;
const session = new ClientSession(socket, {
  onObservation: (obs) => {
    rewardSum += obs.reward ?? 0;
    draw(obs);
  },
  onPhase: (phase) => {
    document.body.dataset.phase = phase;
    form.hidden = phase === "building" || phase === "connecting";
  },
  onError: (message) => {
    banner.textContent = message;
    banner.hidden = false;
    setTimeout(() => (banner.hidden = true), 4000);
  },
  onDisconnect: () => {
    banner.textContent = "disconnected - reload to start a new session";
    banner.hidden = false;
  },
  onRecord: (record) => {
    const blob = new Blob([JSON.stringify(record, null, 1)], { type: "application/json" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = `session_${session.sessionId ?? 0}.json`;
    link.textContent = "download session record";
    downloads.appendChild(link);
  },
});

// One input event, one action; replies are processed FIFO by the session.
let queue: Promise<unknown> = Promise.resolve();
function enqueue(action: ActionRequest): void {
  if (session.phase !== "building") return;
  queue = queue.then(() => session.sendAction(action)).catch(() => undefined);
}

window.addEventListener("keydown", (event) => {
  if (document.activeElement === textBox) return;
  const action = actionForKey(event.code);
  if (action) {
    event.preventDefault();
    enqueue(action);
  }
});

canvas.addEventListener("mousedown", (event) => {
  event.preventDefault();
  enqueue(actionForClick(event.altKey || event.button === 2));
});
canvas.addEventListener("contextmenu", (event) => event.preventDefault());

let dragging = false;
let last: [number, number] = [0, 0];
canvas.addEventListener("pointerdown", (event) => {
  dragging = true;
  last = [event.clientX, event.clientY];
});
window.addEventListener("pointerup", () => (dragging = false));
window.addEventListener("pointermove", (event) => {
  if (!dragging) return;
  const dx = event.clientX - last[0];
  const dy = event.clientY - last[1];
  if (dx === 0 && dy === 0) return;
  last = [event.clientX, event.clientY];
  enqueue(actionForDrag(dx, dy));
});

doneButton.addEventListener("click", () => {
  form.hidden = false;
  textBox.focus();
});

form.addEventListener("submit", async (event) => {
  event.preventDefault();
  try {
    await session.submitInstruction(textBox.value);
    await session.exportRecord();
  } catch (err) {
    banner.textContent = String(err);
    banner.hidden = false;
  }
});

session.start({}).catch((err) => {
  banner.textContent = `could not start session: ${err}`;
  banner.hidden = false;
});
