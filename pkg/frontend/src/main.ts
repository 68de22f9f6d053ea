// Console entry point: WebSocket wiring, input loop, DOM overlays.

import { Camera, project } from "./geom.js";
import { HELP_LINES, HelpPanel, initialHelpPanel, updateHelpPanel } from "./help.js";
import {
  commandEnvelope,
  defaultHead,
  gazeEnvelope,
  headEnvelope,
  integrateHead,
  OutboundBuffer,
} from "./input.js";
import { concatBytes, decodeFrames, encodeFrame, Envelope, payloadJson } from "./protocol.js";
import { renderGripperPanel, renderMain } from "./render.js";
import {
  applyEnvelope,
  initialViewModel,
  rejectionVisible,
  tooltipVisible,
  ViewModel,
} from "./viewmodel.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const panel = document.getElementById("gripper-panel") as HTMLCanvasElement;
const modeEl = document.getElementById("mode")!;
const tooltipEl = document.getElementById("tooltip")!;
const rejectionEl = document.getElementById("rejection")!;
const bannerEl = document.getElementById("banner")!;
const helpEl = document.getElementById("help")!;
const commandInput = document.getElementById("command") as HTMLInputElement;
const speechButton = document.getElementById("speech") as HTMLButtonElement;

const vm: ViewModel = initialViewModel();
let helpPanel: HelpPanel = initialHelpPanel();
let head = defaultHead();
const keys = new Set<string>();
let dragging = false;
let dragDx = 0;
let mouse: { x: number; y: number } | null = null;
const outbound = new OutboundBuffer();
let ws: WebSocket | null = null;
let rxBuf: Uint8Array = new Uint8Array(0);

function camera(): Camera {
  return {
    pos: head.pos,
    yaw: (head.yawDeg * Math.PI) / 180,
    pitch: (head.pitchDeg * Math.PI) / 180,
    fovY: Math.PI / 3,
  };
}

function send(env: Envelope): void {
  const connected = ws !== null && ws.readyState === WebSocket.OPEN;
  for (const out of outbound.push(env, connected, performance.now())) {
    ws!.send(encodeFrame(out));
  }
}

function connect(): void {
  const socket = new WebSocket(`ws://${location.host}/ws`);
  socket.binaryType = "arraybuffer";
  socket.onopen = () => {
    ws = socket;
    vm.connected = true;
    for (const env of outbound.flush(performance.now())) {
      socket.send(encodeFrame(env));
    }
  };
  socket.onmessage = (event) => {
    rxBuf = concatBytes(rxBuf, new Uint8Array(event.data as ArrayBuffer));
    const { frames, rest } = decodeFrames(rxBuf);
    rxBuf = rest;
    const now = performance.now();
    for (const env of frames) {
      applyEnvelope(vm, env.topic, payloadJson(env) as Record<string, unknown>, now);
    }
  };
  socket.onclose = () => {
    ws = null;
    vm.connected = false;
    setTimeout(connect, 500);
  };
  socket.onerror = () => socket.close();
}

function submitCommand(text: string): void {
  const trimmed = text.trim();
  if (trimmed) send(commandEnvelope(trimmed));
}

commandInput.addEventListener("keydown", (e) => {
  if (e.key === "Enter") {
    submitCommand(commandInput.value);
    commandInput.value = "";
  }
  e.stopPropagation();
});

// Optional browser speech input feeding the same text pipeline as typing.
const SpeechRec =
  (window as any).SpeechRecognition ?? (window as any).webkitSpeechRecognition;
if (SpeechRec) {
  const recognizer = new SpeechRec();
  recognizer.continuous = false;
  recognizer.onresult = (event: any) => {
    submitCommand(event.results[0][0].transcript);
  };
  speechButton.addEventListener("click", () => recognizer.start());
} else {
  speechButton.disabled = true;
  speechButton.title = "speech input not available in this browser";
}

window.addEventListener("keydown", (e) => keys.add(e.key.toLowerCase()));
window.addEventListener("keyup", (e) => keys.delete(e.key.toLowerCase()));
canvas.addEventListener("mousedown", () => (dragging = true));
window.addEventListener("mouseup", () => (dragging = false));
canvas.addEventListener("mousemove", (e) => {
  const rect = canvas.getBoundingClientRect();
  mouse = { x: e.clientX - rect.left, y: e.clientY - rect.top };
  if (dragging) dragDx += e.movementX;
});

let lastFrame = performance.now();
let lastNetSend = 0;

function frame(now: number): void {
  const dt = Math.min(0.1, (now - lastFrame) / 1000);
  lastFrame = now;

  head = integrateHead(head, keys, dragDx, dt);
  dragDx = 0;

  if (now - lastNetSend > 50) {
    lastNetSend = now;
    send(headEnvelope(head));
    if (mouse) {
      send(gazeEnvelope(camera(), mouse.x, mouse.y, canvas.width, canvas.height));
    }
  }

  const cam = camera();
  renderMain(canvas, cam, vm);
  if (vm.visualize) {
    panel.style.display = "block";
    renderGripperPanel(panel, vm, now);
  } else {
    panel.style.display = "none";
  }

  modeEl.textContent = `${vm.mode}${vm.active ? " (active)" : ""}`;
  tooltipEl.textContent = tooltipVisible(vm, now) ? vm.tooltip!.text : "";
  tooltipEl.style.display = tooltipVisible(vm, now) ? "block" : "none";
  if (rejectionVisible(vm, now)) {
    rejectionEl.textContent = `rejected: ${vm.rejection!.token} (${vm.rejection!.reason})`;
    rejectionEl.style.display = "block";
  } else {
    rejectionEl.style.display = "none";
  }
  const bannerText = !vm.connected
    ? "disconnected — reconnecting"
    : outbound.dropped
      ? "inputs dropped while disconnected"
      : vm.banner;
  bannerEl.textContent = bannerText ?? "";
  bannerEl.style.display = bannerText ? "block" : "none";

  helpPanel = updateHelpPanel(helpPanel, vm.helpVisible, cam);
  if (helpPanel.visible && helpPanel.worldPos) {
    const p = project(cam, helpPanel.worldPos, canvas.width, canvas.height);
    if (p) {
      helpEl.style.display = "block";
      helpEl.style.left = `${p.x}px`;
      helpEl.style.top = `${p.y}px`;
    } else {
      helpEl.style.display = "none"; // behind the camera
    }
  } else {
    helpEl.style.display = "none";
  }

  requestAnimationFrame(frame);
}

helpEl.innerHTML = `<b>voice commands</b><br>${HELP_LINES.join("<br>")}`;
connect();
requestAnimationFrame(frame);
