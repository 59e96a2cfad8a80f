// Entry point: wires the view model, the websocket link, the joystick
// stream and the canvas together. All state logic lives in the other
// modules; this file only moves data between them and the DOM.

import { commandManual, commandMode, missionUpload } from "./commands.js";
import { JoystickSender } from "./joystick.js";
import { MirrorLink } from "./link.js";
import { MODE_AUTO, MODE_MANUAL, MODE_RTL } from "./messages.js";
import { MapView } from "./map.js";
import { GcsViewModel } from "./viewmodel.js";

const UPLOAD_RETRIES = 1;

function must<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

const vm = new GcsViewModel();
const canvas = must<HTMLCanvasElement>("map");
const map = new MapView(canvas);

// the bridge listens on 8080 by default; override with ?ws=ws://host:port/ws
const wsUrl =
  new URLSearchParams(window.location.search).get("ws") ??
  `ws://${window.location.hostname || "127.0.0.1"}:8080/ws`;
const link = new MirrorLink(wsUrl, {
  onDoc: (doc) => vm.apply(doc, Date.now()),
  onUp: () => vm.setConnected(true, Date.now()),
  onDown: () => vm.setConnected(false, Date.now()),
});

const sender = new JoystickSender({
  send: (linear, angular, spray) => {
    link.send(commandManual(linear, angular, spray));
  },
  canDrive: () => vm.canDrive(),
  limits: () => vm.world?.limits ?? null,
});

// mode buttons

function sendMode(mode: number): void {
  if (vm.canSend()) {
    link.send(commandMode(mode));
  }
}

must<HTMLButtonElement>("btn-auto").onclick = () => sendMode(MODE_AUTO);
must<HTMLButtonElement>("btn-manual").onclick = () => sendMode(MODE_MANUAL);
must<HTMLButtonElement>("btn-rtl").onclick = () => sendMode(MODE_RTL);

// mission draft and upload

let uploadTriesLeft = 0;

function sendUpload(): void {
  link.send(missionUpload(vm.draft));
  vm.markUploadSent(Date.now());
}

must<HTMLButtonElement>("btn-upload").onclick = () => {
  if (vm.draftReady()) {
    uploadTriesLeft = UPLOAD_RETRIES;
    sendUpload();
  }
};

canvas.onclick = (ev: MouseEvent) => {
  const rect = canvas.getBoundingClientRect();
  const id = map.pickNode(vm, ev.clientX - rect.left, ev.clientY - rect.top);
  if (id !== null) {
    vm.toggleDraft(id);
  }
};

// keyboard driving: WASD or arrows, space sprays while held

const held = new Set<string>();
const KEYMAP: Record<string, string> = {
  w: "up",
  s: "down",
  a: "left",
  d: "right",
  arrowup: "up",
  arrowdown: "down",
  arrowleft: "left",
  arrowright: "right",
};

function refreshStick(): void {
  const x = (held.has("right") ? 1 : 0) - (held.has("left") ? 1 : 0);
  const y = (held.has("up") ? 1 : 0) - (held.has("down") ? 1 : 0);
  if (x === 0 && y === 0 && !held.has("spray")) {
    sender.release();
  } else {
    sender.engage(x, y, held.has("spray"));
  }
}

window.addEventListener("keydown", (ev) => {
  const key = ev.key.toLowerCase();
  if (key === " ") {
    held.add("spray");
  } else if (KEYMAP[key]) {
    held.add(KEYMAP[key]);
  } else {
    return;
  }
  ev.preventDefault();
  refreshStick();
});

window.addEventListener("keyup", (ev) => {
  const key = ev.key.toLowerCase();
  if (key === " ") {
    held.delete("spray");
  } else if (KEYMAP[key]) {
    held.delete(KEYMAP[key]);
  } else {
    return;
  }
  refreshStick();
});

// periodic work: joystick stream, ack timeout, auto-retry

setInterval(() => {
  const now = Date.now();
  sender.pump(now);
  if (vm.checkUploadTimeout(now) && uploadTriesLeft > 0) {
    uploadTriesLeft -= 1;
    sendUpload();
  }
}, 25);

// render loop

const modeEl = must<HTMLSpanElement>("stat-mode");
const fsmEl = must<HTMLSpanElement>("stat-fsm");
const clockEl = must<HTMLSpanElement>("stat-clock");
const battEl = must<HTMLSpanElement>("stat-battery");
const tankEl = must<HTMLSpanElement>("stat-reservoir");
const linkEl = must<HTMLSpanElement>("stat-link");
const uploadEl = must<HTMLSpanElement>("stat-upload");
const draftEl = must<HTMLSpanElement>("stat-draft");
const feedEl = must<HTMLUListElement>("feed");

function renderSidebar(nowMs: number): void {
  modeEl.textContent = vm.modeName();
  fsmEl.textContent = vm.fsmName();
  clockEl.textContent = `${vm.clockS.toFixed(1)} s`;
  if (vm.telemetry !== null) {
    battEl.textContent = `${vm.telemetry.battery_mah.toFixed(0)} mAh`;
    tankEl.textContent = `${vm.telemetry.reservoir_ml.toFixed(0)} ml`;
  }
  linkEl.textContent = vm.connected
    ? vm.isStale(nowMs)
      ? "stale"
      : "up"
    : "down";
  linkEl.className = vm.connected && !vm.isStale(nowMs) ? "ok" : "bad";
  uploadEl.textContent = vm.uploadState;
  draftEl.textContent = vm.draft.length > 0 ? vm.draft.join(" > ") : "(empty)";

  const lines = vm.feed.slice(-12).reverse();
  feedEl.innerHTML = "";
  for (const line of lines) {
    const li = document.createElement("li");
    li.textContent = line.text;
    feedEl.appendChild(li);
  }
}

function frame(): void {
  const now = Date.now();
  map.render(vm, now);
  renderSidebar(now);
  requestAnimationFrame(frame);
}

link.connect();
requestAnimationFrame(frame);
