/** DOM wiring: canvas painting, submission, overlay display. */

import { ApiError, attachGroundTruth, createSession, imageUrl, postStrokes } from "./api.js";
import {
  UiState,
  beginSubmit,
  canSubmit,
  initialState,
  pendingStrokes,
  pushStroke,
  startSession,
  statusForHttpError,
  submitFailed,
  submitOk,
  toggleOverlayKind,
  undo,
} from "./state.js";
import { Label, UiStroke, beginStroke, extendStroke, strokeColor } from "./strokes.js";

const $ = (id: string) => document.getElementById(id)!;
const canvas = $("canvas") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const overlayImg = $("overlay") as HTMLImageElement;
const statusBox = $("status") as HTMLDivElement;

let state: UiState = initialState();
let baseImage: HTMLImageElement | null = null;
let drawing: UiStroke | null = null;
let revision = 0;

function setState(next: UiState) {
  state = next;
  render();
}

function currentLabel(): Label {
  return ($("brush-fg") as HTMLInputElement).checked ? "fg" : "bg";
}

function currentRadius(): number {
  return Number(($("radius") as HTMLInputElement).value);
}

function render() {
  ($("submit") as HTMLButtonElement).disabled = !canSubmit(state);
  ($("resolve") as HTMLButtonElement).disabled = !canSubmit(state);
  ($("undo") as HTMLButtonElement).disabled = state.history.length === 0 || state.busy;
  canvas.style.cursor = state.busy ? "wait" : "crosshair";
  statusBox.textContent = state.statusLines.slice(-4).join("\n");
  if (state.overlayUrl) {
    overlayImg.src = state.overlayUrl;
    overlayImg.style.display = "block";
  } else {
    overlayImg.style.display = "none";
  }
  redrawCanvas();
}

function redrawCanvas() {
  if (!baseImage) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(baseImage, 0, 0);
  ctx.globalAlpha = 0.85;
  for (const s of [...state.history, ...(drawing ? [drawing] : [])]) {
    if (s.points.length === 0) continue;
    ctx.strokeStyle = strokeColor(s.label);
    ctx.lineWidth = s.radius * 2;
    ctx.lineCap = "round";
    ctx.lineJoin = "round";
    ctx.beginPath();
    ctx.moveTo(s.points[0][0], s.points[0][1]);
    for (const [x, y] of s.points.slice(1)) ctx.lineTo(x, y);
    if (s.points.length === 1) ctx.lineTo(s.points[0][0] + 0.01, s.points[0][1]);
    ctx.stroke();
  }
  ctx.globalAlpha = 1.0;
}

function canvasPoint(ev: PointerEvent): [number, number] {
  const rect = canvas.getBoundingClientRect();
  const x = ((ev.clientX - rect.left) / rect.width) * canvas.width;
  const y = ((ev.clientY - rect.top) / rect.height) * canvas.height;
  return [x, y];
}

canvas.addEventListener("pointerdown", (ev) => {
  if (state.busy || !baseImage) return; // brush disabled while computing
  canvas.setPointerCapture(ev.pointerId);
  drawing = beginStroke(currentLabel(), currentRadius());
  const [x, y] = canvasPoint(ev);
  drawing = extendStroke(drawing, x, y, state.width, state.height);
  redrawCanvas();
});

canvas.addEventListener("pointermove", (ev) => {
  if (!drawing) return;
  const [x, y] = canvasPoint(ev);
  drawing = extendStroke(drawing, x, y, state.width, state.height);
  redrawCanvas();
});

canvas.addEventListener("pointerup", () => {
  if (!drawing) return;
  setState(pushStroke(state, drawing));
  drawing = null;
});

($("image-file") as HTMLInputElement).addEventListener("change", async (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0];
  if (!file) return;
  const bytes = await file.arrayBuffer();
  try {
    const info = await createSession(bytes);
    setState(startSession(state, info.id, info.width, info.height));
    canvas.width = info.width;
    canvas.height = info.height;
    baseImage = new Image();
    baseImage.onload = render;
    baseImage.src = URL.createObjectURL(file);
  } catch (e) {
    setState(submitFailed(state, e instanceof ApiError ? statusForHttpError(e.status) : String(e)));
  }
});

($("gt-file") as HTMLInputElement).addEventListener("change", async (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0];
  if (!file || !state.sessionId) return;
  try {
    await attachGroundTruth(state.sessionId, await file.arrayBuffer());
    setState(submitFailed(state, "ground truth attached; overlays now show TP/FP/FN"));
  } catch (e) {
    setState(submitFailed(state, String(e)));
  }
});

async function submit(mode: "append" | "replace") {
  if (!canSubmit(state) || !state.sessionId) return;
  const strokes = mode === "append" ? pendingStrokes(state) : state.history;
  setState(beginSubmit(state));
  const t0 = performance.now();
  try {
    const summary = await postStrokes(state.sessionId, strokes, mode);
    revision += 1;
    const url = imageUrl(state.sessionId, state.overlayKind, revision);
    setState(submitOk(state, url, performance.now() - t0, summary.jaccard));
  } catch (e) {
    const msg = e instanceof ApiError ? statusForHttpError(e.status) : String(e);
    setState(submitFailed(state, msg));
  }
}

$("submit").addEventListener("click", () => submit("append"));
$("resolve").addEventListener("click", () => submit("replace"));
$("undo").addEventListener("click", () => setState(undo(state)));
$("overlay-toggle").addEventListener("click", () => {
  const next = toggleOverlayKind(state);
  if (next.sessionId && next.overlayUrl) {
    setState({ ...next, overlayUrl: imageUrl(next.sessionId, next.overlayKind, revision) });
  } else {
    setState(next);
  }
});

render();
