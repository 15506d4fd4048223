// Studio wiring: preview canvas with right-clickable objects, brushable
// timeline with event glyphs, and the edit panel (purpose/order buttons,
// visual-mapping list). All data comes from the service; this file only
// routes interactions and paints.

import { ApiError, StudioClient } from "./api";
import { ScriptEditor, validateStylePatch } from "./editpanel";
import { loadPlayback, PlaybackController } from "./playback";
import {
  attachScript,
  createSession,
  pause,
  setBrush,
  setCurrentFrame,
  startPlayback,
  tick,
  UiSession,
} from "./session";
import { brushFromDrag, frameToPx, layoutGlyphs, turnsInterval } from "./timeline";
import type { ObjectBoxes, Purpose, Timeline } from "./types";

const client = new StudioClient("");

interface StudioState {
  session: UiSession | null;
  timeline: Timeline | null;
  editor: ScriptEditor | null;
  playback: PlaybackController | null;
  purpose: Purpose;
  order: string;
  boxes: ObjectBoxes | null;
}

const state: StudioState = {
  session: null,
  timeline: null,
  editor: null,
  playback: null,
  purpose: "education",
  order: "linear",
  boxes: null,
};

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const preview = $("preview") as unknown as HTMLCanvasElement;
const timelineCanvas = $("timeline") as unknown as HTMLCanvasElement;
const statusLine = $("status");
const mappingList = $("mappings");
const contextMenu = $("context-menu");

function setStatus(text: string, isError = false): void {
  statusLine.textContent = text;
  statusLine.className = isError ? "status error" : "status";
}

async function call<T>(work: () => Promise<T>): Promise<T | null> {
  try {
    return await work();
  } catch (err) {
    if (err instanceof ApiError) setStatus(`service: ${err.message}`, true);
    else setStatus(String(err), true);
    return null;
  }
}

// --- project loading --------------------------------------------------------

$("load-form").addEventListener("submit", async (ev) => {
  ev.preventDefault();
  const input = $("tracking-file") as unknown as HTMLInputElement;
  const file = input.files?.[0];
  if (!file) return;
  const tracking = JSON.parse(await file.text());
  const summary = await call(() => client.createProject(tracking));
  if (!summary) return;
  state.session = createSession(summary.project_id, summary.frame_count);
  state.timeline = await client.timeline(summary.project_id);
  setStatus(
    `project ${summary.project_id}: ${summary.frame_count} frames, ` +
    `${summary.turn_count} turns, ${summary.fact_count} tactic facts`,
  );
  drawTimeline();
  await showFrame(0);
});

$("brush-last-two").addEventListener("click", async () => {
  if (!state.session || !state.timeline) return;
  const turns = state.timeline.turns;
  if (turns.length < 2) return setStatus("fewer than two turns detected", true);
  const [a, b] = turnsInterval(turns, turns.length - 2, turns.length - 1);
  state.session = setBrush(state.session, a, b);
  const sub = await call(() => client.brush(state.session!.projectId, a, b));
  if (sub) setStatus(`brushed [${a}, ${b}]: ${sub.turns.length} turns, ${sub.events.length} events`);
  drawTimeline();
});

// --- preview rendering --------------------------------------------------------

async function showFrame(srcFrame: number, overlay?: Uint8Array): Promise<void> {
  if (!state.session) return;
  state.session = setCurrentFrame(state.session, srcFrame);
  const pid = state.session.projectId;
  const ctx = preview.getContext("2d")!;
  const bg = new Image();
  bg.src = client.sourceFrameUrl(pid, state.session.currentFrame);
  await bg.decode().catch(() => undefined);
  ctx.clearRect(0, 0, preview.width, preview.height);
  if (bg.complete && bg.naturalWidth > 0) {
    ctx.drawImage(bg, 0, 0, preview.width, preview.height);
  }
  if (overlay) {
    const svgImage = new Image();
    const url = URL.createObjectURL(
      new Blob([overlay.slice().buffer as ArrayBuffer], { type: "image/svg+xml" }));
    svgImage.src = url;
    await svgImage.decode().catch(() => undefined);
    ctx.drawImage(svgImage, 0, 0, preview.width, preview.height);
    URL.revokeObjectURL(url);
  }
  state.boxes = await call(() => client.objectsAt(pid, state.session!.currentFrame));
  if (state.boxes) drawBoxes(ctx);
  drawTimeline();
}

function canvasScale(): number {
  return state.boxes ? preview.width / 1920 : 1;
}

function drawBoxes(ctx: CanvasRenderingContext2D): void {
  if (!state.boxes) return;
  const s = preview.width / (state.boxes.table ? 1920 : preview.width);
  ctx.lineWidth = 2;
  for (const p of state.boxes.players) {
    const [x, y, w, h] = p.bbox;
    ctx.strokeStyle = p.id === "A" ? "#dc2828" : "#141414";
    ctx.strokeRect(x * s, y * s, w * s, h * s);
  }
  if (state.boxes.ball) {
    const [x, y, w, h] = state.boxes.ball.bbox;
    ctx.strokeStyle = "#e8b83a";
    ctx.strokeRect(x * s, y * s, w * s, h * s);
  }
}

function hitTest(x: number, y: number): string | null {
  if (!state.boxes) return null;
  const s = canvasScale();
  if (state.boxes.ball) {
    const [bx, by, bw, bh] = state.boxes.ball.bbox;
    if (x >= bx * s && x <= (bx + bw) * s && y >= by * s && y <= (by + bh) * s) return "ball";
  }
  for (const p of state.boxes.players) {
    const [px, py, pw, ph] = p.bbox;
    if (x >= px * s && x <= (px + pw) * s && y >= py * s && y <= (py + ph) * s) return p.id;
  }
  return null;
}

preview.addEventListener("contextmenu", async (ev) => {
  ev.preventDefault();
  if (!state.session) return;
  const rect = preview.getBoundingClientRect();
  const subject = hitTest(ev.clientX - rect.left, ev.clientY - rect.top);
  if (!subject) {
    contextMenu.style.display = "none";
    return;
  }
  const frame = state.session.currentFrame;
  const names = await call(() =>
    client.attributes(state.session!.projectId, subject, frame, state.purpose));
  if (!names) return;
  openContextMenu(ev.clientX, ev.clientY, subject, frame, names);
});

function openContextMenu(
  x: number, y: number, subject: string, frame: number, names: string[],
): void {
  contextMenu.innerHTML = "";
  const title = document.createElement("div");
  title.className = "menu-title";
  title.textContent = `${subject} @ frame ${frame}`;
  contextMenu.appendChild(title);
  for (const name of names) {
    const entry = document.createElement("button");
    entry.textContent = name.replace(/_/g, " ");
    entry.addEventListener("click", () => {
      contextMenu.style.display = "none";
      void selectAttribute(subject, frame, name);
    });
    contextMenu.appendChild(entry);
  }
  contextMenu.style.left = `${x}px`;
  contextMenu.style.top = `${y}px`;
  contextMenu.style.display = "block";
}

document.addEventListener("click", () => {
  contextMenu.style.display = "none";
});

async function selectAttribute(subject: string, frame: number, attribute: string): Promise<void> {
  if (!state.session) return;
  const pid = state.session.projectId;
  const res = await call(() => client.addSelections(pid, {
    script_id: state.session!.scriptId ?? undefined,
    subject,
    frame,
    attributes: [attribute],
    purpose: state.purpose,
    order: state.order,
    clip: state.session!.brush ?? undefined,
  }));
  if (!res) return;
  state.session = attachScript(state.session, res.script_id);
  if (!state.editor || state.editor.scriptId !== res.script_id) {
    state.editor = new ScriptEditor(client, pid, res.script_id, res.script);
  } else {
    state.editor.history.push(res.script);
  }
  state.playback = null; // schedule changed
  renderMappingList();
  const rec = res.recommendations[res.recommendations.length - 1];
  setStatus(`mapped ${rec.attribute} -> ${rec.visual} (${rec.source})`);
}

// --- timeline ------------------------------------------------------------------

let dragStart: number | null = null;

timelineCanvas.addEventListener("mousedown", (ev) => {
  dragStart = ev.offsetX;
});

timelineCanvas.addEventListener("mouseup", async (ev) => {
  if (!state.session || dragStart === null) return;
  const interval = brushFromDrag(dragStart, ev.offsetX, timelineCanvas.width,
                                 state.session.frameCount);
  dragStart = null;
  if (!interval) return; // empty brush ignored
  state.session = setBrush(state.session, interval[0], interval[1]);
  const sub = await call(() => client.brush(state.session!.projectId, ...interval));
  if (sub) setStatus(`brushed [${interval[0]}, ${interval[1]}]: ${sub.turns.length} turns`);
  drawTimeline();
});

timelineCanvas.addEventListener("dblclick", (ev) => {
  if (!state.session) return;
  const frame = Math.round(
    (ev.offsetX / timelineCanvas.width) * (state.session.frameCount - 1));
  void showFrame(frame);
});

function drawTimeline(): void {
  if (!state.session || !state.timeline) return;
  const ctx = timelineCanvas.getContext("2d")!;
  const { width, height } = timelineCanvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#1d2430";
  ctx.fillRect(0, 0, width, height);
  const frames = state.session.frameCount;

  for (const turn of state.timeline.turns) {
    const x0 = frameToPx(turn.span[0], width, frames);
    const x1 = frameToPx(turn.span[1] + 1, width, frames);
    ctx.fillStyle = turn.index % 2 === 0 ? "#242f3f" : "#2a3850";
    ctx.fillRect(x0, 0, x1 - x0, height);
  }
  for (const g of layoutGlyphs(state.timeline.events, width, frames)) {
    ctx.fillStyle = g.color;
    ctx.fillRect(g.x, 8 + g.row * 14, g.width, 10);
  }
  if (state.session.brush) {
    const [a, b] = state.session.brush;
    const x0 = frameToPx(a, width, frames);
    const x1 = frameToPx(b + 1, width, frames);
    ctx.fillStyle = "rgba(120, 180, 255, 0.25)";
    ctx.fillRect(x0, 0, x1 - x0, height);
    ctx.strokeStyle = "#78b4ff";
    ctx.strokeRect(x0, 0, x1 - x0, height);
  }
  const px = frameToPx(state.session.currentFrame, width, frames);
  ctx.strokeStyle = "#ffffff";
  ctx.beginPath();
  ctx.moveTo(px, 0);
  ctx.lineTo(px, height);
  ctx.stroke();
}

// --- edit panel ------------------------------------------------------------------

for (const btn of document.querySelectorAll<HTMLButtonElement>("[data-purpose]")) {
  btn.addEventListener("click", () => {
    state.purpose = btn.dataset.purpose as Purpose;
    for (const other of document.querySelectorAll("[data-purpose]")) {
      other.classList.toggle("active", other === btn);
    }
  });
}

for (const btn of document.querySelectorAll<HTMLButtonElement>("[data-order]")) {
  btn.addEventListener("click", async () => {
    state.order = btn.dataset.order!;
    for (const other of document.querySelectorAll("[data-order]")) {
      other.classList.toggle("active", other === btn);
    }
    if (state.editor) {
      const ok = await call(() => state.editor!.setOrder(state.order));
      if (ok) {
        state.playback = null;
        setStatus(`order -> ${state.order} (mappings kept, schedule recompiled)`);
        renderMappingList();
      }
    }
  });
}

function renderMappingList(): void {
  mappingList.innerHTML = "";
  if (!state.editor) return;
  for (const m of state.editor.script.mappings) {
    const row = document.createElement("li");
    const label = document.createElement("span");
    label.textContent = `${m.attribute.replace(/_/g, " ")} -> ${m.visual}`;
    row.appendChild(label);
    const colorInput = document.createElement("input");
    colorInput.type = "color";
    colorInput.title = "mark color";
    colorInput.addEventListener("change", async () => {
      const hex = colorInput.value;
      const rgb: [number, number, number] = [
        parseInt(hex.slice(1, 3), 16),
        parseInt(hex.slice(3, 5), 16),
        parseInt(hex.slice(5, 7), 16),
      ];
      const problem = validateStylePatch({ color: rgb });
      if (problem) return setStatus(problem, true);
      const ok = await call(() => state.editor!.patchMappingStyle(m.mapping_id, { color: rgb }));
      if (ok) {
        state.playback?.invalidate();
        setStatus(`${m.attribute}: color updated`);
      }
    });
    row.appendChild(colorInput);
    mappingList.appendChild(row);
  }
}

$("undo").addEventListener("click", async () => {
  if (!state.editor) return;
  await call(() => state.editor!.undo());
  state.playback = null;
  renderMappingList();
  setStatus("undid last edit");
});

// --- playback ---------------------------------------------------------------------

let playTimer: number | null = null;

$("play").addEventListener("click", async () => {
  if (!state.session?.scriptId) return setStatus("select data first", true);
  const pid = state.session.projectId;
  if (!state.playback) {
    const pb = await call(() => loadPlayback(client, pid, state.session!.scriptId!));
    if (!pb) return;
    state.playback = pb;
  }
  state.session = startPlayback(state.session, state.playback.totalFrames);
  const fps = 25; // UI playback rate; schedule frames are source-exact
  if (playTimer !== null) window.clearInterval(playTimer);
  playTimer = window.setInterval(async () => {
    if (!state.session?.playback?.playing) {
      if (playTimer !== null) window.clearInterval(playTimer);
      playTimer = null;
      return;
    }
    const cursor = state.session.playback.cursor;
    const bytes = await state.playback!.displayedOverlayBytes(cursor).catch(() => undefined);
    await showFrame(state.playback!.sourceFrameAt(cursor), bytes);
    const kind = state.playback!.kindAt(cursor);
    setStatus(`frame ${cursor + 1}/${state.playback!.totalFrames} (${kind})`);
    state.session = tick(state.session);
  }, 1000 / fps);
});

$("pause").addEventListener("click", () => {
  if (state.session) state.session = pause(state.session);
});

$("export").addEventListener("click", async () => {
  if (!state.session?.scriptId) return setStatus("nothing to export", true);
  const res = await call(() =>
    client.exportScript(state.session!.projectId, state.session!.scriptId!));
  if (res) setStatus(`exported ${res.total_frames} frames -> ${res.bundle_dir}`);
});

setStatus("load a tracking bundle to begin");
