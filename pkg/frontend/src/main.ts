/** Browser shell: canvas map, toolbar, and panels around the controller. */

import { ApiClient } from "./api.js";
import { AppController } from "./controller.js";
import {
  TILE_SIZE,
  latLonToScreen,
  screenToLatLon,
  visibleTiles,
  type Viewport,
} from "./mercator.js";
import { UiStore, type Tool } from "./state.js";
import { TileCache, type TileBitmap } from "./tiles.js";

const $ = <T extends HTMLElement>(sel: string): T => {
  const el = document.querySelector(sel);
  if (!el) throw new Error(`missing element ${sel}`);
  return el as T;
};

const params = new URLSearchParams(location.search);
const serviceBase = params.get("service") ?? "http://localhost:8000";
const basemapTemplate = params.get("basemap") ?? "";

const api = new ApiClient(serviceBase);
const store = new UiStore();

/** Decode one PNG tile into pixels plus a drawable image. */
async function loadTile(url: string): Promise<TileBitmap> {
  const resp = await fetch(url);
  if (!resp.ok) throw new Error(`tile fetch failed: ${resp.status}`);
  const image = await createImageBitmap(await resp.blob());
  const off = document.createElement("canvas");
  off.width = image.width;
  off.height = image.height;
  const ctx = off.getContext("2d")!;
  ctx.drawImage(image, 0, 0);
  const data = ctx.getImageData(0, 0, image.width, image.height);
  return { width: image.width, height: image.height, pixels: data.data, image };
}

const tiles = new TileCache(loadTile);
const basemapTiles = new TileCache(loadTile, 128);
const controller = new AppController(api, store, tiles);

const canvas = $<HTMLCanvasElement>("#map");
const view: Viewport = {
  centerLat: 30.0545,
  centerLon: -81.6145,
  zoom: 16,
  width: canvas.clientWidth || 800,
  height: canvas.clientHeight || 600,
};

let repaintQueued = false;
function repaint(): void {
  if (repaintQueued) return;
  repaintQueued = true;
  requestAnimationFrame(() => {
    repaintQueued = false;
    draw();
  });
}

function resize(): void {
  const rect = canvas.getBoundingClientRect();
  canvas.width = rect.width * devicePixelRatio;
  canvas.height = rect.height * devicePixelRatio;
  view.width = rect.width;
  view.height = rect.height;
  repaint();
}

function draw(): void {
  const ctx = canvas.getContext("2d")!;
  ctx.save();
  ctx.scale(devicePixelRatio, devicePixelRatio);
  ctx.fillStyle = "#0b0e14";
  ctx.fillRect(0, 0, view.width, view.height);

  const placed = visibleTiles(view);
  const state = store.state;

  // basemap, or a faint grid when no template is configured
  if (basemapTemplate) {
    for (const t of placed) {
      const url = basemapTemplate
        .replace("{z}", String(t.z))
        .replace("{x}", String(t.x))
        .replace("{y}", String(t.y));
      const key = { scenarioId: "basemap", revision: 0, z: t.z, x: t.x, y: t.y };
      const hit = basemapTiles.peek(key);
      if (hit?.image) {
        ctx.globalAlpha = 0.5;
        ctx.drawImage(hit.image as CanvasImageSource, t.screenX, t.screenY);
        ctx.globalAlpha = 1;
      } else {
        basemapTiles.get(key, url).then(repaint, () => undefined);
      }
    }
  } else {
    ctx.strokeStyle = "#1c2330";
    for (const t of placed) {
      ctx.strokeRect(t.screenX + 0.5, t.screenY + 0.5, TILE_SIZE, TILE_SIZE);
    }
  }

  // brightness overlay
  if (state.scenarioId) {
    ctx.globalAlpha = state.overlayOpacity;
    for (const t of placed) {
      const key = {
        scenarioId: state.scenarioId,
        revision: state.revision,
        z: t.z,
        x: t.x,
        y: t.y,
      };
      const hit = tiles.peek(key);
      if (hit?.image) {
        ctx.drawImage(hit.image as CanvasImageSource, t.screenX, t.screenY);
      } else {
        const url = api.tileUrl(state.scenarioId, t.z, t.x, t.y, state.revision);
        tiles.get(key, url).then(repaint, () => undefined);
      }
    }
    ctx.globalAlpha = 1;
  }

  // protected areas and the draft ring
  ctx.lineWidth = 1.5;
  for (const [name, ring] of Object.entries(state.areas)) {
    ctx.strokeStyle = "#3fb950";
    ctx.beginPath();
    ring.forEach(([lat, lon], i) => {
      const p = latLonToScreen(view, lat, lon);
      i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y);
    });
    ctx.closePath();
    ctx.stroke();
    const first = ring[0];
    if (first) {
      const p = latLonToScreen(view, first[0], first[1]);
      ctx.fillStyle = "#3fb950";
      ctx.fillText(name, p.x + 4, p.y - 4);
    }
  }
  if (state.draft.length) {
    ctx.strokeStyle = "#d29922";
    ctx.beginPath();
    state.draft.forEach(([lat, lon], i) => {
      const p = latLonToScreen(view, lat, lon);
      i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y);
    });
    ctx.stroke();
  }

  // lamp markers
  for (const s of state.sources) {
    const p = latLonToScreen(view, s.lat, s.lon);
    ctx.beginPath();
    ctx.arc(p.x, p.y, 5, 0, Math.PI * 2);
    ctx.fillStyle = s.id === dragging?.id ? "#ff7b72" : "#e3b341";
    ctx.fill();
    ctx.strokeStyle = "#0b0e14";
    ctx.stroke();
  }
  ctx.restore();
}

// ---- pointer handling: click dispatches the tool, drag pans or moves ----

let pointer: { x: number; y: number } | null = null;
let moved = false;
let dragging: { id: string } | null = null;

function hitSource(x: number, y: number): string | null {
  for (const s of store.state.sources) {
    const p = latLonToScreen(view, s.lat, s.lon);
    if (Math.hypot(p.x - x, p.y - y) <= 8) return s.id;
  }
  return null;
}

canvas.addEventListener("pointerdown", (ev) => {
  canvas.setPointerCapture(ev.pointerId);
  pointer = { x: ev.offsetX, y: ev.offsetY };
  moved = false;
  if (store.state.tool === "drag") {
    const id = hitSource(ev.offsetX, ev.offsetY);
    dragging = id ? { id } : null;
  }
});

canvas.addEventListener("pointermove", (ev) => {
  if (!pointer) return;
  const dx = ev.offsetX - pointer.x;
  const dy = ev.offsetY - pointer.y;
  if (Math.hypot(dx, dy) > 4) moved = true;
  if (!moved) return;
  if (dragging) {
    const { lat, lon } = screenToLatLon(view, ev.offsetX, ev.offsetY);
    store.update({
      sources: store.state.sources.map((s) =>
        s.id === dragging!.id ? { ...s, lat, lon } : s,
      ),
    });
  } else {
    const size = TILE_SIZE * Math.pow(2, view.zoom);
    view.centerLon -= (dx / size) * 360;
    const before = screenToLatLon(view, view.width / 2, view.height / 2 - dy);
    view.centerLat = before.lat;
    repaint();
  }
  pointer = { x: ev.offsetX, y: ev.offsetY };
});

canvas.addEventListener("pointerup", async (ev) => {
  const wasDragging = dragging;
  const wasMoved = moved;
  pointer = null;
  dragging = null;
  const { lat, lon } = screenToLatLon(view, ev.offsetX, ev.offsetY);
  try {
    if (wasDragging && wasMoved) {
      await controller.moveSource(wasDragging.id, lat, lon);
      return;
    }
    if (wasMoved) return; // it was a pan
    switch (store.state.tool) {
      case "place":
        await controller.placeSource(lat, lon);
        break;
      case "inspect":
        await controller.inspect(lat, lon, view.zoom);
        break;
      case "draw-polygon":
        if (!controller.addDraftVertex(lat, lon)) {
          flashError("that vertex would make the ring cross itself");
        }
        break;
      case "drag":
        break;
    }
  } catch {
    // banners already carry the failure
  }
  repaint();
});

canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  const dz = ev.deltaY < 0 ? 1 : -1;
  view.zoom = Math.max(3, Math.min(20, Math.round(view.zoom + dz)));
  repaint();
});

// ---- toolbar, panels, keyboard ----

function setTool(tool: Tool): void {
  store.update({ tool });
  document.querySelectorAll<HTMLButtonElement>("[data-tool]").forEach((b) => {
    b.classList.toggle("active", b.dataset.tool === tool);
  });
}

document.querySelectorAll<HTMLButtonElement>("[data-tool]").forEach((b) => {
  b.addEventListener("click", () => setTool(b.dataset.tool as Tool));
});

document.addEventListener("keydown", (ev) => {
  if (ev.target instanceof HTMLInputElement || ev.target instanceof HTMLSelectElement) return;
  const byKey: Record<string, Tool> = {
    p: "place",
    d: "drag",
    g: "draw-polygon",
    i: "inspect",
  };
  const tool = byKey[ev.key];
  if (tool) setTool(tool);
  if (ev.key === "Escape") {
    controller.cancelDraft();
    repaint();
  }
  if (ev.key === "Enter" && store.state.draft.length >= 3) {
    const name = prompt("area name:", `area-${Object.keys(store.state.areas).length + 1}`);
    if (name && !controller.finishDraft(name)) {
      flashError("ring is not a simple polygon");
    }
    repaint();
  }
});

function flashError(message: string): void {
  store.update({ error: message });
  setTimeout(() => {
    if (store.state.error === message) store.update({ error: null });
  }, 4000);
}

$<HTMLInputElement>("#profile").addEventListener("change", (ev) => {
  store.update({ profileId: Number((ev.target as HTMLSelectElement).value) });
});

$<HTMLInputElement>("#opacity").addEventListener("input", (ev) => {
  store.update({ overlayOpacity: Number((ev.target as HTMLInputElement).value) / 100 });
  repaint();
});

$<HTMLButtonElement>("#load").addEventListener("click", async () => {
  const id = $<HTMLInputElement>("#scenario-id").value.trim();
  if (!id) return;
  try {
    await controller.loadScenario(id);
    location.hash = `s=${encodeURIComponent(id)}`;
    const bbox = await api.getScenario(id);
    view.centerLat = (bbox.scenario.bbox.min_lat + bbox.scenario.bbox.max_lat) / 2;
    view.centerLon = (bbox.scenario.bbox.min_lon + bbox.scenario.bbox.max_lon) / 2;
    repaint();
  } catch (err) {
    flashError(err instanceof Error ? err.message : String(err));
  }
});

$<HTMLButtonElement>("#footprint-run").addEventListener("click", async () => {
  const area = $<HTMLSelectElement>("#footprint-area").value;
  const kernel = $<HTMLSelectElement>("#footprint-kernel").value;
  if (!area) return;
  try {
    const table = await controller.footprintTable(area, { kernel });
    const body = table.rows
      .map(
        (r) =>
          `<tr><td>${r.source_id}</td><td>${r.footprint.toFixed(2)}</td></tr>`,
      )
      .join("");
    $("#footprint-table").innerHTML =
      `<table><thead><tr><th>source</th><th>deposit</th></tr></thead>` +
      `<tbody>${body}</tbody>` +
      `<tfoot><tr><th>total</th><th>${table.total.toFixed(2)}</th></tr></tfoot></table>`;
  } catch (err) {
    flashError(err instanceof Error ? err.message : String(err));
  }
});

$<HTMLButtonElement>("#whatif-run").addEventListener("click", async () => {
  const mode = $<HTMLSelectElement>("#whatif-mode").value as
    | "placement"
    | "tune_c1"
    | "tune_c2"
    | "joint";
  const areaName = $<HTMLSelectElement>("#footprint-area").value;
  if (!areaName) {
    flashError("select or draw a target area first");
    return;
  }
  const named = store.state.areas[areaName];
  const target =
    named && !(areaName in (await api.getScenario(store.state.scenarioId!)).scenario.protected_areas)
      ? { polygon: named }
      : { area: areaName };
  const status = $("#whatif-status");
  status.textContent = "running...";
  const job = await controller.runWhatIf({ mode, target });
  if (job.status === "failed") {
    status.textContent = `failed: ${job.error}`;
    return;
  }
  status.textContent = `done in ${job.result?.iterations} iterations`;
  const rows = controller
    .whatIfRows()
    .map(
      (r) =>
        `<tr><td>${r.source_id}</td><td>${r.before.c1?.toFixed(3)} / ${r.before.c2?.toFixed(3)}</td>` +
        `<td>${r.after.c1?.toFixed(3)} / ${r.after.c2?.toFixed(3)}</td></tr>`,
    )
    .join("");
  $("#whatif-table").innerHTML =
    `<table><thead><tr><th>source</th><th>c1/c2 before</th><th>c1/c2 after</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`;
});

$<HTMLButtonElement>("#whatif-apply").addEventListener("click", async () => {
  try {
    await controller.applyWhatIf();
    repaint();
  } catch (err) {
    flashError(err instanceof Error ? err.message : String(err));
  }
});

$<HTMLButtonElement>("#whatif-cancel").addEventListener("click", () => {
  controller.cancelWhatIf();
  $("#whatif-status").textContent = "detached (job continues server-side)";
});

// ---- reactive panels ----

store.subscribe((state) => {
  $("#conflict").textContent = state.conflict ?? "";
  $("#conflict").style.display = state.conflict ? "block" : "none";
  $("#error").textContent = state.error ?? "";
  $("#error").style.display = state.error ? "block" : "none";
  $("#revision").textContent = state.scenarioId
    ? `${state.scenarioId} @ r${state.revision}`
    : "no scenario";

  const panel = state.inspect;
  if (panel) {
    $("#inspect-panel").innerHTML =
      `<div>lat ${panel.lat.toFixed(5)}, lon ${panel.lon.toFixed(5)}` +
      (panel.stale ? ` <span class="stale">stale</span>` : "") +
      `</div>` +
      `<div>intensity ${panel.intensity.toFixed(3)}</div>` +
      `<div>sqm ${panel.sqm.toFixed(1)}</div>` +
      `<div>normalized ${panel.normalized.toFixed(3)}</div>` +
      (panel.swatch
        ? `<div>swatch <span class="swatch" style="background:${panel.swatch}"></span></div>`
        : "");
  }

  const select = $<HTMLSelectElement>("#footprint-area");
  const names = Object.keys(state.areas);
  if (select.options.length !== names.length) {
    select.innerHTML = names.map((n) => `<option value="${n}">${n}</option>`).join("");
  }
  repaint();
});

window.addEventListener("resize", resize);
resize();

const fromHash = /s=([^&]+)/.exec(location.hash);
if (fromHash?.[1]) {
  $<HTMLInputElement>("#scenario-id").value = decodeURIComponent(fromHash[1]);
  $<HTMLButtonElement>("#load").click();
}
