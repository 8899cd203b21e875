// Authoring tool wiring: five pattern tabs, live-validated forms, preview
// chart, library panel, and play/stop against a selected device.

import {
  ApiError,
  createSession,
  deletePattern,
  getPattern,
  listDevices,
  listPatterns,
  releaseSession,
  savePattern,
  simulate,
  stopSession,
  telemetryUrl,
} from "./api.js";
import { TraceChart } from "./chart.js";
import type {
  Pattern,
  PatternType,
  TelemetryMessage,
  TimelineEntry,
  TraceSample,
} from "./types.js";
import { draftToPattern, previewStepMs, validateName } from "./validation.js";

const BASE = "";

interface FieldSpec {
  name: string;
  label: string;
  kind: "intensity" | "ms" | "level" | "count" | "phase";
}

const TAB_LABELS: Record<PatternType, string> = {
  cold: "Cold",
  cold_level: "Cold Level",
  hot: "Hot",
  hot_level: "Hot Level",
  dual: "Both Cold & Hot",
};

const FORM_FIELDS: Record<PatternType, FieldSpec[]> = {
  cold: [
    { name: "intensity", label: "Intensity (0..1)", kind: "intensity" },
    { name: "duration_ms", label: "Duration (ms)", kind: "ms" },
    { name: "delay_ms", label: "Delay (ms)", kind: "ms" },
  ],
  cold_level: [
    { name: "level", label: "Level", kind: "level" },
    { name: "duration_ms", label: "Duration (ms)", kind: "ms" },
    { name: "delay_ms", label: "Delay (ms)", kind: "ms" },
  ],
  hot: [
    { name: "intensity", label: "Intensity (0..1)", kind: "intensity" },
    { name: "duration_ms", label: "Duration (ms)", kind: "ms" },
    { name: "delay_ms", label: "Delay (ms)", kind: "ms" },
  ],
  hot_level: [
    { name: "level", label: "Level", kind: "level" },
    { name: "duration_ms", label: "Duration (ms)", kind: "ms" },
    { name: "delay_ms", label: "Delay (ms)", kind: "ms" },
  ],
  dual: [
    { name: "cold_intensity", label: "Cold intensity (0..1)", kind: "intensity" },
    { name: "cold_duration_ms", label: "Cold duration (ms)", kind: "ms" },
    { name: "hot_intensity", label: "Hot intensity (0..1)", kind: "intensity" },
    { name: "hot_duration_ms", label: "Hot duration (ms)", kind: "ms" },
    { name: "gap_ms", label: "Gap between phases (ms)", kind: "ms" },
    { name: "repeats", label: "Cycles", kind: "count" },
    { name: "start_phase", label: "Start with", kind: "phase" },
    { name: "delay_ms", label: "Delay (ms)", kind: "ms" },
  ],
};

const DEFAULT_DRAFTS: Record<PatternType, Record<string, string>> = {
  cold: { intensity: "1.0", duration_ms: "2000", delay_ms: "0" },
  cold_level: { level: "3", duration_ms: "2000", delay_ms: "0" },
  hot: { intensity: "1.0", duration_ms: "2000", delay_ms: "0" },
  hot_level: { level: "3", duration_ms: "2000", delay_ms: "0" },
  dual: {
    cold_intensity: "1.0",
    cold_duration_ms: "1000",
    hot_intensity: "0.8",
    hot_duration_ms: "1000",
    gap_ms: "0",
    repeats: "2",
    start_phase: "cold",
    delay_ms: "0",
  },
};

interface EditorState {
  tab: PatternType;
  drafts: Record<PatternType, Record<string, string>>;
  dirty: boolean;
  sessionId: string | null;
  socket: WebSocket | null;
  reconnected: boolean;
}

const state: EditorState = {
  tab: "cold",
  drafts: JSON.parse(JSON.stringify(DEFAULT_DRAFTS)),
  dirty: false,
  sessionId: null,
  socket: null,
  reconnected: false,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showBanner(text: string, tone: "error" | "info" = "error"): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = text;
  banner.className = `banner ${tone}`;
  banner.hidden = false;
  window.setTimeout(() => {
    banner.hidden = true;
  }, 6000);
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    const where = err.body.path ? ` (${err.body.path})` : "";
    return `${err.body.detail}${where}`;
  }
  return String(err);
}

// -- form ------------------------------------------------------------------

function renderTabs(): void {
  const bar = el<HTMLDivElement>("tabs");
  bar.replaceChildren();
  (Object.keys(TAB_LABELS) as PatternType[]).forEach((type) => {
    const button = document.createElement("button");
    button.textContent = TAB_LABELS[type];
    button.className = type === state.tab ? "tab active" : "tab";
    button.dataset.tab = type;
    button.addEventListener("click", () => {
      state.tab = type; // drafts persist per tab
      renderTabs();
      renderForm();
      refreshValidity();
    });
    bar.appendChild(button);
  });
}

function renderForm(): void {
  const form = el<HTMLDivElement>("pattern-form");
  form.replaceChildren();
  const draft = state.drafts[state.tab];
  for (const field of FORM_FIELDS[state.tab]) {
    const row = document.createElement("label");
    row.className = "field";
    const caption = document.createElement("span");
    caption.textContent = field.label;
    row.appendChild(caption);

    let input: HTMLInputElement | HTMLSelectElement;
    if (field.kind === "level") {
      input = document.createElement("select");
      for (let level = 1; level <= 5; level++) {
        const option = document.createElement("option");
        option.value = String(level);
        option.textContent = String(level);
        input.appendChild(option);
      }
    } else if (field.kind === "phase") {
      input = document.createElement("select");
      for (const phase of ["cold", "hot"]) {
        const option = document.createElement("option");
        option.value = phase;
        option.textContent = phase;
        input.appendChild(option);
      }
    } else {
      input = document.createElement("input");
      input.type = field.kind === "intensity" ? "number" : "number";
      if (field.kind === "intensity") {
        input.step = "0.05";
        input.min = "0";
        input.max = "1";
      } else {
        input.step = "1";
        input.min = "0";
      }
    }
    input.value = draft[field.name] ?? "";
    input.dataset.field = field.name;
    input.addEventListener("input", () => {
      draft[field.name] = input.value;
      state.dirty = true;
      refreshValidity();
    });
    row.appendChild(input);

    const note = document.createElement("em");
    note.className = "field-error";
    note.dataset.errorFor = field.name;
    row.appendChild(note);
    form.appendChild(row);
  }
}

function currentPattern(): { pattern?: Pattern; violations: { field: string; message: string }[] } {
  return draftToPattern(state.tab, state.drafts[state.tab]);
}

function refreshValidity(): void {
  const { violations } = currentPattern();
  const byField = new Map(violations.map((v) => [v.field, v.message]));
  document.querySelectorAll<HTMLElement>("[data-error-for]").forEach((note) => {
    const message = byField.get(note.dataset.errorFor ?? "");
    note.textContent = message ?? "";
  });
  const valid = violations.length === 0;
  el<HTMLButtonElement>("preview-btn").disabled = !valid;
  el<HTMLButtonElement>("play-btn").disabled = !valid || state.sessionId !== null;
  el<HTMLButtonElement>("save-btn").disabled =
    !valid || validateName(el<HTMLInputElement>("pattern-name").value).length > 0;
}

// -- preview -----------------------------------------------------------------

let chart: TraceChart;

async function doPreview(): Promise<void> {
  const { pattern } = currentPattern();
  if (!pattern) return;
  try {
    const result = await simulate(BASE, pattern, { dt_ms: previewStepMs(pattern) });
    chart.setPreview(
      result.trace.samples,
      result.timeline.entries,
      result.trace.dt_ms,
      result.timeline.total_ms
    );
    el<HTMLDivElement>("chart-caption").textContent =
      `preview: ${result.trace.samples.length} samples over ${result.timeline.total_ms} ms`;
  } catch (err) {
    showBanner(describeError(err));
  }
}

// -- live session ---------------------------------------------------------------

function setPlaying(sessionId: string | null): void {
  state.sessionId = sessionId;
  el<HTMLButtonElement>("stop-btn").disabled = sessionId === null;
  refreshValidity();
}

function handleTelemetry(
  message: TelemetryMessage,
  entries: TimelineEntry[],
  samples: TraceSample[]
): void {
  if (message.type === "sample") {
    samples.push(message);
    chart.pushSample(message);
  } else if (message.type === "status") {
    chart.finish(message.state);
    el<HTMLDivElement>("chart-caption").textContent =
      `live: ${samples.length} samples, finished ${message.state}`;
    disconnectTelemetry();
    setPlaying(null);
  }
}

function disconnectTelemetry(): void {
  if (state.socket) {
    state.socket.onclose = null;
    state.socket.close();
    state.socket = null;
  }
}

function subscribeTelemetry(sessionId: string, entries: TimelineEntry[]): void {
  const samples: TraceSample[] = [];
  const socket = new WebSocket(telemetryUrl(BASE, sessionId));
  state.socket = socket;
  socket.onmessage = (event) => {
    handleTelemetry(JSON.parse(event.data) as TelemetryMessage, entries, samples);
  };
  socket.onclose = () => {
    // One reconnect attempt, then give up loudly.
    if (state.sessionId === sessionId && !state.reconnected) {
      state.reconnected = true;
      subscribeTelemetry(sessionId, entries);
    } else if (state.sessionId === sessionId) {
      showBanner("telemetry stream dropped");
      setPlaying(null);
    }
  };
}

async function doPlay(): Promise<void> {
  const { pattern } = currentPattern();
  if (!pattern || state.sessionId) return;
  const device = el<HTMLSelectElement>("device-select").value;
  try {
    const preview = await simulate(BASE, pattern, { dt_ms: previewStepMs(pattern) });
    chart.beginLive(
      preview.timeline.entries,
      preview.trace.dt_ms,
      preview.timeline.total_ms
    );
    const record = await createSession(BASE, { device_id: device, pattern });
    state.reconnected = false;
    setPlaying(record.session_id);
    subscribeTelemetry(record.session_id, preview.timeline.entries);
    el<HTMLDivElement>("chart-caption").textContent = "live: playing...";
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      showBanner("device is busy with another session");
    } else {
      showBanner(describeError(err));
    }
  }
}

async function doStop(): Promise<void> {
  if (!state.sessionId) return;
  try {
    await stopSession(BASE, state.sessionId);
  } catch (err) {
    showBanner(describeError(err));
  }
}

// -- library ---------------------------------------------------------------------

async function renderLibrary(): Promise<void> {
  const list = el<HTMLUListElement>("library-list");
  try {
    const { patterns } = await listPatterns(BASE);
    list.replaceChildren();
    for (const summary of patterns) {
      const item = document.createElement("li");
      const swatch = document.createElement("span");
      swatch.className = "swatch";
      swatch.style.background = summary.color_cue ?? "#cbd5e1";
      item.appendChild(swatch);

      const load = document.createElement("button");
      load.className = "link";
      load.textContent = summary.name;
      load.title = summary.description ?? "";
      load.addEventListener("click", () => void loadPattern(summary.name));
      item.appendChild(load);

      const remove = document.createElement("button");
      remove.className = "danger";
      remove.textContent = "x";
      remove.title = `delete ${summary.name}`;
      remove.addEventListener("click", () => void removePattern(summary.name));
      item.appendChild(remove);
      list.appendChild(item);
    }
  } catch (err) {
    showBanner(describeError(err));
  }
}

async function loadPattern(name: string): Promise<void> {
  try {
    const pattern = await getPattern(BASE, name);
    const type = pattern.type;
    const fields = pattern as unknown as Record<string, unknown>;
    const draft: Record<string, string> = {};
    for (const field of FORM_FIELDS[type]) {
      draft[field.name] = String(fields[field.name]);
    }
    state.drafts[type] = draft;
    state.tab = type;
    el<HTMLInputElement>("pattern-name").value = name;
    renderTabs();
    renderForm();
    refreshValidity();
    await doPreview();
  } catch (err) {
    showBanner(describeError(err));
  }
}

async function removePattern(name: string): Promise<void> {
  if (!window.confirm(`Delete pattern "${name}"?`)) return;
  try {
    await deletePattern(BASE, name);
    await renderLibrary();
  } catch (err) {
    showBanner(describeError(err));
  }
}

async function doSave(): Promise<void> {
  const name = el<HTMLInputElement>("pattern-name").value;
  const { pattern } = currentPattern();
  if (!pattern || validateName(name).length > 0) return;
  try {
    await savePattern(BASE, name, pattern);
    showBanner(`saved "${name}"`, "info");
    await renderLibrary();
  } catch (err) {
    showBanner(describeError(err));
  }
}

// -- devices ----------------------------------------------------------------------

async function renderDevices(): Promise<void> {
  try {
    const { devices } = await listDevices(BASE);
    const select = el<HTMLSelectElement>("device-select");
    select.replaceChildren();
    for (const device of devices) {
      const option = document.createElement("option");
      option.value = device.id;
      option.textContent = device.available ? device.id : `${device.id} (offline)`;
      option.disabled = !device.available;
      select.appendChild(option);
    }
  } catch (err) {
    showBanner(describeError(err));
  }
}

// -- boot -------------------------------------------------------------------------

export function init(): void {
  chart = new TraceChart(el<HTMLCanvasElement>("chart"));
  renderTabs();
  renderForm();
  refreshValidity();
  void renderDevices();
  void renderLibrary();

  el<HTMLButtonElement>("preview-btn").addEventListener("click", () => void doPreview());
  el<HTMLButtonElement>("play-btn").addEventListener("click", () => void doPlay());
  el<HTMLButtonElement>("stop-btn").addEventListener("click", () => void doStop());
  el<HTMLButtonElement>("save-btn").addEventListener("click", () => void doSave());
  el<HTMLInputElement>("pattern-name").addEventListener("input", refreshValidity);

  // Never leave a session running when the tab goes away.
  window.addEventListener("pagehide", () => {
    if (state.sessionId) {
      releaseSession(BASE, state.sessionId);
    }
  });
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", init);
}
