// Canvas temperature chart: trace line, cold/blue and hot/red activity
// bands, timeline event markers, and an optional terminal marker.

import type { TimelineEntry, TraceSample } from "./types.js";

export const COLD_BAND = "rgba(59, 130, 246, 0.18)";
export const HOT_BAND = "rgba(239, 68, 68, 0.18)";
const TRACE_COLOR = "#0f172a";
const GRID_COLOR = "#e2e8f0";
const MARKER_COLOR = "#94a3b8";

const PAD = { left: 46, right: 12, top: 12, bottom: 24 };

interface Band {
  start_ms: number;
  end_ms: number;
  kind: "cold" | "hot";
}

/** Contiguous duty runs become shaded bands. Exported for unit tests. */
export function activityBands(samples: TraceSample[], dtMs: number): Band[] {
  const bands: Band[] = [];
  let current: Band | null = null;
  for (const sample of samples) {
    const kind = sample.cold_duty > 0 ? "cold" : sample.hot_duty > 0 ? "hot" : null;
    if (current && (!kind || kind !== current.kind)) {
      current.end_ms = sample.t_ms;
      bands.push(current);
      current = null;
    }
    if (kind && !current) {
      current = { start_ms: sample.t_ms, end_ms: sample.t_ms + dtMs, kind };
    }
  }
  if (current) {
    const last = samples[samples.length - 1];
    current.end_ms = last.t_ms;
    bands.push(current);
  }
  return bands;
}

export class TraceChart {
  private ctx: CanvasRenderingContext2D;
  private samples: TraceSample[] = [];
  private entries: TimelineEntry[] = [];
  private dtMs = 10;
  private totalMs = 0;
  private terminal: string | null = null;

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  setPreview(samples: TraceSample[], entries: TimelineEntry[], dtMs: number, totalMs: number): void {
    this.samples = samples;
    this.entries = entries;
    this.dtMs = dtMs;
    this.totalMs = totalMs;
    this.terminal = null;
    this.draw();
  }

  beginLive(entries: TimelineEntry[], dtMs: number, totalMs: number): void {
    this.samples = [];
    this.entries = entries;
    this.dtMs = dtMs;
    this.totalMs = totalMs;
    this.terminal = null;
    this.draw();
  }

  pushSample(sample: TraceSample): void {
    this.samples.push(sample);
    this.draw();
  }

  finish(state: string): void {
    this.terminal = state;
    this.draw();
  }

  private xScale(tMs: number, width: number): number {
    const span = Math.max(this.totalMs, 1);
    return PAD.left + (tMs / span) * (width - PAD.left - PAD.right);
  }

  private draw(): void {
    const { width, height } = this.canvas;
    const ctx = this.ctx;
    ctx.clearRect(0, 0, width, height);

    const temps = this.samples.map((s) => s.temp_c);
    let lo = Math.min(...(temps.length ? temps : [32.5]));
    let hi = Math.max(...(temps.length ? temps : [33.5]));
    const margin = Math.max((hi - lo) * 0.15, 0.1);
    lo -= margin;
    hi += margin;
    const yScale = (t: number) =>
      height - PAD.bottom - ((t - lo) / (hi - lo)) * (height - PAD.top - PAD.bottom);

    // activity bands
    for (const band of activityBands(this.samples, this.dtMs)) {
      ctx.fillStyle = band.kind === "cold" ? COLD_BAND : HOT_BAND;
      const x0 = this.xScale(band.start_ms, width);
      const x1 = this.xScale(band.end_ms, width);
      ctx.fillRect(x0, PAD.top, x1 - x0, height - PAD.top - PAD.bottom);
    }

    // horizontal grid + labels
    ctx.strokeStyle = GRID_COLOR;
    ctx.fillStyle = "#64748b";
    ctx.font = "11px system-ui, sans-serif";
    ctx.textAlign = "right";
    const gridLines = 4;
    for (let i = 0; i <= gridLines; i++) {
      const temp = lo + ((hi - lo) * i) / gridLines;
      const y = yScale(temp);
      ctx.beginPath();
      ctx.moveTo(PAD.left, y);
      ctx.lineTo(width - PAD.right, y);
      ctx.stroke();
      ctx.fillText(temp.toFixed(2), PAD.left - 6, y + 4);
    }

    // timeline event markers
    ctx.strokeStyle = MARKER_COLOR;
    ctx.setLineDash([3, 3]);
    for (const entry of this.entries) {
      const x = this.xScale(entry.t_ms, width);
      ctx.beginPath();
      ctx.moveTo(x, PAD.top);
      ctx.lineTo(x, height - PAD.bottom);
      ctx.stroke();
    }
    ctx.setLineDash([]);

    // the trace itself
    if (this.samples.length > 1) {
      ctx.strokeStyle = TRACE_COLOR;
      ctx.lineWidth = 1.6;
      ctx.beginPath();
      this.samples.forEach((sample, index) => {
        const x = this.xScale(sample.t_ms, width);
        const y = yScale(sample.temp_c);
        if (index === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      });
      ctx.stroke();
      ctx.lineWidth = 1;
    }

    // time axis labels
    ctx.textAlign = "center";
    ctx.fillText("0 ms", PAD.left, height - 8);
    ctx.fillText(`${this.totalMs} ms`, width - PAD.right - 10, height - 8);

    if (this.terminal) {
      const last = this.samples[this.samples.length - 1];
      if (last) {
        const x = this.xScale(last.t_ms, width);
        ctx.fillStyle = "#dc2626";
        ctx.beginPath();
        ctx.arc(x, yScale(last.temp_c), 4, 0, Math.PI * 2);
        ctx.fill();
      }
      ctx.fillStyle = "#334155";
      ctx.textAlign = "left";
      ctx.fillText(this.terminal, PAD.left + 4, PAD.top + 10);
    }
  }
}
