// Pattern shapes exchanged with the service. Field names match the
// .moheat.json schema exactly (snake_case on the wire).

export type PatternType = "cold" | "cold_level" | "hot" | "hot_level" | "dual";

export interface PatternMeta {
  description?: string;
  color_cue?: string;
}

export interface ColdPattern extends PatternMeta {
  type: "cold";
  intensity: number;
  duration_ms: number;
  delay_ms: number;
}

export interface ColdLevelPattern extends PatternMeta {
  type: "cold_level";
  level: number;
  duration_ms: number;
  delay_ms: number;
}

export interface HotPattern extends PatternMeta {
  type: "hot";
  intensity: number;
  duration_ms: number;
  delay_ms: number;
}

export interface HotLevelPattern extends PatternMeta {
  type: "hot_level";
  level: number;
  duration_ms: number;
  delay_ms: number;
}

export interface DualPattern extends PatternMeta {
  type: "dual";
  cold_intensity: number;
  cold_duration_ms: number;
  hot_intensity: number;
  hot_duration_ms: number;
  gap_ms: number;
  repeats: number;
  start_phase: "cold" | "hot";
  delay_ms: number;
}

export type Pattern =
  | ColdPattern
  | ColdLevelPattern
  | HotPattern
  | HotLevelPattern
  | DualPattern;

export interface TraceSample {
  t_ms: number;
  temp_c: number;
  cold_duty: number;
  hot_duty: number;
}

export interface TimelineEntry {
  t_ms: number;
  actions: { kind: string; intensity?: number }[];
}

export interface SimulateResponse {
  timeline: { total_ms: number; entries: TimelineEntry[] };
  trace: { dt_ms: number; source: string; samples: TraceSample[] };
}

export interface DeviceInfo {
  id: string;
  kind: string;
  available: boolean;
}

export interface PatternSummary {
  name: string;
  description: string | null;
  color_cue: string | null;
}

export interface SessionRecord {
  session_id: string;
  device_id: string;
  pattern_name: string | null;
  state: string;
  elapsed_ms: number;
  next_event_t_ms: number | null;
  created_at: string;
}

export type TelemetryMessage =
  | ({ type: "sample"; state: string; source: string } & TraceSample)
  | { type: "status"; state: string; t_ms: number; elapsed_ms: number }
  | { type: "link"; t_ms: number; state: string; link_health: Record<string, number> };
