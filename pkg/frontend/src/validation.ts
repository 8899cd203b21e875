// Client-side pattern validation, mirroring the service's rules exactly.
// The invariant that matters: anything accepted here is accepted by the
// service (the fuzz test in tests/e2e.test.ts holds us to it).

import type { Pattern, PatternType } from "./types.js";

export interface Violation {
  field: string;
  message: string;
}

export const MAX_NAME_LEN = 64;
const COLOR_CUE_RE = /^#(?:[0-9a-fA-F]{3}|[0-9a-fA-F]{6})$/;

const VARIANT_FIELDS: Record<PatternType, string[]> = {
  cold: ["intensity", "duration_ms", "delay_ms"],
  cold_level: ["level", "duration_ms", "delay_ms"],
  hot: ["intensity", "duration_ms", "delay_ms"],
  hot_level: ["level", "duration_ms", "delay_ms"],
  dual: [
    "cold_intensity",
    "cold_duration_ms",
    "hot_intensity",
    "hot_duration_ms",
    "gap_ms",
    "repeats",
    "start_phase",
    "delay_ms",
  ],
};

const INTENSITY_FIELDS = new Set(["intensity", "cold_intensity", "hot_intensity"]);
const META_FIELDS = new Set(["description", "color_cue"]);

function isFiniteNumber(value: unknown): value is number {
  return typeof value === "number" && Number.isFinite(value);
}

function checkIntensity(out: Violation[], field: string, value: unknown): void {
  if (!isFiniteNumber(value)) {
    out.push({ field, message: "must be a number" });
  } else if (value < 0 || value > 1) {
    out.push({ field, message: `${value} outside [0.0, 1.0]` });
  }
}

function checkInt(out: Violation[], field: string, value: unknown, minimum: number): void {
  if (!isFiniteNumber(value) || !Number.isInteger(value)) {
    out.push({ field, message: "must be an integer" });
  } else if (value < minimum) {
    out.push({ field, message: `${value} below minimum ${minimum}` });
  }
}

function checkLevel(out: Violation[], field: string, value: unknown): void {
  if (!isFiniteNumber(value) || !Number.isInteger(value)) {
    out.push({ field, message: "must be an integer" });
  } else if (value < 1 || value > 5) {
    out.push({ field, message: `${value} outside 1..5` });
  }
}

/** Validate a candidate pattern object; empty result means acceptable. */
export function validatePattern(candidate: unknown): Violation[] {
  const out: Violation[] = [];
  if (typeof candidate !== "object" || candidate === null || Array.isArray(candidate)) {
    return [{ field: "pattern", message: "must be an object" }];
  }
  const obj = candidate as Record<string, unknown>;
  const type = obj.type;
  if (typeof type !== "string" || !(type in VARIANT_FIELDS)) {
    return [{ field: "type", message: "unknown pattern type" }];
  }
  const variant = type as PatternType;
  const fields = VARIANT_FIELDS[variant];

  const allowed = new Set(["type", ...fields, ...META_FIELDS]);
  for (const key of Object.keys(obj)) {
    if (!allowed.has(key)) {
      out.push({ field: key, message: "unknown field" });
    }
  }

  for (const field of fields) {
    const value = obj[field];
    if (value === undefined) {
      out.push({ field, message: "required" });
      continue;
    }
    if (INTENSITY_FIELDS.has(field)) {
      checkIntensity(out, field, value);
    } else if (field === "level") {
      checkLevel(out, field, value);
    } else if (field === "start_phase") {
      if (value !== "cold" && value !== "hot") {
        out.push({ field, message: "must be 'cold' or 'hot'" });
      }
    } else if (field === "repeats") {
      checkInt(out, field, value, 1);
    } else if (field === "delay_ms" || field === "gap_ms") {
      checkInt(out, field, value, 0);
    } else {
      // duration fields
      checkInt(out, field, value, 1);
    }
  }

  if (obj.description !== undefined && typeof obj.description !== "string") {
    out.push({ field: "description", message: "must be a string" });
  }
  if (obj.color_cue !== undefined) {
    if (typeof obj.color_cue !== "string" || !COLOR_CUE_RE.test(obj.color_cue)) {
      out.push({ field: "color_cue", message: "must be a CSS hex color like #3b82f6" });
    }
  }
  return out;
}

export function validateName(name: string): Violation[] {
  if (name.length === 0 || name.length > MAX_NAME_LEN) {
    return [{ field: "name", message: `must be 1..${MAX_NAME_LEN} characters` }];
  }
  return [];
}

function gcd(a: number, b: number): number {
  while (b !== 0) {
    [a, b] = [b, a % b];
  }
  return a;
}

/**
 * Plant step to request for previews: the largest step (capped at the
 * service default of 10 ms) that divides every time field, so compiled
 * entry times always land on integration steps.
 */
export function previewStepMs(pattern: Pattern): number {
  const fields = pattern as unknown as Record<string, unknown>;
  let step = 10;
  for (const [key, value] of Object.entries(fields)) {
    if (key.endsWith("_ms") && typeof value === "number") {
      step = gcd(step, value);
    }
  }
  return Math.max(step, 1);
}

/**
 * Convert raw form strings (what the inputs hold) into a pattern object.
 * Returns violations instead of a pattern when anything fails; numeric
 * conversion is strict so "1.5" never sneaks into an integer field.
 */
export function draftToPattern(
  type: PatternType,
  draft: Record<string, string>
): { pattern?: Pattern; violations: Violation[] } {
  const obj: Record<string, unknown> = { type };
  const violations: Violation[] = [];
  for (const field of VARIANT_FIELDS[type]) {
    const raw = (draft[field] ?? "").trim();
    if (raw === "") {
      violations.push({ field, message: "required" });
      continue;
    }
    if (field === "start_phase") {
      obj[field] = raw;
      continue;
    }
    const num = Number(raw);
    if (!Number.isFinite(num)) {
      violations.push({ field, message: "must be a number" });
      continue;
    }
    obj[field] = num;
  }
  if (violations.length > 0) {
    return { violations };
  }
  const structural = validatePattern(obj);
  if (structural.length > 0) {
    return { violations: structural };
  }
  return { pattern: obj as unknown as Pattern, violations: [] };
}
