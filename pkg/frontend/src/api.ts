// Thin client over the service HTTP/WebSocket API.

import type {
  DeviceInfo,
  Pattern,
  PatternSummary,
  SessionRecord,
  SimulateResponse,
} from "./types.js";

export interface ApiErrorBody {
  error: string;
  detail: string;
  path?: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: ApiErrorBody
  ) {
    super(`${body.error}: ${body.detail}`);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, init);
  if (!response.ok) {
    let body: ApiErrorBody;
    try {
      body = (await response.json()) as ApiErrorBody;
    } catch {
      body = { error: "http_error", detail: response.statusText };
    }
    throw new ApiError(response.status, body);
  }
  return (await response.json()) as T;
}

function jsonInit(method: string, payload: unknown): RequestInit {
  return {
    method,
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  };
}

export function listDevices(base = ""): Promise<{ devices: DeviceInfo[] }> {
  return request(base, "/devices");
}

export function listPatterns(base = ""): Promise<{ patterns: PatternSummary[] }> {
  return request(base, "/patterns");
}

export function getPattern(base: string, name: string): Promise<Pattern> {
  return request(base, `/patterns/${encodeURIComponent(name)}`);
}

export function savePattern(base: string, name: string, pattern: Pattern): Promise<Pattern> {
  return request(base, `/patterns/${encodeURIComponent(name)}`, jsonInit("PUT", pattern));
}

export function deletePattern(base: string, name: string): Promise<{ deleted: string }> {
  return request(base, `/patterns/${encodeURIComponent(name)}`, { method: "DELETE" });
}

export function simulate(
  base: string,
  pattern: Pattern,
  params?: Record<string, number>
): Promise<SimulateResponse> {
  const payload: Record<string, unknown> = { pattern };
  if (params) payload.params = params;
  return request(base, "/simulate", jsonInit("POST", payload));
}

export function createSession(
  base: string,
  body: { device_id: string; pattern?: Pattern; pattern_name?: string }
): Promise<SessionRecord> {
  return request(base, "/sessions", jsonInit("POST", body));
}

export function getSession(base: string, sessionId: string): Promise<SessionRecord> {
  return request(base, `/sessions/${sessionId}`);
}

export function stopSession(
  base: string,
  sessionId: string
): Promise<{ state: string; elapsed_ms: number }> {
  return request(base, `/sessions/${sessionId}/stop`, { method: "POST" });
}

export function telemetryUrl(base: string, sessionId: string): string {
  const origin = base || (typeof location !== "undefined" ? location.origin : "");
  return origin.replace(/^http/, "ws") + `/sessions/${sessionId}/telemetry`;
}

/**
 * Fire-and-forget stop for page unload: the tab may die before a normal
 * fetch settles, so prefer sendBeacon when the browser provides it.
 */
export function releaseSession(base: string, sessionId: string): void {
  const url = `${base}/sessions/${sessionId}/stop`;
  if (typeof navigator !== "undefined" && typeof navigator.sendBeacon === "function") {
    navigator.sendBeacon(url);
    return;
  }
  void fetch(url, { method: "POST", keepalive: true }).catch(() => undefined);
}
