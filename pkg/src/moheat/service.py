"""Local authoring and control service.

HTTP/JSON for request-response (pattern library CRUD, simulation preview,
session control) and WebSocket for telemetry push.  All session and library
mutations are serialized behind one coordinator lock; telemetry fan-out is
broadcast with per-subscriber buffering.

Endpoints: GET /healthz, GET /devices, GET /patterns, GET/PUT/DELETE
/patterns/{name}, POST /simulate, POST /sessions, POST /sessions/{id}/stop,
GET /sessions/{id}, WS /sessions/{id}/telemetry.  Error bodies are always
``{"error": code, "detail": text, "path": optional}``.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import os
import queue
import tempfile
import threading
import uuid
from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional
from urllib.parse import quote

from fastapi import FastAPI, Request, Response, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .demos import DEMO_PATTERNS
from .library import (
    FILE_SUFFIX,
    MAX_NAME_LEN,
    LibraryEntry,
    LibraryError,
    PatternLibrary,
    canonical_json_bytes,
    parse_pattern_library,
    parse_pattern_object,
    pattern_entry_to_dict,
    serialize_pattern_library,
    timeline_to_dict,
)
from .patterns import compile_pattern
from .scheduler import (
    TERMINAL_STATES,
    Clock,
    PlaybackStatus,
    Session,
    SystemClock,
    play,
)
from .transport import SerialTransport, TransportError, create_loopback
from .virtual_device import PlantParams, VirtualDevice, run_simulation
from .protocol import Ack, FrameDecoder

__all__ = [
    "ServiceConfig",
    "LibraryStore",
    "TelemetryHub",
    "create_app",
    "load_config",
]

VIRTUAL_DEVICE_ID = "virtual"
SUBSCRIBER_BACKLOG = 256
_CLOSED = object()


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    library_dir: Path = field(default_factory=lambda: Path("moheat-library"))
    plant: PlantParams = field(default_factory=PlantParams)
    serial_devices: tuple[str, ...] = ()
    ui_dir: Optional[Path] = None
    seed_demos: bool = True


def _plant_overrides(base: PlantParams, overrides: dict, path: str) -> PlantParams:
    allowed = {f.name for f in fields(PlantParams)}
    clean: dict = {}
    for key, value in overrides.items():
        if key not in allowed:
            raise LibraryError(f"unknown plant parameter {key!r}", f"{path}.{key}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise LibraryError("expected a number", f"{path}.{key}")
        clean[key] = int(value) if key == "dt_ms" else float(value)
    params = replace(base, **clean)
    try:
        params.validate()
    except ValueError as exc:
        raise LibraryError(str(exc), path) from exc
    return params


def load_config(path: str | Path) -> ServiceConfig:
    """Read a JSON config file into a ServiceConfig."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError("config must be a JSON object")
    cfg = ServiceConfig()
    if "host" in raw:
        cfg.host = str(raw["host"])
    if "port" in raw:
        cfg.port = int(raw["port"])
    if "library_dir" in raw:
        cfg.library_dir = Path(raw["library_dir"])
    if "plant" in raw:
        cfg.plant = _plant_overrides(PlantParams(), raw["plant"], "plant")
    if "serial_devices" in raw:
        cfg.serial_devices = tuple(str(p) for p in raw["serial_devices"])
    if "ui_dir" in raw and raw["ui_dir"]:
        cfg.ui_dir = Path(raw["ui_dir"])
    if "seed_demos" in raw:
        cfg.seed_demos = bool(raw["seed_demos"])
    return cfg


# ---------------------------------------------------------------------------
# Library persistence: one file per pattern, atomic replace on save
# ---------------------------------------------------------------------------


class LibraryStore:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        probe = self.root / ".write-probe"
        try:
            probe.write_bytes(b"")
            probe.unlink()
        except OSError as exc:
            raise RuntimeError(f"library_dir {self.root} is not writable: {exc}")

    def _path(self, name: str) -> Path:
        return self.root / (quote(name, safe="") + FILE_SUFFIX)

    def save(self, name: str, entry: LibraryEntry) -> None:
        doc = serialize_pattern_library(PatternLibrary({name: entry}))
        fd, tmp_path = tempfile.mkstemp(dir=self.root, prefix=".tmp-", suffix=".part")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(doc)
                handle.flush()
                os.fsync(handle.fileno())
            os.replace(tmp_path, self._path(name))
        except BaseException:
            with contextlib.suppress(OSError):
                os.unlink(tmp_path)
            raise

    def get(self, name: str) -> Optional[LibraryEntry]:
        path = self._path(name)
        if not path.exists():
            return None
        lib = parse_pattern_library(path.read_bytes())
        return lib.patterns.get(name)

    def delete(self, name: str) -> bool:
        path = self._path(name)
        if not path.exists():
            return False
        path.unlink()
        return True

    def list_entries(self) -> dict[str, LibraryEntry]:
        out: dict[str, LibraryEntry] = {}
        for file in sorted(self.root.glob(f"*{FILE_SUFFIX}")):
            lib = parse_pattern_library(file.read_bytes())
            out.update(lib.patterns)
        return dict(sorted(out.items()))


# ---------------------------------------------------------------------------
# Telemetry fan-out
# ---------------------------------------------------------------------------


class _Subscriber:
    def __init__(self, replay: list[dict], live: bool):
        self.replay = replay
        self.live = live
        self.queue: queue.Queue = queue.Queue(maxsize=SUBSCRIBER_BACKLOG)
        self.dropped = False

    def get(self, timeout: float):
        """Next live message, _CLOSED at end of stream, None on timeout."""
        try:
            return self.queue.get(timeout=timeout)
        except queue.Empty:
            return None


class TelemetryHub:
    """Per-session broadcast: full history replay for joiners, bounded live queues."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._history: list[dict] = []
        self._subscribers: list[_Subscriber] = []
        self._closed = False

    def publish(self, message: dict) -> None:
        with self._lock:
            if self._closed:
                return
            self._history.append(message)
            for sub in list(self._subscribers):
                try:
                    sub.queue.put_nowait(message)
                except queue.Full:
                    sub.dropped = True
                    self._subscribers.remove(sub)

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
            for sub in self._subscribers:
                try:
                    sub.queue.put_nowait(_CLOSED)
                except queue.Full:
                    sub.dropped = True
            self._subscribers.clear()

    def subscribe(self) -> _Subscriber:
        with self._lock:
            if self._closed:
                # Terminal session: replay the final snapshot only.
                replay = [self._history[-1]] if self._history else []
                return _Subscriber(replay, live=False)
            sub = _Subscriber(list(self._history), live=True)
            self._subscribers.append(sub)
            return sub

    def unsubscribe(self, sub: _Subscriber) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    @property
    def message_count(self) -> int:
        with self._lock:
            return len(self._history)


# ---------------------------------------------------------------------------
# Session runners
# ---------------------------------------------------------------------------


class _BaseRunner:
    session: Session
    hub: TelemetryHub
    session_id: str
    device_id: str
    pattern_name: Optional[str]
    created_at: datetime

    def record(self) -> dict:
        status = self.session.status()
        return {
            "session_id": self.session_id,
            "device_id": self.device_id,
            "pattern_name": self.pattern_name,
            "state": status.state.value,
            "elapsed_ms": status.elapsed_ms,
            "next_event_t_ms": status.next_event_t_ms,
            "created_at": self.created_at.isoformat(),
        }

    def status_dict(self) -> dict:
        status = self.session.status()
        return {
            "state": status.state.value,
            "elapsed_ms": status.elapsed_ms,
            "next_event_t_ms": status.next_event_t_ms,
        }


class VirtualSessionRunner(_BaseRunner):
    """Virtual device playback: scheduler + loopback + plant ticker."""

    def __init__(
        self,
        session_id: str,
        timeline,
        params: PlantParams,
        pattern_name: Optional[str] = None,
        clock: Optional[Clock] = None,
    ):
        self.session_id = session_id
        self.device_id = VIRTUAL_DEVICE_ID
        self.pattern_name = pattern_name
        self.created_at = datetime.now(timezone.utc)
        self.hub = TelemetryHub()
        self.host_end, self.device_end = create_loopback()
        self.device = VirtualDevice(params)
        self.clock = clock or SystemClock()
        self._stop_event = threading.Event()
        self.session = play(timeline, self.host_end, self.clock)
        self._ticker = threading.Thread(
            target=self._tick_loop, name="moheat-ticker", daemon=True
        )
        self._ticker.start()

    def _tick_loop(self) -> None:
        dt = self.device.params.dt_ms
        total = self.session.timeline.total_ms
        start = self.session.start_ms
        t = 0
        while True:
            if self.clock.wait_until(start + t, self._stop_event):
                break
            if self.session.state in TERMINAL_STATES and t < total:
                break
            try:
                self.session.wait_dispatched(t)
            except TimeoutError:
                break
            self.device.feed(self.device_end.read())
            sample = self.device.sample()
            self.hub.publish(
                {
                    "type": "sample",
                    "t_ms": t,
                    "temp_c": sample.temp_c,
                    "cold_duty": sample.cold_duty,
                    "hot_duty": sample.hot_duty,
                    "state": self.session.state.value,
                    "source": "simulation",
                }
            )
            if t >= total:
                break
            self.device.step()
            t += dt
        self.session.wait(timeout=5.0)
        status = self.session.status()
        self.hub.publish(
            {
                "type": "status",
                "state": status.state.value,
                "t_ms": min(t, total),
                "elapsed_ms": status.elapsed_ms,
            }
        )
        self.hub.close()

    def stop(self) -> PlaybackStatus:
        self.session.stop()
        self._stop_event.set()
        self._ticker.join(timeout=5.0)
        return self.session.status()


class SerialSessionRunner(_BaseRunner):
    """Real-hardware playback: link-health telemetry only (no skin sensing)."""

    TICK_MS = 100

    def __init__(
        self,
        session_id: str,
        device_id: str,
        timeline,
        path: str,
        pattern_name: Optional[str] = None,
    ):
        self.session_id = session_id
        self.device_id = device_id
        self.pattern_name = pattern_name
        self.created_at = datetime.now(timezone.utc)
        self.hub = TelemetryHub()
        self.transport = SerialTransport(path)
        self.clock = SystemClock()
        self._stop_event = threading.Event()
        self._acks = 0
        self._decoder = FrameDecoder()
        self.session = play(timeline, self.transport, self.clock)
        self._ticker = threading.Thread(
            target=self._tick_loop, name="moheat-link", daemon=True
        )
        self._ticker.start()

    def _drain_replies(self) -> None:
        try:
            data = self.transport.read()
        except TransportError:
            return
        if data:
            messages, _, _ = self._decoder.feed(data)
            self._acks += sum(isinstance(m, Ack) for m in messages)

    def _tick_loop(self) -> None:
        start = self.session.start_ms
        t = 0
        while self.session.state not in TERMINAL_STATES:
            if self.clock.wait_until(start + t, self._stop_event):
                break
            self._drain_replies()
            frames_sent = sum(len(r.commands) for r in self.session.log().records)
            self.hub.publish(
                {
                    "type": "link",
                    "t_ms": t,
                    "state": self.session.state.value,
                    "link_health": {
                        "frames_sent": frames_sent,
                        "acks_received": self._acks,
                    },
                }
            )
            t += self.TICK_MS
        self.session.wait(timeout=5.0)
        self._drain_replies()
        status = self.session.status()
        self.hub.publish(
            {
                "type": "status",
                "state": status.state.value,
                "t_ms": status.elapsed_ms,
                "elapsed_ms": status.elapsed_ms,
            }
        )
        self.hub.close()
        with contextlib.suppress(TransportError, OSError):
            self.transport.close()

    def stop(self) -> PlaybackStatus:
        self.session.stop()
        self._stop_event.set()
        self._ticker.join(timeout=5.0)
        return self.session.status()


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str, path: Optional[str] = None):
        super().__init__(detail)
        self.status = status
        self.code = code
        self.detail = detail
        self.json_path = path


class ServiceState:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.store = LibraryStore(config.library_dir)
        if config.seed_demos and not self.store.list_entries():
            for name, entry in DEMO_PATTERNS.items():
                self.store.save(name, entry)
        self.lock = threading.Lock()
        self.sessions: dict[str, _BaseRunner] = {}
        self.active_by_device: dict[str, _BaseRunner] = {}

    def device_ids(self) -> list[dict]:
        devices = [{"id": VIRTUAL_DEVICE_ID, "kind": "virtual", "available": True}]
        for path in self.config.serial_devices:
            devices.append(
                {
                    "id": f"serial:{path}",
                    "kind": "serial",
                    "available": os.path.exists(path),
                }
            )
        return devices

    def create_session(self, device_id: str, entry: LibraryEntry, pattern_name):
        timeline = compile_pattern(entry.pattern)
        with self.lock:
            known = {d["id"] for d in self.device_ids()}
            if device_id not in known:
                raise ApiError(404, "not_found", f"unknown device {device_id!r}")
            active = self.active_by_device.get(device_id)
            if active is not None and active.session.state not in TERMINAL_STATES:
                raise ApiError(
                    409,
                    "conflict",
                    f"device {device_id!r} already has an active session",
                )
            session_id = str(uuid.uuid4())
            if device_id == VIRTUAL_DEVICE_ID:
                runner: _BaseRunner = VirtualSessionRunner(
                    session_id, timeline, self.config.plant, pattern_name
                )
            else:
                path = device_id.split(":", 1)[1]
                try:
                    runner = SerialSessionRunner(
                        session_id, device_id, timeline, path, pattern_name
                    )
                except TransportError as exc:
                    raise ApiError(404, "not_found", str(exc)) from exc
            self.sessions[session_id] = runner
            self.active_by_device[device_id] = runner
            return runner


def _json_body(raw: bytes) -> dict:
    try:
        body = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ApiError(400, "bad_request", f"request body is not valid JSON: {exc}")
    if not isinstance(body, dict):
        raise ApiError(400, "bad_request", "request body must be a JSON object")
    return body


def _canonical_response(payload: object, status_code: int = 200) -> Response:
    return Response(
        content=canonical_json_bytes(payload),
        status_code=status_code,
        media_type="application/json",
    )


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    state = ServiceState(config or ServiceConfig())
    app = FastAPI(title="moheat", docs_url=None, redoc_url=None)
    app.state.service = state

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        body = {"error": exc.code, "detail": exc.detail}
        if exc.json_path is not None:
            body["path"] = exc.json_path
        return JSONResponse(status_code=exc.status, content=body)

    def _library_error(exc: LibraryError, status: int = 422) -> ApiError:
        return ApiError(status, "validation_error", exc.detail, exc.path)

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.get("/devices")
    async def devices():
        return {"devices": state.device_ids()}

    @app.get("/patterns")
    async def list_patterns():
        entries = state.store.list_entries()
        return {
            "patterns": [
                {
                    "name": name,
                    "description": entry.description,
                    "color_cue": entry.color_cue,
                }
                for name, entry in entries.items()
            ]
        }

    def _check_name(name: str) -> str:
        if not name or len(name) > MAX_NAME_LEN:
            raise ApiError(
                422,
                "validation_error",
                f"pattern name must be 1..{MAX_NAME_LEN} characters",
                "name",
            )
        return name

    @app.get("/patterns/{name}")
    async def get_pattern(name: str):
        entry = state.store.get(_check_name(name))
        if entry is None:
            raise ApiError(404, "not_found", f"no pattern named {name!r}")
        return _canonical_response(pattern_entry_to_dict(entry))

    def _json_body_any(raw: bytes):
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ApiError(400, "bad_request", f"request body is not valid JSON: {exc}")

    @app.put("/patterns/{name}")
    async def put_pattern(name: str, request: Request):
        _check_name(name)
        raw = await request.body()
        try:
            entry = parse_pattern_object(_json_body_any(raw), "pattern")
        except LibraryError as exc:
            raise _library_error(exc)
        with state.lock:
            state.store.save(name, entry)
        return _canonical_response(pattern_entry_to_dict(entry))

    @app.delete("/patterns/{name}")
    async def delete_pattern(name: str):
        with state.lock:
            removed = state.store.delete(_check_name(name))
        if not removed:
            raise ApiError(404, "not_found", f"no pattern named {name!r}")
        return {"deleted": name}

    @app.post("/simulate")
    async def simulate(request: Request):
        body = _json_body(await request.body())
        if "pattern" not in body:
            raise ApiError(422, "validation_error", "missing 'pattern'", "pattern")
        try:
            entry = parse_pattern_object(body["pattern"], "pattern")
            params = state.config.plant
            if "params" in body:
                if not isinstance(body["params"], dict):
                    raise LibraryError("expected an object", "params")
                params = _plant_overrides(params, body["params"], "params")
        except LibraryError as exc:
            raise _library_error(exc)
        initial = None
        if "initial_temp_c" in body:
            value = body["initial_temp_c"]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ApiError(
                    422, "validation_error", "expected a number", "initial_temp_c"
                )
            initial = float(value)
        timeline = compile_pattern(entry.pattern)
        try:
            trace = run_simulation(timeline, params, initial)
        except ValueError as exc:
            raise ApiError(422, "validation_error", str(exc), "params.dt_ms")
        return _canonical_response(
            {
                "timeline": timeline_to_dict(timeline),
                "trace": {
                    "dt_ms": trace.dt_ms,
                    "source": "simulation",
                    "samples": [
                        {
                            "t_ms": s.t_ms,
                            "temp_c": s.temp_c,
                            "cold_duty": s.cold_duty,
                            "hot_duty": s.hot_duty,
                        }
                        for s in trace.samples
                    ],
                },
            }
        )

    @app.post("/sessions")
    async def create_session(request: Request):
        body = _json_body(await request.body())
        device_id = body.get("device_id", VIRTUAL_DEVICE_ID)
        if not isinstance(device_id, str):
            raise ApiError(422, "validation_error", "expected a string", "device_id")
        has_name = "pattern_name" in body
        has_inline = "pattern" in body
        if has_name == has_inline:
            raise ApiError(
                422,
                "validation_error",
                "provide exactly one of 'pattern_name' or 'pattern'",
                "pattern",
            )
        if has_name:
            name = body["pattern_name"]
            if not isinstance(name, str):
                raise ApiError(
                    422, "validation_error", "expected a string", "pattern_name"
                )
            entry = state.store.get(name)
            if entry is None:
                raise ApiError(404, "not_found", f"no pattern named {name!r}")
            pattern_name: Optional[str] = name
        else:
            try:
                entry = parse_pattern_object(body["pattern"], "pattern")
            except LibraryError as exc:
                raise _library_error(exc)
            pattern_name = None
        runner = state.create_session(device_id, entry, pattern_name)
        return JSONResponse(status_code=201, content=runner.record())

    def _get_runner(session_id: str) -> _BaseRunner:
        runner = state.sessions.get(session_id)
        if runner is None:
            raise ApiError(404, "not_found", f"unknown session {session_id!r}")
        return runner

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return _get_runner(session_id).record()

    @app.post("/sessions/{session_id}/stop")
    async def stop_session(session_id: str):
        runner = _get_runner(session_id)
        await asyncio.to_thread(runner.stop)
        return runner.status_dict()

    @app.websocket("/sessions/{session_id}/telemetry")
    async def telemetry(websocket: WebSocket, session_id: str):
        runner = app.state.service.sessions.get(session_id)
        if runner is None:
            await websocket.close(code=1008)
            return
        await websocket.accept()
        sub = runner.hub.subscribe()
        try:
            for message in sub.replay:
                await websocket.send_text(json.dumps(message))
            while sub.live:
                item = await asyncio.to_thread(sub.get, 0.5)
                if item is _CLOSED:
                    break
                if item is None:
                    if sub.dropped:
                        break
                    continue
                await websocket.send_text(json.dumps(item))
            await websocket.close()
        except WebSocketDisconnect:
            pass
        finally:
            runner.hub.unsubscribe(sub)

    if state.config.ui_dir is not None and Path(state.config.ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount(
            "/ui", StaticFiles(directory=state.config.ui_dir, html=True), name="ui"
        )

    return app
