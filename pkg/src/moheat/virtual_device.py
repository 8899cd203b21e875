"""Firmware emulator and first-order skin-temperature plant.

The plant is ``dT/dt = heat_rate*u_hot - cool_rate*u_cold +
relax*(T_neutral - T)``: a linear model whose endpoints reproduce the
hardware's +0.6 / -0.3 degC/s rate limits exactly at neutral temperature,
integrated with explicit Euler at a fixed step.  The device emulator consumes
the same wire frames a microcontroller would, holds cold/hot duty registers
and answers with Ack/Status replies.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import protocol
from .patterns import ActionTimeline, AllOff, SetCold, SetHot
from .protocol import FrameDecoder, encode_frame

__all__ = [
    "PlantParams",
    "PlantState",
    "DeviceState",
    "TraceSample",
    "TemperatureTrace",
    "plant_derivative",
    "plant_step",
    "device_feed",
    "VirtualDevice",
    "run_simulation",
    "trace_to_csv",
]


@dataclass(frozen=True)
class PlantParams:
    """Plant calibration; rates are the hardware's measured limits."""

    heating_rate_c_per_s: float = 0.6
    cooling_rate_c_per_s: float = 0.3  # magnitude; applied as a negative drive
    relaxation_per_s: float = 0.05  # passive return toward neutral
    t_neutral_c: float = 33.0
    t_min_c: float = 5.0
    t_max_c: float = 45.0
    dt_ms: int = 10

    def validate(self) -> None:
        if not self.heating_rate_c_per_s > 0:
            raise ValueError("heating_rate_c_per_s must be > 0")
        if not self.cooling_rate_c_per_s > 0:
            raise ValueError("cooling_rate_c_per_s must be > 0")
        if self.relaxation_per_s < 0:
            raise ValueError("relaxation_per_s must be >= 0")
        if self.dt_ms < 1:
            raise ValueError("dt_ms must be >= 1")
        if not self.t_min_c < self.t_neutral_c < self.t_max_c:
            raise ValueError("t_neutral_c must lie inside [t_min_c, t_max_c]")


@dataclass(frozen=True)
class PlantState:
    temp_c: float
    t_ms: int = 0


@dataclass(frozen=True)
class DeviceState:
    cold_duty: int = 0
    hot_duty: int = 0
    frames_ok: int = 0
    frames_bad: int = 0


@dataclass(frozen=True)
class TraceSample:
    t_ms: int
    temp_c: float
    cold_duty: int
    hot_duty: int


@dataclass(frozen=True)
class TemperatureTrace:
    samples: tuple[TraceSample, ...]
    dt_ms: int


def plant_derivative(
    temp_c: float, hot_drive: float, cold_drive: float, params: PlantParams
) -> float:
    """Skin temperature rate of change in degC/s for the given drives."""
    return (
        params.heating_rate_c_per_s * hot_drive
        - params.cooling_rate_c_per_s * cold_drive
        + params.relaxation_per_s * (params.t_neutral_c - temp_c)
    )


def plant_step(
    state: PlantState, hot_drive: float, cold_drive: float, params: PlantParams
) -> PlantState:
    """One explicit-Euler step of dt_ms, clamped to the safety bounds."""
    dt_s = params.dt_ms / 1000.0
    temp = state.temp_c + dt_s * plant_derivative(
        state.temp_c, hot_drive, cold_drive, params
    )
    temp = min(max(temp, params.t_min_c), params.t_max_c)
    return PlantState(temp, state.t_ms + params.dt_ms)


# ---------------------------------------------------------------------------
# Device emulation
# ---------------------------------------------------------------------------


def _apply_message(state: DeviceState, message) -> tuple[DeviceState, bytes]:
    if isinstance(message, protocol.SetColdDuty):
        return (
            replace(state, cold_duty=message.duty, frames_ok=state.frames_ok + 1),
            encode_frame(protocol.Ack(protocol.OP_SET_COLD_DUTY)),
        )
    if isinstance(message, protocol.SetHotDuty):
        return (
            replace(state, hot_duty=message.duty, frames_ok=state.frames_ok + 1),
            encode_frame(protocol.Ack(protocol.OP_SET_HOT_DUTY)),
        )
    if isinstance(message, protocol.AllOff):
        return (
            replace(state, cold_duty=0, hot_duty=0, frames_ok=state.frames_ok + 1),
            encode_frame(protocol.Ack(protocol.OP_ALL_OFF)),
        )
    if isinstance(message, protocol.Ping):
        return (
            replace(state, frames_ok=state.frames_ok + 1),
            encode_frame(protocol.Ack(protocol.OP_PING)),
        )
    if isinstance(message, protocol.GetStatus):
        return (
            replace(state, frames_ok=state.frames_ok + 1),
            encode_frame(protocol.Status(state.cold_duty, state.hot_duty)),
        )
    # Replies addressed to the device (echoes) are ignored, like firmware would.
    return state, b""


def device_feed(state: DeviceState, data: bytes) -> tuple[DeviceState, bytes]:
    """Process every complete frame in ``data``; resilient to garbage.

    Valid commands update the duty registers and produce replies; invalid
    frames only bump ``frames_bad``.  A trailing partial frame is ignored;
    use :class:`VirtualDevice` for chunked streaming input.
    """
    messages, _, diagnostics = protocol.decode_stream(data)
    if diagnostics:
        state = replace(state, frames_bad=state.frames_bad + len(diagnostics))
    replies = bytearray()
    for message in messages:
        state, reply = _apply_message(state, message)
        replies.extend(reply)
    return state, bytes(replies)


class VirtualDevice:
    """Emulated device plus plant: feed it frames, step it through time.

    Single-owner object; drive it from one thread (or hand it off whole).
    """

    def __init__(self, params: PlantParams | None = None, initial_temp_c: float | None = None):
        self.params = params or PlantParams()
        self.params.validate()
        self.device = DeviceState()
        self.plant = PlantState(
            self.params.t_neutral_c if initial_temp_c is None else initial_temp_c
        )
        self._decoder = FrameDecoder()

    def feed(self, data: bytes) -> bytes:
        """Consume incoming bytes (partial frames tolerated), return replies."""
        messages, _, diagnostics = self._decoder.feed(data)
        if diagnostics:
            self.device = replace(
                self.device, frames_bad=self.device.frames_bad + len(diagnostics)
            )
        replies = bytearray()
        for message in messages:
            self.device, reply = _apply_message(self.device, message)
            replies.extend(reply)
        return bytes(replies)

    def step(self) -> None:
        """Advance the plant by one dt using the current duty registers."""
        self.plant = plant_step(
            self.plant,
            protocol.duty_to_intensity(self.device.hot_duty),
            protocol.duty_to_intensity(self.device.cold_duty),
            self.params,
        )

    def sample(self) -> TraceSample:
        return TraceSample(
            self.plant.t_ms,
            self.plant.temp_c,
            self.device.cold_duty,
            self.device.hot_duty,
        )


# ---------------------------------------------------------------------------
# Offline simulation
# ---------------------------------------------------------------------------


def run_simulation(
    timeline: ActionTimeline,
    params: PlantParams | None = None,
    initial_temp_c: float | None = None,
) -> TemperatureTrace:
    """Step the plant across a timeline; duties switch exactly at entry times.

    An entry applies before the integration step that begins at its time, and
    duties are quantized to 8 bits exactly as they would be on the wire, so
    this trace matches a virtual device driven through the byte protocol.
    """
    params = params or PlantParams()
    params.validate()
    dt = params.dt_ms
    for entry in timeline.entries:
        if entry.t_ms % dt != 0:
            raise ValueError(
                f"entry time {entry.t_ms} ms is not a multiple of dt_ms={dt};"
                " lower dt_ms so every entry time is a whole number of steps"
            )

    state = PlantState(
        params.t_neutral_c if initial_temp_c is None else initial_temp_c
    )
    cold_duty = 0
    hot_duty = 0
    samples: list[TraceSample] = []
    next_entry = 0
    entries = timeline.entries
    for t in range(0, timeline.total_ms + dt, dt):
        while next_entry < len(entries) and entries[next_entry].t_ms == t:
            for action in entries[next_entry].actions:
                if isinstance(action, SetCold):
                    cold_duty = protocol.intensity_to_duty(action.intensity)
                elif isinstance(action, SetHot):
                    hot_duty = protocol.intensity_to_duty(action.intensity)
                elif isinstance(action, AllOff):
                    cold_duty = 0
                    hot_duty = 0
            next_entry += 1
        samples.append(TraceSample(t, state.temp_c, cold_duty, hot_duty))
        if t >= timeline.total_ms:
            break
        state = plant_step(
            state,
            protocol.duty_to_intensity(hot_duty),
            protocol.duty_to_intensity(cold_duty),
            params,
        )
    return TemperatureTrace(tuple(samples), dt)


def trace_to_csv(trace: TemperatureTrace) -> bytes:
    """Render a trace as CSV: fixed 4-decimal temperatures, LF line endings."""
    lines = ["t_ms,temp_c,cold_duty,hot_duty"]
    for s in trace.samples:
        lines.append(f"{s.t_ms},{s.temp_c:.4f},{s.cold_duty},{s.hot_duty}")
    return ("\n".join(lines) + "\n").encode("ascii")
