"""Byte-exact framing codec for the host<->device serial link.

Wire format (see docs/protocol.md)::

    [0xAA] [opcode] [length] [payload ...] [checksum]

``length`` is the payload byte count (max 16) and ``checksum`` is the XOR of
opcode, length and every payload byte.  The decoder scans for the 0xAA start
byte, so it survives mid-frame garbage and resynchronizes after corruption.

    >>> encode_frame(SetColdDuty(255)).hex()
    'aa0101ffff'
    >>> decode_stream(bytes.fromhex('aa030003')).messages
    [AllOff()]
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

from .patterns import TimedActionSet
from .patterns import AllOff as ActionAllOff
from .patterns import SetCold as ActionSetCold
from .patterns import SetHot as ActionSetHot

__all__ = [
    "SOF",
    "MAX_PAYLOAD",
    "SetColdDuty",
    "SetHotDuty",
    "AllOff",
    "Ping",
    "GetStatus",
    "Ack",
    "Status",
    "Command",
    "Reply",
    "Message",
    "Diagnostic",
    "DecodeResult",
    "encode_frame",
    "decode_stream",
    "FrameDecoder",
    "intensity_to_duty",
    "duty_to_intensity",
    "actions_to_commands",
]

SOF = 0xAA
MAX_PAYLOAD = 16

OP_SET_COLD_DUTY = 0x01
OP_SET_HOT_DUTY = 0x02
OP_ALL_OFF = 0x03
OP_PING = 0x04
OP_GET_STATUS = 0x05
OP_ACK = 0x06
OP_STATUS = 0x07

COMMAND_OPCODES = frozenset(
    (OP_SET_COLD_DUTY, OP_SET_HOT_DUTY, OP_ALL_OFF, OP_PING, OP_GET_STATUS)
)


@dataclass(frozen=True)
class SetColdDuty:
    duty: int


@dataclass(frozen=True)
class SetHotDuty:
    duty: int


@dataclass(frozen=True)
class AllOff:
    pass


@dataclass(frozen=True)
class Ping:
    pass


@dataclass(frozen=True)
class GetStatus:
    pass


@dataclass(frozen=True)
class Ack:
    echoed_opcode: int


@dataclass(frozen=True)
class Status:
    cold_duty: int
    hot_duty: int


Command = Union[SetColdDuty, SetHotDuty, AllOff, Ping, GetStatus]
Reply = Union[Ack, Status]
Message = Union[Command, Reply]


def _check_byte(value: int, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= 255:
        raise ValueError(f"{what} must be an integer in 0..255, got {value!r}")
    return value


def _frame_body(message: Message) -> tuple[int, bytes]:
    if isinstance(message, SetColdDuty):
        return OP_SET_COLD_DUTY, bytes([_check_byte(message.duty, "duty")])
    if isinstance(message, SetHotDuty):
        return OP_SET_HOT_DUTY, bytes([_check_byte(message.duty, "duty")])
    if isinstance(message, AllOff):
        return OP_ALL_OFF, b""
    if isinstance(message, Ping):
        return OP_PING, b""
    if isinstance(message, GetStatus):
        return OP_GET_STATUS, b""
    if isinstance(message, Ack):
        opcode = _check_byte(message.echoed_opcode, "echoed_opcode")
        if opcode not in COMMAND_OPCODES:
            raise ValueError(f"echoed_opcode 0x{opcode:02X} is not a command opcode")
        return OP_ACK, bytes([opcode])
    if isinstance(message, Status):
        return OP_STATUS, bytes(
            [
                _check_byte(message.cold_duty, "cold_duty"),
                _check_byte(message.hot_duty, "hot_duty"),
            ]
        )
    raise TypeError(f"not a protocol message: {type(message).__name__}")


def _checksum(opcode: int, payload: bytes) -> int:
    total = opcode ^ len(payload)
    for b in payload:
        total ^= b
    return total


def encode_frame(message: Message) -> bytes:
    """Encode one command or reply into its wire frame."""
    opcode, payload = _frame_body(message)
    return bytes([SOF, opcode, len(payload), *payload, _checksum(opcode, payload)])


@dataclass(frozen=True)
class Diagnostic:
    offset: int
    reason: str

    def __str__(self) -> str:
        return f"offset {self.offset}: {self.reason}"


class DecodeResult(NamedTuple):
    messages: list
    consumed: int
    diagnostics: list


def _decode_body(opcode: int, payload: bytes):
    """Return (message, reason): message is None when the frame is unusable."""
    n = len(payload)
    if opcode == OP_SET_COLD_DUTY:
        if n != 1:
            return None, f"SetColdDuty payload must be 1 byte, got {n}"
        return SetColdDuty(payload[0]), None
    if opcode == OP_SET_HOT_DUTY:
        if n != 1:
            return None, f"SetHotDuty payload must be 1 byte, got {n}"
        return SetHotDuty(payload[0]), None
    if opcode == OP_ALL_OFF:
        if n != 0:
            return None, f"AllOff payload must be empty, got {n} bytes"
        return AllOff(), None
    if opcode == OP_PING:
        if n != 0:
            return None, f"Ping payload must be empty, got {n} bytes"
        return Ping(), None
    if opcode == OP_GET_STATUS:
        if n != 0:
            return None, f"GetStatus payload must be empty, got {n} bytes"
        return GetStatus(), None
    if opcode == OP_ACK:
        if n != 1:
            return None, f"Ack payload must be 1 byte, got {n}"
        if payload[0] not in COMMAND_OPCODES:
            return None, f"Ack echoes unknown opcode 0x{payload[0]:02X}"
        return Ack(payload[0]), None
    if opcode == OP_STATUS:
        if n != 2:
            return None, f"Status payload must be 2 bytes, got {n}"
        return Status(payload[0], payload[1]), None
    return None, f"unknown opcode 0x{opcode:02X}"


def decode_stream(data: bytes | bytearray | memoryview) -> DecodeResult:
    """Scan arbitrary bytes for complete frames.

    Never raises: garbage is skipped, checksum failures produce a diagnostic
    and scanning resumes one byte past the bad start byte, and a trailing
    incomplete frame is left unconsumed for the next read.
    """
    buf = bytes(data)
    n = len(buf)
    messages: list[Message] = []
    diagnostics: list[Diagnostic] = []
    pos = 0
    while True:
        sof = buf.find(SOF, pos)
        if sof < 0:
            consumed = n  # no frame start left; everything is scanned garbage
            break
        if sof + 3 > n:
            consumed = sof  # header incomplete: keep for the next read
            break
        opcode = buf[sof + 1]
        length = buf[sof + 2]
        if length > MAX_PAYLOAD:
            # Can never become a valid frame, no matter how many bytes follow.
            diagnostics.append(
                Diagnostic(sof, f"length {length} exceeds max payload {MAX_PAYLOAD}")
            )
            pos = sof + 1
            continue
        end = sof + 4 + length
        if end > n:
            consumed = sof  # body incomplete: keep for the next read
            break
        payload = buf[sof + 3 : sof + 3 + length]
        expected = _checksum(opcode, payload)
        if expected != buf[end - 1]:
            diagnostics.append(
                Diagnostic(
                    sof,
                    f"checksum mismatch: expected 0x{expected:02X},"
                    f" got 0x{buf[end - 1]:02X}",
                )
            )
            pos = sof + 1
            continue
        message, reason = _decode_body(opcode, payload)
        if message is None:
            diagnostics.append(Diagnostic(sof, reason))
        else:
            messages.append(message)
        pos = end
    return DecodeResult(messages, consumed, diagnostics)


class FrameDecoder:
    """Streaming accumulator over :func:`decode_stream`.

    Single-owner: one reader context feeds it chunks and collects whole
    messages; partial frames are retained between feeds.
    """

    def __init__(self) -> None:
        self._buffer = bytearray()

    def feed(self, data: bytes) -> DecodeResult:
        self._buffer.extend(data)
        result = decode_stream(self._buffer)
        del self._buffer[: result.consumed]
        return result

    @property
    def pending(self) -> bytes:
        return bytes(self._buffer)


# ---------------------------------------------------------------------------
# Model <-> hardware quantization
# ---------------------------------------------------------------------------


def intensity_to_duty(intensity: float) -> int:
    """Quantize a normalized intensity to an 8-bit duty (ties away from zero)."""
    if not isinstance(intensity, (int, float)) or isinstance(intensity, bool):
        raise ValueError(f"intensity must be a number, got {intensity!r}")
    if not 0.0 <= intensity <= 1.0:
        raise ValueError(f"intensity {intensity} outside [0.0, 1.0]")
    return int(math.floor(intensity * 255 + 0.5))


def duty_to_intensity(duty: int) -> float:
    """Inverse map used by the plant: duty/255."""
    return _check_byte(duty, "duty") / 255


def actions_to_commands(entry: TimedActionSet) -> list[Command]:
    """Translate one timeline entry into wire commands, order preserved."""
    commands: list[Command] = []
    for action in entry.actions:
        if isinstance(action, ActionSetCold):
            commands.append(SetColdDuty(intensity_to_duty(action.intensity)))
        elif isinstance(action, ActionSetHot):
            commands.append(SetHotDuty(intensity_to_duty(action.intensity)))
        elif isinstance(action, ActionAllOff):
            commands.append(AllOff())
        else:
            raise TypeError(f"unknown action {type(action).__name__}")
    return commands
