"""Byte sink/source transports: in-process loopback and a POSIX serial port.

Every transport exposes the same minimal surface: ``write(bytes)``,
non-blocking ``read()`` and ``close()``.  The loopback pair connects the host
side to the virtual device; the serial binding talks to real hardware at
115200 baud 8N1.
"""

from __future__ import annotations

import os
import threading
from collections import deque
from typing import Protocol

__all__ = [
    "Transport",
    "TransportError",
    "LoopbackEnd",
    "create_loopback",
    "SerialTransport",
]


class TransportError(OSError):
    """Write or read failed, or the transport is closed."""


class Transport(Protocol):
    def write(self, data: bytes) -> None: ...

    def read(self, max_bytes: int = 65536) -> bytes: ...

    def close(self) -> None: ...


class LoopbackEnd:
    """One end of an in-process byte pipe; safe for one writer + one reader."""

    def __init__(self) -> None:
        self._inbox: deque[bytes] = deque()
        self._lock = threading.Lock()
        self._closed = False
        self._peer: LoopbackEnd | None = None

    def write(self, data: bytes) -> None:
        peer = self._peer
        if self._closed or peer is None or peer._closed:
            raise TransportError("loopback transport is closed")
        with peer._lock:
            peer._inbox.append(bytes(data))

    def read(self, max_bytes: int = 65536) -> bytes:
        out = bytearray()
        with self._lock:
            while self._inbox and len(out) < max_bytes:
                chunk = self._inbox.popleft()
                take = max_bytes - len(out)
                if len(chunk) > take:
                    out.extend(chunk[:take])
                    self._inbox.appendleft(chunk[take:])
                else:
                    out.extend(chunk)
        return bytes(out)

    def close(self) -> None:
        self._closed = True


def create_loopback() -> tuple[LoopbackEnd, LoopbackEnd]:
    """Connected pair: bytes written to one end are read from the other."""
    a, b = LoopbackEnd(), LoopbackEnd()
    a._peer, b._peer = b, a
    return a, b


class SerialTransport:
    """Raw POSIX tty configured 115200 8N1, non-blocking reads.

    Uses termios directly, so it only works on POSIX hosts.
    """

    def __init__(self, path: str, baudrate: int = 115200):
        import termios

        baud_const = {
            9600: termios.B9600,
            19200: termios.B19200,
            38400: termios.B38400,
            57600: termios.B57600,
            115200: termios.B115200,
        }.get(baudrate)
        if baud_const is None:
            raise TransportError(f"unsupported baud rate {baudrate}")
        try:
            self._fd = os.open(path, os.O_RDWR | os.O_NOCTTY | os.O_NONBLOCK)
        except OSError as exc:
            raise TransportError(f"cannot open serial port {path}: {exc}") from exc
        self.path = path
        try:
            attrs = termios.tcgetattr(self._fd)
            iflag, oflag, cflag, lflag, _, _, cc = attrs
            # 8N1, no flow control, raw mode
            cflag &= ~(termios.PARENB | termios.CSTOPB | termios.CSIZE)
            cflag |= termios.CS8 | termios.CREAD | termios.CLOCAL
            lflag &= ~(termios.ICANON | termios.ECHO | termios.ECHOE | termios.ISIG)
            iflag &= ~(termios.IXON | termios.IXOFF | termios.IXANY)
            iflag &= ~(termios.ICRNL | termios.INLCR | termios.IGNCR)
            oflag &= ~termios.OPOST
            cc[termios.VMIN] = 0
            cc[termios.VTIME] = 0
            termios.tcsetattr(
                self._fd,
                termios.TCSANOW,
                [iflag, oflag, cflag, lflag, baud_const, baud_const, cc],
            )
        except termios.error as exc:
            os.close(self._fd)
            raise TransportError(f"cannot configure serial port {path}: {exc}") from exc
        self._closed = False

    def write(self, data: bytes) -> None:
        if self._closed:
            raise TransportError("serial transport is closed")
        view = memoryview(bytes(data))
        try:
            while view:
                written = os.write(self._fd, view)
                view = view[written:]
        except OSError as exc:
            raise TransportError(f"serial write failed: {exc}") from exc

    def read(self, max_bytes: int = 65536) -> bytes:
        if self._closed:
            raise TransportError("serial transport is closed")
        try:
            return os.read(self._fd, max_bytes)
        except BlockingIOError:
            return b""
        except OSError as exc:
            raise TransportError(f"serial read failed: {exc}") from exc

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            os.close(self._fd)
