"""Timeline playback against a transport, in real or virtual time.

A :class:`Session` owns one dispatch thread that waits for each timeline
entry's offset on its clock, encodes the entry's commands and writes them to
the transport.  ``stop()`` may be called from any thread: pending entries are
cancelled and a safety all-off frame is transmitted, so the device is never
left running.  On a :class:`VirtualClock` the whole thing is deterministic:
``advance()`` releases sleepers one deadline at a time and waits for each to
finish its dispatch before time moves on, so actual dispatch times equal the
scheduled ones exactly.
"""

from __future__ import annotations

import threading
import time
import weakref
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .patterns import ActionTimeline, timeline_violations
from .protocol import AllOff, Command, actions_to_commands, encode_frame
from .transport import Transport

__all__ = [
    "Clock",
    "SystemClock",
    "VirtualClock",
    "SessionState",
    "DispatchRecord",
    "DispatchLog",
    "PlaybackStatus",
    "Session",
    "TransportBusyError",
    "play",
]

# Below this many ms remaining, fall back to spinning for tightness.
_SPIN_THRESHOLD_MS = 2


class Clock:
    """Monotone millisecond time source with interruptible waiting."""

    def now_ms(self) -> int:
        raise NotImplementedError

    def wait_until(self, deadline_ms: int, interrupt: threading.Event) -> bool:
        """Block until ``now_ms() >= deadline_ms`` or the event is set.

        Returns True when interrupted.
        """
        raise NotImplementedError

    def wake(self) -> None:
        """Nudge waiters to re-check their interrupt event."""

    # Dispatcher threads report their lifecycle so a virtual clock can tell
    # "busy" from "asleep"; the system clock does not care.
    def attach(self) -> None:
        pass

    def detach(self) -> None:
        pass


class SystemClock(Clock):
    """Wall time via the OS monotonic clock, origin at construction."""

    def __init__(self) -> None:
        self._origin_ns = time.monotonic_ns()

    def now_ms(self) -> int:
        return (time.monotonic_ns() - self._origin_ns) // 1_000_000

    def wait_until(self, deadline_ms: int, interrupt: threading.Event) -> bool:
        while True:
            if interrupt.is_set():
                return True
            remaining = deadline_ms - self.now_ms()
            if remaining <= 0:
                return False
            if remaining > _SPIN_THRESHOLD_MS:
                # Coarse sleep to ~1 ms before the deadline, then spin.
                interrupt.wait((remaining - 1) / 1000.0)
            else:
                deadline_ns = self._origin_ns + deadline_ms * 1_000_000
                while time.monotonic_ns() < deadline_ns:
                    if interrupt.is_set():
                        return True
                return False


class VirtualClock(Clock):
    """Deterministic manually-advanced clock.

    ``advance``/``advance_to`` move time forward one sleeper deadline at a
    time, waiting after each release until every attached dispatcher is
    asleep again (or gone).  Sleepers therefore observe ``now_ms()`` equal to
    their own deadline when they wake.
    """

    def __init__(self, start_ms: int = 0):
        self._cond = threading.Condition()
        self._now = start_ms
        self._busy = 0
        self._sleepers: dict[int, int] = {}  # thread ident -> deadline

    def now_ms(self) -> int:
        with self._cond:
            return self._now

    def attach(self) -> None:
        with self._cond:
            self._busy += 1

    def detach(self) -> None:
        with self._cond:
            self._busy -= 1
            self._cond.notify_all()

    def wake(self) -> None:
        with self._cond:
            self._cond.notify_all()

    def wait_until(self, deadline_ms: int, interrupt: threading.Event) -> bool:
        ident = threading.get_ident()
        with self._cond:
            if interrupt.is_set():
                return True
            if self._now >= deadline_ms:
                return False
            self._busy -= 1
            self._sleepers[ident] = deadline_ms
            self._cond.notify_all()
            try:
                while self._now < deadline_ms and not interrupt.is_set():
                    self._cond.wait()
            finally:
                del self._sleepers[ident]
                self._busy += 1
            return interrupt.is_set()

    def _quiescent_locked(self) -> bool:
        if self._busy > 0:
            return False
        return all(d > self._now for d in self._sleepers.values())

    def advance(self, delta_ms: int) -> None:
        self.advance_to(self.now_ms() + delta_ms)

    def advance_to(self, target_ms: int) -> None:
        with self._cond:
            if target_ms < self._now:
                raise ValueError(
                    f"cannot move virtual time backwards ({target_ms} < {self._now})"
                )
            while True:
                while not self._quiescent_locked():
                    self._cond.wait()
                upcoming = [d for d in self._sleepers.values() if d > self._now]
                next_deadline = min(upcoming, default=None)
                if next_deadline is None or next_deadline > target_ms:
                    self._now = target_ms
                    self._cond.notify_all()
                    while not self._quiescent_locked():
                        self._cond.wait()
                    return
                self._now = next_deadline
                self._cond.notify_all()


class SessionState(str, Enum):
    IDLE = "idle"
    DELAYING = "delaying"
    PLAYING = "playing"
    DONE = "done"
    STOPPED = "stopped"
    FAILED = "failed"


TERMINAL_STATES = frozenset(
    (SessionState.DONE, SessionState.STOPPED, SessionState.FAILED)
)


@dataclass(frozen=True)
class DispatchRecord:
    scheduled_t_ms: int
    actual_t_ms: int
    commands: tuple[Command, ...]


@dataclass(frozen=True)
class DispatchLog:
    records: tuple[DispatchRecord, ...]
    status: SessionState


@dataclass(frozen=True)
class PlaybackStatus:
    state: SessionState
    elapsed_ms: int
    next_event_t_ms: Optional[int]


class TransportBusyError(RuntimeError):
    """The transport already has a non-terminal session."""


# One active session per transport: interleaving two command streams onto a
# thermal actuator is never acceptable.
_active_sessions: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()
_registry_lock = threading.Lock()


class Session:
    """Handle for one playback run; shareable across threads."""

    def __init__(self, timeline: ActionTimeline, transport: Transport, clock: Clock):
        self._timeline = timeline
        self._transport = transport
        self._clock = clock
        self._lock = threading.Condition()
        self._stop_event = threading.Event()
        self._records: list[DispatchRecord] = []
        self._dispatched = 0  # entries written so far
        self._state = (
            SessionState.DELAYING
            if timeline.entries[0].t_ms > 0
            else SessionState.PLAYING
        )
        self._terminal_elapsed: Optional[int] = None
        self._start_ms = clock.now_ms()
        self._thread = threading.Thread(
            target=self._run, name="moheat-dispatch", daemon=True
        )

    # -- dispatch thread ----------------------------------------------------

    def _run(self) -> None:
        failed = False
        try:
            for entry in self._timeline.entries:
                deadline = self._start_ms + entry.t_ms
                if self._clock.wait_until(deadline, self._stop_event):
                    break
                commands = actions_to_commands(entry)
                payload = b"".join(encode_frame(c) for c in commands)
                actual = self._clock.now_ms() - self._start_ms
                assert actual >= entry.t_ms, "dispatched before schedule"
                try:
                    self._transport.write(payload)
                except Exception:
                    failed = True
                    break
                with self._lock:
                    self._records.append(
                        DispatchRecord(entry.t_ms, actual, tuple(commands))
                    )
                    self._dispatched += 1
                    if self._state is SessionState.DELAYING:
                        self._state = SessionState.PLAYING
                    self._lock.notify_all()
            if failed:
                self._safety_all_off(record=True)
                self._finish(SessionState.FAILED)
            elif self._stop_event.is_set():
                ok = self._safety_all_off(record=True)
                self._finish(SessionState.STOPPED if ok else SessionState.FAILED)
            else:
                self._finish(SessionState.DONE)
        finally:
            self._clock.detach()
            with _registry_lock:
                if _active_sessions.get(self._transport) is self:
                    del _active_sessions[self._transport]

    def _safety_all_off(self, record: bool) -> bool:
        now = self._clock.now_ms() - self._start_ms
        try:
            self._transport.write(encode_frame(AllOff()))
        except Exception:
            return False
        if record:
            with self._lock:
                self._records.append(DispatchRecord(now, now, (AllOff(),)))
        return True

    def _finish(self, state: SessionState) -> None:
        with self._lock:
            self._state = state
            self._terminal_elapsed = self._clock.now_ms() - self._start_ms
            self._lock.notify_all()

    # -- public surface -----------------------------------------------------

    @property
    def timeline(self) -> ActionTimeline:
        return self._timeline

    @property
    def start_ms(self) -> int:
        """Clock time at which offset 0 of the timeline is anchored."""
        return self._start_ms

    @property
    def state(self) -> SessionState:
        with self._lock:
            return self._state

    def status(self) -> PlaybackStatus:
        with self._lock:
            if self._terminal_elapsed is not None:
                elapsed = self._terminal_elapsed
            else:
                elapsed = self._clock.now_ms() - self._start_ms
            if self._state in TERMINAL_STATES:
                next_event = None
            elif self._dispatched < len(self._timeline.entries):
                next_event = self._timeline.entries[self._dispatched].t_ms
            else:
                next_event = None
            return PlaybackStatus(self._state, elapsed, next_event)

    def log(self) -> DispatchLog:
        with self._lock:
            return DispatchLog(tuple(self._records), self._state)

    def stop(self, timeout: Optional[float] = 10.0) -> DispatchLog:
        """Cancel pending entries and switch everything off; idempotent."""
        with self._lock:
            already_terminal = self._state in TERMINAL_STATES
        if not already_terminal:
            self._stop_event.set()
            self._clock.wake()
        self._thread.join(timeout)
        return self.log()

    def wait(self, timeout: Optional[float] = None) -> bool:
        """Block until the session is terminal; True when it finished."""
        self._thread.join(timeout)
        return self.state in TERMINAL_STATES

    def wait_dispatched(self, t_ms: int, timeout: float = 10.0) -> None:
        """Block until every entry scheduled at or before t_ms has been written.

        Returns immediately once the session is terminal.
        """
        deadline = time.monotonic() + timeout
        with self._lock:
            while True:
                pending = self._timeline.entries[self._dispatched :]
                if not pending or pending[0].t_ms > t_ms:
                    return
                if self._state in TERMINAL_STATES:
                    return
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimeoutError(
                        f"entries at or before t={t_ms} ms not dispatched in time"
                    )
                self._lock.wait(remaining)


def play(timeline: ActionTimeline, transport: Transport, clock: Clock) -> Session:
    """Start playing a timeline; returns the running session immediately."""
    problems = timeline_violations(timeline)
    if problems:
        raise ValueError("invalid timeline: " + "; ".join(problems))
    with _registry_lock:
        existing = _active_sessions.get(transport)
        if existing is not None and existing.state not in TERMINAL_STATES:
            raise TransportBusyError("transport already has an active session")
        session = Session(timeline, transport, clock)
        _active_sessions[transport] = session
    clock.attach()
    session._thread.start()
    return session
