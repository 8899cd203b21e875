"""Stimulus pattern types and the timeline compiler.

The five authorable pattern shapes (cold, cold level, hot, hot level, and
alternating dual) are plain dataclasses.  Construction never validates, so
callers can build an arbitrary pattern and ask :func:`validate_pattern` for a
report; :func:`compile_pattern` turns a valid pattern into an
:class:`ActionTimeline` of timestamped actuator actions, which is the form
every downstream consumer (scheduler, simulator, device) works with.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

__all__ = [
    "LEVEL_INTENSITY",
    "Cold",
    "ColdLevel",
    "Hot",
    "HotLevel",
    "Dual",
    "StimulusPattern",
    "SetCold",
    "SetHot",
    "AllOff",
    "Action",
    "TimedActionSet",
    "ActionTimeline",
    "Violation",
    "ValidationReport",
    "PatternValidationError",
    "validate_pattern",
    "level_to_intensity",
    "compile_pattern",
    "timeline_violations",
]

# Preset level -> normalized intensity.  Uniformly spaced; a hardware
# calibration may replace this table without touching the compiler.
LEVEL_INTENSITY: dict[int, float] = {1: 0.2, 2: 0.4, 3: 0.6, 4: 0.8, 5: 1.0}


# ---------------------------------------------------------------------------
# Pattern variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cold:
    """Single cold stimulus with free-form intensity."""

    intensity: float
    duration_ms: int
    delay_ms: int = 0


@dataclass(frozen=True)
class ColdLevel:
    """Single cold stimulus at one of the five preset levels."""

    level: int
    duration_ms: int
    delay_ms: int = 0


@dataclass(frozen=True)
class Hot:
    """Single hot stimulus with free-form intensity."""

    intensity: float
    duration_ms: int
    delay_ms: int = 0


@dataclass(frozen=True)
class HotLevel:
    """Single hot stimulus at one of the five preset levels."""

    level: int
    duration_ms: int
    delay_ms: int = 0


@dataclass(frozen=True)
class Dual:
    """Alternating cold/hot stimulus.

    ``repeats`` counts full cold+hot cycles; ``gap_ms`` is the all-off
    interval between consecutive phases (none after the last phase).
    """

    cold_intensity: float
    cold_duration_ms: int
    hot_intensity: float
    hot_duration_ms: int
    gap_ms: int = 0
    repeats: int = 1
    start_phase: str = "cold"
    delay_ms: int = 0


StimulusPattern = Union[Cold, ColdLevel, Hot, HotLevel, Dual]


# ---------------------------------------------------------------------------
# Timeline actions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SetCold:
    intensity: float


@dataclass(frozen=True)
class SetHot:
    intensity: float


@dataclass(frozen=True)
class AllOff:
    pass


Action = Union[SetCold, SetHot, AllOff]


def _is_deactivation(a: Action) -> bool:
    if isinstance(a, AllOff):
        return True
    return a.intensity == 0.0


@dataclass(frozen=True)
class TimedActionSet:
    """Actions applied together at one offset from playback start."""

    t_ms: int
    actions: tuple[Action, ...]


@dataclass(frozen=True)
class ActionTimeline:
    """Compiled pattern: strictly increasing entries, final entry all-off."""

    entries: tuple[TimedActionSet, ...]
    total_ms: int


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def describe(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(str(v) for v in self.violations)


class PatternValidationError(ValueError):
    """Raised when an operation requires a valid pattern but got violations."""

    def __init__(self, report: ValidationReport):
        super().__init__(report.describe())
        self.report = report


def _check_intensity(out: list[Violation], field_name: str, value: object) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        out.append(Violation(field_name, "must be a number"))
    elif not 0.0 <= float(value) <= 1.0:
        out.append(Violation(field_name, f"{value} outside [0.0, 1.0]"))


def _check_int(
    out: list[Violation], field_name: str, value: object, minimum: int
) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        out.append(Violation(field_name, "must be an integer"))
    elif value < minimum:
        out.append(Violation(field_name, f"{value} below minimum {minimum}"))


def _check_level(out: list[Violation], field_name: str, value: object) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        out.append(Violation(field_name, "must be an integer"))
    elif value not in LEVEL_INTENSITY:
        out.append(Violation(field_name, f"{value} outside 1..5"))


def validate_pattern(pattern: StimulusPattern) -> ValidationReport:
    """Check every field domain of a pattern; violations are values, not errors."""
    out: list[Violation] = []
    if isinstance(pattern, (Cold, Hot)):
        _check_intensity(out, "intensity", pattern.intensity)
        _check_int(out, "duration_ms", pattern.duration_ms, 1)
        _check_int(out, "delay_ms", pattern.delay_ms, 0)
    elif isinstance(pattern, (ColdLevel, HotLevel)):
        _check_level(out, "level", pattern.level)
        _check_int(out, "duration_ms", pattern.duration_ms, 1)
        _check_int(out, "delay_ms", pattern.delay_ms, 0)
    elif isinstance(pattern, Dual):
        _check_intensity(out, "cold_intensity", pattern.cold_intensity)
        _check_int(out, "cold_duration_ms", pattern.cold_duration_ms, 1)
        _check_intensity(out, "hot_intensity", pattern.hot_intensity)
        _check_int(out, "hot_duration_ms", pattern.hot_duration_ms, 1)
        _check_int(out, "gap_ms", pattern.gap_ms, 0)
        _check_int(out, "repeats", pattern.repeats, 1)
        _check_int(out, "delay_ms", pattern.delay_ms, 0)
        if pattern.start_phase not in ("cold", "hot"):
            out.append(
                Violation("start_phase", f"{pattern.start_phase!r} not 'cold' or 'hot'")
            )
    else:
        out.append(Violation("pattern", f"unknown pattern type {type(pattern).__name__}"))
    return ValidationReport(tuple(out))


def level_to_intensity(level: int) -> float:
    """Map a preset level 1..5 to its normalized intensity."""
    try:
        return LEVEL_INTENSITY[level]
    except (KeyError, TypeError):
        raise ValueError(f"level must be in 1..5, got {level!r}") from None


# ---------------------------------------------------------------------------
# Compiler
# ---------------------------------------------------------------------------


def compile_pattern(pattern: StimulusPattern) -> ActionTimeline:
    """Compile a valid pattern into its action timeline.

    Raises :class:`PatternValidationError` if the pattern is invalid; a
    returned timeline always satisfies the timeline invariants (strictly
    increasing times, terminating all-off).
    """
    report = validate_pattern(pattern)
    if not report.ok:
        raise PatternValidationError(report)

    if isinstance(pattern, (Cold, ColdLevel, Hot, HotLevel)):
        if isinstance(pattern, (ColdLevel, HotLevel)):
            intensity = level_to_intensity(pattern.level)
        else:
            intensity = float(pattern.intensity)
        on: Action = (
            SetCold(intensity)
            if isinstance(pattern, (Cold, ColdLevel))
            else SetHot(intensity)
        )
        start = pattern.delay_ms
        end = start + pattern.duration_ms
        entries = (
            TimedActionSet(start, (on,)),
            TimedActionSet(end, (AllOff(),)),
        )
        return ActionTimeline(entries, end)

    return _compile_dual(pattern)


def _compile_dual(p: Dual) -> ActionTimeline:
    phases = []
    for _ in range(p.repeats):
        if p.start_phase == "cold":
            phases.append(("cold", p.cold_duration_ms))
            phases.append(("hot", p.hot_duration_ms))
        else:
            phases.append(("hot", p.hot_duration_ms))
            phases.append(("cold", p.cold_duration_ms))

    entries: list[TimedActionSet] = []
    t = p.delay_ms
    for k, (kind, duration) in enumerate(phases):
        actions: list[Action] = []
        if k > 0:
            # Strict alternation: zero the outgoing channel before
            # activating the incoming one.
            actions.append(SetHot(0.0) if kind == "cold" else SetCold(0.0))
        actions.append(
            SetCold(float(p.cold_intensity))
            if kind == "cold"
            else SetHot(float(p.hot_intensity))
        )
        entries.append(TimedActionSet(t, tuple(actions)))
        t += duration
        if k < len(phases) - 1 and p.gap_ms > 0:
            entries.append(TimedActionSet(t, (AllOff(),)))
            t += p.gap_ms
    entries.append(TimedActionSet(t, (AllOff(),)))
    return ActionTimeline(tuple(entries), t)


def timeline_violations(tl: ActionTimeline) -> list[str]:
    """Structural checks for a timeline; used by tests and defensive callers."""
    problems: list[str] = []
    if not tl.entries:
        problems.append("timeline has no entries")
        return problems
    if tl.entries[0].t_ms < 0:
        problems.append("first entry before t=0")
    for a, b in zip(tl.entries, tl.entries[1:]):
        if b.t_ms <= a.t_ms:
            problems.append(f"entry times not strictly increasing at t={b.t_ms}")
    for entry in tl.entries:
        if not entry.actions:
            problems.append(f"empty action set at t={entry.t_ms}")
        seen_activation = False
        for action in entry.actions:
            if _is_deactivation(action):
                if seen_activation:
                    problems.append(
                        f"deactivation after activation at t={entry.t_ms}"
                    )
            else:
                seen_activation = True
    last = tl.entries[-1]
    if not any(isinstance(a, AllOff) for a in last.actions):
        problems.append("final entry does not switch everything off")
    if last.t_ms != tl.total_ms:
        problems.append("total_ms does not match final entry time")
    return problems
