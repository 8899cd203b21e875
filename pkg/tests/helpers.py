"""Shared generators and the independent dual-pattern timing oracle."""

from __future__ import annotations

import random

from moheat.patterns import (
    Cold,
    ColdLevel,
    Dual,
    Hot,
    HotLevel,
    StimulusPattern,
)


def random_single(rng: random.Random) -> StimulusPattern:
    kind = rng.randrange(4)
    duration = rng.randint(1, 5000)
    delay = rng.choice([0, 0, rng.randint(1, 2000)])
    if kind == 0:
        return Cold(rng.random(), duration, delay)
    if kind == 1:
        return Hot(rng.random(), duration, delay)
    if kind == 2:
        return ColdLevel(rng.randint(1, 5), duration, delay)
    return HotLevel(rng.randint(1, 5), duration, delay)


def random_dual(rng: random.Random) -> Dual:
    return Dual(
        cold_intensity=rng.random(),
        cold_duration_ms=rng.randint(1, 3000),
        hot_intensity=rng.random(),
        hot_duration_ms=rng.randint(1, 3000),
        gap_ms=rng.choice([0, 0, rng.randint(1, 1000)]),
        repeats=rng.randint(1, 6),
        start_phase=rng.choice(["cold", "hot"]),
        delay_ms=rng.choice([0, rng.randint(1, 1000)]),
    )


def random_pattern(rng: random.Random) -> StimulusPattern:
    if rng.random() < 0.4:
        return random_dual(rng)
    return random_single(rng)


def align_pattern(p: StimulusPattern, dt_ms: int) -> StimulusPattern:
    """Round every time field up to a multiple of dt_ms (simulation needs this)."""

    def snap(value: int, minimum: int) -> int:
        snapped = (value // dt_ms) * dt_ms
        return max(snapped, minimum * dt_ms)

    import dataclasses

    changes = {}
    for f in dataclasses.fields(p):
        if f.name.endswith("_ms"):
            minimum = 0 if f.name in ("delay_ms", "gap_ms") else 1
            changes[f.name] = snap(getattr(p, f.name), minimum)
    return dataclasses.replace(p, **changes)


def dual_entry_times_oracle(p: Dual) -> list[int]:
    """Brute-force walk of dual phases, accumulating time step by step.

    Independent of the compiler: builds the expected entry times by visiting
    each phase in order, inserting gap stops, and terminating with the final
    all-off time.
    """
    durations = []
    for _ in range(p.repeats):
        if p.start_phase == "cold":
            durations += [p.cold_duration_ms, p.hot_duration_ms]
        else:
            durations += [p.hot_duration_ms, p.cold_duration_ms]

    times = []
    t = p.delay_ms
    for index, duration in enumerate(durations):
        times.append(t)  # phase start
        t += duration
        is_last = index == len(durations) - 1
        if not is_last and p.gap_ms > 0:
            times.append(t)  # gap stop
            t += p.gap_ms
    times.append(t)  # final all-off
    return times
