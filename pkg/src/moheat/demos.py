"""Bundled sample patterns seeded into a fresh library.

Three ready-to-play demos: a global chill, a delayed local warmth, and an
alternating cold/hot pulse meant to pair with blue/red lighting.
"""

from __future__ import annotations

from .library import LibraryEntry
from .patterns import Cold, Dual, HotLevel

__all__ = ["DEMO_PATTERNS"]

DEMO_PATTERNS: dict[str, LibraryEntry] = {
    "snowy-mountain-chill": LibraryEntry(
        Cold(intensity=0.9, duration_ms=2000, delay_ms=0),
        description="Global chill sweeping past, like riding through snowy mountains",
        color_cue="#3b82f6",
    ),
    "approaching-flames": LibraryEntry(
        HotLevel(level=4, duration_ms=1500, delay_ms=300),
        description="Localized warmth that arrives after a beat, like leaning toward a flame",
        color_cue="#ef4444",
    ),
    "alternating-pulse": LibraryEntry(
        Dual(
            cold_intensity=1.0,
            cold_duration_ms=600,
            hot_intensity=0.8,
            hot_duration_ms=600,
            gap_ms=0,
            repeats=2,
            start_phase="cold",
            delay_ms=0,
        ),
        description="Alternating cold and hot cycles in sync with blue/red lighting",
        color_cue="#a855f7",
    ),
}
