"""Pattern library persistence (the ``.moheat.json`` document format).

Schema version 1: a top-level object with ``schema_version`` and ``patterns``
(name -> pattern object).  Each pattern object carries a ``type`` tag plus the
fields of its variant, and may add ``description`` and ``color_cue`` metadata.
Unknown fields are rejected.  Serialization is canonical: UTF-8, keys sorted,
compact separators, no NaN/Inf, floats as shortest round-trip decimals - so
``parse(serialize(lib)) == lib`` and serialized bytes are a fixed point.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .patterns import (
    ActionTimeline,
    AllOff,
    Cold,
    ColdLevel,
    Dual,
    Hot,
    HotLevel,
    SetCold,
    SetHot,
    StimulusPattern,
    validate_pattern,
)

__all__ = [
    "SCHEMA_VERSION",
    "FILE_SUFFIX",
    "LibraryEntry",
    "PatternLibrary",
    "LibraryError",
    "parse_pattern_library",
    "serialize_pattern_library",
    "parse_pattern_object",
    "pattern_entry_to_dict",
    "serialize_pattern_entry",
    "canonical_json_bytes",
    "timeline_to_dict",
]

SCHEMA_VERSION = 1
FILE_SUFFIX = ".moheat.json"
MAX_NAME_LEN = 64

_COLOR_CUE_RE = re.compile(r"^#(?:[0-9a-fA-F]{3}|[0-9a-fA-F]{6})$")

# type tag -> (pattern class, required field names in document order)
_VARIANTS: dict[str, tuple[type, tuple[str, ...]]] = {
    "cold": (Cold, ("intensity", "duration_ms", "delay_ms")),
    "cold_level": (ColdLevel, ("level", "duration_ms", "delay_ms")),
    "hot": (Hot, ("intensity", "duration_ms", "delay_ms")),
    "hot_level": (HotLevel, ("level", "duration_ms", "delay_ms")),
    "dual": (
        Dual,
        (
            "cold_intensity",
            "cold_duration_ms",
            "hot_intensity",
            "hot_duration_ms",
            "gap_ms",
            "repeats",
            "start_phase",
            "delay_ms",
        ),
    ),
}
_INTENSITY_FIELDS = {"intensity", "cold_intensity", "hot_intensity"}
_META_FIELDS = ("description", "color_cue")


class LibraryError(ValueError):
    """Malformed or invalid library document; ``path`` names the JSON location."""

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path
        self.detail = message


@dataclass(frozen=True)
class LibraryEntry:
    pattern: StimulusPattern
    description: str | None = None
    color_cue: str | None = None


@dataclass
class PatternLibrary:
    patterns: dict[str, LibraryEntry] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _reject_duplicate_keys(pairs: list[tuple[str, object]]) -> dict:
    result: dict = {}
    for key, value in pairs:
        if key in result:
            raise LibraryError(f"duplicate key {key!r}")
        result[key] = value
    return result


def _load_json(data: bytes | str):
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LibraryError(
                f"invalid UTF-8 at byte offset {exc.start}"
            ) from exc
    else:
        text = data
    try:
        return json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        byte_offset = len(text[: exc.pos].encode("utf-8"))
        raise LibraryError(
            f"malformed JSON at byte offset {byte_offset}: {exc.msg}"
        ) from exc


def _want_int(value: object, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise LibraryError("expected an integer", path)
    return value


def _want_number(value: object, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise LibraryError("expected a number", path)
    return float(value)


def _want_str(value: object, path: str) -> str:
    if not isinstance(value, str):
        raise LibraryError("expected a string", path)
    return value


def parse_pattern_object(obj: object, path: str = "pattern") -> LibraryEntry:
    """Parse one pattern JSON object (already decoded) into a validated entry."""
    if not isinstance(obj, dict):
        raise LibraryError("expected an object", path)
    if "type" not in obj:
        raise LibraryError("missing 'type'", path)
    tag = obj["type"]
    if tag not in _VARIANTS:
        raise LibraryError(
            f"unknown pattern type {tag!r} (expected one of {sorted(_VARIANTS)})",
            f"{path}.type",
        )
    cls, fields = _VARIANTS[tag]

    allowed = {"type", *fields, *_META_FIELDS}
    for key in obj:
        if key not in allowed:
            raise LibraryError(f"unknown field {key!r}", f"{path}.{key}")

    kwargs: dict[str, object] = {}
    for name in fields:
        if name not in obj:
            raise LibraryError(f"missing field {name!r}", f"{path}.{name}")
        value = obj[name]
        field_path = f"{path}.{name}"
        if name in _INTENSITY_FIELDS:
            kwargs[name] = _want_number(value, field_path)
        elif name == "start_phase":
            kwargs[name] = _want_str(value, field_path)
        else:
            kwargs[name] = _want_int(value, field_path)
    pattern = cls(**kwargs)

    report = validate_pattern(pattern)
    if not report.ok:
        first = report.violations[0]
        raise LibraryError(first.message, f"{path}.{first.field}")

    description = None
    if "description" in obj:
        description = _want_str(obj["description"], f"{path}.description")
    color_cue = None
    if "color_cue" in obj:
        color_cue = _want_str(obj["color_cue"], f"{path}.color_cue")
        if not _COLOR_CUE_RE.match(color_cue):
            raise LibraryError(
                f"{color_cue!r} is not a CSS hex color", f"{path}.color_cue"
            )
    return LibraryEntry(pattern, description, color_cue)


def parse_pattern_library(data: bytes | str) -> PatternLibrary:
    """Parse a full ``.moheat.json`` document."""
    doc = _load_json(data)
    if not isinstance(doc, dict):
        raise LibraryError("top-level value must be an object")
    for key in doc:
        if key not in ("schema_version", "patterns"):
            raise LibraryError(f"unknown field {key!r}", key)
    if "schema_version" not in doc:
        raise LibraryError("missing 'schema_version'")
    version = _want_int(doc["schema_version"], "schema_version")
    if version != SCHEMA_VERSION:
        raise LibraryError(
            f"unsupported schema_version {version} (this build reads {SCHEMA_VERSION})",
            "schema_version",
        )
    if "patterns" not in doc:
        raise LibraryError("missing 'patterns'")
    raw_patterns = doc["patterns"]
    if not isinstance(raw_patterns, dict):
        raise LibraryError("expected an object", "patterns")

    patterns: dict[str, LibraryEntry] = {}
    for name, raw in raw_patterns.items():
        name_path = f"patterns.{name}"
        if not name or len(name) > MAX_NAME_LEN:
            raise LibraryError(
                f"pattern name must be 1..{MAX_NAME_LEN} characters", name_path
            )
        patterns[name] = parse_pattern_object(raw, name_path)
    return PatternLibrary(patterns=patterns, schema_version=version)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def canonical_json_bytes(value: object) -> bytes:
    """Canonical JSON: sorted keys, compact, UTF-8, shortest-decimal floats."""
    return json.dumps(
        value,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    ).encode("utf-8")


def pattern_entry_to_dict(entry: LibraryEntry) -> dict:
    pattern = entry.pattern
    for tag, (cls, fields) in _VARIANTS.items():
        if type(pattern) is cls:
            out: dict[str, object] = {"type": tag}
            for name in fields:
                value = getattr(pattern, name)
                if name in _INTENSITY_FIELDS:
                    value = float(value)
                out[name] = value
            if entry.description is not None:
                out["description"] = entry.description
            if entry.color_cue is not None:
                out["color_cue"] = entry.color_cue
            return out
    raise TypeError(f"not a stimulus pattern: {type(pattern).__name__}")


def serialize_pattern_entry(entry: LibraryEntry) -> bytes:
    return canonical_json_bytes(pattern_entry_to_dict(entry))


def serialize_pattern_library(lib: PatternLibrary) -> bytes:
    """Serialize a library to canonical bytes; inverse of parse."""
    doc = {
        "schema_version": lib.schema_version,
        "patterns": {
            name: pattern_entry_to_dict(entry) for name, entry in lib.patterns.items()
        },
    }
    return canonical_json_bytes(doc)


def timeline_to_dict(tl: ActionTimeline) -> dict:
    """JSON-ready form of a compiled timeline (CLI output, simulate response)."""
    entries = []
    for entry in tl.entries:
        actions: list[dict] = []
        for action in entry.actions:
            if isinstance(action, SetCold):
                actions.append({"kind": "set_cold", "intensity": float(action.intensity)})
            elif isinstance(action, SetHot):
                actions.append({"kind": "set_hot", "intensity": float(action.intensity)})
            elif isinstance(action, AllOff):
                actions.append({"kind": "all_off"})
        entries.append({"t_ms": entry.t_ms, "actions": actions})
    return {"total_ms": tl.total_ms, "entries": entries}
