"""moheat: authoring, simulation and device control for non-contact thermal feedback.

The pipeline: author a :mod:`~moheat.patterns` stimulus, compile it to an
action timeline, play it through the :mod:`~moheat.scheduler` over a
:mod:`~moheat.transport` speaking the :mod:`~moheat.protocol` wire format,
against either real hardware or the :mod:`~moheat.virtual_device` plant.
:mod:`~moheat.service` wraps it all in a local HTTP/WebSocket API.
"""

from .patterns import (
    ActionTimeline,
    AllOff,
    Cold,
    ColdLevel,
    Dual,
    Hot,
    HotLevel,
    PatternValidationError,
    SetCold,
    SetHot,
    StimulusPattern,
    TimedActionSet,
    ValidationReport,
    compile_pattern,
    level_to_intensity,
    validate_pattern,
)
from .library import (
    LibraryEntry,
    LibraryError,
    PatternLibrary,
    parse_pattern_library,
    serialize_pattern_library,
)
from .scheduler import Session, SystemClock, VirtualClock, play
from .transport import SerialTransport, create_loopback
from .virtual_device import (
    PlantParams,
    PlantState,
    TemperatureTrace,
    VirtualDevice,
    plant_derivative,
    plant_step,
    run_simulation,
    trace_to_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ActionTimeline",
    "AllOff",
    "Cold",
    "ColdLevel",
    "Dual",
    "Hot",
    "HotLevel",
    "PatternValidationError",
    "SetCold",
    "SetHot",
    "StimulusPattern",
    "TimedActionSet",
    "ValidationReport",
    "compile_pattern",
    "level_to_intensity",
    "validate_pattern",
    "LibraryEntry",
    "LibraryError",
    "PatternLibrary",
    "parse_pattern_library",
    "serialize_pattern_library",
    "Session",
    "SystemClock",
    "VirtualClock",
    "play",
    "SerialTransport",
    "create_loopback",
    "PlantParams",
    "PlantState",
    "TemperatureTrace",
    "VirtualDevice",
    "plant_derivative",
    "plant_step",
    "run_simulation",
    "trace_to_csv",
    "__version__",
]
