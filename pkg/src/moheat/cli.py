"""Command-line entry point: compile, simulate, play, decode, serve.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
`compile` and `simulate` emit deterministic bytes; diagnostics go to stderr
so CSV and JSON output stay pipe-safe.
"""

from __future__ import annotations

import json
import sys
import threading
from pathlib import Path

import click

from .library import (
    LibraryError,
    canonical_json_bytes,
    parse_pattern_object,
    timeline_to_dict,
)
from .patterns import PatternValidationError, compile_pattern
from .protocol import decode_stream
from .scheduler import SystemClock, play
from .service import ServiceConfig, create_app, load_config
from .transport import SerialTransport, TransportError, create_loopback
from .virtual_device import PlantParams, VirtualDevice, run_simulation, trace_to_csv

__all__ = ["main"]


def _load_pattern_file(path: str):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        click.echo(f"error: cannot read {path}: {exc}", err=True)
        raise SystemExit(2)
    try:
        return parse_pattern_object(json.loads(raw.decode("utf-8")), "pattern")
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        click.echo(f"error: {path} is not valid JSON: {exc}", err=True)
        raise SystemExit(2)
    except LibraryError as exc:
        click.echo(f"error: invalid pattern in {path}: {exc}", err=True)
        raise SystemExit(2)


def _write_output(data: bytes, target: str | None) -> None:
    if target is None or target == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(target).write_bytes(data)


@click.group()
def main() -> None:
    """Author, simulate and play non-contact thermal stimulus patterns."""


@main.command("compile")
@click.argument("pattern_file")
@click.option("--out", default=None, help="Write timeline JSON here instead of stdout.")
def compile_cmd(pattern_file: str, out: str | None) -> None:
    """Compile a pattern file into its action timeline."""
    entry = _load_pattern_file(pattern_file)
    try:
        timeline = compile_pattern(entry.pattern)
    except PatternValidationError as exc:
        click.echo(f"error: invalid pattern: {exc}", err=True)
        raise SystemExit(2)
    _write_output(canonical_json_bytes(timeline_to_dict(timeline)) + b"\n", out)


def _plant_params(dt: int, relaxation: float, neutral: float) -> PlantParams:
    params = PlantParams(
        relaxation_per_s=relaxation, t_neutral_c=neutral, dt_ms=dt
    )
    try:
        params.validate()
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(2)
    return params


@main.command("simulate")
@click.argument("pattern_file")
@click.option("--dt", default=10, show_default=True, help="Integration step in ms.")
@click.option(
    "--lambda",
    "relaxation",
    default=0.05,
    show_default=True,
    help="Passive relaxation rate toward neutral, 1/s.",
)
@click.option(
    "--neutral", default=33.0, show_default=True, help="Neutral skin temperature, degC."
)
@click.option("--csv", "csv_out", default="-", help="CSV output path ('-' = stdout).")
def simulate_cmd(
    pattern_file: str, dt: int, relaxation: float, neutral: float, csv_out: str
) -> None:
    """Simulate a pattern and write the temperature trace as CSV."""
    entry = _load_pattern_file(pattern_file)
    params = _plant_params(dt, relaxation, neutral)
    try:
        timeline = compile_pattern(entry.pattern)
        trace = run_simulation(timeline, params)
    except PatternValidationError as exc:
        click.echo(f"error: invalid pattern: {exc}", err=True)
        raise SystemExit(2)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(2)
    _write_output(trace_to_csv(trace), csv_out)


@main.command("play")
@click.argument("pattern_file")
@click.option(
    "--device",
    default="virtual",
    show_default=True,
    help="'virtual' or 'serial:<tty path>'.",
)
@click.option("--dt", default=10, show_default=True, help="Plant step for virtual play, ms.")
def play_cmd(pattern_file: str, device: str, dt: int) -> None:
    """Play a pattern on a device in real time."""
    entry = _load_pattern_file(pattern_file)
    try:
        timeline = compile_pattern(entry.pattern)
    except PatternValidationError as exc:
        click.echo(f"error: invalid pattern: {exc}", err=True)
        raise SystemExit(2)

    if device == "virtual":
        _play_virtual(timeline, dt)
    elif device.startswith("serial:"):
        _play_serial(timeline, device.split(":", 1)[1])
    else:
        click.echo(f"error: unknown device {device!r}", err=True)
        raise SystemExit(2)


def _play_virtual(timeline, dt: int) -> None:
    params = PlantParams(dt_ms=dt)
    virtual = VirtualDevice(params)
    host_end, device_end = create_loopback()
    clock = SystemClock()
    stop_event = threading.Event()
    session = play(timeline, host_end, clock)
    samples = []
    interrupted = False
    try:
        t = 0
        while True:
            clock.wait_until(session.start_ms + t, stop_event)
            session.wait_dispatched(t)
            virtual.feed(device_end.read())
            samples.append(virtual.sample())
            if t >= timeline.total_ms:
                break
            virtual.step()
            t += dt
    except KeyboardInterrupt:
        interrupted = True
        session.stop()
    session.wait(timeout=5.0)
    temps = [s.temp_c for s in samples] or [params.t_neutral_c]
    status = session.status()
    click.echo(
        f"{status.state.value}: {status.elapsed_ms} ms, {len(samples)} samples, "
        f"final {temps[-1]:.4f} degC (min {min(temps):.4f}, max {max(temps):.4f})",
        err=True,
    )
    if interrupted:
        raise SystemExit(1)


def _play_serial(timeline, path: str) -> None:
    try:
        transport = SerialTransport(path)
    except TransportError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(1)
    clock = SystemClock()
    session = play(timeline, transport, clock)
    try:
        while not session.wait(timeout=0.2):
            pass
    except KeyboardInterrupt:
        session.stop()
        click.echo("stopped: device switched off", err=True)
        raise SystemExit(1)
    finally:
        transport.close()
    status = session.status()
    click.echo(f"{status.state.value}: {status.elapsed_ms} ms", err=True)
    if status.state.value == "failed":
        raise SystemExit(1)


@main.command("decode")
@click.argument("hex_string")
def decode_cmd(hex_string: str) -> None:
    """Decode hex-encoded wire bytes into frames (whitespace tolerated)."""
    compact = "".join(hex_string.split())
    try:
        data = bytes.fromhex(compact)
    except ValueError:
        click.echo("error: not a valid hex string", err=True)
        raise SystemExit(2)
    messages, consumed, diagnostics = decode_stream(data)
    for message in messages:
        fields = vars(message)
        if fields:
            detail = " ".join(f"{k}={v}" for k, v in fields.items())
            click.echo(f"{type(message).__name__} {detail}")
        else:
            click.echo(type(message).__name__)
    for diagnostic in diagnostics:
        click.echo(f"diagnostic: {diagnostic}", err=True)
    if consumed < len(data):
        click.echo(
            f"diagnostic: {len(data) - consumed} trailing bytes form an incomplete frame",
            err=True,
        )


@main.command("serve")
@click.option("--host", default=None, help="Bind address (default 127.0.0.1).")
@click.option("--port", default=None, type=int, help="Bind port (default 8787).")
@click.option("--library", default=None, help="Pattern library directory.")
@click.option("--config", "config_file", default=None, help="JSON config file.")
@click.option("--ui", "ui_dir", default=None, help="Directory of built UI assets.")
def serve_cmd(host, port, library, config_file, ui_dir) -> None:
    """Run the authoring/control service until signaled."""
    import uvicorn

    try:
        config = load_config(config_file) if config_file else ServiceConfig()
    except (OSError, ValueError, LibraryError) as exc:
        click.echo(f"error: cannot load config: {exc}", err=True)
        raise SystemExit(2)
    if host:
        config.host = host
    if port:
        config.port = port
    if library:
        config.library_dir = Path(library)
    if ui_dir:
        config.ui_dir = Path(ui_dir)
    elif config.ui_dir is None:
        default_ui = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if default_ui.is_dir():
            config.ui_dir = default_ui

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


if __name__ == "__main__":
    main()
