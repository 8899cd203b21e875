"""Play a pattern against the virtual device over the real wire protocol.

Unlike simulate_alternating.py this exercises the whole stack: the
scheduler dispatches timeline entries on a deterministic virtual clock,
frames travel through the loopback transport, the emulated device decodes
them into duty registers, and the plant integrates in lockstep.  The
resulting trace is identical to the offline simulation, byte for byte.
"""

from moheat import (
    HotLevel,
    PlantParams,
    VirtualClock,
    VirtualDevice,
    compile_pattern,
    create_loopback,
    play,
    run_simulation,
    trace_to_csv,
)
from moheat.virtual_device import TemperatureTrace

pattern = HotLevel(level=4, duration_ms=1500, delay_ms=300)
timeline = compile_pattern(pattern)
params = PlantParams()

clock = VirtualClock()
host_end, device_end = create_loopback()
device = VirtualDevice(params)
session = play(timeline, host_end, clock)

samples = []
acks = 0
t = 0
while True:
    clock.advance_to(t)
    replies = device.feed(device_end.read())
    acks += replies.count(0xAA)  # each reply frame starts with the SOF byte
    samples.append(device.sample())
    if t >= timeline.total_ms:
        break
    device.step()
    t += params.dt_ms

session.wait(timeout=5)
print(f"session finished: {session.state.value}")
print(f"device counters: ok={device.device.frames_ok} bad={device.device.frames_bad}, replies seen: {acks}")

live = trace_to_csv(TemperatureTrace(tuple(samples), params.dt_ms))
offline = trace_to_csv(run_simulation(timeline, params))
print(f"live trace equals offline simulation: {live == offline}")
print("\nlast five rows:")
for line in live.decode().splitlines()[-5:]:
    print(" ", line)
