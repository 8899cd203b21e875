"""Simulate an alternating cold/hot pattern and dump its trace.

Walks the full offline path: author a pattern, compile it to a timeline,
run the skin-temperature plant over it, and print the CSV trace plus a
crude terminal sketch of the temperature curve.
"""

from moheat import Dual, PlantParams, compile_pattern, run_simulation

pattern = Dual(
    cold_intensity=1.0,
    cold_duration_ms=1000,
    hot_intensity=0.8,
    hot_duration_ms=1000,
    gap_ms=250,
    repeats=2,
    start_phase="cold",
    delay_ms=0,
)

timeline = compile_pattern(pattern)
print(f"timeline: {len(timeline.entries)} entries over {timeline.total_ms} ms")
for entry in timeline.entries:
    print(f"  t={entry.t_ms:>5} ms  {', '.join(type(a).__name__ for a in entry.actions)}")

params = PlantParams(relaxation_per_s=0.05)
trace = run_simulation(timeline, params)

temps = [s.temp_c for s in trace.samples]
lo, hi = min(temps), max(temps)
print(f"\nsimulated {len(trace.samples)} samples; temp range {lo:.3f}..{hi:.3f} degC")

width = 60
for sample in trace.samples[:: len(trace.samples) // 30 or 1]:
    frac = (sample.temp_c - lo) / (hi - lo) if hi > lo else 0.5
    bar = int(frac * width)
    marker = "c" if sample.cold_duty else ("h" if sample.hot_duty else ".")
    print(f"{sample.t_ms:>5} ms |{' ' * bar}{marker}  {sample.temp_c:.3f}")
