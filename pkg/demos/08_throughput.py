# Wall-clock throughput of the step loop, headless and rendered.
#
# Run: python3 demos/08_throughput.py
# (Same numbers via the CLI: buildzone bench --steps 100000 --render off)

from buildzone.bench import format_report, run_benchmark

headless = run_benchmark(steps=50_000, render=False, seed=0)
print("headless random-policy stepping")
print(format_report(headless))

rendered = run_benchmark(steps=5_000, render=True, seed=0)
print("\nwith the 64x64 renderer on every step")
print(format_report(rendered))

# The action stream is seed-deterministic and renderer-independent, so both
# runs end their episodes on identical grids.
assert headless["final_grids"][: len(rendered["final_grids"])] == rendered["final_grids"]
print("\nrendered and headless episodes built identical grids")
