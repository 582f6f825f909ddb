"""Benchmark the compiled kernels against the pure-NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times haversine distances, dwell-run scanning, and mean-shift mode finding on
synthetic workloads sized like one pipeline run, and prints the per-backend
medians plus the speedup ratio.
"""

import argparse
import statistics
import time

import numpy as np

from gpsdemand.kernels import pure

try:
    from gpsdemand import _speedups
except ImportError:
    _speedups = None


def time_call(fn, repeat):
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def make_workloads(rng):
    n = 500_000
    lon = rng.uniform(-87.0, -86.0, n)
    lat = rng.uniform(39.5, 40.5, n)
    lon2 = rng.uniform(-87.0, -86.0, n)
    lat2 = rng.uniform(39.5, 40.5, n)

    # a trace that alternates dwells and moves, like a day of device pings
    m = 200_000
    deg = 1.0 / 111_000.0
    steps = rng.normal(0, 5 * deg, (m, 2))
    steps[rng.random(m) < 0.02] *= 100
    walk = np.cumsum(steps, axis=0)
    t_lon = -86.8 + walk[:, 0]
    t_lat = 40.0 + walk[:, 1]
    t_ts = np.cumsum(rng.integers(30, 300, m)).astype(np.float64)

    # night-ping clusters for home detection
    k = 2_000
    centers = rng.uniform(0, 5_000, (8, 2))
    xy = centers[rng.integers(0, 8, k)] + rng.normal(0, 15, (k, 2))
    return (lon, lat, lon2, lat2), (t_lon, t_lat, t_ts), xy


def backends():
    out = {"pure": pure}
    if _speedups is not None:
        out["compiled"] = _speedups
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timing repetitions")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    hav, trace, xy = make_workloads(rng)
    t_lon, t_lat, t_ts = trace

    cases = {
        "haversine_m (500k pairs)": lambda mod: mod.haversine_m(*hav),
        "stay_runs (200k-ping trace)": lambda mod: mod.stay_runs(
            t_lon, t_lat, t_ts, 100.0, 600.0
        ),
        "mean_shift_modes (2k points)": lambda mod: mod.mean_shift_modes(
            xy, 100.0, 1.0, 100
        ),
    }

    mods = backends()
    if "compiled" not in mods:
        print("compiled extension not available; timing the pure backend only\n")

    width = max(len(name) for name in cases)
    for name, call in cases.items():
        times = {
            label: time_call(lambda m=mod: call(m), args.repeat)
            for label, mod in mods.items()
        }
        line = f"{name:<{width}}  " + "  ".join(
            f"{label}: {seconds * 1e3:8.2f} ms" for label, seconds in times.items()
        )
        if "compiled" in times:
            line += f"  speedup: {times['pure'] / times['compiled']:5.1f}x"
        print(line)


if __name__ == "__main__":
    main()
