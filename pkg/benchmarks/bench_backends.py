"""Time each hot kernel on the compiled and the numpy backend.

    python benchmarks/bench_backends.py --width 1920 --height 1080 --reps 10
"""
import argparse
import json
import sys
import time

import numpy as np

from vfiqa import _backend
from vfiqa.flow_io import MotionField
from vfiqa.motion import EstimatorConfig, estimate_flow
from vfiqa.spatial import div_metric, divergence_map, vm_epe
from vfiqa.temporal import temporal_smoothness


def median_ms(fn, reps):
    fn()  # warm-up
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1000.0)
    return float(np.median(times))


def cases(width, height, seed=0):
    rng = np.random.default_rng(seed)
    f = MotionField(rng.normal(0, 2, (height, width)), rng.normal(0, 2, (height, width)))
    g = MotionField(rng.normal(0, 2, (height, width)), rng.normal(0, 2, (height, width)))
    a = rng.integers(0, 256, (height, width)).astype(np.uint8)
    b = np.roll(a, (1, 2), axis=(0, 1))
    return {
        "vector_median (vm_epe)": lambda: vm_epe(f),
        "trajectory_residual (ts)": lambda: temporal_smoothness(f, g),
        "divergence_map": lambda: divergence_map(f),
        "divergence_mean (div)": lambda: div_metric(f),
        "sad_search (estimate_flow)": lambda: estimate_flow(a, b, EstimatorConfig()),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=360)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--json", help="write results to this path")
    args = p.parse_args(argv)

    backends = _backend.available()
    results = {}
    for name in backends:
        with _backend.use_backend(name):
            results[name] = {k: median_ms(fn, args.reps) for k, fn in cases(args.width, args.height).items()}

    print(f"kernel timing at {args.width}x{args.height}, median of {args.reps} runs (ms)")
    header = f"{'kernel':28s}" + "".join(f"{b:>12s}" for b in backends)
    if "compiled" in results:
        header += f"{'speedup':>10s}"
    print(header)
    for k in results[backends[0]]:
        line = f"{k:28s}" + "".join(f"{results[b][k]:12.2f}" for b in backends)
        if "compiled" in results:
            line += f"{results['python'][k] / results['compiled'][k]:9.1f}x"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"width": args.width, "height": args.height, "reps": args.reps, "ms": results}, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
