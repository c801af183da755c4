"""Compare the compiled and pure-Python squared-EDT backends.

    python benchmarks/bench_kernels.py [--sizes 32,64,96] [--repeat 3]

Prints one CSV row per (backend, size) with the median time and checks that
both backends return identical arrays.
"""

import argparse
import statistics
import sys
import time

import numpy as np

from segdist import _kernels


def time_backend(backend, source, spacing, repeat):
    samples = []
    out = None
    for _ in range(repeat):
        start = time.perf_counter()
        out = _kernels.squared_edt(source, spacing, backend)
        samples.append(time.perf_counter() - start)
    return statistics.median(samples), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="32,64,96", help="cube edge lengths")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--density", type=float, default=0.01, help="fraction of source elements")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = sorted(_kernels.BACKENDS)
    if "compiled" not in backends:
        print("compiled backend not built; timing the Python fallback only", file=sys.stderr)
    rng = np.random.default_rng(args.seed)
    spacing = (0.5, 0.5, 2.0)
    print("size,backend,median_s,speedup_vs_python")
    for n in (int(s) for s in args.sizes.split(",")):
        source = rng.random((n, n, n)) < args.density
        results = {b: time_backend(b, source, spacing, args.repeat) for b in backends}
        if len(results) == 2 and not np.array_equal(results["compiled"][1], results["python"][1]):
            raise SystemExit(f"backends disagree at size {n}")
        base = results["python"][0]
        for b, (t, _) in results.items():
            print(f"{n}^3,{b},{t:.4f},{base / t:.1f}")


if __name__ == "__main__":
    main()
