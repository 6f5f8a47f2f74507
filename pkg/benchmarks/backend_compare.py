"""Compare the compiled kernel backend against the pure NumPy fallback.

Runs both segmenters on identical scenes through each backend, checks that
labels and counters match bit-for-bit, and prints a timing table.

    python benchmarks/backend_compare.py --sizes 1000,4000,16000 --reps 3
"""

import argparse
import sys
import time

import numpy as np

from echomap import SegmentConfig, available_backends, generate_scene, segment_chunked, segment_naive
from echomap.bench import default_template, scale_spec


def median_time(fn, reps):
    times = []
    result = None
    for _ in range(reps):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times)) * 1e3, result


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="1000,4000,16000",
                        help="comma-separated point counts")
    parser.add_argument("--reps", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--naive-cutoff", type=int, default=20000,
                        help="skip the quadratic baseline above this size")
    args = parser.parse_args(argv)

    if "c" not in available_backends():
        print("compiled backend not built; nothing to compare", file=sys.stderr)
        return 1

    sizes = [int(s) for s in args.sizes.split(",")]
    config = SegmentConfig(chunk_size=0.1, threshold=0.05)
    template = default_template(seed=args.seed)

    print(f"{'n':>8} {'algorithm':>9} {'c_ms':>10} {'py_ms':>10} {'speedup':>8}")
    for n in sizes:
        cloud, _ = generate_scene(scale_spec(template, n))
        jobs = [("chunked", segment_chunked)]
        if n <= args.naive_cutoff:
            jobs.append(("naive", segment_naive))
        for label, segment in jobs:
            c_ms, (seg_c, stats_c) = median_time(
                lambda: segment(cloud, config, return_stats=True, backend="c"),
                args.reps)
            py_ms, (seg_p, stats_p) = median_time(
                lambda: segment(cloud, config, return_stats=True, backend="py"),
                args.reps)
            if not np.array_equal(seg_c.labels, seg_p.labels) or stats_c != stats_p:
                print(f"backend mismatch at n={n} ({label})", file=sys.stderr)
                return 2
            print(f"{n:>8} {label:>9} {c_ms:>10.2f} {py_ms:>10.2f} "
                  f"{py_ms / max(c_ms, 1e-9):>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
