"""Benchmark harness: naive vs chunked segmentation over growing clouds.

Scenes are scaled to each target point count while holding the chain's
linear density constant (extent grows with the count), so both occupied
chunks and points grow linearly.  Counters are exact and deterministic per
seed; wall times are medians over repetitions.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, replace

import numpy as np

from .cloud import ClusterSpec, SceneSpec, generate_scene
from .segmentation import SegmentConfig, segment_chunked, segment_naive

DEFAULT_NAIVE_CUTOFF = 100_000

CSV_COLUMNS = ("n", "naive_evals", "chunked_probes", "naive_ms", "chunked_ms")


@dataclass(frozen=True)
class BenchmarkRow:
    n: int
    naive_evals: int | None
    chunked_probes: int
    naive_ms: float | None
    chunked_ms: float
    detected_naive: int | None
    detected_chunked: int


@dataclass(frozen=True)
class BenchmarkTable:
    rows: tuple
    naive_slope: float | None
    chunked_slope: float | None

    def to_csv(self) -> str:
        """CSV with the fixed column schema plus trailing slope comments."""
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for row in self.rows:
            naive_evals = "" if row.naive_evals is None else str(row.naive_evals)
            naive_ms = "" if row.naive_ms is None else f"{row.naive_ms:.3f}"
            buf.write(f"{row.n},{naive_evals},{row.chunked_probes},"
                      f"{naive_ms},{row.chunked_ms:.3f}\n")
        if self.naive_slope is not None:
            buf.write(f"# slope_naive={self.naive_slope:.4f}\n")
        if self.chunked_slope is not None:
            buf.write(f"# slope_chunked={self.chunked_slope:.4f}\n")
        return buf.getvalue()


def default_template(seed: int = 0) -> SceneSpec:
    """Single growing chain, the worst case for the quadratic baseline."""
    return SceneSpec(
        clusters=(ClusterSpec(center=(0.0, 0.0, 2.0), point_count=1000,
                              max_gap=0.04, extent=40.0),),
        noise_points=0,
        seed=seed,
    )


def scale_spec(template: SceneSpec, n: int) -> SceneSpec:
    """Resize a scene recipe to exactly n points.

    Cluster counts and noise keep their original proportions (largest
    remainder apportionment), and each cluster's extent scales with its
    count so chain density stays constant.
    """
    if n < 1:
        raise ValueError("scene size must be positive")
    if n < len(template.clusters):
        raise ValueError(f"cannot fit {len(template.clusters)} clusters into {n} points")
    old_counts = [c.point_count for c in template.clusters]
    total = sum(old_counts) + template.noise_points
    if total == 0:
        raise ValueError("template has no points to scale")
    weights = [c / total for c in old_counts] + (
        [template.noise_points / total] if template.noise_points else [])
    shares = [n * w for w in weights]
    counts = [int(s) for s in shares]
    remainders = sorted(range(len(shares)), key=lambda i: shares[i] - counts[i],
                        reverse=True)
    for i in remainders[:n - sum(counts)]:
        counts[i] += 1
    # clusters need at least one point each; borrow from the largest share
    for i in range(len(old_counts)):
        while counts[i] == 0:
            donor = max(range(len(counts)), key=lambda j: counts[j])
            counts[donor] -= 1
            counts[i] += 1

    clusters = tuple(
        replace(c, point_count=counts[i],
                extent=c.extent * counts[i] / c.point_count)
        for i, c in enumerate(template.clusters)
    )
    noise = counts[-1] if template.noise_points else 0
    return replace(template, clusters=clusters, noise_points=noise,
                   seed=template.seed + n)


def _loglog_slope(ns, counts):
    if len(ns) < 2:
        return None
    return float(np.polyfit(np.log(np.asarray(ns, dtype=np.float64)),
                            np.log(np.asarray(counts, dtype=np.float64)), 1)[0])


def run_benchmark(sizes, spec_template: SceneSpec, config: SegmentConfig,
                  repetitions: int = 1, naive_cutoff: int = DEFAULT_NAIVE_CUTOFF,
                  backend: str | None = None) -> BenchmarkTable:
    """Run both segmenters over scenes of the given ascending sizes.

    The naive baseline is skipped above ``naive_cutoff`` points (its columns
    stay empty); counters must be identical across repetitions and an
    AssertionError flags any drift.
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise ValueError("sizes must be ascending")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")

    rows = []
    for n in sizes:
        cloud, _ = generate_scene(scale_spec(spec_template, n))
        chunk_times, chunk_ops = [], set()
        seg_chunked = None
        for _ in range(repetitions):
            t0 = time.perf_counter()
            seg_chunked, cstats = segment_chunked(cloud, config, return_stats=True,
                                                  backend=backend)
            chunk_times.append((time.perf_counter() - t0) * 1e3)
            chunk_ops.add(cstats.quantizations + cstats.neighbor_probes)
        assert len(chunk_ops) == 1, "chunked counters drifted across repetitions"

        naive_evals = naive_ms = detected_naive = None
        if n <= naive_cutoff:
            naive_times, naive_counts = [], set()
            seg_naive = None
            for _ in range(repetitions):
                t0 = time.perf_counter()
                seg_naive, nstats = segment_naive(cloud, config, return_stats=True,
                                                  backend=backend)
                naive_times.append((time.perf_counter() - t0) * 1e3)
                naive_counts.add(nstats.distance_evals)
            assert len(naive_counts) == 1, "naive counters drifted across repetitions"
            naive_evals = naive_counts.pop()
            naive_ms = float(np.median(naive_times))
            detected_naive = seg_naive.num_objects

        rows.append(BenchmarkRow(
            n=len(cloud),
            naive_evals=naive_evals,
            chunked_probes=chunk_ops.pop(),
            naive_ms=naive_ms,
            chunked_ms=float(np.median(chunk_times)),
            detected_naive=detected_naive,
            detected_chunked=seg_chunked.num_objects,
        ))

    naive_rows = [(r.n, r.naive_evals) for r in rows if r.naive_evals is not None]
    return BenchmarkTable(
        rows=tuple(rows),
        naive_slope=_loglog_slope([n for n, _ in naive_rows],
                                  [c for _, c in naive_rows]),
        chunked_slope=_loglog_slope([r.n for r in rows],
                                    [r.chunked_probes for r in rows]),
    )
