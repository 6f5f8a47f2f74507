"""Point-cloud object segmentation.

Two interchangeable algorithms over the same partition contract:

* ``segment_chunked`` -- quantize points onto a cubic chunk grid, then
  flood-fill occupied chunks like squares in a grid.  Linear work: no
  pairwise distances, no square roots, at most ``connectivity`` neighbor
  probes per occupied chunk.
* ``segment_naive`` -- the quadratic baseline: BFS threshold clustering with
  one distance evaluation per (dequeued point, other point) pair, exactly
  n*(n-1) evaluations per call.  Serves as the correctness oracle.

Hot loops live in a compiled extension (``echomap._kernels_cy``) with a pure
NumPy fallback; set ECHOMAP_BACKEND=py or =c to force one at import time.
Both produce bit-identical labels and counters.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels_py
from .cloud import PointCloud

_FORCED = os.environ.get("ECHOMAP_BACKEND", "auto").lower()
if _FORCED not in ("auto", "c", "py"):
    raise RuntimeError(f"ECHOMAP_BACKEND must be 'auto', 'c', or 'py', not {_FORCED!r}")

_kernels_cy = None
if _FORCED in ("auto", "c"):
    try:
        from . import _kernels_cy  # type: ignore[no-redef]
    except ImportError:
        if _FORCED == "c":
            raise
        _kernels_cy = None

_DEFAULT_BACKEND = _kernels_cy if _kernels_cy is not None else _kernels_py
_BACKENDS = {"py": _kernels_py}
if _kernels_cy is not None:
    _BACKENDS["c"] = _kernels_cy


def active_backend() -> str:
    """Name of the kernel backend used by default: 'c' or 'python'."""
    return _DEFAULT_BACKEND.name


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def _resolve_backend(backend):
    if backend is None:
        return _DEFAULT_BACKEND
    try:
        return _BACKENDS[backend]
    except KeyError:
        raise ValueError(
            f"unknown backend {backend!r}; available: {available_backends()}"
        ) from None


class ChunkKey(NamedTuple):
    """Quantized chunk coordinates: each axis rounded to the nearest multiple
    of the chunk size, ties toward +inf."""

    i: int
    j: int
    k: int


def chunk_key(x: float, y: float, z: float, chunk_size: float) -> ChunkKey:
    if chunk_size <= 0:
        raise ValueError("chunk_size must be > 0")
    return ChunkKey(
        int(np.floor(x / chunk_size + 0.5)),
        int(np.floor(y / chunk_size + 0.5)),
        int(np.floor(z / chunk_size + 0.5)),
    )


@dataclass(frozen=True)
class ChunkGrid:
    """Spatial hash from chunk keys to the point indices they contain."""

    chunk_size: float
    buckets: dict

    def __len__(self) -> int:
        return len(self.buckets)


def build_chunk_grid(cloud: PointCloud, chunk_size: float) -> ChunkGrid:
    """Assign every point to its chunk; linear in the number of points."""
    if chunk_size <= 0:
        raise ValueError("chunk_size must be > 0")
    if len(cloud) == 0:
        return ChunkGrid(chunk_size, {})
    keys = np.floor(cloud.xyz / chunk_size + 0.5).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(inverse, kind="stable")
    counts = np.bincount(inverse, minlength=uniq.shape[0])
    bounds = np.concatenate([[0], np.cumsum(counts)])
    buckets = {
        ChunkKey(*key): order[bounds[u]:bounds[u + 1]]
        for u, key in enumerate(uniq.tolist())
    }
    return ChunkGrid(chunk_size, buckets)


@dataclass(frozen=True)
class SegmentConfig:
    """Knobs shared by both segmenters.

    chunk_size drives the chunked variant, threshold the naive one.
    min_points_per_object, when positive, reassigns any object smaller than
    the floor to a discard set (label -1) -- small-artifact suppression.
    """

    chunk_size: float = 0.1
    threshold: float = 0.05
    connectivity: int = 26
    min_points_per_object: int = 0

    def __post_init__(self):
        if self.chunk_size <= 0:
            raise ValueError("chunk_size must be > 0")
        if self.threshold <= 0:
            raise ValueError("threshold must be > 0")
        if self.connectivity not in (6, 26):
            raise ValueError("connectivity must be 6 or 26")
        if self.min_points_per_object < 0:
            raise ValueError("min_points_per_object must be non-negative")


@dataclass(frozen=True)
class Segmentation:
    """A dense labeling of point indices into objects.

    labels[i] is the object id of point i (0..num_objects-1), or -1 when the
    point was discarded by the min-points filter.
    """

    labels: np.ndarray
    num_objects: int

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        if self.num_objects < 0:
            raise ValueError("num_objects must be non-negative")
        if self.num_objects > labels.shape[0]:
            raise ValueError("more objects than points")
        if labels.size:
            if labels.min() < -1 or labels.max() >= self.num_objects:
                raise ValueError("labels must lie in {-1} U [0, num_objects)")
            used = np.unique(labels[labels >= 0])
            if used.shape[0] != self.num_objects:
                raise ValueError("every object id must label at least one point")
        elif self.num_objects != 0:
            raise ValueError("empty labeling cannot have objects")

    @property
    def discarded(self) -> np.ndarray:
        """Indices of points dropped by the min-points filter, ascending."""
        return np.flatnonzero(self.labels < 0)

    def to_json_dict(self) -> dict:
        return {
            "num_objects": int(self.num_objects),
            "labels": self.labels.tolist(),
            "discarded": self.discarded.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Segmentation":
        return cls(np.asarray(data["labels"], dtype=np.int64), int(data["num_objects"]))


class NaiveStats(NamedTuple):
    """Exact work counter for segment_naive."""

    distance_evals: int


class ChunkedStats(NamedTuple):
    """Exact work counters for segment_chunked."""

    quantizations: int
    neighbor_probes: int
    occupied_chunks: int


def _apply_min_points(raw_labels: np.ndarray, num_raw: int, min_points: int):
    if min_points <= 1 or num_raw == 0:
        return raw_labels, num_raw
    sizes = np.bincount(raw_labels, minlength=num_raw)
    kept = sizes >= min_points
    remap = np.full(num_raw, -1, dtype=np.int64)
    remap[kept] = np.arange(int(kept.sum()), dtype=np.int64)
    return remap[raw_labels], int(kept.sum())


def segment_chunked(cloud: PointCloud, config: SegmentConfig,
                    return_stats: bool = False, backend: str | None = None):
    """Chunk-grid floodfill segmentation; linear in the point count.

    Occupied chunks are flooded breadth-first under the configured
    connectivity (26 = faces+edges+corners, 6 = faces); every point inherits
    its chunk's component id.  Seeds are visited in lexicographic key order,
    so labels are deterministic.  With ``return_stats=True`` also returns a
    ChunkedStats with exact quantization / neighbor-probe counts.
    """
    kernels = _resolve_backend(backend)
    labels, num_raw, occupied, probes = kernels.chunked_components(
        cloud.xyz, config.chunk_size, config.connectivity
    )
    labels, num_objects = _apply_min_points(labels, num_raw, config.min_points_per_object)
    seg = Segmentation(labels, num_objects)
    if return_stats:
        return seg, ChunkedStats(len(cloud), int(probes), int(occupied))
    return seg


def segment_naive(cloud: PointCloud, config: SegmentConfig,
                  return_stats: bool = False, backend: str | None = None):
    """Quadratic threshold clustering (the baseline oracle).

    BFS over points: a dequeued point evaluates its squared distance to every
    other point and captures the unassigned ones strictly closer than the
    threshold.  Each point is dequeued exactly once, so the eval counter is
    always n*(n-1).
    """
    kernels = _resolve_backend(backend)
    labels, num_raw, evals = kernels.naive_components(cloud.xyz, config.threshold)
    labels, num_objects = _apply_min_points(labels, num_raw, config.min_points_per_object)
    seg = Segmentation(labels, num_objects)
    if return_stats:
        return seg, NaiveStats(int(evals))
    return seg


def extract_object(cloud: PointCloud, seg: Segmentation, object_id: int) -> PointCloud:
    """Sub-cloud of the points labeled ``object_id``, in original order."""
    if not 0 <= object_id < seg.num_objects:
        raise IndexError(
            f"object_id {object_id} out of range for {seg.num_objects} objects"
        )
    if seg.labels.shape[0] != len(cloud):
        raise ValueError("segmentation does not match cloud size")
    return PointCloud(cloud.xyz[seg.labels == object_id], frame_id=cloud.frame_id)


def partition_sets(seg: Segmentation) -> frozenset:
    """The labeling as a set of point-index sets (discarded points excluded).

    Label-id agnostic: two segmentations are equivalent partitions iff their
    partition_sets compare equal.
    """
    groups = [frozenset(np.flatnonzero(seg.labels == obj).tolist())
              for obj in range(seg.num_objects)]
    return frozenset(groups)
