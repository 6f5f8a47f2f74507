"""Evaluation metrics: Pearson correlation of object counts and exact-count
accuracy across frames."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


def pearson_r(xs: Sequence[float], ys: Sequence[float]):
    """Sample Pearson correlation, or None when either series is constant.

    Uses the standard definition: covariance over the product of the two
    standard deviations (each sum of squares under its own square root).
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"series lengths differ: {x.shape[0]} vs {y.shape[0]}")
    if x.size < 2:
        raise ValueError("need at least 2 samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(np.dot(dx, dx)))
    sy = math.sqrt(float(np.dot(dy, dy)))
    if sx == 0.0 or sy == 0.0:
        return None
    return float(np.dot(dx, dy)) / (sx * sy)


@dataclass(frozen=True)
class FrameResult:
    """Per-frame outcome: expected vs detected objects plus work counters.

    Counters are the segmenters' exact instrumented counts, not estimates;
    chunk_probes is quantizations + neighbor probes, the chunked algorithm's
    operation total.
    """

    frame_id: int
    expected_objects: int
    detected_objects: int
    distance_evals: int = 0
    chunk_probes: int = 0
    wall_time_us: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "frame_id": self.frame_id,
            "expected_objects": self.expected_objects,
            "detected_objects": self.detected_objects,
            "distance_evals": self.distance_evals,
            "chunk_probes": self.chunk_probes,
            "wall_time_us": self.wall_time_us,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "FrameResult":
        return cls(
            frame_id=int(data["frame_id"]),
            expected_objects=int(data["expected_objects"]),
            detected_objects=int(data["detected_objects"]),
            distance_evals=int(data.get("distance_evals", 0)),
            chunk_probes=int(data.get("chunk_probes", 0)),
            wall_time_us=float(data.get("wall_time_us", 0.0)),
        )


def accuracy(results: Sequence[FrameResult]) -> float:
    """Fraction of frames whose detected count matches the expected count."""
    if not results:
        raise ValueError("accuracy over zero frames is undefined")
    exact = sum(1 for r in results if r.detected_objects == r.expected_objects)
    return exact / len(results)


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate over frames: accuracy, count correlation, per-frame rows.

    pearson_r is None exactly when either count series has zero variance
    (including the single-frame case).
    """

    pearson_r: float | None
    accuracy: float
    per_frame: tuple

    def __post_init__(self):
        object.__setattr__(self, "per_frame", tuple(self.per_frame))

    @classmethod
    def from_frames(cls, frames: Sequence[FrameResult]) -> "MetricsReport":
        frames = tuple(frames)
        if len(frames) >= 2:
            r = pearson_r([f.expected_objects for f in frames],
                          [f.detected_objects for f in frames])
        else:
            r = None
        return cls(pearson_r=r, accuracy=accuracy(frames), per_frame=frames)

    def to_json_dict(self) -> dict:
        return {
            "pearson_r": self.pearson_r,
            "accuracy": self.accuracy,
            "per_frame": [f.to_json_dict() for f in self.per_frame],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "MetricsReport":
        return cls(
            pearson_r=data["pearson_r"],
            accuracy=float(data["accuracy"]),
            per_frame=tuple(FrameResult.from_json_dict(f) for f in data["per_frame"]),
        )
