"""Depth-frame sonification: depth to pitch, column panning, note scheduling.

A frame is downsampled to a small grid, each cell's depth becomes a MIDI
pitch (near = high, far = low, on a power curve that spends more pitch steps
on near depths), horizontal position becomes stereo pan, and vertical
position is encoded by playback order: columns right to left, each column
top to bottom.  Cells with no reading keep their time slot as silence so the
slot index still encodes height.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cloud import DepthFrame


@dataclass(frozen=True)
class SonifyConfig:
    """Depth-to-sound mapping parameters.

    Depths in [start, end] map onto pitches 96 down to 96 - 2*range in
    2-semitone steps.  clamp_near controls whether depths nearer than start
    sound the top note or stay silent; depths beyond end and missing
    readings (0.0) are always silent.
    """

    start: float = 0.3
    end: float = 6.0
    range: int = 30
    grid_width: int = 16
    grid_height: int = 12
    inter_onset: float = 25.0
    note_duration: float = 20.0
    clamp_near: bool = True
    base_velocity: int = 100

    def __post_init__(self):
        if not (self.end > self.start >= 0):
            raise ValueError("need end > start >= 0")
        if self.range < 1:
            raise ValueError("range must be >= 1")
        if 96 - 2 * self.range < 0:
            raise ValueError("range too large: lowest note would fall below MIDI 0")
        if self.grid_width < 1 or self.grid_height < 1:
            raise ValueError("grid dimensions must be >= 1")
        if self.inter_onset <= 0 or self.note_duration <= 0:
            raise ValueError("inter_onset and note_duration must be positive")
        if not 1 <= self.base_velocity <= 127:
            raise ValueError("base_velocity must be in 1..127")


@dataclass(frozen=True)
class NoteEvent:
    """One scheduled note.  Field names double as the JSON-lines schema."""

    pitch: int
    pan: int
    velocity: int
    onset_ms: float
    duration_ms: float
    row: int
    col: int

    def to_json_dict(self) -> dict:
        return {
            "pitch": self.pitch,
            "pan": self.pan,
            "velocity": self.velocity,
            "onset_ms": self.onset_ms,
            "duration_ms": self.duration_ms,
            "row": self.row,
            "col": self.col,
        }


def depth_to_note(x: float, config: SonifyConfig):
    """Map a depth in meters to a MIDI pitch, or None for silence.

    96 at x == start, 96 - 2*range at x == end, non-increasing in between;
    the 0.8 exponent makes near-depth steps narrower than far ones.  x == 0
    (no reading) and x > end are silent; x < start is 96 when clamp_near
    else silent.
    """
    if x == 0.0:
        return None
    if x < config.start:
        return 96 if config.clamp_near else None
    if x > config.end:
        return None
    t = (x - config.start) / (config.end - config.start)
    return 96 - 2 * math.floor(config.range * t ** 0.8)


def downsample(frame: DepthFrame, config: SonifyConfig) -> DepthFrame:
    """Nearest-neighbor resample onto the grid_width x grid_height grid.

    Output cell (r, c) takes the source pixel closest to its cell center
    (ties resolved toward the lower index), so a frame already at grid size
    passes through unchanged.
    """
    h, w = frame.depth.shape
    gh, gw = config.grid_height, config.grid_width
    rows = np.ceil((np.arange(gh) + 0.5) * h / gh - 1.0).astype(np.int64)
    cols = np.ceil((np.arange(gw) + 0.5) * w / gw - 1.0).astype(np.int64)
    return DepthFrame(frame.depth[np.ix_(rows, cols)])


def pan_for_column(col: int, config: SonifyConfig) -> int:
    """Stereo pan for a grid column: 0 hard left, 127 hard right, 64 center."""
    if not 0 <= col < config.grid_width:
        raise ValueError(f"column {col} out of range for width {config.grid_width}")
    if config.grid_width == 1:
        return 64
    return math.floor(127 * col / (config.grid_width - 1) + 0.5)


def velocity_for_object(object_id: int, num_objects: int) -> int:
    """Distinct per-object loudness levels, evenly spaced from 127 down to 40.

    All values are distinct while num_objects <= 88.
    """
    if num_objects < 1:
        raise ValueError("num_objects must be >= 1")
    if not 0 <= object_id < num_objects:
        raise ValueError(f"object_id {object_id} out of range for {num_objects} objects")
    return math.floor(127 - object_id * (127 - 40) / max(1, num_objects - 1) + 0.5)


def schedule_frame(frame: DepthFrame, config: SonifyConfig,
                   cell_objects=None, num_objects: int | None = None) -> list[NoteEvent]:
    """Turn a grid-sized frame into an ordered note stream.

    Traversal: columns from rightmost to leftmost, rows top to bottom.  The
    k-th cell visited owns time slot k (onset k * inter_onset); silent cells
    consume their slot without emitting, preserving slot-encodes-height.

    cell_objects, when given, is a grid of per-cell object ids (-1 = none)
    matching the frame shape; cells with an id get velocity_for_object
    levels, the rest use base_velocity.
    """
    gh, gw = config.grid_height, config.grid_width
    if frame.depth.shape != (gh, gw):
        raise ValueError(
            f"frame is {frame.depth.shape[1]}x{frame.depth.shape[0]}, "
            f"expected the {gw}x{gh} sonification grid; downsample first"
        )
    ids = None
    if cell_objects is not None:
        ids = np.asarray(cell_objects, dtype=np.int64)
        if ids.shape != (gh, gw):
            raise ValueError(f"cell_objects shape {ids.shape} does not match grid ({gh}, {gw})")
        if num_objects is None:
            top = int(ids.max()) if ids.size else -1
            num_objects = top + 1

    events: list[NoteEvent] = []
    slot = 0
    for col in range(gw - 1, -1, -1):
        pan = pan_for_column(col, config)
        for row in range(gh):
            pitch = depth_to_note(float(frame.depth[row, col]), config)
            if pitch is not None:
                if ids is not None and ids[row, col] >= 0:
                    velocity = velocity_for_object(int(ids[row, col]), num_objects)
                else:
                    velocity = config.base_velocity
                events.append(NoteEvent(
                    pitch=pitch,
                    pan=pan,
                    velocity=velocity,
                    onset_ms=slot * config.inter_onset,
                    duration_ms=config.note_duration,
                    row=row,
                    col=col,
                ))
            slot += 1
    return events
