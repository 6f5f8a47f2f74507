"""echomap: depth-frame sonification and fast point-cloud segmentation.

Pipelines supported end to end: synthetic or file-loaded point clouds,
chunk-grid O(n) floodfill segmentation (with the quadratic threshold
baseline as oracle), depth-to-pitch sonification, Standard MIDI File and
WAV output, evaluation metrics, and a scaling benchmark harness.
"""

from .cloud import (
    ClusterSpec,
    DepthFrame,
    DepthSizeError,
    PlyError,
    PlyHeaderError,
    PlyReport,
    PlyTruncatedError,
    PlyUnsupportedError,
    Point3,
    PointCloud,
    SceneSpec,
    depth_frame_to_cloud,
    generate_scene,
    parse_depth_raw,
    parse_ply,
    project_cloud_to_frame,
    write_ply,
)
from .segmentation import (
    ChunkGrid,
    ChunkKey,
    ChunkedStats,
    NaiveStats,
    SegmentConfig,
    Segmentation,
    active_backend,
    available_backends,
    build_chunk_grid,
    chunk_key,
    extract_object,
    partition_sets,
    segment_chunked,
    segment_naive,
)
from .sonify import (
    NoteEvent,
    SonifyConfig,
    depth_to_note,
    downsample,
    pan_for_column,
    schedule_frame,
    velocity_for_object,
)
from .midi import (
    MidiDocument,
    MidiMessage,
    encode_vlq,
    events_to_midi,
    render_wav,
    write_smf,
)
from .metrics import FrameResult, MetricsReport, accuracy, pearson_r
from .bench import BenchmarkRow, BenchmarkTable, run_benchmark

__version__ = "0.1.0"

__all__ = [
    "BenchmarkRow",
    "BenchmarkTable",
    "ChunkGrid",
    "ChunkKey",
    "ChunkedStats",
    "ClusterSpec",
    "DepthFrame",
    "DepthSizeError",
    "FrameResult",
    "MetricsReport",
    "MidiDocument",
    "MidiMessage",
    "NaiveStats",
    "NoteEvent",
    "PlyError",
    "PlyHeaderError",
    "PlyReport",
    "PlyTruncatedError",
    "PlyUnsupportedError",
    "Point3",
    "PointCloud",
    "SceneSpec",
    "SegmentConfig",
    "Segmentation",
    "SonifyConfig",
    "accuracy",
    "active_backend",
    "available_backends",
    "build_chunk_grid",
    "chunk_key",
    "depth_frame_to_cloud",
    "depth_to_note",
    "downsample",
    "encode_vlq",
    "events_to_midi",
    "extract_object",
    "generate_scene",
    "pan_for_column",
    "parse_depth_raw",
    "parse_ply",
    "partition_sets",
    "pearson_r",
    "project_cloud_to_frame",
    "render_wav",
    "run_benchmark",
    "schedule_frame",
    "segment_chunked",
    "segment_naive",
    "velocity_for_object",
    "write_ply",
    "write_smf",
]
