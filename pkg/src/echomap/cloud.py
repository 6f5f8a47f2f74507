"""Point-cloud and depth-frame types, PLY / raw-depth IO, synthetic scenes.

Point clouds are stored as (N, 3) float64 arrays in meters.  Depth frames
are (H, W) float64 grids in meters where 0.0 means "no reading".  Both are
frozen after construction and safe to share between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np


class PlyError(ValueError):
    """Base error for malformed or unsupported PLY input."""


class PlyHeaderError(PlyError):
    """The PLY header is missing, malformed, or declares no usable vertices."""


class PlyUnsupportedError(PlyError):
    """The PLY file uses a format variant this reader does not handle."""


class PlyTruncatedError(PlyError):
    """The PLY body ends before all declared vertices."""


class DepthSizeError(ValueError):
    """Raw depth buffer length does not match width * height * 2."""


class Point3(NamedTuple):
    x: float
    y: float
    z: float


def _frozen_array(values, dtype, shape_hint: str) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.flags.writeable or not arr.flags.c_contiguous:
        arr = np.ascontiguousarray(arr).copy()
    arr.setflags(write=False)
    if shape_hint == "points" and (arr.ndim != 2 or arr.shape[1] != 3):
        raise ValueError(f"expected an (N, 3) coordinate array, got shape {arr.shape}")
    if shape_hint == "grid" and arr.ndim != 2:
        raise ValueError(f"expected a 2-D depth grid, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class PointCloud:
    """Ordered set of 3-D points in meters.

    Index i refers to the same point for the cloud's lifetime; the backing
    array is read-only.
    """

    xyz: np.ndarray
    frame_id: int = 0

    def __post_init__(self):
        arr = _frozen_array(self.xyz if np.asarray(self.xyz).size else np.empty((0, 3)),
                            np.float64, "points")
        if arr.size and not np.isfinite(arr).all():
            raise ValueError("point coordinates must be finite")
        if self.frame_id < 0:
            raise ValueError("frame_id must be non-negative")
        object.__setattr__(self, "xyz", arr)

    @classmethod
    def from_points(cls, points, frame_id: int = 0) -> "PointCloud":
        rows = [(p[0], p[1], p[2]) for p in points]
        return cls(np.array(rows, dtype=np.float64).reshape(len(rows), 3), frame_id)

    def __len__(self) -> int:
        return self.xyz.shape[0]

    def __iter__(self) -> Iterator[Point3]:
        for row in self.xyz:
            yield Point3(float(row[0]), float(row[1]), float(row[2]))

    def point(self, index: int) -> Point3:
        row = self.xyz[index]
        return Point3(float(row[0]), float(row[1]), float(row[2]))


@dataclass(frozen=True)
class DepthFrame:
    """Dense W x H grid of depth readings in meters; 0.0 marks a missing sample."""

    depth: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.depth, np.float64, "grid")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("depth frame must be at least 1x1")
        if not np.isfinite(arr).all():
            raise ValueError("depth values must be finite")
        if (arr < 0).any():
            raise ValueError("depth values must be non-negative")
        object.__setattr__(self, "depth", arr)

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


@dataclass(frozen=True)
class ClusterSpec:
    """One synthetic object: a jittered chain of points confined to a cubic box.

    Consecutive chain points are strictly closer than max_gap, so every point
    of the cluster has a neighbor within max_gap by construction.
    """

    center: tuple[float, float, float]
    point_count: int
    max_gap: float
    extent: float

    def __post_init__(self):
        if self.point_count < 1:
            raise ValueError("point_count must be positive")
        if self.max_gap <= 0:
            raise ValueError("max_gap must be > 0")
        if self.extent <= 0:
            raise ValueError("extent must be > 0")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


_DEFAULT_NOISE_REGION = ((-5.0, -5.0, 0.0), (5.0, 5.0, 10.0))


@dataclass(frozen=True)
class SceneSpec:
    """Deterministic recipe for a synthetic scene: clusters plus uniform noise."""

    clusters: tuple[ClusterSpec, ...] = ()
    noise_points: int = 0
    noise_region: tuple[tuple[float, float, float], tuple[float, float, float]] = _DEFAULT_NOISE_REGION
    seed: int = 0

    def __post_init__(self):
        clusters = tuple(c if isinstance(c, ClusterSpec) else ClusterSpec(**c)
                         for c in self.clusters)
        object.__setattr__(self, "clusters", clusters)
        if self.noise_points < 0:
            raise ValueError("noise_points must be non-negative")
        lo, hi = self.noise_region
        lo = tuple(float(v) for v in lo)
        hi = tuple(float(v) for v in hi)
        if any(h < l for l, h in zip(lo, hi)):
            raise ValueError("noise_region upper corner must not be below lower corner")
        object.__setattr__(self, "noise_region", (lo, hi))

    @classmethod
    def from_json_dict(cls, data: dict, default_seed: int = 0) -> "SceneSpec":
        clusters = tuple(
            ClusterSpec(
                center=tuple(c["center"]),
                point_count=int(c["point_count"]),
                max_gap=float(c["max_gap"]),
                extent=float(c["extent"]),
            )
            for c in data.get("clusters", [])
        )
        region = data.get("noise_region")
        return cls(
            clusters=clusters,
            noise_points=int(data.get("noise_points", 0)),
            noise_region=(tuple(region[0]), tuple(region[1])) if region else _DEFAULT_NOISE_REGION,
            seed=int(data.get("seed", default_seed)),
        )

    def to_json_dict(self) -> dict:
        return {
            "clusters": [
                {
                    "center": list(c.center),
                    "point_count": c.point_count,
                    "max_gap": c.max_gap,
                    "extent": c.extent,
                }
                for c in self.clusters
            ],
            "noise_points": self.noise_points,
            "noise_region": [list(self.noise_region[0]), list(self.noise_region[1])],
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, text: str, default_seed: int = 0) -> "SceneSpec":
        return cls.from_json_dict(json.loads(text), default_seed=default_seed)


class PlyReport(NamedTuple):
    """Outcome of a PLY parse: how many vertices were read and dropped."""

    vertex_count: int
    dropped_non_finite: int
    format: str


_PLY_SCALARS = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


class _PlyElement:
    def __init__(self, name: str, count: int):
        self.name = name
        self.count = count
        self.properties: list[tuple[str, str]] = []  # (type or "list", name)

    @property
    def has_list(self) -> bool:
        return any(t == "list" for t, _ in self.properties)

    @property
    def stride(self) -> int:
        return sum(np.dtype(_PLY_SCALARS[t]).itemsize for t, _ in self.properties)


def _parse_ply_header(data: bytes):
    end = data.find(b"end_header")
    if end < 0:
        raise PlyHeaderError("no end_header line found")
    newline = data.find(b"\n", end)
    if newline < 0:
        raise PlyHeaderError("end_header line is not terminated")
    body_offset = newline + 1
    header_lines = data[:end].decode("ascii", errors="replace").splitlines()
    if not header_lines or header_lines[0].strip() != "ply":
        raise PlyHeaderError("file does not start with a 'ply' magic line")

    fmt = None
    elements: list[_PlyElement] = []
    for raw in header_lines[1:]:
        line = raw.strip()
        if not line or line.startswith(("comment", "obj_info")):
            continue
        tokens = line.split()
        keyword = tokens[0]
        if keyword == "format":
            if len(tokens) != 3:
                raise PlyHeaderError(f"malformed format line: {line!r}")
            if tokens[1] == "ascii":
                fmt = "ascii"
            elif tokens[1] == "binary_little_endian":
                fmt = "binary_little_endian"
            elif tokens[1] == "binary_big_endian":
                raise PlyUnsupportedError("binary_big_endian PLY is not supported")
            else:
                raise PlyHeaderError(f"unknown PLY format {tokens[1]!r}")
        elif keyword == "element":
            if len(tokens) != 3:
                raise PlyHeaderError(f"malformed element line: {line!r}")
            try:
                count = int(tokens[2])
            except ValueError:
                raise PlyHeaderError(f"non-integer element count in {line!r}") from None
            if count < 0:
                raise PlyHeaderError(f"negative element count in {line!r}")
            elements.append(_PlyElement(tokens[1], count))
        elif keyword == "property":
            if not elements:
                raise PlyHeaderError("property declared before any element")
            if tokens[1] == "list":
                if len(tokens) != 5:
                    raise PlyHeaderError(f"malformed list property: {line!r}")
                elements[-1].properties.append(("list", tokens[4]))
            else:
                if len(tokens) != 3:
                    raise PlyHeaderError(f"malformed property line: {line!r}")
                if tokens[1] not in _PLY_SCALARS:
                    raise PlyUnsupportedError(f"unsupported property type {tokens[1]!r}")
                elements[-1].properties.append((tokens[1], tokens[2]))
        else:
            raise PlyHeaderError(f"unknown header keyword {keyword!r}")

    if fmt is None:
        raise PlyHeaderError("header is missing a format line")
    return fmt, elements, body_offset


def _vertex_layout(element: _PlyElement):
    names = [n for _, n in element.properties]
    for coord in ("x", "y", "z"):
        if coord not in names:
            raise PlyHeaderError(f"vertex element is missing property {coord!r}")
        ptype = element.properties[names.index(coord)][0]
        if ptype not in ("float", "float32", "double", "float64"):
            raise PlyHeaderError(f"vertex property {coord!r} must be float32 or float64, got {ptype!r}")
    return names.index("x"), names.index("y"), names.index("z")


def parse_ply(data: bytes, return_report: bool = False):
    """Parse an ASCII or binary_little_endian PLY file into a PointCloud.

    Vertex properties beyond x/y/z are parsed and ignored.  Vertices with a
    NaN or infinite coordinate are dropped; the drop count is available via
    ``return_report=True``, which makes the call return ``(cloud, report)``.

    Raises PlyHeaderError, PlyUnsupportedError, or PlyTruncatedError on bad
    input, all subclasses of PlyError.
    """
    fmt, elements, body_offset = _parse_ply_header(data)
    vertex = next((e for e in elements if e.name == "vertex"), None)
    if vertex is None:
        raise PlyHeaderError("no vertex element declared")
    ix, iy, iz = _vertex_layout(vertex)

    if fmt == "ascii":
        coords = _read_ascii_vertices(data[body_offset:], elements, vertex, (ix, iy, iz))
    else:
        coords = _read_binary_vertices(data[body_offset:], elements, vertex, (ix, iy, iz))

    finite = np.isfinite(coords).all(axis=1) if coords.size else np.ones(0, dtype=bool)
    cloud = PointCloud(coords[finite])
    if return_report:
        report = PlyReport(
            vertex_count=int(finite.sum()),
            dropped_non_finite=int(coords.shape[0] - finite.sum()),
            format=fmt,
        )
        return cloud, report
    return cloud


def _read_ascii_vertices(body: bytes, elements, vertex, xyz_cols) -> np.ndarray:
    lines = body.decode("ascii", errors="replace").splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    cursor = 0
    for element in elements:
        if element is vertex:
            break
        cursor += element.count
    if cursor + vertex.count > len(lines):
        available = max(0, len(lines) - cursor)
        raise PlyTruncatedError(
            f"expected {vertex.count} vertex rows, found {available}"
        )
    ncols = len(vertex.properties)
    if vertex.has_list:
        raise PlyUnsupportedError("list properties in the vertex element are not supported")
    coords = np.empty((vertex.count, 3), dtype=np.float64)
    for row in range(vertex.count):
        tokens = lines[cursor + row].split()
        if len(tokens) < ncols:
            raise PlyError(
                f"vertex row {row} has {len(tokens)} values, expected {ncols}"
            )
        try:
            for out_col, src_col in enumerate(xyz_cols):
                coords[row, out_col] = float(tokens[src_col])
        except ValueError:
            raise PlyError(f"vertex row {row} contains a non-numeric value") from None
    return coords


def _read_binary_vertices(body: bytes, elements, vertex, xyz_cols) -> np.ndarray:
    offset = 0
    for element in elements:
        if element is vertex:
            break
        if element.has_list:
            raise PlyUnsupportedError(
                f"cannot skip element {element.name!r}: list properties have no fixed size"
            )
        offset += element.count * element.stride
    if vertex.has_list:
        raise PlyUnsupportedError("list properties in the vertex element are not supported")

    stride = vertex.stride
    needed = offset + vertex.count * stride
    if len(body) < needed:
        raise PlyTruncatedError(
            f"vertex data needs {needed} bytes after the header, found {len(body)}"
        )
    prop_offsets = np.cumsum([0] + [np.dtype(_PLY_SCALARS[t]).itemsize
                                    for t, _ in vertex.properties[:-1]])
    names, formats, offs = [], [], []
    for out_name, src_col in zip(("x", "y", "z"), xyz_cols):
        ptype = vertex.properties[src_col][0]
        names.append(out_name)
        formats.append("<" + _PLY_SCALARS[ptype])
        offs.append(int(prop_offsets[src_col]))
    dtype = np.dtype({"names": names, "formats": formats, "offsets": offs,
                      "itemsize": stride})
    raw = np.frombuffer(body, dtype=dtype, count=vertex.count, offset=offset)
    coords = np.column_stack([raw["x"].astype(np.float64),
                              raw["y"].astype(np.float64),
                              raw["z"].astype(np.float64)])
    return coords


def write_ply(cloud: PointCloud) -> bytes:
    """Serialize a cloud as ASCII PLY with full float64 round-trip precision."""
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(cloud)}",
        "property double x",
        "property double y",
        "property double z",
        "end_header",
    ]
    for row in cloud.xyz:
        lines.append(f"{float(row[0])!r} {float(row[1])!r} {float(row[2])!r}")
    return ("\n".join(lines) + "\n").encode("ascii")


def parse_depth_raw(data: bytes, width: int, height: int, scale: float) -> DepthFrame:
    """Decode a flat little-endian u16 grid into a DepthFrame.

    Each unit value is multiplied by ``scale`` (meters per unit); 0 units
    stays 0.0, the "no reading" marker.
    """
    if width < 1 or height < 1:
        raise ValueError("width and height must be at least 1")
    expected = width * height * 2
    if len(data) != expected:
        raise DepthSizeError(
            f"expected {expected} bytes for a {width}x{height} u16 grid, got {len(data)}"
        )
    units = np.frombuffer(data, dtype="<u2").reshape(height, width)
    return DepthFrame(units.astype(np.float64) * scale)


def depth_frame_to_cloud(frame: DepthFrame, fx: float, fy: float,
                         cx: float, cy: float, frame_id: int = 0) -> PointCloud:
    """Back-project a depth frame through a pinhole model.

    Pixel (c, r) with depth d > 0 yields ((c-cx)*d/fx, (r-cy)*d/fy, d);
    zero-depth pixels are skipped.  Output order is row-major over pixels.
    """
    if fx <= 0 or fy <= 0:
        raise ValueError("focal lengths must be positive")
    rows, cols = np.nonzero(frame.depth)
    d = frame.depth[rows, cols]
    x = (cols - cx) * d / fx
    y = (rows - cy) * d / fy
    return PointCloud(np.column_stack([x, y, d]), frame_id=frame_id)


def project_cloud_to_frame(cloud: PointCloud, width: int, height: int,
                           fx: float, fy: float, cx: float, cy: float) -> DepthFrame:
    """Forward-project a cloud onto a depth grid; nearest point wins per pixel."""
    if fx <= 0 or fy <= 0:
        raise ValueError("focal lengths must be positive")
    if width < 1 or height < 1:
        raise ValueError("width and height must be at least 1")
    depth = np.zeros((height, width), dtype=np.float64)
    xyz = cloud.xyz
    if len(cloud):
        z = xyz[:, 2]
        front = z > 0
        c = np.floor(xyz[front, 0] * fx / z[front] + cx + 0.5).astype(np.int64)
        r = np.floor(xyz[front, 1] * fy / z[front] + cy + 0.5).astype(np.int64)
        zf = z[front]
        inside = (c >= 0) & (c < width) & (r >= 0) & (r < height)
        c, r, zf = c[inside], r[inside], zf[inside]
        # write decreasing depth so the nearest point lands last
        order = np.argsort(-zf, kind="stable")
        depth[r[order], c[order]] = zf[order]
    return DepthFrame(depth)


def _fold_into(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    # triangle-wave reflection into [lo, hi]; 1-Lipschitz, so it never
    # stretches the gap between consecutive chain points
    span = hi - lo
    y = np.mod(values - lo, 2.0 * span)
    return lo + np.minimum(y, 2.0 * span - y)


def _chain_cluster(rng: np.random.Generator, cluster: ClusterSpec) -> np.ndarray:
    center = np.asarray(cluster.center, dtype=np.float64)
    half = cluster.extent / 2.0
    lo, hi = center - half, center + half
    n = cluster.point_count
    pts = np.empty((n, 3), dtype=np.float64)
    pts[0] = center
    if n > 1:
        directions = rng.normal(size=(n - 1, 3))
        norms = np.linalg.norm(directions, axis=1)
        norms[norms < 1e-12] = 1.0
        steps = cluster.max_gap * rng.uniform(0.35, 0.95, size=n - 1)
        walk = center + np.cumsum(directions / norms[:, None] * steps[:, None], axis=0)
        pts[1:] = _fold_into(walk, lo, hi)
    return pts


def generate_scene(spec: SceneSpec) -> tuple[PointCloud, int]:
    """Build a deterministic synthetic scene from a SceneSpec.

    Point layout is stable: cluster 0's points first (chain order), then
    cluster 1, ..., then noise points.  The expected object count is the
    number of clusters; noise points are not counted.
    """
    rng = np.random.default_rng(spec.seed)
    parts = [_chain_cluster(rng, cluster) for cluster in spec.clusters]
    if spec.noise_points:
        lo = np.asarray(spec.noise_region[0], dtype=np.float64)
        hi = np.asarray(spec.noise_region[1], dtype=np.float64)
        parts.append(rng.uniform(lo, hi, size=(spec.noise_points, 3)))
    if parts:
        xyz = np.concatenate(parts, axis=0)
    else:
        xyz = np.empty((0, 3), dtype=np.float64)
    return PointCloud(xyz), len(spec.clusters)
