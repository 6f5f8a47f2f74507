"""Acceptance gate: every release criterion, each printing one verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.  The
slope and wall-time criteria assume the compiled kernel backend (built on
install); they still run on the pure fallback, just slower.
"""

import json
import time
from decimal import Decimal, getcontext

import numpy as np
import pytest

from echomap import (
    ClusterSpec,
    DepthFrame,
    SceneSpec,
    SegmentConfig,
    SonifyConfig,
    accuracy,
    depth_to_note,
    encode_vlq,
    events_to_midi,
    generate_scene,
    pan_for_column,
    partition_sets,
    pearson_r,
    schedule_frame,
    segment_chunked,
    segment_naive,
    write_smf,
)
from echomap.bench import default_template, run_benchmark
from echomap.cli import cli_main
from echomap.metrics import FrameResult
from conftest import separated_scene
from smf_reader import decode_vlq, normalize_document, read_smf


def verdict(name: str, ok: bool, detail: str = "") -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


def test_c1_oracle_equivalence_on_separated_scenes():
    threshold = 0.05
    naive_config = SegmentConfig(threshold=threshold)
    chunked_config = SegmentConfig(chunk_size=2 * threshold, connectivity=26)
    rng = np.random.default_rng(20240)

    started = time.perf_counter()
    scenes = 0
    matches = 0
    total_points = 0
    for trial in range(200):
        n_clusters = int(rng.integers(1, 5))
        counts = [int(rng.integers(40, 301)) for _ in range(n_clusters)]
        spec = separated_scene(seed=int(rng.integers(0, 2**31)),
                               threshold=threshold, cluster_points=counts)
        cloud, expected = generate_scene(spec)
        assert len(cloud) <= 5000
        total_points += len(cloud)
        naive = segment_naive(cloud, naive_config)
        chunked = segment_chunked(cloud, chunked_config)
        scenes += 1
        if (partition_sets(naive) == partition_sets(chunked)
                and naive.num_objects == chunked.num_objects == expected):
            matches += 1
    elapsed = time.perf_counter() - started

    ok = matches == scenes == 200 and elapsed < 60.0
    verdict("C1 oracle equivalence",
            ok, f"{matches}/{scenes} scenes identical, "
                f"{total_points} points total, {elapsed:.1f}s")
    assert matches == scenes == 200
    assert elapsed < 60.0


def test_c2_asymptotic_slopes():
    sizes = [1000 * 2 ** k for k in range(7)]  # 1000 .. 64000
    table = run_benchmark(sizes, default_template(seed=0),
                          SegmentConfig(chunk_size=0.1, threshold=0.05))

    bounded = all(row.chunked_probes <= 27 * row.n for row in table.rows)
    exact = all(row.naive_evals == row.n * (row.n - 1) for row in table.rows)
    ok = (1.8 <= table.naive_slope <= 2.2
          and 0.8 <= table.chunked_slope <= 1.2
          and bounded and exact)
    verdict("C2 asymptotic gap",
            ok, f"slope naive={table.naive_slope:.3f} "
                f"chunked={table.chunked_slope:.3f}, probes<=27n {bounded}")
    assert 1.8 <= table.naive_slope <= 2.2
    assert 0.8 <= table.chunked_slope <= 1.2
    assert bounded
    assert exact


def test_c3_large_cloud_wall_time():
    n = 300_000
    from echomap.bench import scale_spec
    cloud, _ = generate_scene(scale_spec(default_template(seed=1), n))
    assert len(cloud) == n
    config = SegmentConfig(chunk_size=0.1)

    best = np.inf
    stats = None
    for _ in range(2):
        t0 = time.perf_counter()
        _, stats = segment_chunked(cloud, config, return_stats=True)
        best = min(best, time.perf_counter() - t0)
    ops = stats.quantizations + stats.neighbor_probes

    ok = best < 2.0 and ops <= 27 * n
    verdict("C3 scale point",
            ok, f"{n} points in {best * 1e3:.0f}ms, ops={ops} (bound {27 * n})")
    assert best < 2.0
    assert ops <= 27 * n


def test_c4_depth_to_note_pins():
    rng = np.random.default_rng(7)
    boundary_ok = True
    for _ in range(50):
        start = float(rng.uniform(0.01, 2.0))
        end = start + float(rng.uniform(0.5, 10.0))
        steps = int(rng.integers(1, 49))
        config = SonifyConfig(start=start, end=end, range=steps)
        boundary_ok &= depth_to_note(start, config) == 96
        boundary_ok &= depth_to_note(end, config) == 96 - 2 * steps

    config = SonifyConfig(start=0.3, end=6.0, range=30)
    pinned = depth_to_note(3.15, config)
    getcontext().prec = 50
    t = (Decimal("3.15") - Decimal("0.3")) / (Decimal("6.0") - Decimal("0.3"))
    expected = 96 - 2 * int(Decimal(30) * (t.ln() * Decimal("0.8")).exp())

    xs = np.linspace(0.3, 6.0, 10_000)
    notes = [depth_to_note(float(x), config) for x in xs]
    monotone = all(a >= b for a, b in zip(notes, notes[1:]))

    ok = boundary_ok and pinned == expected == 62 and monotone
    verdict("C4 depth-to-note pins",
            ok, f"boundaries {boundary_ok}, midpoint {pinned} (oracle {expected}), "
                f"monotone {monotone}")
    assert boundary_ok
    assert pinned == expected == 62
    assert monotone


def test_c5_traversal_and_pan_pins():
    config = SonifyConfig(grid_width=2, grid_height=2)
    events = schedule_frame(DepthFrame(np.full((2, 2), config.start)), config)
    order = [(e.row, e.col) for e in events]
    onsets = [e.onset_ms for e in events]
    delta = config.inter_onset

    wide = SonifyConfig()
    pans = (pan_for_column(0, wide), pan_for_column(15, wide))

    ok = (order == [(0, 1), (1, 1), (0, 0), (1, 0)]
          and onsets == [0.0, delta, 2 * delta, 3 * delta]
          and pans == (0, 127))
    verdict("C5 traversal/pan pins", ok, f"order {order}, edge pans {pans}")
    assert order == [(0, 1), (1, 1), (0, 0), (1, 0)]
    assert onsets == [0.0, delta, 2 * delta, 3 * delta]
    assert pans == (0, 127)


def test_c6_pipeline_determinism(tmp_path):
    spec_path = tmp_path / "scene.json"
    spec_path.write_text(json.dumps({
        "clusters": [
            {"center": [0.0, 0.0, 2.0], "point_count": 220, "max_gap": 0.02, "extent": 0.25},
            {"center": [1.4, 0.2, 2.2], "point_count": 180, "max_gap": 0.02, "extent": 0.25},
            {"center": [-1.4, -0.2, 2.4], "point_count": 140, "max_gap": 0.02, "extent": 0.25},
        ],
        "noise_points": 0,
        "seed": 33,
    }))

    def run(tag):
        base = tmp_path / tag
        base.mkdir()
        ply, seg, mid = base / "s.ply", base / "s.json", base / "s.mid"
        assert cli_main(["gen", "--spec", str(spec_path), "--out", str(ply)]) == 0
        assert cli_main(["segment", "--in", str(ply), "--chunk-size", "0.1",
                         "--out", str(seg)]) == 0
        assert cli_main(["sonify", "--in", str(ply), "--width", "64", "--height", "48",
                         "--fx", "20", "--fy", "20", "--cx", "32", "--cy", "24",
                         "--emit", "midi", "--out", str(mid)]) == 0
        return ply.read_bytes(), seg.read_bytes(), mid.read_bytes()

    first, second = run("a"), run("b")
    ok = first == second
    verdict("C6 determinism", ok,
            f"ply/json/smf byte-identical across runs: {ok}")
    assert first == second


def test_c7_smf_validity():
    frame = DepthFrame(np.linspace(0.4, 5.9, 192).reshape(12, 16))
    doc = events_to_midi(schedule_frame(frame, SonifyConfig()))
    parsed = read_smf(write_smf(doc))
    roundtrip = parsed["events"] == normalize_document(doc)

    pins = {0: b"\x00", 127: b"\x7f", 128: b"\x81\x00", 16383: b"\xff\x7f"}
    vlq_ok = all(encode_vlq(v) == b for v, b in pins.items())
    vlq_ok &= all(decode_vlq(b, 0)[0] == v for v, b in pins.items())

    ok = roundtrip and vlq_ok
    verdict("C7 SMF validity", ok,
            f"roundtrip {roundtrip} over {len(doc.events)} messages, VLQ pins {vlq_ok}")
    assert roundtrip
    assert vlq_ok


def test_c8_metric_fidelity():
    frames = [FrameResult(i, 4, 4) for i in range(7)] + [FrameResult(7, 4, 6)]
    acc = accuracy(frames)
    constant_r = pearson_r([4.0] * 8, [float(f.detected_objects) for f in frames])

    ok = acc == 0.875 and constant_r is None
    verdict("C8 metric fidelity", ok,
            f"accuracy(7 of 8)={acc}, constant-series r={constant_r}")
    assert acc == 0.875
    assert constant_r is None


def _cutouts_and_wall(seed: int, noise: int) -> SceneSpec:
    clusters = tuple(
        ClusterSpec(center=(x, 0.0, 2.2), point_count=350, max_gap=0.05, extent=0.8)
        for x in (-1.2, 0.0, 1.2)
    ) + (ClusterSpec(center=(0.0, 0.0, 4.0), point_count=1500, max_gap=0.05, extent=2.0),)
    return SceneSpec(
        clusters=clusters,
        noise_points=noise,
        noise_region=((-2.2, -1.2, 1.4), (2.2, 1.2, 5.6)),
        seed=seed,
    )


def test_c9_noise_robustness_analog():
    cluster_points = 3 * 350 + 1500
    noise = 51  # 51 / 2601 < 2% of the cloud
    assert noise <= 0.02 * (cluster_points + noise)
    config = SegmentConfig(chunk_size=0.12, min_points_per_object=8)

    hits = 0
    for seed in range(100):
        cloud, expected = generate_scene(_cutouts_and_wall(seed, noise))
        seg = segment_chunked(cloud, config)
        if seg.num_objects == expected == 4:
            hits += 1

    ok = hits >= 87
    verdict("C9 noise robustness", ok, f"{hits}/100 trials detected exactly 4 objects")
    assert hits >= 87
