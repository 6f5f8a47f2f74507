import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from echomap import (
    PointCloud,
    SegmentConfig,
    Segmentation,
    available_backends,
    build_chunk_grid,
    chunk_key,
    extract_object,
    generate_scene,
    partition_sets,
    segment_chunked,
    segment_naive,
)
from conftest import separated_scene


def cloud_of(*points):
    return PointCloud(np.array(points, dtype=np.float64))


class TestChunkKey:
    def test_same_chunk(self):
        assert chunk_key(0, 0, 0, 1.0) == chunk_key(0.1, 0, 0, 1.0) == (0, 0, 0)

    def test_rounds_to_nearest(self):
        assert chunk_key(0.6, 0, 0, 1.0) == (1, 0, 0)

    def test_ties_round_toward_positive_infinity(self):
        assert chunk_key(0.5, -0.5, 1.5, 1.0) == (1, 0, 2)

    def test_scales_with_chunk_size(self):
        assert chunk_key(0.6, 0, 0, 0.25) == (2, 0, 0)


class TestChunkGrid:
    def test_empty_cloud(self):
        grid = build_chunk_grid(PointCloud(np.empty((0, 3))), 1.0)
        assert len(grid) == 0

    def test_partitions_all_indices(self, rng):
        cloud = PointCloud(rng.uniform(-3, 3, (200, 3)))
        grid = build_chunk_grid(cloud, 0.5)
        seen = np.sort(np.concatenate([b for b in grid.buckets.values()]))
        assert np.array_equal(seen, np.arange(200))

    def test_bucket_membership_matches_key_function(self, rng):
        cloud = PointCloud(rng.uniform(-2, 2, (50, 3)))
        grid = build_chunk_grid(cloud, 0.3)
        for key, indices in grid.buckets.items():
            for i in indices:
                x, y, z = cloud.xyz[i]
                assert chunk_key(x, y, z, 0.3) == key

    def test_rejects_bad_chunk_size(self):
        with pytest.raises(ValueError):
            build_chunk_grid(cloud_of((0, 0, 0)), 0.0)


class TestChunked:
    def test_far_separated_points(self):
        cloud = cloud_of((0, 0, 0), (10, 0, 0))
        seg = segment_chunked(cloud, SegmentConfig(chunk_size=1.0))
        assert seg.num_objects == 2

    def test_chain_with_small_gaps_is_one_object(self):
        # gaps below chunk_size/2 keep consecutive points chunk-adjacent
        xs = np.cumsum(np.full(100, 0.04))
        cloud = PointCloud(np.column_stack([xs, np.zeros(100), np.zeros(100)]))
        seg = segment_chunked(cloud, SegmentConfig(chunk_size=0.1))
        assert seg.num_objects == 1

    def test_empty_cloud(self):
        seg = segment_chunked(PointCloud(np.empty((0, 3))), SegmentConfig())
        assert seg.num_objects == 0
        assert seg.labels.shape == (0,)

    def test_probe_counter_is_connectivity_times_occupied(self, rng):
        cloud = PointCloud(rng.uniform(-2, 2, (300, 3)))
        for connectivity in (6, 26):
            config = SegmentConfig(chunk_size=0.4, connectivity=connectivity)
            _, stats = segment_chunked(cloud, config, return_stats=True)
            assert stats.neighbor_probes == connectivity * stats.occupied_chunks
            assert stats.quantizations == 300

    def test_six_connectivity_splits_diagonal_neighbors(self):
        cloud = cloud_of((0, 0, 0), (1.0, 1.0, 0))
        assert segment_chunked(cloud, SegmentConfig(chunk_size=1.0, connectivity=26)).num_objects == 1
        assert segment_chunked(cloud, SegmentConfig(chunk_size=1.0, connectivity=6)).num_objects == 2

    def test_labels_follow_lexicographic_seed_order(self):
        # first object id goes to the smallest occupied chunk key
        cloud = cloud_of((5.0, 0, 0), (-5.0, 0, 0))
        seg = segment_chunked(cloud, SegmentConfig(chunk_size=1.0))
        assert seg.labels.tolist() == [1, 0]


class TestNaive:
    def test_exactly_threshold_apart_stays_split(self):
        cloud = cloud_of((0, 0, 0), (0.05, 0, 0))
        seg = segment_naive(cloud, SegmentConfig(threshold=0.05))
        assert seg.num_objects == 2

    def test_just_under_threshold_merges(self):
        cloud = cloud_of((0, 0, 0), (0.0499, 0, 0))
        seg = segment_naive(cloud, SegmentConfig(threshold=0.05))
        assert seg.num_objects == 1

    def test_single_point(self):
        seg = segment_naive(cloud_of((1, 2, 3)), SegmentConfig(threshold=0.05))
        assert seg.num_objects == 1
        assert seg.labels.tolist() == [0]

    def test_transitive_chain_is_one_object(self):
        t = 0.05
        xs = np.cumsum(np.full(5, 0.9 * t))
        cloud = PointCloud(np.column_stack([xs, np.zeros(5), np.zeros(5)]))
        seg = segment_naive(cloud, SegmentConfig(threshold=t))
        assert seg.num_objects == 1

    def test_eval_counter_is_n_times_n_minus_1(self, rng):
        for n in (1, 2, 17, 120):
            cloud = PointCloud(rng.uniform(-1, 1, (n, 3)))
            _, stats = segment_naive(cloud, SegmentConfig(threshold=0.2),
                                     return_stats=True)
            assert stats.distance_evals == n * (n - 1)


class TestMinPoints:
    def test_small_objects_are_discarded(self):
        cloud = cloud_of(*[(i * 0.01, 0, 0) for i in range(10)], (5, 5, 5))
        config = SegmentConfig(chunk_size=0.1, min_points_per_object=2)
        seg = segment_chunked(cloud, config)
        assert seg.num_objects == 1
        assert seg.discarded.tolist() == [10]
        assert seg.labels[10] == -1

    def test_disabled_when_zero(self):
        cloud = cloud_of((0, 0, 0), (9, 9, 9))
        seg = segment_chunked(cloud, SegmentConfig(chunk_size=0.1))
        assert seg.num_objects == 2
        assert seg.discarded.size == 0

    def test_applies_identically_to_both_algorithms(self):
        spec = separated_scene(3, 0.05, [40, 3, 60])
        cloud, _ = generate_scene(spec)
        naive = segment_naive(cloud, SegmentConfig(threshold=0.05, min_points_per_object=10))
        chunked = segment_chunked(cloud, SegmentConfig(chunk_size=0.1, min_points_per_object=10))
        assert naive.num_objects == chunked.num_objects == 2
        assert partition_sets(naive) == partition_sets(chunked)
        assert naive.discarded.tolist() == chunked.discarded.tolist()


class TestExtractObject:
    def test_identity_partition(self):
        cloud = cloud_of((0, 0, 0), (0.01, 0, 0), (0.02, 0, 0))
        seg = segment_chunked(cloud, SegmentConfig(chunk_size=1.0))
        sub = extract_object(cloud, seg, 0)
        assert np.array_equal(sub.xyz, cloud.xyz)

    def test_out_of_range(self):
        cloud = cloud_of((0, 0, 0))
        seg = segment_chunked(cloud, SegmentConfig(chunk_size=1.0))
        with pytest.raises(IndexError):
            extract_object(cloud, seg, 1)

    def test_second_cluster_comes_back_intact(self):
        spec = separated_scene(8, 0.05, [30, 45])
        cloud, _ = generate_scene(spec)
        seg = segment_naive(cloud, SegmentConfig(threshold=0.05))
        # generation order: cluster 0 points first, then cluster 1
        second = extract_object(cloud, seg, int(seg.labels[30]))
        assert np.array_equal(second.xyz, cloud.xyz[30:])


class TestSegmentationType:
    def test_json_roundtrip(self):
        seg = Segmentation(np.array([0, 1, -1, 0]), 2)
        data = seg.to_json_dict()
        assert data == {"num_objects": 2, "labels": [0, 1, -1, 0], "discarded": [2]}
        back = Segmentation.from_json_dict(data)
        assert back.num_objects == 2
        assert np.array_equal(back.labels, seg.labels)

    def test_rejects_sparse_ids(self):
        with pytest.raises(ValueError):
            Segmentation(np.array([0, 2]), 3)

    def test_rejects_out_of_range_labels(self):
        with pytest.raises(ValueError):
            Segmentation(np.array([0, 1]), 1)


points_strategy = st.lists(
    st.tuples(
        st.floats(-4, 4, allow_nan=False, width=32),
        st.floats(-4, 4, allow_nan=False, width=32),
        st.floats(-4, 4, allow_nan=False, width=32),
    ),
    min_size=0,
    max_size=50,
)


@given(points=points_strategy)
@settings(max_examples=80, deadline=None)
def test_partition_property_both_algorithms(points):
    cloud = PointCloud.from_points(points)
    for seg in (
        segment_chunked(cloud, SegmentConfig(chunk_size=0.7)),
        segment_naive(cloud, SegmentConfig(threshold=0.5)),
    ):
        assert seg.labels.shape[0] == len(cloud)
        if len(cloud):
            assert (seg.labels >= 0).all()  # no filter, so no discards
            assert np.array_equal(np.unique(seg.labels), np.arange(seg.num_objects))
        else:
            assert seg.num_objects == 0


@given(points=points_strategy, shuffle_seed=st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_permutation_robustness(points, shuffle_seed):
    cloud = PointCloud.from_points(points)
    perm = np.random.default_rng(shuffle_seed).permutation(len(cloud))
    shuffled = PointCloud(cloud.xyz[perm])

    for segment, config in (
        (segment_chunked, SegmentConfig(chunk_size=0.7)),
        (segment_naive, SegmentConfig(threshold=0.5)),
    ):
        a = segment(cloud, config)
        b = segment(shuffled, config)
        assert a.num_objects == b.num_objects
        remapped = frozenset(
            frozenset(int(perm[i]) for i in group) for group in partition_sets(b)
        )
        assert partition_sets(a) == remapped


@pytest.mark.skipif(len(available_backends()) < 2,
                    reason="compiled backend not built")
class TestBackendsAgree:
    def test_labels_and_counters_identical(self, rng):
        for trial in range(10):
            cloud = PointCloud(rng.uniform(-8, 8, (rng.integers(1, 400), 3)))
            config = SegmentConfig(chunk_size=0.5, threshold=0.4)
            for segment in (segment_chunked, segment_naive):
                seg_c, stats_c = segment(cloud, config, return_stats=True, backend="c")
                seg_p, stats_p = segment(cloud, config, return_stats=True, backend="py")
                assert np.array_equal(seg_c.labels, seg_p.labels)
                assert seg_c.num_objects == seg_p.num_objects
                assert stats_c == stats_p

    def test_unknown_backend_rejected(self):
        cloud = cloud_of((0, 0, 0))
        with pytest.raises(ValueError, match="unknown backend"):
            segment_chunked(cloud, SegmentConfig(), backend="fortran")


def test_foreground_blobs_plus_wall_match_naive_oracle():
    # three person-sized blobs in front of a large slab: four objects
    from echomap import ClusterSpec, SceneSpec
    clusters = tuple(
        ClusterSpec(center=(x, 0.0, 2.2), point_count=250, max_gap=0.04, extent=0.8)
        for x in (-1.2, 0.0, 1.2)
    ) + (ClusterSpec(center=(0.0, 0.0, 4.0), point_count=900, max_gap=0.04, extent=2.0),)
    cloud, expected = generate_scene(SceneSpec(clusters=clusters, seed=61))
    naive = segment_naive(cloud, SegmentConfig(threshold=0.05))
    chunked = segment_chunked(cloud, SegmentConfig(chunk_size=0.1))
    assert expected == 4
    assert naive.num_objects == chunked.num_objects == 4
    assert partition_sets(naive) == partition_sets(chunked)


def test_chunked_handles_negative_coordinates():
    cloud = cloud_of((-3.2, -1.1, -0.6), (-3.21, -1.09, -0.61), (4.0, 4.0, 4.0))
    seg = segment_chunked(cloud, SegmentConfig(chunk_size=0.2))
    assert seg.num_objects == 2
    assert seg.labels[0] == seg.labels[1]


def test_compiled_backend_rejects_huge_chunk_indices():
    if "c" not in available_backends():
        pytest.skip("compiled backend not built")
    cloud = cloud_of((1e9, 0, 0))
    with pytest.raises(ValueError, match="chunk index"):
        segment_chunked(cloud, SegmentConfig(chunk_size=0.1), backend="c")
