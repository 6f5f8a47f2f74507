import numpy as np
import pytest

from echomap import ClusterSpec, SceneSpec


def separated_scene(seed: int, threshold: float, cluster_points,
                    extent_factor: float = 6.0) -> SceneSpec:
    """Scene whose clusters provably satisfy the oracle-equivalence premise.

    Intra-cluster: chains step at most 0.95 * max_gap with max_gap =
    threshold / 1.01, so every point has a neighbor well within threshold.
    Inter-cluster: cubic cluster boxes sit on a grid whose spacing exceeds
    8 * threshold plus both boxes' worst-case reach.
    """
    max_gap = threshold / 1.01
    extent = extent_factor * threshold
    spacing = 8 * threshold + np.sqrt(3.0) * extent + 2 * threshold
    clusters = []
    for idx, count in enumerate(cluster_points):
        gx, gy, gz = idx % 3, (idx // 3) % 3, idx // 9
        clusters.append(ClusterSpec(
            center=(gx * spacing, gy * spacing, 2.0 + gz * spacing),
            point_count=count,
            max_gap=max_gap,
            extent=extent,
        ))
    return SceneSpec(clusters=tuple(clusters), noise_points=0, seed=seed)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
