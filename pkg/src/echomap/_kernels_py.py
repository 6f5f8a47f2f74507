"""Pure NumPy segmentation kernels.

Fallback used when the compiled extension is unavailable (or forced via
ECHOMAP_BACKEND=py).  Both backends implement the exact same contracts:

naive_components(xyz, threshold)
    Transitive-closure threshold clustering.  Every point is dequeued exactly
    once and evaluated against the n-1 other points, so the distance-eval
    counter equals n*(n-1) for any cloud.  Comparisons use squared distances
    (strictly less than threshold**2); no square root is taken.

chunked_components(xyz, chunk_size, connectivity)
    Quantize each point to its nearest chunk-grid cell (ties round toward
    +inf), then BFS-flood occupied cells.  Seeds are taken in lexicographic
    (i, j, k) key order, so component ids are deterministic and identical
    across backends.  The probe counter increments once per neighbor lookup:
    exactly `connectivity` probes per occupied cell.
"""

from __future__ import annotations

from collections import deque
from itertools import product

import numpy as np

name = "python"

# rows per distance block, sized to keep float64 temporaries around 32 MB
_BLOCK_ELEMENTS = 4_000_000


def neighbor_offsets(connectivity: int) -> list[tuple[int, int, int]]:
    if connectivity == 26:
        return [o for o in product((-1, 0, 1), repeat=3) if o != (0, 0, 0)]
    if connectivity == 6:
        return [o for o in product((-1, 0, 1), repeat=3)
                if abs(o[0]) + abs(o[1]) + abs(o[2]) == 1]
    raise ValueError("connectivity must be 6 or 26")


def naive_components(xyz: np.ndarray, threshold: float):
    n = xyz.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return labels, 0, 0
    t2 = threshold * threshold
    x, y, z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
    block = max(1, _BLOCK_ELEMENTS // n)
    evals = 0
    next_object = 0
    for seed in range(n):
        if labels[seed] >= 0:
            continue
        labels[seed] = next_object
        wave = np.array([seed], dtype=np.int64)
        while wave.size:
            evals += wave.size * (n - 1)
            hit = np.zeros(n, dtype=bool)
            for s in range(0, wave.size, block):
                w = wave[s:s + block]
                d2 = (x[w, None] - x[None, :]) ** 2
                d2 += (y[w, None] - y[None, :]) ** 2
                d2 += (z[w, None] - z[None, :]) ** 2
                hit |= (d2 < t2).any(axis=0)
            wave = np.flatnonzero(hit & (labels < 0))
            labels[wave] = next_object
        next_object += 1
    return labels, next_object, evals


def chunked_components(xyz: np.ndarray, chunk_size: float, connectivity: int):
    n = xyz.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64), 0, 0, 0
    keys = np.floor(xyz / chunk_size + 0.5).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    m = uniq.shape[0]
    key_rows = [tuple(row) for row in uniq.tolist()]
    index_of = {key: u for u, key in enumerate(key_rows)}
    offsets = neighbor_offsets(connectivity)

    cell_label = np.full(m, -1, dtype=np.int64)
    probes = 0
    next_object = 0
    for u in range(m):  # uniq is sorted lexicographically: deterministic seeds
        if cell_label[u] >= 0:
            continue
        cell_label[u] = next_object
        queue = deque([u])
        while queue:
            cu = queue.popleft()
            ci, cj, ck = key_rows[cu]
            for di, dj, dk in offsets:
                probes += 1
                v = index_of.get((ci + di, cj + dj, ck + dk))
                if v is not None and cell_label[v] < 0:
                    cell_label[v] = next_object
                    queue.append(v)
        next_object += 1
    return cell_label[inverse], next_object, m, probes
