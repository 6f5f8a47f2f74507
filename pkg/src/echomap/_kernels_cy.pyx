# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled segmentation kernels.

Same contracts as _kernels_py (see that module's docstring); this version
exists because the naive O(n^2) clustering is the hot path of the benchmark
harness and needs C-speed inner loops.  The chunk map is an open-addressing
hash table over keys packed 21 bits per axis, which limits chunk indices to
|i| <= 2**20 - 2 (about a million cells per axis); out-of-range coordinates
raise ValueError.
"""

import numpy as np

from libc.math cimport floor
from libc.stdint cimport int64_t, uint64_t

name = "c"

cdef enum:
    KEY_BITS = 21
    KEY_OFFSET = 1048576       # 2**20
    KEY_LIMIT = 1048574        # 2**20 - 2, margin for neighbor probes


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    # splitmix64 finalizer
    z += <uint64_t>0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline uint64_t _pack(int64_t i, int64_t j, int64_t k) noexcept nogil:
    return ((<uint64_t>(i + KEY_OFFSET)) << (2 * KEY_BITS)) \
         | ((<uint64_t>(j + KEY_OFFSET)) << KEY_BITS) \
         | (<uint64_t>(k + KEY_OFFSET))


def naive_components(const double[:, ::1] xyz, double threshold):
    cdef Py_ssize_t n = xyz.shape[0]
    labels_arr = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return labels_arr, 0, 0
    queue_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] labels = labels_arr
    cdef int64_t[::1] queue = queue_arr
    cdef double t2 = threshold * threshold
    cdef long long evals = 0
    cdef int64_t next_object = 0
    cdef Py_ssize_t seed, head, tail, p, i
    cdef double px, py, pz, dx, dy, dz, d2

    with nogil:
        for seed in range(n):
            if labels[seed] >= 0:
                continue
            labels[seed] = next_object
            queue[0] = seed
            head = 0
            tail = 1
            while head < tail:
                p = queue[head]
                head += 1
                px = xyz[p, 0]
                py = xyz[p, 1]
                pz = xyz[p, 2]
                for i in range(n):
                    if i == p:
                        continue
                    evals += 1
                    dx = xyz[i, 0] - px
                    dy = xyz[i, 1] - py
                    dz = xyz[i, 2] - pz
                    d2 = dx * dx + dy * dy + dz * dz
                    if d2 < t2 and labels[i] < 0:
                        labels[i] = next_object
                        queue[tail] = i
                        tail += 1
            next_object += 1
    return labels_arr, int(next_object), int(evals)


def chunked_components(const double[:, ::1] xyz, double chunk_size, int connectivity):
    cdef Py_ssize_t n = xyz.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64), 0, 0, 0
    if connectivity != 6 and connectivity != 26:
        raise ValueError("connectivity must be 6 or 26")

    cdef Py_ssize_t cap = 8
    while cap < 2 * n:
        cap <<= 1
    table_keys_arr = np.zeros(cap, dtype=np.uint64)       # 0 marks an empty slot
    table_vals_arr = np.empty(cap, dtype=np.int64)
    inverse_arr = np.empty(n, dtype=np.int64)
    ci_arr = np.empty(n, dtype=np.int64)
    cj_arr = np.empty(n, dtype=np.int64)
    ck_arr = np.empty(n, dtype=np.int64)

    cdef uint64_t[::1] table_keys = table_keys_arr
    cdef int64_t[::1] table_vals = table_vals_arr
    cdef int64_t[::1] inverse = inverse_arr
    cdef int64_t[::1] ui = ci_arr
    cdef int64_t[::1] uj = cj_arr
    cdef int64_t[::1] uk = ck_arr

    cdef uint64_t mask = <uint64_t>(cap - 1)
    cdef Py_ssize_t m = 0
    cdef Py_ssize_t p
    cdef int64_t qi, qj, qk
    cdef uint64_t key, slot
    cdef bint overflow = False

    with nogil:
        for p in range(n):
            qi = <int64_t>floor(xyz[p, 0] / chunk_size + 0.5)
            qj = <int64_t>floor(xyz[p, 1] / chunk_size + 0.5)
            qk = <int64_t>floor(xyz[p, 2] / chunk_size + 0.5)
            if (qi > KEY_LIMIT or qi < -KEY_LIMIT or
                    qj > KEY_LIMIT or qj < -KEY_LIMIT or
                    qk > KEY_LIMIT or qk < -KEY_LIMIT):
                overflow = True
                break
            key = _pack(qi, qj, qk)
            slot = _mix(key) & mask
            while True:
                if table_keys[slot] == 0:
                    table_keys[slot] = key
                    table_vals[slot] = m
                    ui[m] = qi
                    uj[m] = qj
                    uk[m] = qk
                    inverse[p] = m
                    m += 1
                    break
                if table_keys[slot] == key:
                    inverse[p] = table_vals[slot]
                    break
                slot = (slot + 1) & mask
    if overflow:
        raise ValueError(
            f"chunk index out of range: |coordinate / chunk_size| must stay below {KEY_LIMIT}"
        )

    # deterministic seed order: lexicographic (i, j, k)
    order_arr = np.lexsort((ck_arr[:m], cj_arr[:m], ci_arr[:m])).astype(np.int64)
    offsets_arr = _offsets(connectivity)
    cell_label_arr = np.full(m, -1, dtype=np.int64)
    cell_queue_arr = np.empty(m, dtype=np.int64)

    cdef int64_t[::1] order = order_arr
    cdef int64_t[:, ::1] offsets = offsets_arr
    cdef int64_t[::1] cell_label = cell_label_arr
    cdef int64_t[::1] cell_queue = cell_queue_arr

    cdef Py_ssize_t n_off = offsets.shape[0]
    cdef long long probes = 0
    cdef int64_t next_object = 0
    cdef Py_ssize_t s, head, tail, cu, o
    cdef int64_t bi, bj, bk, v
    cdef bint found

    with nogil:
        for s in range(m):
            cu = order[s]
            if cell_label[cu] >= 0:
                continue
            cell_label[cu] = next_object
            cell_queue[0] = cu
            head = 0
            tail = 1
            while head < tail:
                cu = cell_queue[head]
                head += 1
                bi = ui[cu]
                bj = uj[cu]
                bk = uk[cu]
                for o in range(n_off):
                    probes += 1
                    key = _pack(bi + offsets[o, 0], bj + offsets[o, 1], bk + offsets[o, 2])
                    slot = _mix(key) & mask
                    found = False
                    while table_keys[slot] != 0:
                        if table_keys[slot] == key:
                            found = True
                            break
                        slot = (slot + 1) & mask
                    if found:
                        v = table_vals[slot]
                        if cell_label[v] < 0:
                            cell_label[v] = next_object
                            cell_queue[tail] = v
                            tail += 1
            next_object += 1

    labels_arr = cell_label_arr[inverse_arr]
    return labels_arr, int(next_object), int(m), int(probes)


def _offsets(int connectivity):
    from itertools import product
    if connectivity == 26:
        rows = [o for o in product((-1, 0, 1), repeat=3) if o != (0, 0, 0)]
    else:
        rows = [o for o in product((-1, 0, 1), repeat=3)
                if abs(o[0]) + abs(o[1]) + abs(o[2]) == 1]
    return np.array(rows, dtype=np.int64)
