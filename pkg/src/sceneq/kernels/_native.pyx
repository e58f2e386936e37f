# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled assignment-enumeration kernel.

Traversal and multiplication order mirror the pure-Python fallback exactly,
so both backends return bit-identical scores.
"""

import numpy as np


cdef void _dfs(int depth, int k, double running,
               long long[:, ::1] cand, double[:, ::1] unary, long long[::1] ncand,
               int n_edges, long long[::1] e_src, long long[::1] e_dst,
               double[:, :, ::1] e_mat,
               signed char[::1] used, long long[::1] cur,
               double[::1] best, long long[::1] best_pos,
               long long[::1] count) noexcept:
    cdef Py_ssize_t p, i
    cdef int e
    cdef long long det
    cdef double v
    if depth == k:
        count[0] += 1
        if running > best[0]:
            best[0] = running
            for i in range(k):
                best_pos[i] = cur[i]
        return
    for p in range(ncand[depth]):
        det = cand[depth, p]
        if used[det]:
            continue
        v = running * unary[depth, p]
        for e in range(n_edges):
            if e_dst[e] == depth:
                v = v * e_mat[e, cur[e_src[e]], p]
        used[det] = 1
        cur[depth] = p
        _dfs(depth + 1, k, v, cand, unary, ncand, n_edges, e_src, e_dst, e_mat,
             used, cur, best, best_pos, count)
        used[det] = 0


def max_injective_product(cand, unary, edges, n_det):
    """Same contract as the pure-Python kernel; pads the factor tables into
    contiguous arrays and runs the typed search."""
    cdef int k = len(cand)
    cdef int maxc = 1
    for c in cand:
        if len(c) > maxc:
            maxc = len(c)

    ncand_arr = np.zeros(k, dtype=np.int64)
    cand_arr = np.zeros((k, maxc), dtype=np.int64)
    unary_arr = np.zeros((k, maxc), dtype=np.float64)
    for d in range(k):
        n = len(cand[d])
        ncand_arr[d] = n
        if n:
            cand_arr[d, :n] = cand[d]
            unary_arr[d, :n] = unary[d]

    cdef int n_edges = len(edges)
    e_src_arr = np.zeros(max(n_edges, 1), dtype=np.int64)
    e_dst_arr = np.zeros(max(n_edges, 1), dtype=np.int64)
    e_mat_arr = np.zeros((max(n_edges, 1), maxc, maxc), dtype=np.float64)
    for idx, (src, dst, mat) in enumerate(edges):
        e_src_arr[idx] = src
        e_dst_arr[idx] = dst
        for r, row in enumerate(mat):
            e_mat_arr[idx, r, : len(row)] = row

    used_arr = np.zeros(max(n_det, 1), dtype=np.int8)
    cur_arr = np.zeros(k, dtype=np.int64)
    best_arr = np.full(1, -1.0, dtype=np.float64)
    best_pos_arr = np.zeros(k, dtype=np.int64)
    count_arr = np.zeros(1, dtype=np.int64)

    _dfs(0, k, 1.0,
         cand_arr, unary_arr, ncand_arr,
         n_edges, e_src_arr, e_dst_arr, e_mat_arr,
         used_arr, cur_arr, best_arr, best_pos_arr, count_arr)

    cdef long long leaves = count_arr[0]
    if leaves == 0:
        return 0.0, None, 0
    score = float(best_arr[0])
    if score < 0.0:
        score = 0.0
    return score, tuple(int(x) for x in best_pos_arr), int(leaves)
