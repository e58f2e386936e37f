"""Pure-Python assignment-enumeration kernel.

Mirrors the compiled kernel exactly: identical traversal order and identical
multiplication order, so both backends return bit-identical scores.
"""

from __future__ import annotations


def max_injective_product(cand, unary, edges, n_det):
    """Maximize the factor product over injective assignments.

    cand:  per-depth lists of detection indices (ascending).
    unary: per-depth weight lists aligned with cand.
    edges: (src_depth, dst_depth, matrix) with src_depth < dst_depth and
           matrix[src_pos][dst_pos] the pairwise factor.
    n_det: size of the detection index space.

    Returns (best_score, best_positions | None, leaves_enumerated). The first
    assignment reaching the maximum wins, which with ascending candidate
    order is the lexicographically smallest index tuple.
    """
    k = len(cand)
    edges_at: list[list[tuple[int, list[list[float]]]]] = [[] for _ in range(k)]
    for src, dst, mat in edges:
        edges_at[dst].append((src, mat))

    used = bytearray(n_det)
    cur = [0] * k
    best = [-1.0]
    best_pos: list[tuple[int, ...] | None] = [None]
    count = [0]

    def dfs(depth: int, running: float) -> None:
        if depth == k:
            count[0] += 1
            if running > best[0]:
                best[0] = running
                best_pos[0] = tuple(cur)
            return
        cands_d = cand[depth]
        unary_d = unary[depth]
        edges_d = edges_at[depth]
        for p in range(len(cands_d)):
            det = cands_d[p]
            if used[det]:
                continue
            v = running * unary_d[p]
            for src, mat in edges_d:
                v = v * mat[cur[src]][p]
            used[det] = 1
            cur[depth] = p
            dfs(depth + 1, v)
            used[det] = 0

    dfs(0, 1.0)
    if count[0] == 0:
        return 0.0, None, 0
    return max(best[0], 0.0), best_pos[0], count[0]
