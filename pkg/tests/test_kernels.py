"""Backend parity and semantics for the assignment-enumeration kernel."""

import random

import pytest

from sceneq import kernels

HAS_NATIVE = "native" in kernels.available_backends()

needs_native = pytest.mark.skipif(not HAS_NATIVE, reason="compiled kernel not built")


def random_problem(rng, max_vars=4, max_cands=5, n_det=12):
    k = rng.randint(1, max_vars)
    cand = []
    unary = []
    for _ in range(k):
        n = rng.randint(0, max_cands)
        indices = sorted(rng.sample(range(n_det), n))
        cand.append(indices)
        unary.append([round(rng.uniform(0.0, 1.0), 6) for _ in indices])
    edges = []
    for src in range(k):
        for dst in range(src + 1, k):
            if rng.random() < 0.5:
                mat = [
                    [round(rng.uniform(0.0, 1.0), 6) for _ in cand[dst]]
                    for _ in cand[src]
                ]
                edges.append((src, dst, mat))
    return cand, unary, edges, n_det


class TestSemantics:
    def test_single_variable_picks_best_candidate(self):
        score, pos, count = kernels.max_injective_product(
            [[0, 1, 2]], [[0.3, 0.9, 0.5]], [], 3
        )
        assert (score, pos, count) == (0.9, (1,), 3)

    def test_injectivity_blocks_shared_detection(self):
        # Both variables can only take detection 0: no valid assignment.
        score, pos, count = kernels.max_injective_product(
            [[0], [0]], [[1.0], [1.0]], [], 1
        )
        assert (score, pos, count) == (0.0, None, 0)

    def test_empty_candidate_list_short_circuits(self):
        score, pos, count = kernels.max_injective_product([[0], []], [[1.0], []], [], 2)
        assert (score, pos, count) == (0.0, None, 0)

    def test_ordered_pair_count_over_shared_pool(self):
        # Two variables over the same 4 candidates: 4 * 3 injective pairs.
        cand = [[0, 1, 2, 3], [0, 1, 2, 3]]
        unary = [[1.0] * 4, [1.0] * 4]
        _, _, count = kernels.max_injective_product(cand, unary, [], 4)
        assert count == 12

    def test_edge_factor_orientation(self):
        # Value should be unary[0] * unary[1] * mat[pos0][pos1].
        cand = [[0, 1], [2, 3]]
        unary = [[0.5, 1.0], [1.0, 0.25]]
        mat = [[0.0, 1.0], [1.0, 0.0]]  # rewards (0,3) and (1,2)
        score, pos, count = kernels.max_injective_product(cand, unary, [(0, 1, mat)], 4)
        assert count == 4
        # (0,3): 0.5*0.25*1 = 0.125; (1,2): 1.0*1.0*1 = 1.0
        assert score == 1.0
        assert pos == (1, 0)

    def test_tie_breaks_to_first_lexicographic_assignment(self):
        cand = [[0, 1], [2, 3]]
        unary = [[1.0, 1.0], [1.0, 1.0]]
        score, pos, count = kernels.max_injective_product(cand, unary, [], 4)
        assert score == 1.0
        assert pos == (0, 0)
        assert count == 4

    def test_zero_score_assignment_still_reported(self):
        score, pos, count = kernels.max_injective_product([[0]], [[0.0]], [], 1)
        assert score == 0.0
        assert pos == (0,)
        assert count == 1


class TestBackendParity:
    @needs_native
    def test_backends_bitwise_identical_on_random_problems(self):
        rng = random.Random(2024)
        from sceneq.kernels import _fallback, _native

        for _ in range(300):
            cand, unary, edges, n_det = random_problem(rng)
            if any(len(c) == 0 for c in cand):
                continue
            res_py = _fallback.max_injective_product(cand, unary, edges, n_det)
            res_nat = _native.max_injective_product(cand, unary, edges, n_det)
            assert res_py == res_nat  # exact: same traversal, same float ops

    @needs_native
    def test_use_backend_switches_and_restores(self):
        before = kernels.active_backend()
        with kernels.use_backend("python"):
            assert kernels.active_backend() == "python"
        assert kernels.active_backend() == before

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            kernels.set_backend("fortran")

    @needs_native
    def test_score_query_identical_across_backends(self, four_plane_scene):
        from sceneq import parse_query, score_query

        q = parse_query("plane(A) AND plane(B) AND left_of(A, B)")
        results = {}
        for backend in kernels.available_backends():
            with kernels.use_backend(backend):
                si = score_query(q, four_plane_scene)
                results[backend] = (si.probability, si.witness.assignment, si.hypotheses_evaluated)
        assert results["python"] == results["native"]
