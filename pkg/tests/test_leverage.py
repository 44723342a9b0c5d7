import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_robust.leverage import (
    DegenerateInputError,
    SamplerTree,
    build_sampler,
    compute_leverage_scores,
    embedding_distortion,
    fixed_size_sample,
    sampling_matrix,
    sampling_probabilities,
)


class TestLeverageScores:
    def test_hat_matrix_diagonal(self, rng):
        A = rng.standard_normal((40, 6))
        hat = A @ np.linalg.solve(A.T @ A, A.T)
        np.testing.assert_allclose(compute_leverage_scores(A).tau, np.diag(hat), atol=1e-12)

    def test_rank_deficient(self, rng):
        B = rng.standard_normal((30, 3))
        A = np.hstack([B, B[:, :1] + B[:, 1:2]])
        s = compute_leverage_scores(A)
        assert s.rank == 3
        assert s.tau.sum() == pytest.approx(3.0)
        assert np.all(s.tau <= 1 + 1e-12)

    def test_zero_matrix(self):
        with pytest.raises(DegenerateInputError):
            compute_leverage_scores(np.zeros((5, 2)))

    @given(st.integers(5, 30), st.integers(1, 5), st.integers(0, 10**6))
    @settings(max_examples=30, deadline=None)
    def test_sum_is_rank_and_bounded(self, n, d, seed):
        A = np.random.default_rng(seed).standard_normal((n, d))
        s = compute_leverage_scores(A)
        assert s.tau.sum() == pytest.approx(min(n, d))
        assert np.all((s.tau >= -1e-12) & (s.tau <= 1 + 1e-12))


class TestSamplerTree:
    def test_total_and_leaves(self):
        t = SamplerTree([1.0, 2.0, 0.0, 4.0, 3.0])
        assert t.total == 10.0
        np.testing.assert_array_equal(t.weights, [1, 2, 0, 4, 3])

    def test_frequencies(self, rng):
        w = np.array([5.0, 0.0, 1.0, 3.0, 1.0])
        draws = SamplerTree(w).sample(rng, 100000)
        freq = np.bincount(draws, minlength=5) / draws.size
        np.testing.assert_allclose(freq, w / w.sum(), atol=0.006)
        assert freq[1] == 0

    def test_single_leaf(self, rng):
        assert SamplerTree([2.0]).sample(rng) == 0

    @pytest.mark.parametrize("w", [[], [0.0, 0.0], [1.0, -1.0], [1.0, np.inf]])
    def test_bad_weights(self, w):
        with pytest.raises(DegenerateInputError):
            SamplerTree(w)

    @given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=20).filter(lambda w: sum(w) > 0))
    @settings(max_examples=40, deadline=None)
    def test_never_draws_zero_weight(self, w):
        draws = SamplerTree(w).sample(np.random.default_rng(0), 200)
        assert np.all(np.asarray(w)[draws] > 0)


class TestRowSampling:
    def test_probabilities(self):
        p = sampling_probabilities(np.array([0.001, 0.5]), d=10, eps=0.5, c=1.0)
        np.testing.assert_allclose(p, [0.004 * math.log(10), 1.0])

    def test_dense_matches_apply(self, rng):
        A = rng.standard_normal((100, 4))
        S = sampling_matrix(A, 0.5, 3)
        np.testing.assert_allclose(S.dense() @ A, S.apply(A))
        np.testing.assert_allclose(S.dense() @ A[:, 0], S.apply(A[:, 0]))

    def test_unbiased_gram(self, rng):
        A = rng.standard_normal((200, 3))
        acc = np.zeros((3, 3))
        for s in range(300):
            SA = sampling_matrix(A, 0.9, s).apply(A)
            acc += SA.T @ SA
        G = A.T @ A
        assert np.linalg.norm(acc / 300 - G) / np.linalg.norm(G) < 0.05

    def test_eps_range(self, rng):
        with pytest.raises(ValueError):
            sampling_matrix(rng.standard_normal((5, 2)), 1.0, 0)

    def test_fixed_size(self, rng):
        A = rng.standard_normal((300, 5))
        sampler = build_sampler(compute_leverage_scores(A))
        S = fixed_size_sample(sampler, 400, rng)
        assert len(S) == 400
        assert embedding_distortion(S, A) < 0.6

    def test_distortion_identity(self, rng):
        A = rng.standard_normal((20, 3))
        S = sampling_matrix(A, 0.01, 0)  # every p_i is 1
        assert len(S) == 20
        assert embedding_distortion(S, A) == pytest.approx(0.0, abs=1e-12)
