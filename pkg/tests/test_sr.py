"""Score centering and the real/imaginary stack for the real-part variant."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fisher_solve import (
    DampedSystem,
    RawScores,
    ScoreMatrix,
    center_scores,
    concat_real_imag,
    solve_chol,
    solve_realpart,
)

from conftest import dense_solve, rng_for


class TestRawScores:
    def test_wraps_and_freezes(self):
        raw = RawScores(np.ones((3, 2)))
        assert raw.n == 3 and raw.m == 2
        with pytest.raises(ValueError):
            raw.O[0, 0] = 2.0

    def test_rejects_nonfinite_and_empty(self):
        with pytest.raises(ValueError):
            RawScores(np.array([[np.nan]]))
        with pytest.raises(ValueError):
            RawScores(np.zeros((0, 2)))


class TestCenterScores:
    def test_hand_example(self):
        S = center_scores(np.array([[1.0, 3.0], [3.0, 5.0]]))
        inv_root2 = 1.0 / np.sqrt(2.0)
        np.testing.assert_allclose(
            S.data, [[-inv_root2, -inv_root2], [inv_root2, inv_root2]], rtol=1e-15
        )

    def test_identical_rows_center_to_zero(self):
        O = np.tile([2.0, -1.0, 5.0], (4, 1))
        assert np.array_equal(center_scores(O).data, np.zeros((4, 3)))

    def test_single_sample_centers_to_zero(self):
        assert np.array_equal(center_scores(np.array([[3.0, -7.0]])).data, np.zeros((1, 2)))

    def test_accepts_rawscores_and_complex(self):
        raw = RawScores((rng_for(0).standard_normal((3, 4)) * (1 + 1j)))
        S = center_scores(raw)
        assert S.is_complex
        assert np.abs(S.data.sum(axis=0)).max() <= 1e-12

    @given(n=st.integers(1, 64), m=st.integers(1, 64), seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_columns_have_zero_mean(self, n, m, seed):
        O = rng_for(seed).standard_normal((n, m)) * 10.0
        S = center_scores(O)
        col_scale = np.maximum(np.abs(O).max(axis=0), 1.0)
        assert np.all(np.abs(S.data.sum(axis=0)) <= 1e-12 * col_scale * n)

    @given(seed=st.integers(0, 2**32 - 1), c=st.sampled_from([-3.0, 0.5, 2.0, 1e6]))
    @settings(max_examples=30, deadline=None)
    def test_scale_covariance(self, seed, c):
        O = rng_for(seed).standard_normal((5, 8))
        left = center_scores(c * O).data
        right = c * center_scores(O).data
        assert np.abs(left - right).max() <= 1e-12 * max(1.0, abs(c)) * np.abs(O).max()

    def test_recentring_is_stable(self):
        O = rng_for(7).standard_normal((6, 9))
        once = center_scores(O)
        twice = center_scores(once.data)
        assert np.abs(twice.data.sum(axis=0)).max() <= 1e-12


class TestConcatRealImag:
    def test_hand_expansion(self):
        C = concat_real_imag(ScoreMatrix([[1 + 2j, 3 - 1j]]))
        assert np.array_equal(C.data, [[1.0, 3.0], [2.0, -1.0]])
        assert np.array_equal(C.data.T @ C.data, [[5.0, 1.0], [1.0, 10.0]])

    def test_purely_imaginary(self):
        C = concat_real_imag(ScoreMatrix([[1j, 2j]]))
        assert np.array_equal(C.data, [[0.0, 0.0], [1.0, 2.0]])

    def test_rejects_real_input(self):
        with pytest.raises(ValueError):
            concat_real_imag(ScoreMatrix([[1.0, 2.0]]))

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_gram_identity(self, seed):
        rng = rng_for(seed)
        S = ScoreMatrix(rng.standard_normal((4, 8)) + 1j * rng.standard_normal((4, 8)))
        C = concat_real_imag(S)
        assert C.shape == (8, 8)
        lhs = C.data.T @ C.data
        rhs = (S.data.conj().T @ S.data).real
        assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, np.abs(rhs).max())


class TestPipeline:
    def test_realpart_equals_chol_on_concat_bit_for_bit(self):
        rng = rng_for(12)
        O = rng.standard_normal((5, 14)) + 1j * rng.standard_normal((5, 14))
        v = rng.standard_normal(14)
        S = center_scores(O)
        lam = 0.05
        via_variant = solve_realpart(DampedSystem(S, lam, v))
        via_concat = solve_chol(DampedSystem(concat_real_imag(S), lam, v))
        assert np.array_equal(via_variant.x, via_concat.x)

    def test_pipeline_matches_dense_oracle(self):
        rng = rng_for(13)
        O = rng.standard_normal((6, 20)) + 1j * rng.standard_normal((6, 20))
        v = rng.standard_normal(20)
        S = center_scores(O)
        sol = solve_realpart(DampedSystem(S, 0.01, v))
        ref = dense_solve(S.data, 0.01, v, "realpart")
        assert np.linalg.norm(sol.x - ref) <= 1e-8 * np.linalg.norm(ref)
