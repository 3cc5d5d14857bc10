import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from prototext.errors import DegenerateWeightsError, ShapeMismatchError, ZeroVectorError
from prototext.similarity import (
    L2Mode,
    SimilarityKind,
    SimilarityWeights,
    cosine_sim,
    similarity_matrix,
    similarity_score,
    weighted_cosine_sim,
    weighted_l2,
)

finite_vec = arrays(
    np.float64,
    st.integers(2, 8),
    elements=st.floats(-10, 10, allow_nan=False, allow_infinity=False),
)


class TestCosine:
    def test_self_similarity(self):
        u = np.array([0.3, -1.2, 4.0])
        assert cosine_sim(u, u) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine_sim(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_hand_value(self):
        # (1,2)·(2,1) / (sqrt5 * sqrt5) = 4/5
        assert cosine_sim(np.array([1.0, 2.0]), np.array([2.0, 1.0])) == pytest.approx(0.8, abs=1e-12)

    def test_zero_vector_raises(self):
        with pytest.raises(ZeroVectorError):
            cosine_sim(np.zeros(3), np.ones(3))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            cosine_sim(np.ones(3), np.ones(4))


class TestWeightedCosine:
    def test_unit_weights_reduce_to_cosine(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            u = rng.normal(size=6)
            v = rng.normal(size=6)
            w = np.ones(6)
            assert abs(weighted_cosine_sim(w, u, v) - cosine_sim(u, v)) <= 1e-12

    def test_masked_dimension_removes_disagreement(self):
        w = np.array([1.0, 0.0])
        u = np.array([1.0, 2.0])
        v = np.array([1.0, -2.0])
        assert weighted_cosine_sim(w, u, v) == pytest.approx(1.0, abs=1e-12)

    def test_zero_weights_degenerate(self):
        with pytest.raises(DegenerateWeightsError):
            weighted_cosine_sim(np.zeros(2), np.array([1.0, 2.0]), np.array([2.0, 1.0]))

    @given(finite_vec, st.floats(0.1, 50), st.floats(0.1, 50))
    @settings(max_examples=100, deadline=None)
    def test_scale_invariance(self, u, alpha, beta):
        v = np.roll(u, 1) + 0.5
        w = np.abs(u) + 0.5
        if np.linalg.norm(u) < 1e-6 or np.linalg.norm(v) < 1e-6:
            return
        base = weighted_cosine_sim(w, u, v)
        scaled = weighted_cosine_sim(w, alpha * u, beta * v)
        assert scaled == pytest.approx(base, abs=1e-9)


class TestWeightedL2:
    def test_corrected_identity_of_indiscernibles(self):
        u = np.array([0.5, -2.0, 3.0])
        assert weighted_l2(np.array([1.0, 0.7, 2.0]), u, u, L2Mode.CORRECTED) == 0.0

    def test_literal_hand_value(self):
        # sqrt((1*1*3)^2 + (1*2*4)^2) = sqrt(9 + 64)
        got = weighted_l2(np.array([1.0, 1.0]), np.array([1.0, 2.0]), np.array([3.0, 4.0]), L2Mode.LITERAL)
        assert got == pytest.approx(math.sqrt(73), abs=1e-12)

    def test_corrected_hand_value(self):
        got = weighted_l2(np.array([2.0, 0.0]), np.array([1.0, 5.0]), np.array([0.0, 9.0]), L2Mode.CORRECTED)
        assert got == pytest.approx(2.0, abs=1e-12)


class TestWeightClamping:
    @given(arrays(np.float64, 6, elements=st.floats(-30, 30, allow_nan=False)))
    @settings(max_examples=100, deadline=None)
    def test_cosine_clamp_nonnegative(self, raw):
        eff = SimilarityWeights(raw=raw, kind=SimilarityKind.WEIGHTED_COSINE).effective
        assert (eff >= 0.0).all()
        assert (eff == np.maximum(raw, 0.0)).all()

    @given(arrays(np.float64, 6, elements=st.floats(-30, 30, allow_nan=False)))
    @settings(max_examples=100, deadline=None)
    def test_sigmoid_range_open_interval(self, raw):
        # float64 sigmoid saturates around |raw| ~ 36; the contract covers
        # the numerically representable range
        eff = SimilarityWeights(raw=raw, kind=SimilarityKind.WEIGHTED_L2).effective
        assert (eff > 0.0).all() and (eff < 2.0).all()

    def test_unweighted_kinds_use_unit_weights(self):
        raw = np.array([-3.0, 5.0])
        eff = SimilarityWeights(raw=raw, kind=SimilarityKind.COSINE).effective
        assert (eff == 1.0).all()


class TestBatchAgreesWithScalar:
    @pytest.mark.parametrize(
        "kind,mode",
        [
            (SimilarityKind.COSINE, L2Mode.CORRECTED),
            (SimilarityKind.WEIGHTED_COSINE, L2Mode.CORRECTED),
            (SimilarityKind.L2, L2Mode.CORRECTED),
            (SimilarityKind.WEIGHTED_L2, L2Mode.CORRECTED),
            (SimilarityKind.WEIGHTED_L2, L2Mode.LITERAL),
        ],
    )
    def test_matrix_matches_pairwise_scores(self, kind, mode):
        rng = np.random.default_rng(7)
        Z = rng.normal(size=(5, 6)) + 0.2
        P = rng.normal(size=(4, 6)) + 0.2
        w = rng.uniform(0.2, 1.9, size=6)
        S = similarity_matrix(Z, P, kind, w, mode)
        for i in range(5):
            for j in range(4):
                assert S[i, j] == pytest.approx(
                    similarity_score(kind, w, Z[i], P[j], mode), abs=1e-10
                )

    def test_l2_score_is_negated_distance(self):
        u = np.array([1.0, 5.0])
        v = np.array([0.0, 9.0])
        w = np.array([2.0, 0.0])
        assert similarity_score(SimilarityKind.WEIGHTED_L2, w, u, v) == pytest.approx(-2.0)
        assert similarity_score(SimilarityKind.L2, w, u, np.array([4.0, 9.0])) == pytest.approx(-5.0)
