import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchprune import (
    DataMatrix,
    DegenerateDistributionError,
    InvalidDensityError,
    Mask,
    ProbabilityVector,
    RngStream,
    approximation_error,
    features,
    optimal_probabilities,
    sample_sketch_mask,
    uniform_probabilities,
)
from sketchprune.sketch import _categorical_indices


class TestOptimalProbabilities:
    def test_diagonal_example(self):
        p = optimal_probabilities(DataMatrix([[3.0, 0.0], [0.0, 4.0]]), [2.0, 1.0])
        np.testing.assert_allclose(p.values, [0.6, 0.4])

    def test_single_support(self):
        p = optimal_probabilities(DataMatrix(np.eye(2)), [1.0, 0.0])
        np.testing.assert_array_equal(p.values, [1.0, 0.0])

    def test_symmetric(self):
        p = optimal_probabilities(DataMatrix(np.eye(3)), [1.0, 1.0, 1.0])
        np.testing.assert_allclose(p.values, [1 / 3, 1 / 3, 1 / 3])

    def test_zero_numerator_rejected(self):
        with pytest.raises(DegenerateDistributionError):
            optimal_probabilities(DataMatrix(np.eye(2)), [0.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            optimal_probabilities(DataMatrix(np.eye(2)), [1.0, 1.0, 1.0])

    @settings(max_examples=30, deadline=None)
    @given(
        seed=st.integers(0, 2**32 - 1),
        scale=st.floats(0.01, 100.0),
        flip=st.booleans(),
    )
    def test_scale_invariance_in_w(self, seed, scale, flip):
        rng = RngStream(seed)
        X = DataMatrix(rng.normal((5, 3)))
        w = rng.normal(5)
        c = -scale if flip else scale
        base = optimal_probabilities(X, w).values
        scaled = optimal_probabilities(X, c * w).values
        np.testing.assert_allclose(scaled, base, rtol=1e-12, atol=1e-15)


def test_uniform_probabilities():
    np.testing.assert_array_equal(uniform_probabilities(4).values, [0.25] * 4)
    np.testing.assert_array_equal(uniform_probabilities(1).values, [1.0])
    np.testing.assert_array_equal(uniform_probabilities(2).values, [0.5, 0.5])


class TestCategoricalIndices:
    def test_boundary_tie_goes_to_lower_index(self):
        p = np.array([0.5, 0.5])
        assert _categorical_indices(p, np.array([0.5]))[0] == 0
        assert _categorical_indices(p, np.array([0.5 + 1e-12]))[0] == 1

    def test_zero_draw_lands_on_first_positive(self):
        p = np.array([0.0, 0.3, 0.7])
        assert _categorical_indices(p, np.array([0.0]))[0] == 1

    def test_top_of_range(self):
        p = np.array([0.3, 0.7, 0.0])
        assert _categorical_indices(p, np.array([1.0 - 1e-16]))[0] == 1

    def test_never_returns_zero_probability_index(self):
        p = np.array([0.0, 0.5, 0.0, 0.5, 0.0])
        us = np.linspace(0.0, 1.0 - 1e-12, 1001)
        idx = _categorical_indices(p, us)
        assert set(np.unique(idx)) <= {1, 3}


class TestSampleSketchMask:
    def test_degenerate_distribution_is_deterministic(self):
        m = sample_sketch_mask(ProbabilityVector([1.0, 0.0]), 3, RngStream(0))
        np.testing.assert_allclose(m.values, [1.0, 0.0])
        assert m.kind == "sketch"

    def test_single_draw_two_outcomes(self):
        p = ProbabilityVector([0.5, 0.5])
        seen = set()
        for k in range(50):
            m = sample_sketch_mask(p, 1, RngStream(0, k + 1))
            assert sorted(m.values.tolist()) == [0.0, 2.0]
            seen.add(tuple(m.values))
        assert len(seen) == 2

    def test_mean_mask_entry_is_one(self):
        rng = RngStream(5)
        X = DataMatrix(rng.normal((6, 3)))
        p = optimal_probabilities(X, rng.normal(6))
        trials = 20_000
        acc = np.zeros(6)
        for _ in range(trials):
            acc += sample_sketch_mask(p, 3, rng).values
        mean = acc / trials
        # SE of each entry is at most sqrt(Var(m_i))/sqrt(trials); use the
        # exact per-entry variance (1/s)(1/p_i - 1)
        se = np.sqrt((1.0 / (3 * p.values) - 1.0 / 3) / trials)
        np.testing.assert_array_less(np.abs(mean - 1.0), 4.0 * se)

    def test_zero_budget_rejected(self):
        with pytest.raises(InvalidDensityError):
            sample_sketch_mask(ProbabilityVector([1.0]), 0, RngStream(0))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), s=st.integers(1, 6), d=st.integers(2, 9))
    def test_support_never_exceeds_budget(self, seed, s, d):
        rng = RngStream(seed)
        raw = rng.uniform(d) + 1e-3
        p = ProbabilityVector(raw / raw.sum())
        m = sample_sketch_mask(p, s, rng)
        assert m.nnz <= s
        assert (m.values >= 0).all()


class TestApproximationError:
    def test_identity_mask_is_exact(self):
        X = DataMatrix(np.eye(2))
        assert approximation_error(X, [1.0, 1.0], Mask([1.0, 1.0], kind="binary")) == 0.0

    def test_hand_value(self):
        X = DataMatrix(np.eye(2))
        err = approximation_error(X, [1.0, 1.0], Mask([2.0, 0.0], kind="sketch"))
        assert err == pytest.approx(np.sqrt(2.0))

    def test_zero_weights(self):
        X = DataMatrix(np.eye(2))
        assert approximation_error(X, [0.0, 0.0], Mask([2.0, 0.0], kind="sketch")) == 0.0

    def test_matches_direct_norm(self):
        rng = RngStream(9)
        X = DataMatrix(rng.normal((5, 4)))
        w = rng.normal(5)
        m = sample_sketch_mask(optimal_probabilities(X, w), 2, rng)
        direct = np.linalg.norm(features(X, w) - features(X, w * m.values))
        assert approximation_error(X, w, m) == pytest.approx(direct, rel=1e-12)
