"""Tests for covariance estimation, diagnosis and repair."""

import numpy as np
import pytest

from sevensins.core.covariance import (
    CovarianceVerdict,
    ReturnSample,
    clip_eigenvalues,
    demonstrate_exploit,
    demonstrate_fully_invested_exploit,
    diagnose,
    estimate_per_entry_ewma,
    estimate_sample_covariance,
    ewma_weights,
    shrink,
)
from sevensins.core.domain.errors import (
    InsufficientDataError,
    KappaOutOfRangeError,
    NonFiniteError,
    NotIndefiniteError,
    ValidationError,
)
from sevensins.core.fixtures import (
    mismatched_halflives,
    oscillating_correlation_returns,
)
from sevensins.core.linalg import eigh


class TestReturnSample:
    def test_needs_two_periods(self):
        with pytest.raises(InsufficientDataError):
            ReturnSample(np.ones((1, 2)))

    def test_rejects_nan(self):
        with pytest.raises(NonFiniteError):
            ReturnSample([[0.1, np.nan], [0.0, 0.0]])

    def test_window_keeps_labels(self):
        sample = ReturnSample(np.arange(8.0).reshape(4, 2), ("A", "B"), tuple("wxyz"))
        window = sample.window(1, 3)
        assert window.periods == 2
        assert window.dates == ("x", "y")
        assert window.assets == ("A", "B")


class TestSampleCovariance:
    def test_hand_computed(self):
        Q = estimate_sample_covariance(ReturnSample([[1.0, 0.0], [-1.0, 0.0]]))
        np.testing.assert_allclose(Q.entries, [[2.0, 0.0], [0.0, 0.0]])

    def test_constant_column_has_zero_variance(self, rng):
        values = np.column_stack([rng.standard_normal(50), np.full(50, 0.3)])
        Q = estimate_sample_covariance(ReturnSample(values))
        assert Q.entries[1, 1] == pytest.approx(0.0, abs=1e-18)

    def test_large_sample_matches_generator(self):
        generator = np.random.default_rng(5)
        sigma = np.array([[0.04, 0.01], [0.01, 0.09]])
        values = generator.multivariate_normal(np.zeros(2), sigma, size=100_000)
        Q = estimate_sample_covariance(ReturnSample(values))
        np.testing.assert_allclose(Q.entries, sigma, rtol=0.05)


class TestPerEntryEwma:
    def test_weights_halve_after_one_halflife(self):
        weights = ewma_weights(11, 10.0)
        assert weights[0] / weights[-1] == pytest.approx(0.5)
        assert weights.sum() == pytest.approx(1.0)

    def test_equal_halflives_give_psd_estimate(self, rng):
        sample = ReturnSample(rng.standard_normal((120, 4)) * 0.01)
        Q = estimate_per_entry_ewma(sample, 20.0)
        assert eigh(Q).min_eigenvalue >= -1e-15

    def test_mismatched_halflives_give_indefinite_estimate(self):
        Q = estimate_per_entry_ewma(
            oscillating_correlation_returns(), mismatched_halflives()
        )
        diagnosis = diagnose(Q)
        assert diagnosis.verdict is CovarianceVerdict.INDEFINITE
        assert diagnosis.min_eigenvalue < 0.0

    def test_two_periods_give_finite_symmetric_matrix(self):
        sample = ReturnSample([[0.01, -0.02, 0.0], [0.03, 0.01, -0.01]])
        Q = estimate_per_entry_ewma(sample, mismatched_halflives())
        assert np.all(np.isfinite(Q.entries))
        np.testing.assert_array_equal(Q.entries, Q.entries.T)

    def test_rejects_nonpositive_halflife(self, rng):
        sample = ReturnSample(rng.standard_normal((10, 2)))
        with pytest.raises(ValidationError):
            estimate_per_entry_ewma(sample, [[5.0, -1.0], [-1.0, 5.0]])


class TestDiagnose:
    def test_two_asset_is_positive_definite(self, pair_q):
        diagnosis = diagnose(pair_q)
        assert diagnosis.verdict is CovarianceVerdict.POSITIVE_DEFINITE
        assert diagnosis.min_eigenvalue == pytest.approx(0.1)
        assert diagnosis.condition_number == pytest.approx(3.0)
        assert diagnosis.offending_eigenvector is None

    def test_indefinite(self, indefinite_q):
        diagnosis = diagnose(indefinite_q)
        assert diagnosis.verdict is CovarianceVerdict.INDEFINITE
        assert diagnosis.min_eigenvalue == pytest.approx(-1.0)
        assert diagnosis.condition_number == float("inf")
        np.testing.assert_allclose(
            np.abs(diagnosis.offending_eigenvector), [2**-0.5, 2**-0.5]
        )

    def test_near_singular(self):
        diagnosis = diagnose(np.diag([1.0, 1e-8]))
        assert diagnosis.verdict is CovarianceVerdict.NEAR_SINGULAR
        assert diagnosis.condition_number == pytest.approx(1e8)

    def test_threshold_is_configurable(self):
        diagnosis = diagnose(np.diag([1.0, 1e-8]), near_singular_threshold=1e9)
        assert diagnosis.is_clean


class TestExploit:
    def test_negative_variance_position(self, indefinite_q):
        report = demonstrate_exploit(indefinite_q, [1.0, 0.0], 1.0, 10.0)
        np.testing.assert_allclose(report.position, 10.0 * np.array([1, -1]) / 2**0.5)
        assert report.claimed_variance == pytest.approx(-100.0)
        assert report.expected_return == pytest.approx(7.0710678)
        assert report.within_budget

    def test_return_grows_linearly_and_variance_quadratically(self, indefinite_q):
        report = demonstrate_exploit(indefinite_q, [1.0, 0.0], 1.0, 1000.0)
        assert report.expected_return == pytest.approx(707.10678)
        assert report.claimed_variance == pytest.approx(-1e6)

    def test_positive_definite_raises(self, pair_q):
        with pytest.raises(NotIndefiniteError):
            demonstrate_exploit(pair_q, [1.0, 0.0], 1.0, 10.0)

    def test_fully_invested_exploit_stays_invested(self):
        Q = estimate_per_entry_ewma(
            oscillating_correlation_returns(), mismatched_halflives()
        )
        mu = np.array([0.01, 0.005, 0.002])
        small = demonstrate_fully_invested_exploit(Q, mu, 1.0)
        large = demonstrate_fully_invested_exploit(Q, mu, 100.0)
        assert large.budget_sum == pytest.approx(1.0)
        assert large.direction_eigenvalue < 0.0
        assert large.claimed_variance < small.claimed_variance

    def test_fully_invested_exploit_needs_negative_curvature(self, pair_q):
        with pytest.raises(NotIndefiniteError):
            demonstrate_fully_invested_exploit(pair_q, [1.0, 0.0], 1.0)


class TestRepairs:
    def test_shrink_identity_weight(self, pair_q):
        np.testing.assert_allclose(shrink(pair_q, 1.0).entries, pair_q.entries)
        np.testing.assert_allclose(shrink(pair_q, 0.0).entries, np.eye(2))

    def test_shrink_maps_eigenvalues(self):
        Q = np.array([[0.4, 0.6], [0.6, 0.4]])  # eigenvalues 1.0 and -0.2
        values = eigh(shrink(Q, 0.5)).eigenvalues
        np.testing.assert_allclose(values, [1.0, 0.4], atol=1e-12)

    @pytest.mark.parametrize("kappa", [0.1, 0.5, 0.9])
    def test_shrink_keeps_eigenvectors(self, spd_factory, kappa):
        Q = spd_factory(5)
        before = eigh(Q).eigenvectors
        after = eigh(shrink(Q, kappa)).eigenvectors
        np.testing.assert_allclose(np.abs(before.T @ after), np.eye(5), atol=1e-8)

    @pytest.mark.parametrize("kappa", [-0.1, 1.5])
    def test_shrink_rejects_kappa(self, pair_q, kappa):
        with pytest.raises(KappaOutOfRangeError):
            shrink(pair_q, kappa)

    def test_clip_leaves_clean_matrix(self, pair_q):
        np.testing.assert_allclose(
            clip_eigenvalues(pair_q, 0.01).entries, pair_q.entries, atol=1e-10
        )

    def test_clip_indefinite_to_rank_one(self, indefinite_q):
        clipped = clip_eigenvalues(indefinite_q, 0.0)
        np.testing.assert_allclose(clipped.entries, np.full((2, 2), 1.5), atol=1e-12)

    def test_clip_diagonal(self):
        clipped = clip_eigenvalues(np.diag([1.0, 1e-8]), 1e-4)
        np.testing.assert_allclose(clipped.entries, np.diag([1.0, 1e-4]), atol=1e-15)

    def test_clip_rejects_negative_floor(self, pair_q):
        with pytest.raises(ValidationError):
            clip_eigenvalues(pair_q, -1.0)
