"""Tests for the closed-form solutions."""

import numpy as np
import pytest

from sevensins.core.analytic import (
    SharpeParams,
    maximize_sharpe_directly,
    min_variance_fully_invested,
    principal_decomposition,
    sharpe_ratio,
    sinful_intermediate_step,
    solve_sharpe_max,
    solve_unconstrained_mv,
    truncated_principal_solution,
)
from sevensins.core.domain.errors import (
    NotPositiveDefiniteError,
    ValidationError,
    ZeroMuError,
    ZeroPositionError,
)

OPTIMAL_SHARPE = np.sqrt(20.0 / 3.0)


class TestSolveUnconstrained:
    def test_identity(self):
        np.testing.assert_allclose(
            solve_unconstrained_mv([1.0, 0.0], np.eye(2), 1.0), [1.0, 0.0]
        )

    def test_two_asset_equal_returns(self, pair_q):
        x = solve_unconstrained_mv([1.0, 1.0], pair_q, 1.0)
        np.testing.assert_allclose(x, [1.29099, 1.29099], atol=1e-5)
        assert pair_q.quadratic_form(x) == pytest.approx(1.0, rel=1e-12)

    def test_two_asset_single_return(self, pair_q):
        x = solve_unconstrained_mv([1.0, 0.0], pair_q, 1.0)
        np.testing.assert_allclose(x, [2.58199, -1.29099], atol=1e-5)

    def test_zero_budget_gives_zero_position(self, pair_q):
        np.testing.assert_array_equal(solve_unconstrained_mv([1, 1], pair_q, 0.0), 0.0)

    def test_zero_mu(self, pair_q):
        with pytest.raises(ZeroMuError):
            solve_unconstrained_mv([0.0, 0.0], pair_q, 1.0)

    def test_indefinite(self, indefinite_q):
        with pytest.raises(NotPositiveDefiniteError):
            solve_unconstrained_mv([1.0, 0.0], indefinite_q, 1.0)

    @pytest.mark.parametrize("n", [2, 5, 20, 50])
    def test_budget_binds(self, spd_factory, rng, n):
        Q = spd_factory(n)
        x = solve_unconstrained_mv(rng.standard_normal(n), Q, 0.7)
        assert Q.quadratic_form(x) == pytest.approx(0.7, rel=1e-10)


class TestPrincipalDecomposition:
    def test_identity_single_term(self):
        decomposition = principal_decomposition([1.0, 0.0], np.eye(2), 1.0)
        assert np.count_nonzero(np.abs(decomposition.coefficients) > 1e-12) == 1

    def test_small_eigenvalue_dominates(self, pair_q):
        decomposition = principal_decomposition([1.0, 0.0], pair_q, 1.0)
        root = 2**-0.5
        np.testing.assert_allclose(
            decomposition.coefficients, [root / 0.3, root / 0.1], rtol=1e-12
        )
        np.testing.assert_allclose(decomposition.eigenvalues, [0.3, 0.1])

    def test_orthogonal_term_vanishes(self, pair_q):
        decomposition = principal_decomposition([1.0, 1.0], pair_q, 1.0)
        assert decomposition.coefficients[1] == pytest.approx(0.0, abs=1e-14)

    def test_reconstruction_equals_optimum(self, spd_factory, rng):
        Q = spd_factory(6)
        mu = rng.standard_normal(6)
        decomposition = principal_decomposition(mu, Q, 2.0)
        np.testing.assert_allclose(
            decomposition.reconstruction(),
            solve_unconstrained_mv(mu, Q, 2.0),
            rtol=1e-8,
            atol=1e-12,
        )


class TestTruncatedSolution:
    def test_threshold_below_spectrum_is_exact(self, pair_q):
        np.testing.assert_allclose(
            truncated_principal_solution([1.0, 0.0], pair_q, 1.0, threshold=0.05),
            solve_unconstrained_mv([1.0, 0.0], pair_q, 1.0),
            rtol=1e-12,
        )

    def test_drops_small_eigenvalue(self, pair_q):
        x = truncated_principal_solution([1.0, 0.0], pair_q, 1.0, threshold=0.2)
        assert x[0] == pytest.approx(x[1])
        assert pair_q.quadratic_form(x) == pytest.approx(1.0)

    def test_nothing_retained(self, pair_q):
        with pytest.raises(ZeroMuError):
            truncated_principal_solution([1.0, 0.0], pair_q, 1.0, threshold=1.0)

    def test_mu_orthogonal_to_retained(self, pair_q):
        with pytest.raises(ZeroMuError):
            truncated_principal_solution([1.0, -1.0], pair_q, 1.0, threshold=0.2)

    def test_nonpositive_retained_eigenvalue(self, indefinite_q):
        with pytest.raises(NotPositiveDefiniteError):
            truncated_principal_solution([1.0, 0.0], indefinite_q, 1.0, threshold=-2)


class TestIntermediateStep:
    def test_identity_matches_optimum(self):
        mu = np.array([0.3, -0.4])
        np.testing.assert_allclose(
            sinful_intermediate_step(mu, np.eye(2), 1.0),
            solve_unconstrained_mv(mu, np.eye(2), 1.0),
        )

    def test_two_asset_loses_sharpe(self, pair_q):
        mu = np.array([1.0, 0.0])
        y = sinful_intermediate_step(mu, pair_q, 1.0)
        np.testing.assert_allclose(y, [2.23607, 0.0], atol=1e-5)
        assert sharpe_ratio(y, mu, pair_q) == pytest.approx(2.23607, abs=1e-5)
        x = solve_unconstrained_mv(mu, pair_q, 1.0)
        assert sharpe_ratio(x, mu, pair_q) == pytest.approx(2.58199, abs=1e-5)

    def test_eigenvector_mu_matches_optimum(self, pair_q):
        mu = np.array([1.0, 1.0])
        np.testing.assert_allclose(
            sinful_intermediate_step(mu, pair_q, 1.0),
            solve_unconstrained_mv(mu, pair_q, 1.0),
            rtol=1e-12,
        )


class TestSharpe:
    def test_identity(self):
        assert sharpe_ratio([1.0, 0.0], [1.0, 0.0], np.eye(2)) == pytest.approx(1.0)

    def test_optimum_independent_of_budget(self, pair_q):
        for budget in (0.5, 1.0, 2.0):
            x = solve_unconstrained_mv([1.0, 0.0], pair_q, budget)
            assert sharpe_ratio(x, [1.0, 0.0], pair_q) == pytest.approx(
                OPTIMAL_SHARPE, rel=1e-10
            )

    def test_scale_invariance(self, pair_q):
        x = np.array([0.3, 0.9])
        assert sharpe_ratio(7 * x, [1, 0.5], pair_q) == pytest.approx(
            sharpe_ratio(x, [1, 0.5], pair_q), abs=1e-12
        )

    def test_zero_position(self, pair_q):
        with pytest.raises(ZeroPositionError):
            sharpe_ratio([0.0, 0.0], [1.0, 0.0], pair_q)

    def test_nonzero_risk_free_rate_rejected(self):
        with pytest.raises(ValidationError):
            SharpeParams(r_f=0.01)


class TestSharpeMax:
    def test_same_as_analytic_optimum(self, spd_factory, rng):
        Q = spd_factory(4)
        mu = rng.standard_normal(4)
        np.testing.assert_allclose(
            solve_sharpe_max(mu, Q, 1.0), solve_unconstrained_mv(mu, Q, 1.0), rtol=1e-12
        )

    def test_beats_boundary_grid(self, pair_q):
        mu = np.array([1.0, 0.0])
        best = sharpe_ratio(solve_sharpe_max(mu, pair_q, 1.0), mu, pair_q)
        angles = np.linspace(0.0, 2 * np.pi, 10_000, endpoint=False)
        L = np.linalg.cholesky(pair_q.entries)
        directions = np.linalg.solve(L.T, np.vstack([np.cos(angles), np.sin(angles)]))
        grid = (mu @ directions) / np.sqrt(
            np.einsum("ik,ij,jk->k", directions, pair_q.entries, directions)
        )
        assert best >= grid.max() - 1e-12

    def test_direct_route_reports_its_outcome(self, pair_q):
        result = maximize_sharpe_directly([1.0, 0.0], pair_q, start=np.ones(2))
        assert result.sharpe <= OPTIMAL_SHARPE + 1e-9
        assert result.iterations >= 0
        assert isinstance(result.converged, bool)

    def test_direct_route_needs_nonzero_start(self, pair_q):
        with pytest.raises(ZeroPositionError):
            maximize_sharpe_directly([1.0, 0.0], pair_q, start=np.zeros(2))


class TestMinVariance:
    def test_identity(self):
        x, variance = min_variance_fully_invested(np.eye(2))
        np.testing.assert_allclose(x, [0.5, 0.5])
        assert variance == pytest.approx(0.5)

    def test_two_asset_matrix(self, pair_q):
        x, variance = min_variance_fully_invested(pair_q)
        np.testing.assert_allclose(x, [0.5, 0.5])
        assert variance == pytest.approx(0.15)

    def test_inverse_variance_weights(self):
        x, variance = min_variance_fully_invested(np.diag([1.0, 4.0]))
        np.testing.assert_allclose(x, [0.8, 0.2])
        assert variance == pytest.approx(0.8)
