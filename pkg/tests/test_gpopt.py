"""Tests for the Gaussian-process Bayesian optimizer."""

import numpy as np
import pytest

from shmnovelty.errors import InvalidInputError
from shmnovelty.gpopt import (
    NOISE_FLOOR,
    PENALTY_VALUE,
    bayes_minimize,
    expected_improvement,
    fit_hyperparameters,
    fit_surrogate,
    gp_posterior,
    matern52_ard,
)


class TestMaternKernel:
    def test_zero_distance_gives_signal_variance(self):
        assert matern52_ard([1.0, 2.0], [1.0, 2.0], [1.0, 1.0], 2.5) == pytest.approx(2.5)

    def test_known_unit_distance_value(self):
        sr = np.sqrt(5.0)
        expected = (1.0 + sr + sr * sr / 3.0) * np.exp(-sr)
        assert matern52_ard([0.0], [1.0], [1.0], 1.0) == pytest.approx(expected, rel=1e-12)

    def test_ard_lengthscales_rescale_each_axis(self):
        # Distance 2 along an axis with lengthscale 2 equals unit distance.
        k_ard = matern52_ard([0.0, 0.0], [2.0, 0.0], [2.0, 1.0], 1.0)
        k_unit = matern52_ard([0.0], [1.0], [1.0], 1.0)
        assert k_ard == pytest.approx(k_unit, rel=1e-12)

    def test_symmetry_and_decay(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=(2, 4))
        ell = np.full(4, 0.7)
        assert matern52_ard(a, b, ell, 1.3) == pytest.approx(matern52_ard(b, a, ell, 1.3))
        vals = [matern52_ard([0.0], [d], [1.0], 1.0) for d in (0.0, 0.5, 1.0, 2.0, 4.0)]
        assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_positive_semidefinite_on_random_points(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(30, 3))
        K = matern52_ard(X[:, None, :], X[None, :, :], np.ones(3), 1.0)
        eig = np.linalg.eigvalsh(K)
        assert eig.min() > -1e-10

    def test_rejects_nonpositive_lengthscale(self):
        with pytest.raises(InvalidInputError):
            matern52_ard([0.0], [1.0], [0.0], 1.0)


class TestPosterior:
    def _dense_reference(self, X, y, q, ell, sf2, sn2):
        """Textbook GP posterior computed with a dense solve."""
        K = matern52_ard(X[:, None, :], X[None, :, :], ell, sf2) + sn2 * np.eye(len(X))
        ks = matern52_ard(X[:, None, :], q[None, None, :], ell, sf2)[:, 0]
        yc = y - y.mean()
        Kinv = np.linalg.inv(K)
        mu = ks @ Kinv @ yc + y.mean()
        var = sf2 - ks @ Kinv @ ks
        return mu, max(var, 0.0)

    def test_matches_dense_solve_on_random_designs(self):
        rng = np.random.default_rng(2)
        for t in (3, 12, 50):
            X = rng.uniform(-2, 2, size=(t, 2))
            y = np.sin(X[:, 0]) + 0.3 * X[:, 1] ** 2
            ell = np.array([0.8, 1.1])
            s = fit_surrogate(X, y, lengthscales=ell, sigma_f2=1.7, sigma_n2=1e-6)
            for _ in range(5):
                q = rng.uniform(-2, 2, size=2)
                mu, var = gp_posterior(s, q)
                mu_ref, var_ref = self._dense_reference(X, y, q, ell, 1.7, 1e-6)
                assert mu == pytest.approx(mu_ref, abs=1e-8)
                assert var == pytest.approx(var_ref, abs=1e-8)

    def test_interpolates_training_points_with_tiny_noise(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(0, 1, size=(8, 1))
        y = np.cos(3 * X[:, 0])
        s = fit_surrogate(X, y, lengthscales=[0.5], sigma_f2=1.0, sigma_n2=1e-12)
        mu, var = gp_posterior(s, X)
        np.testing.assert_allclose(mu, y, atol=1e-5)
        assert np.all(var >= 0)
        assert var.max() < 1e-4

    def test_batched_query_matches_single(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(10, 3))
        y = rng.normal(size=10)
        s = fit_surrogate(X, y)
        Q = rng.normal(size=(6, 3))
        mu_b, var_b = gp_posterior(s, Q)
        for i in range(6):
            mu, var = gp_posterior(s, Q[i])
            assert mu == pytest.approx(mu_b[i])
            assert var == pytest.approx(var_b[i])

    def test_shape_validation(self):
        with pytest.raises(InvalidInputError):
            fit_surrogate(np.zeros((3, 2)), np.zeros(4))
        with pytest.raises(InvalidInputError):
            fit_surrogate(np.zeros(3), np.zeros(3))


class TestExpectedImprovement:
    def test_matches_monte_carlo(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(-1, 1, size=(12, 2))
        y = X[:, 0] ** 2 + np.sin(2 * X[:, 1])
        s = fit_surrogate(X, y, lengthscales=[0.6, 0.6], sigma_f2=1.2, sigma_n2=1e-6)
        draws = 1_000_000
        for trial in range(6):
            q = rng.uniform(-1, 1, size=2)
            incumbent = float(rng.uniform(y.min() - 0.5, y.max() + 0.5))
            mu, var = gp_posterior(s, q)
            samples = rng.normal(mu, np.sqrt(var), size=draws)
            improvement = np.maximum(incumbent - samples, 0.0)
            mc = improvement.mean()
            se = improvement.std(ddof=1) / np.sqrt(draws)
            ei = expected_improvement(s, q, incumbent)
            assert abs(ei - mc) < 3 * se + 1e-12

    def test_zero_variance_degenerates_to_hinge(self):
        X = np.array([[0.0], [1.0]])
        y = np.array([2.0, 3.0])
        s = fit_surrogate(X, y, lengthscales=[1.0], sigma_f2=1.0, sigma_n2=0.0)
        # At a training input the posterior is (numerically) deterministic.
        ei_better = expected_improvement(s, np.array([0.0]), 2.5)
        assert ei_better == pytest.approx(0.5, abs=1e-3)
        ei_worse = expected_improvement(s, np.array([1.0]), 2.5)
        assert ei_worse == pytest.approx(0.0, abs=1e-3)

    def test_nonnegative_everywhere(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(9, 1))
        y = rng.normal(size=9)
        s = fit_surrogate(X, y)
        qs = rng.normal(size=(50, 1))
        ei = expected_improvement(s, qs, float(y.min()) - 5.0)
        assert np.all(ei >= 0)


class TestHyperparameters:
    def test_fitted_values_respect_bounds(self):
        rng = np.random.default_rng(7)
        X = rng.uniform(0, 2, size=(25, 1))
        y = np.sin(3 * X[:, 0]) + 0.01 * rng.normal(size=25)
        widths = np.array([2.0])
        ell, sf2, sn2 = fit_hyperparameters(X, y, widths, rng)
        assert 1e-3 * 2.0 <= ell[0] <= 10.0 * 2.0
        assert sf2 > 0
        assert sn2 >= NOISE_FLOOR * (1 - 1e-9)

    def test_smooth_function_prefers_long_lengthscale(self):
        rng = np.random.default_rng(8)
        X = np.linspace(0, 1, 20)[:, None]
        y_smooth = 0.5 * X[:, 0]
        ell_smooth, _, _ = fit_hyperparameters(X, y_smooth, np.array([1.0]), rng)
        y_rough = np.sin(40 * X[:, 0])
        ell_rough, _, _ = fit_hyperparameters(X, y_rough, np.array([1.0]), rng)
        assert ell_smooth[0] > ell_rough[0]


class TestBayesMinimize:
    def test_finds_quadratic_minimum(self):
        f = lambda x: float((x[0] - 0.7) ** 2)
        x_best, val, history = bayes_minimize(f, [[0.0, 2.0]], 30, seed=0)
        assert len(history) == 30
        assert abs(x_best[0] - 0.7) < 0.02

    def test_incumbent_trace_non_increasing(self):
        f = lambda x: float(np.sin(5 * x[0]) + 0.5 * x[0] ** 2)
        _, _, history = bayes_minimize(f, [[-2.0, 2.0]], 25, seed=1)
        inc = [step.incumbent for step in history]
        assert all(a >= b for a, b in zip(inc, inc[1:]))
        # Every recorded incumbent equals the running minimum of values.
        vals = [step.value for step in history]
        np.testing.assert_array_equal(inc, np.minimum.accumulate(vals))

    def test_improves_on_initial_design_for_multimodal(self):
        def f(x):
            return float(
                np.sin(3 * x[0]) * np.cos(2 * x[1]) + 0.3 * (x[0] ** 2 + x[1] ** 2)
            )

        _, val, history = bayes_minimize(f, [[-2.0, 2.0], [-2.0, 2.0]], 35, seed=2)
        design_best = min(step.value for step in history[:5])
        assert val <= design_best

    def test_budget_counts_design_and_iterations(self):
        calls = []
        f = lambda x: calls.append(1) or float(x[0] ** 2)
        bayes_minimize(f, [[-1.0, 1.0]], 12, seed=3)
        assert len(calls) == 12

    def test_deterministic_given_seed(self):
        f = lambda x: float((x[0] + 0.3) ** 2 + np.sin(x[0]))
        a = bayes_minimize(f, [[-1.0, 1.0]], 15, seed=7)
        b = bayes_minimize(f, [[-1.0, 1.0]], 15, seed=7)
        np.testing.assert_array_equal(a[0], b[0])
        assert a[1] == b[1]
        assert [s.x.tolist() for s in a[2]] == [s.x.tolist() for s in b[2]]

    def test_non_finite_values_are_penalized_not_fatal(self):
        def f(x):
            if x[0] > 0.5:
                return np.nan
            return float(x[0] ** 2)

        x_best, val, history = bayes_minimize(f, [[0.0, 1.0]], 15, seed=4)
        assert any(step.penalized for step in history)
        assert all(
            step.value == PENALTY_VALUE for step in history if step.penalized
        )
        assert np.isfinite(val) and val < PENALTY_VALUE
        assert x_best[0] <= 0.5

    def test_validation(self):
        f = lambda x: 0.0
        with pytest.raises(InvalidInputError):
            bayes_minimize(f, [[1.0, 0.0]], 10)
        with pytest.raises(InvalidInputError):
            bayes_minimize(f, [[0.0, 1.0]], 3)
