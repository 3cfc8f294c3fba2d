#!/usr/bin/env python3
"""
Unit tests for maximum-likelihood fitting and the ordinary-kriging predictor.
"""

import unittest

import numpy as np

from covariance import CovarianceSpec
from dataset import Rectangle, SpatialDataset, make_grid
from errors import DegenerateDataError, FitError, KrigingError
from ordinary_kriging import (
    fit_fixed,
    fit_mle,
    kriging_weights,
    loo_predictions,
    mle_bracket,
    predict,
    predict_gaussian_interval,
    predict_many,
    predict_simple,
    profile_log_likelihood,
)
from simulate import derive_seed, simulate_gp
from test_base import BaseTestCase

TRUE_SPEC = CovarianceSpec("matern", phi=4.5, sigma2=0.1, nu=0.5)


def grid_field(k=5, seed=0):
    return simulate_gp(TRUE_SPEC, 0.5, make_grid(Rectangle.square(0.0, 10.0), k), derive_seed(seed, 1))


class TestFitMle(BaseTestCase):
    """Profile-likelihood maximization."""

    def test_optimum_beats_true_parameters(self):
        for seed in range(3):
            ds = grid_field(5, seed)
            model = fit_mle(ds)
            at_truth, _ = profile_log_likelihood(ds, "matern", 0.5, 0.0, 4.5)
            self.assertGreaterEqual(model.log_likelihood, at_truth - 1e-8)

    def test_optimum_inside_bracket(self):
        ds = grid_field(4, 1)
        low, high = mle_bracket(ds.positions)
        model = fit_mle(ds)
        self.assertTrue(low <= model.spec.phi <= high)
        self.assertAlmostEqual(model.spec.sigma2, model.gls.residual_ss / ds.n)

    def test_profile_is_maximized_over_a_grid(self):
        ds = grid_field(5, 2)
        model = fit_mle(ds)
        low, high = mle_bracket(ds.positions)
        grid = np.exp(np.linspace(np.log(low), np.log(high), 40))
        best = max(profile_log_likelihood(ds, "matern", 0.5, 0.0, p)[0] for p in grid)
        self.assertGreaterEqual(model.log_likelihood, best - 1e-3)

    def test_constant_values(self):
        ds = SpatialDataset([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], [1.0, 1.0, 1.0])
        with self.assertRaises(DegenerateDataError):
            fit_mle(ds)

    def test_too_few_points(self):
        with self.assertRaises(FitError):
            fit_mle(SpatialDataset([[0.0, 0.0], [1.0, 0.0]], [1.0, 2.0]))

    def test_variance_underestimated_on_average(self):
        estimates = [fit_mle(grid_field(9, seed)).spec.sigma2 for seed in range(30)]
        self.assertLess(np.median(estimates), 0.1)

    def test_to_dict(self):
        out = fit_mle(grid_field(4, 3)).to_dict()
        self.assertEqual(out["covariance"], "matern_1/2")
        self.assertEqual(out["n"], 16)
        for key in ("beta", "sigma2", "phi", "log_likelihood"):
            self.assertTrue(np.isfinite(out[key]))


class TestPredict(BaseTestCase):
    """Kriging mean and variance."""

    def setUp(self):
        super().setUp()
        self.ds = grid_field(5, 4)
        self.model = fit_mle(self.ds)

    def test_interpolates_training_points(self):
        means, variances = predict_many(self.model, self.ds.positions)
        scale = np.max(np.abs(self.ds.values))
        np.testing.assert_allclose(means, self.ds.values, atol=1e-8 * scale)
        self.assertTrue(np.all(variances <= 1e-10 * self.model.spec.sigma2))

    def test_single_observation(self):
        ds = SpatialDataset([[0.0, 0.0]], [2.5])
        model = fit_fixed(ds, CovarianceSpec(phi=1.0, sigma2=0.3))
        target = [0.7, 0.2]
        mean, variance = predict(model, target)
        r1 = np.exp(-np.hypot(0.7, 0.2))
        self.assertAlmostEqual(mean, 2.5)
        self.assertAlmostEqual(variance, 2 * 0.3 * (1 - r1))

    def test_far_target(self):
        mean, variance = predict(self.model, [1e5, 1e5])
        a = self.model.gls.one_rinv_one
        self.assertAlmostEqual(mean, self.model.beta, places=10)
        self.assertAlmostEqual(variance, self.model.spec.sigma2 * (1 + 1 / a), places=10)

    def test_weights_sum_to_one(self):
        target = [3.3, 7.1]
        weights = kriging_weights(self.model, target)
        self.assertAlmostEqual(weights.sum(), 1.0, places=10)
        self.assertAlmostEqual(weights @ self.ds.values, predict(self.model, target)[0], places=10)

    def test_nugget_variance_at_training_point(self):
        model = fit_fixed(self.ds, CovarianceSpec(phi=4.5, sigma2=0.1, tau2=0.01))
        _, variance = predict(model, self.ds.positions[0])
        self.assertGreater(variance, 0.0)

    def test_gaussian_interval(self):
        model = fit_fixed(SpatialDataset([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [0.0, 1.0, 2.0]), CovarianceSpec(phi=1.0, sigma2=1.0))
        target = [5.0, 5.0]
        mean, variance = predict(model, target)
        low, high = predict_gaussian_interval(model, target, 0.95)
        self.assertAlmostEqual((high - low) / 2, 1.959964 * np.sqrt(variance), places=5)
        low, high = predict_gaussian_interval(model, target, 1e-12)
        self.assertAlmostEqual(low, mean, places=8)
        with self.assertRaises(KrigingError):
            predict_gaussian_interval(model, target, 1.0)

    def test_interval_at_training_point(self):
        low, high = predict_gaussian_interval(self.model, self.ds.positions[2], 0.9)
        self.assertAlmostEqual(low, self.ds.values[2], delta=1e-5)
        self.assertAlmostEqual(high, self.ds.values[2], delta=1e-5)

    def test_shift_and_scale_equivariance(self):
        target = [3.3, 7.1]
        mean, variance = predict(self.model, target)
        shifted = fit_mle(self.ds.with_values(self.ds.values + 2.0))
        mean_s, variance_s = predict(shifted, target)
        self.assertAlmostEqual(mean_s, mean + 2.0, places=6)
        self.assertAlmostEqual(variance_s, variance, places=8)
        scaled = fit_mle(self.ds.with_values(3.0 * self.ds.values))
        self.assertAlmostEqual(scaled.spec.phi, self.model.spec.phi, places=4)
        self.assertAlmostEqual(scaled.spec.sigma2 / self.model.spec.sigma2, 9.0, places=4)
        self.assertAlmostEqual(predict(scaled, target)[0], 3.0 * mean, places=4)

    def test_simple_kriging_with_known_mean(self):
        model = fit_fixed(self.ds, CovarianceSpec(phi=4.5, sigma2=0.1), beta=0.5)
        means, variances = predict_simple(model, np.array([[1e5, 1e5]]))
        self.assertAlmostEqual(means[0], 0.5)
        self.assertAlmostEqual(variances[0], 0.1)


class TestLooPredictions(BaseTestCase):
    """Closed-form leave-one-out against refitting from scratch."""

    def test_matches_refit_with_fixed_parameters(self):
        for tau2 in (0.0, 0.005):
            ds = grid_field(4, 5)
            spec = CovarianceSpec("matern", phi=3.0, sigma2=0.12, tau2=tau2, nu=1.5)
            model = fit_fixed(ds, spec)
            means, variances = loo_predictions(model)
            for i in range(ds.n):
                held_out = fit_fixed(ds.drop(i), spec)
                mean, variance = predict(held_out, ds.positions[i])
                self.assertAlmostEqual(means[i], mean, places=8)
                self.assertAlmostEqual(variances[i], variance, places=10)


if __name__ == "__main__":
    unittest.main()
