#!/usr/bin/env python3
"""
Unit tests for correlation kernels and correlation systems.
"""

import unittest

import numpy as np

from covariance import (
    CorrelationSystem,
    CovarianceSpec,
    assemble_system,
    correlation,
    correlation_spec,
    cross_correlation,
    distance_range,
    parse_covariance,
    parse_nu,
)
from dataset import Rectangle, make_grid
from errors import CovarianceDomainError, SingularSystemError
from oracles import matern_bessel
from test_base import BaseTestCase


class TestKernels(BaseTestCase):
    """Kernel values against closed forms and the Bessel oracle."""

    def test_zero_distance_is_one(self):
        for family, nu in (("matern", 0.5), ("matern", 1.5), ("matern", 2.5), ("gaussian", 0.5)):
            spec = CovarianceSpec(family, phi=2.0, nu=nu)
            self.assertEqual(correlation(spec, 0.0), 1.0)

    def test_gaussian_value(self):
        self.assertAlmostEqual(correlation(CovarianceSpec("gaussian", phi=2.0), 2.0), np.exp(-1.0), places=12)

    def test_exponential_value(self):
        self.assertAlmostEqual(correlation(CovarianceSpec("matern", phi=4.5, nu=0.5), 4.5), np.exp(-1.0), places=12)

    def test_matern_matches_bessel(self):
        h = np.linspace(0.05, 12.0, 10)
        for nu in (0.5, 1.5, 2.5):
            spec = CovarianceSpec("matern", phi=4.5, nu=nu)
            np.testing.assert_allclose(correlation(spec, h), matern_bessel(h, 4.5, nu), rtol=1e-10)

    def test_matern_three_halves_closed_form(self):
        h = np.array([0.3, 1.0, 2.7])
        phi = 1.7
        expected = (1 + np.sqrt(3) * h / phi) * np.exp(-np.sqrt(3) * h / phi)
        np.testing.assert_allclose(correlation(CovarianceSpec("matern", phi=phi, nu=1.5), h), expected, rtol=1e-12)

    def test_correlation_does_not_modify_input(self):
        h = np.array([0.5, 1.0])
        correlation(CovarianceSpec("gaussian", phi=1.0), h)
        np.testing.assert_array_equal(h, [0.5, 1.0])

    def test_negative_distance_rejected(self):
        with self.assertRaises(CovarianceDomainError):
            correlation(CovarianceSpec(), -1.0)

    def test_invalid_specs(self):
        with self.assertRaises(CovarianceDomainError):
            CovarianceSpec("matern", nu=1.0)
        with self.assertRaises(CovarianceDomainError):
            CovarianceSpec("spherical")
        with self.assertRaises(CovarianceDomainError):
            CovarianceSpec(phi=0.0)
        with self.assertRaises(CovarianceDomainError):
            CovarianceSpec(sigma2=0.0)
        with self.assertRaises(CovarianceDomainError):
            CovarianceSpec(tau2=-1e-3)

    def test_parse_nu_and_labels(self):
        self.assertEqual(parse_nu("3/2"), 1.5)
        self.assertEqual(parse_nu("2.5"), 2.5)
        self.assertEqual(parse_covariance("matern:1/2"), ("matern", 0.5))
        self.assertEqual(parse_covariance("matern_5/2"), ("matern", 2.5))
        self.assertEqual(parse_covariance("gaussian"), ("gaussian", 0.5))
        with self.assertRaises(CovarianceDomainError):
            parse_covariance("matern:1")
        self.assertEqual(CovarianceSpec("matern", nu=0.5).tag, "matern_1/2")
        self.assertEqual(CovarianceSpec("gaussian").tag, "gaussian")

    def test_with_parameters_ties_nugget(self):
        spec = correlation_spec("matern", 1.5, 1.0).with_parameters(2.0, 0.5, 0.1)
        self.assertEqual((spec.phi, spec.sigma2), (2.0, 0.5))
        self.assertAlmostEqual(spec.tau2, 0.05)
        self.assertAlmostEqual(spec.nugget_ratio, 0.1)


class TestCorrelationSystem(BaseTestCase):
    """Assembly and factorization."""

    def test_single_point(self):
        spec = CovarianceSpec(phi=1.0, sigma2=2.0, tau2=0.5)
        system = assemble_system(spec, [[0.0, 0.0]])
        np.testing.assert_allclose(system.matrix, [[1.25]])
        self.assertAlmostEqual(system.log_det(), np.log(1.25))

    def test_symmetric_unit_diagonal(self):
        positions = make_grid(Rectangle.square(0.0, 10.0), 5)
        system = assemble_system(CovarianceSpec(phi=4.5), positions)
        np.testing.assert_array_equal(system.matrix, system.matrix.T)
        np.testing.assert_array_equal(np.diag(system.matrix), 1.0)

    def test_solve_and_inverse(self):
        positions = self.random_dataset(10).positions
        system = assemble_system(CovarianceSpec("matern", phi=3.0, nu=2.5, tau2=0.01), positions)
        b = np.arange(10.0)
        np.testing.assert_allclose(system.matrix @ system.solve(b), b, atol=1e-8)
        np.testing.assert_allclose(system.matrix @ system.inverse(), np.eye(10), atol=1e-8)
        self.assertAlmostEqual(system.log_det(), np.linalg.slogdet(system.matrix)[1], places=8)

    def test_near_coincident_points_are_singular(self):
        positions = [[0.0, 0.0], [1e-9, 0.0], [1.0, 1.0]]
        with self.assertRaises(SingularSystemError) as ctx:
            assemble_system(CovarianceSpec("gaussian", phi=1.0), positions)
        self.assertIsNotNone(ctx.exception.pivot)

    def test_regularized_gaussian_grid_factorizes(self):
        positions = make_grid(Rectangle.square(-1.0, 1.0), 12)
        system = assemble_system(CovarianceSpec("gaussian", phi=0.5, tau2=1e-6), positions)
        self.assertEqual(system.lower.shape, (144, 144))

    def test_without_matrix(self):
        positions = self.random_dataset(8).positions
        kept = CorrelationSystem(CovarianceSpec(phi=2.0), positions)
        lean = CorrelationSystem(CovarianceSpec(phi=2.0), positions, keep_matrix=False)
        self.assertIsNone(lean.matrix)
        np.testing.assert_allclose(lean.lower, kept.lower)


class TestCrossCorrelation(BaseTestCase):
    """Cross-correlation vectors and distance helpers."""

    def test_target_at_training_point(self):
        positions = self.random_dataset(6).positions
        r = cross_correlation(CovarianceSpec(phi=2.0, tau2=0.3), positions, positions[3])
        self.assertEqual(r[3], 1.0)
        self.assertTrue(np.all(r <= 1.0))

    def test_far_target_decays(self):
        positions = self.random_dataset(6).positions
        r = cross_correlation(CovarianceSpec(phi=1.0), positions, [1e4, 1e4])
        np.testing.assert_allclose(r, 0.0, atol=1e-300)

    def test_matern_three_halves_cross(self):
        positions = self.random_dataset(5).positions
        target = np.array([2.0, 3.0])
        spec = CovarianceSpec("matern", phi=2.5, nu=1.5)
        h = np.linalg.norm(positions - target, axis=1)
        np.testing.assert_allclose(cross_correlation(spec, positions, target), matern_bessel(h, 2.5, 1.5), rtol=1e-10)

    def test_system_cross_shape(self):
        positions = self.random_dataset(7).positions
        system = assemble_system(CovarianceSpec(phi=2.0), positions)
        self.assertEqual(system.cross(np.zeros((3, 2))).shape, (7, 3))

    def test_distance_range(self):
        d_min, d_max = distance_range([[0.0, 0.0], [3.0, 4.0], [0.0, 1.0]])
        self.assertAlmostEqual(d_min, 1.0)
        self.assertAlmostEqual(d_max, 5.0)
        with self.assertRaises(CovarianceDomainError):
            distance_range([[0.0, 0.0]])


if __name__ == "__main__":
    unittest.main()
