"""Unit tests for the shared quadrature, determinant and fit kernel."""
import logging
import math
import unittest

import numpy as np

from app.utils.errors import CapabilityError, InvalidInputError, QuadratureError
from app.utils.numerics import (
    Box,
    QuadratureSpec,
    Scheme,
    axis_rule,
    compensated_sum,
    determinant,
    extended_det,
    fit_constant,
    gauss_hermite,
    gauss_laguerre,
    gauss_legendre,
    hadamard_bound,
    tensor_quadrature,
    weyl_quadrature,
)
from app.utils.settings import configure_logging

configure_logging()
logger = logging.getLogger()


def gaussian(points):
    """Standard Gaussian weight without normalisation."""
    return np.exp(-0.5 * np.sum(points**2, axis=1))


class TestRules(unittest.TestCase):

    """One-dimensional rules."""

    def test_gauss_hermite(self):
        """Weights integrate e^{-x^2/2}."""
        knots, weights = gauss_hermite(20)
        self.assertAlmostEqual(weights.sum(), math.sqrt(2 * math.pi), places=12)
        self.assertAlmostEqual(np.dot(weights, knots**2), math.sqrt(2 * math.pi), places=10)

    def test_gauss_legendre(self):
        """x^2 on [0, 1]."""
        knots, weights = gauss_legendre(0.0, 1.0, 8)
        self.assertAlmostEqual(np.dot(weights, knots**2), 1 / 3, places=14)

    def test_gauss_laguerre(self):
        """x e^{-2x} on the half-line."""
        knots, weights = gauss_laguerre(4, rate=2.0)
        self.assertAlmostEqual(np.dot(weights, knots), 0.25, places=12)
        with self.assertRaises(InvalidInputError):
            gauss_laguerre(4, rate=0.0)

    def test_infinite_bounds_need_hermite(self):
        """Only the Hermite rule handles the whole line."""
        with self.assertRaises(InvalidInputError):
            axis_rule(Scheme.GAUSS_LEGENDRE, -math.inf, math.inf, 16)
        knots, weights = axis_rule(Scheme.GAUSS_HERMITE, -math.inf, math.inf, 40)
        self.assertAlmostEqual(np.dot(weights, np.exp(-0.5 * knots**2)), math.sqrt(2 * math.pi), places=10)

    def test_compensated_sum(self):
        """Cancellation that breaks naive summation."""
        self.assertEqual(compensated_sum([1e16, 1.0, -1e16]), 1.0)


class TestQuadratureSpec(unittest.TestCase):

    """Validation and configuration."""

    def test_defaults_from_config(self):
        """The configured defaults."""
        spec = QuadratureSpec.from_config()
        self.assertEqual(spec.truncation, 8.0)
        self.assertEqual(spec.points_per_dim, 32)
        self.assertEqual(spec.scheme, Scheme.GAUSS_LEGENDRE)

    def test_overrides(self):
        """Keyword overrides win, None keeps the configured value."""
        spec = QuadratureSpec.from_config(points_per_dim=48, scheme="adaptive", truncation=None)
        self.assertEqual((spec.points_per_dim, spec.scheme, spec.truncation), (48, Scheme.ADAPTIVE, 8.0))
        self.assertEqual(spec.refined().points_per_dim, 96)

    def test_invalid(self):
        """Too few nodes or a nonpositive truncation are rejected."""
        with self.assertRaises(InvalidInputError):
            QuadratureSpec(points_per_dim=4)
        with self.assertRaises(InvalidInputError):
            QuadratureSpec(truncation=0.0)
        with self.assertRaises(ValueError):
            QuadratureSpec(scheme="simpson")


class TestTensorQuadrature(unittest.TestCase):

    """Box and cone integration."""

    def test_gaussian_box(self):
        """The 2D Gaussian integral is 2 pi."""
        result = tensor_quadrature(gaussian, Box((-8.0, -8.0), (8.0, 8.0)), QuadratureSpec())
        self.assertAlmostEqual(result.value, 2 * math.pi, places=7)
        self.assertLess(result.error_bound, 1e-6)

    def test_adaptive(self):
        """The adaptive scheme meets its relative tolerance on a smooth integrand."""
        spec = QuadratureSpec(scheme=Scheme.ADAPTIVE, points_per_dim=8)
        result = tensor_quadrature(lambda p: np.cos(p[:, 0]), Box((0.0,), (1.0,)), spec)
        self.assertAlmostEqual(result.value, math.sin(1.0), places=12)

    def test_hermite_on_finite_box(self):
        """A finite box requested with Gauss-Hermite is integrated with Gauss-Legendre, with a warning."""
        spec = QuadratureSpec(scheme=Scheme.GAUSS_HERMITE, points_per_dim=8)
        with self.assertLogs(level="WARNING") as logs:
            result = tensor_quadrature(lambda p: np.cos(p[:, 0]), Box((0.0,), (1.0,)), spec)
        self.assertAlmostEqual(result.value, math.sin(1.0), places=12)
        self.assertIn("gauss_legendre", logs.output[0])

    def test_hermite_on_weyl_cone(self):
        """The truncated Weyl cone is finite too, so the same fallback is logged."""
        spec = QuadratureSpec(scheme=Scheme.GAUSS_HERMITE)
        with self.assertLogs(level="WARNING"):
            result = weyl_quadrature(gaussian, 2, 0.0, spec)
        self.assertAlmostEqual(result.value, math.pi, places=6)

    def test_dimension_limit(self):
        """Five dimensions exceed the tensor limit."""
        with self.assertRaises(CapabilityError):
            tensor_quadrature(gaussian, Box((0.0,) * 5, (1.0,) * 5), QuadratureSpec())

    def test_nan_is_reported(self):
        """A non-finite integrand names a point."""
        with self.assertRaises(QuadratureError) as context:
            tensor_quadrature(lambda p: np.log(p[:, 0] - 0.5), Box((0.0,), (1.0,)), QuadratureSpec())
        self.assertIn("not finite", str(context.exception))

    def test_thread_count_does_not_change_result(self):
        """Chunk partial sums are combined in a fixed order."""
        spec = QuadratureSpec(points_per_dim=48)
        region = Box((-6.0, -6.0, -6.0), (6.0, 6.0, 6.0))
        serial = tensor_quadrature(gaussian, region, spec, threads=1)
        parallel = tensor_quadrature(gaussian, region, spec, threads=4)
        self.assertEqual(serial.value, parallel.value)

    def test_weyl_cone(self):
        """The Gaussian mass of the chamber {y_1 < y_2} is half the plane."""
        result = weyl_quadrature(gaussian, 2, 0.0, QuadratureSpec())
        self.assertAlmostEqual(result.value, math.pi, places=8)

    def test_empty_box(self):
        """A box side with lower > upper is rejected."""
        with self.assertRaises(InvalidInputError):
            Box((1.0,), (0.0,))


class TestDeterminants(unittest.TestCase):

    """Determinants with the extended-precision fallback."""

    def test_small(self):
        """A plain 2x2 determinant."""
        self.assertAlmostEqual(determinant(np.array([[1.0, 2.0], [3.0, 4.0]])), -2.0, places=12)
        self.assertAlmostEqual(extended_det([[1.0, 2.0], [3.0, 4.0]]), -2.0, places=14)

    def test_hadamard_bound(self):
        """|det| never exceeds the product of column norms."""
        rng = np.random.default_rng(3)
        for _ in range(10):
            matrix = rng.normal(size=(4, 4))
            self.assertLessEqual(abs(np.linalg.det(matrix)), hadamard_bound(matrix) * (1 + 1e-12))

    def test_cancellation(self):
        """Nearly equal exponential columns keep their relative accuracy."""
        eps = 1e-7
        x = np.array([0.0, 1.0])
        matrix = np.exp(np.outer(x, [1.0, 1.0 + eps]))
        expected = math.e * math.expm1(eps)
        self.assertAlmostEqual(determinant(matrix) / expected, 1.0, places=6)


class TestFit(unittest.TestCase):

    """Extrapolation of a constant in powers of t^{-1/2}."""

    def test_exact_model(self):
        """A sequence following the model is fitted exactly and converges."""
        points = [(t, 2.0 + 3.0 / math.sqrt(t)) for t in (10.0, 20.0, 40.0, 80.0, 160.0)]
        fit = fit_constant(points, order=1)
        self.assertAlmostEqual(fit.constant, 2.0, places=10)
        self.assertAlmostEqual(fit.coefficients[0], 3.0, places=8)
        self.assertTrue(fit.converging)
        self.assertLess(fit.residual, 1e-10)

    def test_diverging_sequence(self):
        """Growing deviations are flagged."""
        points = list(zip((1.0, 2.0, 4.0, 8.0, 16.0), (1.0, 2.0, 1.0, 2.0, 1.0)))
        self.assertFalse(fit_constant(points, order=0).converging)

    def test_too_few_points(self):
        """At least four points are needed."""
        with self.assertRaises(InvalidInputError):
            fit_constant([(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)])


if __name__ == "__main__":
    unittest.main()
