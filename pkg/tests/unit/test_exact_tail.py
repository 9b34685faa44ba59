"""Unit tests for the non-asymptotic survival probabilities."""
import logging
import math
import unittest

from scipy.special import erf

from app.utils.errors import CapabilityError, InvalidInputError, QuadratureError
from app.utils.exact_tail import (
    TailEstimate,
    asymptotic_tail,
    i_integral,
    km_survival,
    limit_probability,
    proposition_tail,
    survival_at_infinity,
    tail_exact,
    tail_n2_closed,
    tail_n2_reference,
)
from app.utils.settings import TailMethod, configure_logging
from app.utils.tail_methods import parse_method, tail_by_method, tail_grid

configure_logging()
logger = logging.getLogger()

REFLECTION_N2 = erf(0.5)  # 2 Phi(1 / sqrt 2) - 1 = 0.520500


class TestTwoParticles(unittest.TestCase):

    """The n=2 first-passage forms."""

    def test_driftless_reflection(self):
        """x = (0, 1), t = 1 gives 2 Phi(1/sqrt 2) - 1."""
        estimate = tail_n2_closed((0, 1), (0, 0), 1.0)
        self.assertAlmostEqual(estimate.value, REFLECTION_N2, places=9)
        self.assertAlmostEqual(estimate.value, 0.520500, places=6)
        self.assertEqual(estimate.method, TailMethod.CLOSED2)

    def test_matches_normal_form(self):
        """The integrated density agrees with the closed normal-distribution form."""
        for a in ((0, 0), (1, -1), (1, 0), (0, 1), (0, 2)):
            for t in (0.5, 2.0, 8.0):
                closed = tail_n2_closed((0, 1), a, t).value
                reference = tail_n2_reference((0, 1), a, t).value
                self.assertAlmostEqual(closed, reference, delta=1e-9 * max(1.0, reference), msg=(a, t))

    def test_escape_limit(self):
        """Diverging drifts leave 1 - e^{-2 mu gap} at t -> infinity."""
        self.assertAlmostEqual(tail_n2_closed((0, 1), (0, 2), 60.0).value, 1 - math.exp(-2), places=8)
        self.assertAlmostEqual(tail_n2_closed((0, 1), (0, 1), 200.0).value, 1 - math.exp(-1), places=8)

    def test_touching_start(self):
        """Almost touching particles collide almost at once."""
        self.assertLess(tail_n2_closed((0, 1e-6), (0, 0), 1.0).value, 1e-5)

    def test_needs_two_particles(self):
        """n = 3 is rejected."""
        with self.assertRaises(InvalidInputError):
            tail_n2_closed((0, 1, 2), (0, 0, 0), 1.0)

    def test_asymptotic_form(self):
        """C h(x) t^{-3/2} e^{-t} with C = 1 / (2 sqrt pi) approaches the exact tail."""
        constant = 1 / (2 * math.sqrt(math.pi))
        exact = tail_n2_closed((0, 1), (1, -1), 25.0).value
        approx = asymptotic_tail((0, 1), (1, -1), 25.0, constant).value
        self.assertLess(abs(approx / exact - 1), 0.1)


class TestKarlinMcGregor(unittest.TestCase):

    """Driftless quadrature."""

    def test_two_particles(self):
        """Quadrature reproduces the reflection principle."""
        self.assertAlmostEqual(km_survival((0, 1), 1.0).value, REFLECTION_N2, places=6)

    def test_capability(self):
        """Tensor quadrature stops at n = 4."""
        with self.assertRaises(CapabilityError):
            km_survival((0, 1, 2, 3, 4), 1.0)

    def test_bad_time(self):
        """t must be positive."""
        with self.assertRaises(InvalidInputError):
            km_survival((0, 1), 0.0)


class TestExactTail(unittest.TestCase):

    """Change-of-measure quadrature for arbitrary drifts."""

    def test_zero_drift_reduction(self):
        """With a = 0 the exact tail equals the driftless one."""
        self.assertAlmostEqual(tail_exact((0, 1), (0, 0), 1.0).value, km_survival((0, 1), 1.0).value, places=7)
        self.assertAlmostEqual(
            tail_exact((0, 1, 2), (0, 0, 0), 1.0).value, km_survival((0, 1, 2), 1.0).value, places=6
        )

    def test_two_particle_oracle(self):
        """n = 2 agrees with the one-dimensional first-passage integral."""
        for a, t in (((1, 0), 4.0), ((1, -1), 2.0), ((0, 1), 3.0)):
            self.assertAlmostEqual(tail_exact((0, 1), a, t).value, tail_n2_closed((0, 1), a, t).value, places=6)

    def test_diverging_limit(self):
        """Increasing drifts approach the survival probability at infinity."""
        self.assertAlmostEqual(tail_exact((0, 1), (0, 1), 50.0).value, 1 - math.exp(-1), places=4)

    def test_monotone_in_time(self):
        """The tail does not increase with t."""
        values = [tail_exact((0, 1, 2), (2, 0, 3), t).value for t in (0.5, 1.0, 2.0, 4.0)]
        for earlier, later in zip(values, values[1:]):
            self.assertLessEqual(later, earlier + 1e-9)

    def test_monotone_in_gap(self):
        """Wider separation survives longer."""
        narrow = tail_exact((0, 0.5, 2), (2, 0, 3), 1.0).value
        wide = tail_exact((0, 1, 2.5), (2, 0, 3), 1.0).value
        self.assertGreater(narrow, 0.0)
        self.assertLessEqual(narrow, wide + 1e-9)

    def test_bounds(self):
        """Values lie in [0, 1] within the reported error."""
        estimate = tail_exact((0, 1, 2), (2, 0, 3), 1.0)
        self.assertGreaterEqual(estimate.value, -estimate.error)
        self.assertLessEqual(estimate.value, 1 + estimate.error)
        self.assertEqual(estimate.to_json()["method"], "exact")


class TestIntermediateForm(unittest.TestCase):

    """I(a, t) and the intermediate tail."""

    def test_equal_drift_integral(self):
        """For n = 2 and equal drifts I = 2 sqrt(pi) at every t."""
        for t in (1.0, 100.0):
            self.assertAlmostEqual(i_integral((0, 0), t=t).value, 2 * math.sqrt(math.pi), places=7)

    def test_increasing_drift_integral(self):
        """Strictly increasing drifts give (2 pi)^{n/2} for large t."""
        self.assertAlmostEqual(i_integral((0, 1), t=200.0).value / (2 * math.pi), 1.0, places=5)

    def test_equal_drift_tail(self):
        """With equal drifts the intermediate form is D Delta(x) t^{-1/2} for n = 2."""
        value = proposition_tail((0, 1), (0, 0), 100.0).value
        self.assertAlmostEqual(value, 1 / math.sqrt(math.pi) / 10.0, places=7)

    def test_ratio_improves(self):
        """The intermediate form approaches the exact tail as t grows."""
        ratios = [
            abs(proposition_tail((0, 1), (1, -1), t).value / tail_n2_closed((0, 1), (1, -1), t).value - 1)
            for t in (4.0, 25.0)
        ]
        self.assertLess(ratios[1], ratios[0])


class TestLimitProbability(unittest.TestCase):

    """P(tau = infinity)."""

    def test_two_particles(self):
        """x = (0, 1), a = (0, 1) gives 1 - e^{-1}."""
        self.assertAlmostEqual(limit_probability((0, 1), (0, 1)), 1 - math.exp(-1), places=12)

    def test_separation(self):
        """Wider starts survive more often."""
        values = [limit_probability((0, s, 2 * s), (0, 1, 2)) for s in (0.5, 1.0, 2.0, 4.0)]
        self.assertEqual(values, sorted(values))
        self.assertLess(values[-1], 1.0)

    def test_rejects_non_increasing(self):
        """Drifts must strictly increase; survival_at_infinity returns 0 instead."""
        with self.assertRaises(InvalidInputError):
            limit_probability((0, 1), (1, 1))
        self.assertEqual(survival_at_infinity((0, 1), (1, 0)), 0.0)


class TestTailEstimate(unittest.TestCase):

    """Validation of estimates and method dispatch."""

    def test_rejects_nan(self):
        """Non-finite values are quadrature failures."""
        with self.assertRaises(QuadratureError):
            TailEstimate(float("nan"), 0.0, "exact", 1.0, 2)

    def test_rejects_out_of_range(self):
        """Bounded methods may not leave [0, 1] by more than their error."""
        with self.assertRaises(QuadratureError):
            TailEstimate(1.5, 0.0, "exact", 1.0, 2)
        self.assertEqual(TailEstimate(1.5, 0.0, "asymptotic", 1.0, 2).value, 1.5)

    def test_dispatch(self):
        """Aliases, driftless km and the asymptotic constant."""
        self.assertEqual(parse_method("prop"), TailMethod.PROPOSITION)
        with self.assertRaises(InvalidInputError):
            tail_by_method((0, 1), (1, 0), 1.0, "km")
        with self.assertRaises(InvalidInputError):
            tail_by_method((0, 1), (1, 0), 1.0, "asymptotic")
        km = tail_by_method((0, 1), (2, 2), 1.0, "km")
        self.assertAlmostEqual(km.value, REFLECTION_N2, places=6)

    def test_grid(self):
        """One estimate per time, in order."""
        estimates = tail_grid((0, 1), (0, 0), [1.0, 2.0, 4.0], "closed2")
        self.assertEqual([e.t for e in estimates], [1.0, 2.0, 4.0])
        self.assertAlmostEqual(estimates[0].value, REFLECTION_N2, places=9)


if __name__ == "__main__":
    unittest.main()
