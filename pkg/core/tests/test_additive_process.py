import unittest

import numpy as np

from core.additive_process import (
    AdditiveSpec,
    LinearFunctional,
    NigParams,
    TimeChange,
    WeightVectors,
    check_triplet,
    cov_factor,
    forward_laplace,
    functional_mgf,
    gaussian_spec,
    integrate_time_change,
    laplace_exponent,
    levy_triplet,
    martingalizing_drifts,
    multiperiod_mgf,
    nig_laplace,
    nig_spec,
    spec_from_dict,
    spec_to_dict,
)
from core.errors import DomainError, InvariantViolation, NegativeTime, OrderError, ParseError

from .fixtures import RATES


class TimeChangeTests(unittest.TestCase):
    def test_integral_is_piecewise_linear(self):
        tc = TimeChange((0.0, 2.0, 5.0), (1.0, 3.0))
        self.assertAlmostEqual(integrate_time_change(tc, 1.0), 1.0)
        self.assertAlmostEqual(integrate_time_change(tc, 4.0), 2.0 + 6.0)
        # the last rate extends past the final knot
        self.assertAlmostEqual(integrate_time_change(tc, 6.0), 2.0 + 9.0 + 3.0)

    def test_rejects_bad_knots(self):
        with self.assertRaises(InvariantViolation):
            TimeChange((1.0, 2.0), (1.0,))
        with self.assertRaises(InvariantViolation):
            TimeChange((0.0, 2.0), (1.0, 2.0))
        with self.assertRaises(InvariantViolation):
            TimeChange((0.0, 2.0), (-1.0,))

    def test_negative_time(self):
        with self.assertRaises(NegativeTime):
            integrate_time_change(TimeChange(), -0.1)


class NigTests(unittest.TestCase):
    def test_unit_variance_parametrisation(self):
        p = NigParams(15.0, -0.5)
        self.assertAlmostEqual(p.variance, 1.0, places=14)

    def test_small_z_matches_variance(self):
        p = NigParams(15.0, -0.5)
        h = 1e-3
        second = (nig_laplace(p.nu, p.theta, p.sigma, h) - 2 * nig_laplace(p.nu, p.theta, p.sigma, 0.0)
                  + nig_laplace(p.nu, p.theta, p.sigma, -h)) / h**2
        self.assertAlmostEqual(second, p.variance, places=5)

    def test_outside_moment_domain(self):
        with self.assertRaises(DomainError):
            nig_laplace(1.0, 0.0, 1.0, 5.0)

    def test_theta_must_stay_below_nu(self):
        with self.assertRaises(DomainError):
            NigParams(1.0, 1.5)


class MartingaleDriftTests(unittest.TestCase):
    def assert_factors_are_martingales(self, spec):
        w = spec.weights
        for t in (0.5, 1.0, 7.0, 30.0):
            for vec in (w.w_S, w.w_R, w.w_L):
                self.assertAlmostEqual(laplace_exponent(spec, t, vec), 0.0, places=12)

    def test_gaussian(self):
        self.assert_factors_are_martingales(gaussian_spec(RATES))

    def test_nig(self):
        self.assert_factors_are_martingales(nig_spec(15.0, -0.5, RATES))

    def test_drift_functions_match_spec(self):
        spec = gaussian_spec(RATES)
        mu_s, mu_r, mu_l = martingalizing_drifts(spec)
        np.testing.assert_allclose([mu_s(3.0), mu_r(3.0), mu_l(3.0)], spec.drift(3.0), atol=1e-15)

    def test_zero_clock_gives_zero_drift(self):
        spec = gaussian_spec(0.0, weights=WeightVectors(0.0, 0.0, 0.0))
        self.assertEqual(float(spec.drift(5.0)[0]), 0.0)


class LaplaceTests(unittest.TestCase):
    def setUp(self):
        self.spec = nig_spec(15.0, -0.5, RATES)
        self.z = np.array([0.7, -0.3, 0.0])

    def test_forward_exponent_is_additive(self):
        total = forward_laplace(self.spec, 1.0, 9.0, self.z)
        parts = forward_laplace(self.spec, 1.0, 4.0, self.z) + forward_laplace(self.spec, 4.0, 9.0, self.z)
        self.assertAlmostEqual(total, parts, places=13)

    def test_forward_needs_order(self):
        with self.assertRaises(OrderError):
            forward_laplace(self.spec, 5.0, 1.0, self.z)

    def test_multiperiod_single_date(self):
        q = multiperiod_mgf(self.spec, 0.0, [5.0], [(1.0, self.z)])
        self.assertAlmostEqual(q, np.exp(laplace_exponent(self.spec, 5.0, self.z)), places=13)

    def test_functional_mgf_matches_multiperiod(self):
        f = LinearFunctional(0.2, ((2.0, (1.0, 0.0, 0.0)), (5.0, (-1.0, 0.5, 0.0))))
        q = functional_mgf(self.spec, 0.0, np.zeros(3), [f], [1.0])
        direct = np.exp(0.2) * multiperiod_mgf(
            self.spec, 0.0, [2.0, 5.0], [(1.0, np.array([1.0, 0.0, 0.0])), (1.0, np.array([-1.0, 0.5, 0.0]))]
        )
        self.assertAlmostEqual(q, direct, places=13)

    def test_linear_functional_merges_dates(self):
        f = LinearFunctional.at(2.0, (1.0, 0.0, 0.0)) + LinearFunctional.at(2.0, (0.0, 1.0, 0.0), const=1.0)
        self.assertEqual(f.dates(), (2.0,))
        np.testing.assert_array_equal(f.vector(2.0), [1.0, 1.0, 0.0])
        self.assertEqual((f - f).const, 0.0)

    def test_cov_factor_vanishes_for_independent_coordinates(self):
        spec = gaussian_spec(RATES)
        self.assertAlmostEqual(cov_factor(spec, 0.0, 5.0, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), 0.0, places=14)

    def test_cov_factor_gaussian(self):
        spec = gaussian_spec(RATES)
        w = spec.weights
        tau, _ = spec.clocks(5.0)
        # exp<w, X> has unit mean after the drift; the covariance is e^{<w_R, Sigma w_S>} - 1
        expected = np.expm1(w.w_R[0] * w.w_S[0] * float(tau))
        self.assertAlmostEqual(cov_factor(spec, 0.0, 5.0, w.w_R, w.w_S), expected, places=14)


class TripletTests(unittest.TestCase):
    def test_gaussian_triplet_is_valid(self):
        check_triplet(levy_triplet(gaussian_spec(RATES)), [1.0, 2.0, 10.0, 30.0])

    def test_nig_triplet_has_jump_measure(self):
        t = levy_triplet(nig_spec(15.0, -0.5, RATES))
        self.assertEqual(t.nu["kind"], "nig")
        self.assertEqual(float(np.max(np.abs(t.sigma(5.0)))), 0.0)


class SpecDocumentTests(unittest.TestCase):
    def test_round_trip(self):
        spec = nig_spec(12.0, -0.4, RATES, weights=WeightVectors(20.0, 0.3, 1.1))
        again = spec_from_dict(spec_to_dict(spec))
        self.assertEqual(again.kind, spec.kind)
        self.assertEqual(again.time_change, spec.time_change)
        self.assertEqual(again.weights, spec.weights)
        self.assertAlmostEqual(again.nig_s.sigma, spec.nig_s.sigma)

    def test_schema_violation(self):
        with self.assertRaises(ParseError):
            spec_from_dict({"kind": "stable", "time_change": {"knots": [0, 1], "rates": [1]}})

    def test_nig_without_block(self):
        with self.assertRaises(ParseError):
            spec_from_dict({"kind": "nig", "time_change": {"knots": [0, 1], "rates": [1]}})

    def test_unknown_kind(self):
        with self.assertRaises(DomainError):
            AdditiveSpec(kind="cgmy")


if __name__ == "__main__":
    unittest.main()
