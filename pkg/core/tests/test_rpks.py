import json
import unittest

import numpy as np

from core.errors import EmptySchedule, InvariantViolation, MissingFixing, NegativeTime, OrderError
from core.rpks import (
    MarketState,
    affine_payoff_price,
    cpi_level,
    inflation_linked_bond,
    nominal_bond,
    params_from_dict,
    params_to_dict,
    real_bond,
    yoy_convexity,
    yoy_fair_rate,
    yoy_fair_rate_independent,
    yoy_swaplet_price,
    zc_fair_rate,
    zc_swap_price,
)

from .fixtures import PILLARS, ZC_RATE, curves, gaussian_params, nig_params


class CurveReproductionTests(unittest.TestCase):
    def test_gaussian_and_nig_reproduce_inputs(self):
        nominal, il, _ = curves()
        for params in (gaussian_params(), nig_params()):
            state = MarketState()
            for T in PILLARS:
                self.assertAlmostEqual(nominal_bond(params, state, T), nominal(T), delta=1e-12)
                self.assertAlmostEqual(inflation_linked_bond(params, state, T), il(T), delta=1e-12)

    def test_zc_fair_rate(self):
        params = gaussian_params()
        for T in (1.0, 5.0, 30.0):
            self.assertAlmostEqual(zc_fair_rate(params, T), ZC_RATE, delta=1e-12)

    def test_zc_fair_rate_needs_positive_maturity(self):
        params = gaussian_params()
        for T in (0.0, -1.0, [0.0, 5.0]):
            with self.assertRaises(OrderError):
                zc_fair_rate(params, T)

    def test_zc_swap_at_fair_strike(self):
        params = nig_params()
        state = MarketState()
        T = 7.0
        K = inflation_linked_bond(params, state, T) / nominal_bond(params, state, T)
        self.assertAlmostEqual(zc_swap_price(params, state, T, K), 0.0, delta=1e-15)

    def test_cpi_starts_at_one(self):
        self.assertAlmostEqual(cpi_level(gaussian_params(), MarketState()), 1.0, places=14)


class StateTests(unittest.TestCase):
    def setUp(self):
        self.params = nig_params()
        self.w = self.params.weights

    def test_real_bond_times_cpi_is_il_bond(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            x = rng.normal(scale=0.05, size=3)
            state = MarketState.from_driver(self.w, 2.0, x)
            lhs = real_bond(self.params, state, 6.0) * cpi_level(self.params, state)
            self.assertAlmostEqual(lhs, inflation_linked_bond(self.params, state, 6.0), delta=1e-14)

    def test_affine_payoff_is_linear(self):
        state = MarketState.from_driver(self.w, 1.0, [0.01, -0.02, 0.0])
        combo = affine_payoff_price(self.params, state, 4.0, 0.3, 1.7)
        parts = 0.3 * nominal_bond(self.params, state, 4.0) + 1.7 * inflation_linked_bond(self.params, state, 4.0)
        self.assertAlmostEqual(combo, parts, delta=1e-14)

    def test_driver_round_trip(self):
        x = np.array([0.02, -0.01, 0.03])
        state = MarketState.from_driver(self.w, 1.0, x)
        np.testing.assert_allclose(state.driver(self.w), x, atol=1e-13)

    def test_maturity_before_valuation(self):
        with self.assertRaises(OrderError):
            nominal_bond(self.params, MarketState(t=3.0), 2.0)

    def test_invalid_state(self):
        with self.assertRaises(NegativeTime):
            MarketState(t=-1.0)
        with self.assertRaises(InvariantViolation):
            MarketState(A_S=0.0)

    def test_fixings(self):
        state = MarketState(t=2.5, fixings={2.0: 1.05})
        self.assertEqual(state.fixing(0.0), 1.0)
        self.assertEqual(state.fixing(2.0), 1.05)
        with self.assertRaises(MissingFixing):
            state.fixing(1.0)


class YoYTests(unittest.TestCase):
    def test_settled_period_uses_fixings(self):
        params = gaussian_params()
        state = MarketState(t=3.5, fixings={2.0: 1.05, 3.0: 1.08})
        let = yoy_swaplet_price(params, state, 2.0, 3.0, 4.0)
        self.assertAlmostEqual(let.floating, 1.08 / 1.05 * let.annuity, delta=1e-15)
        self.assertEqual(let.covariance, 0.0)

    def test_expired_swaplet(self):
        with self.assertRaises(OrderError):
            yoy_swaplet_price(gaussian_params(), MarketState(t=5.0), 2.0, 3.0)

    def test_fair_rate_prices_swap_at_par(self):
        params = nig_params()
        state = MarketState()
        sched = tuple(float(i) for i in range(6))
        k = yoy_fair_rate(params, state, sched)
        total = sum(yoy_swaplet_price(params, state, a, b).price(1.0 + k) for a, b in zip(sched, sched[1:]))
        self.assertAlmostEqual(total, 0.0, delta=1e-14)

    def test_no_convexity_without_correlation(self):
        params = gaussian_params(b=0.0)
        for n in range(2, 31):
            sched = tuple(float(i) for i in range(n + 1))
            self.assertLessEqual(abs(yoy_convexity(params, sched)), 1e-12)

    def test_independent_rate_on_equal_curves(self):
        nominal, _, _ = curves()
        self.assertAlmostEqual(yoy_fair_rate_independent(nominal, nominal, (0.0, 1.0, 2.0)), 0.0, delta=1e-14)

    def test_schedule_errors(self):
        nominal, il, _ = curves()
        with self.assertRaises(EmptySchedule):
            yoy_fair_rate_independent(nominal, il, (1.0,))
        with self.assertRaises(OrderError):
            yoy_fair_rate_independent(nominal, il, (0.0, 2.0, 1.0))


class ParamsDocumentTests(unittest.TestCase):
    def test_json_round_trip(self):
        params = nig_params(b_l=0.4)
        again = params_from_dict(json.loads(json.dumps(params_to_dict(params))))
        self.assertEqual(again.spec.kind, "nig")
        self.assertEqual(again.b_l.values, params.b_l.values)
        for T in (1.0, 10.0):
            self.assertAlmostEqual(
                nominal_bond(again, MarketState(), T), nominal_bond(params, MarketState(), T), delta=1e-15
            )


if __name__ == "__main__":
    unittest.main()
