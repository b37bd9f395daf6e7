import unittest
from dataclasses import replace

import numpy as np

from core.errors import InvariantViolation, MissingLiborCurve, OrderError
from core.market_data import bachelier_implied_vol
from core.nominal_pricers import (
    MULTI,
    SINGLE,
    ExponentialSum,
    SwapSpec,
    SwaptionSpec,
    atm_swaption,
    forward_libor,
    par_rate_multi,
    par_rate_single,
    positive_part_expectation,
    single_curve_coefficients,
    swap_price_multi,
    swap_price_single,
    swaption_multi,
    swaption_price,
    swaption_single,
)
from core.rpks import MarketState, kernel_values

from .fixtures import LIBOR_SPREAD, NOMINAL_RATE, gaussian_params, nig_params


class SwapTests(unittest.TestCase):
    def setUp(self):
        self.params = gaussian_params()
        self.state = MarketState()
        self.sched = SwapSpec.regular(1.0, 2.0, 0.0).schedule

    def test_single_curve_par_swap_is_worthless(self):
        swap = SwapSpec(self.sched, par_rate_single(self.params, self.state, self.sched))
        self.assertAlmostEqual(swap_price_single(self.params, self.state, swap), 0.0, delta=1e-15)

    def test_multi_curve_par_swap_is_worthless(self):
        swap = SwapSpec(self.sched, par_rate_multi(self.params, self.state, self.sched))
        self.assertAlmostEqual(swap_price_multi(self.params, self.state, swap), 0.0, delta=1e-15)

    def test_par_rates_on_flat_curves(self):
        self.assertAlmostEqual(
            par_rate_single(self.params, self.state, self.sched), np.expm1(NOMINAL_RATE / 4) * 4, delta=1e-12
        )
        self.assertAlmostEqual(
            par_rate_multi(self.params, self.state, self.sched),
            np.expm1((NOMINAL_RATE + LIBOR_SPREAD) / 4) * 4,
            delta=1e-12,
        )

    def test_forward_libor_at_inception(self):
        value = forward_libor(self.params, self.state, 2.0, 2.25)
        expected = float(self.params.nominal(2.25)) * np.expm1((NOMINAL_RATE + LIBOR_SPREAD) / 4) * 4
        self.assertAlmostEqual(value, expected, delta=1e-13)

    def test_missing_libor_curve(self):
        params = replace(self.params, libor=None)
        with self.assertRaises(MissingLiborCurve):
            par_rate_multi(params, self.state, self.sched)

    def test_started_swap(self):
        with self.assertRaises(OrderError):
            swap_price_single(self.params, MarketState(t=2.0), SwapSpec(self.sched, 0.02))

    def test_spec_validation(self):
        with self.assertRaises(InvariantViolation):
            SwapSpec((1.0,), 0.02)
        with self.assertRaises(OrderError):
            SwapSpec((1.0, 0.5), 0.02)
        with self.assertRaises(InvariantViolation):
            SwaptionSpec(SwapSpec(self.sched, 0.02), "bermudan")


class SingleCurveSwaptionTests(unittest.TestCase):
    def test_two_dimensional_integral_reduces_to_single_curve(self):
        for params in (gaussian_params(), nig_params()):
            state = MarketState()
            w = params.weights
            h = kernel_values(params, state).hN
            for expiry in (1.0, 5.0):
                sched = SwapSpec.regular(expiry, 1.0, 0.0).schedule
                swap = SwapSpec(sched, par_rate_single(params, state, sched))
                c0, c1 = single_curve_coefficients(params, swap)
                payoff = ExponentialSum(0.0, ((0.0, tuple(w.w_L)), (c0, tuple(w.w_S)), (c1, tuple(w.w_R + w.w_S))))
                two_d = positive_part_expectation(params, state, expiry, payoff) / h
                one_d = swaption_single(params, state, SwaptionSpec(swap, SINGLE))
                self.assertAlmostEqual(two_d, one_d, delta=1e-6)

    def test_deep_in_the_money_is_the_swap(self):
        params = gaussian_params()
        state = MarketState()
        swap = SwapSpec.regular(2.0, 1.0, -0.05)
        c0, c1 = single_curve_coefficients(params, swap)
        if c0 < 0.0 or c1 < 0.0:
            self.skipTest("strike does not make both kernel coefficients positive")
        option = swaption_single(params, state, SwaptionSpec(swap, SINGLE))
        self.assertAlmostEqual(option, swap_price_single(params, state, swap), delta=1e-12)

    def test_far_out_of_the_money_is_worthless(self):
        params = gaussian_params()
        swap = SwapSpec.regular(2.0, 1.0, 0.5)
        self.assertEqual(swaption_single(params, MarketState(), SwaptionSpec(swap, SINGLE)), 0.0)

    def test_expired(self):
        swap = SwapSpec.regular(1.0, 1.0, 0.02)
        with self.assertRaises(OrderError):
            swaption_single(gaussian_params(), MarketState(t=2.0), SwaptionSpec(swap, SINGLE))


class MultiCurveSwaptionTests(unittest.TestCase):
    def test_payer_value_falls_with_strike(self):
        params = gaussian_params(b_l=0.01)
        prices = [
            swaption_price(params, MarketState(), SwaptionSpec(SwapSpec.regular(2.0, 1.0, k), MULTI))
            for k in (0.01, 0.02, 0.03)
        ]
        self.assertTrue(prices[0] > prices[1] > prices[2] > 0.0)

    def test_digital_lower_bound(self):
        params = gaussian_params(b_l=0.01)
        spec, _, _ = atm_swaption(params, 2.0)
        exact = swaption_multi(params, MarketState(), spec)
        approx = swaption_multi(params, MarketState(), spec, approx=True)
        self.assertLessEqual(approx, exact + 1e-6)

    def test_atm_normal_vol(self):
        params = gaussian_params(b_l=0.01)
        spec, rate, annuity = atm_swaption(params, 5.0)
        price = swaption_price(params, MarketState(), spec)
        vol = bachelier_implied_vol(price, annuity, rate, rate, 5.0)
        self.assertGreater(vol, 0.0)
        self.assertLess(vol, 0.1)


class ExponentialSumTests(unittest.TestCase):
    def test_evaluation(self):
        H = ExponentialSum(-1.0, ((2.0, (1.0, 0.0, 0.0)), (0.5, (0.0, 1.0, 0.0))))
        x = np.array([[0.0, 0.0, 0.0], [np.log(2.0), 0.0, 5.0]])
        np.testing.assert_allclose(H(x), [1.5, 3.5], atol=1e-15)


if __name__ == "__main__":
    unittest.main()
