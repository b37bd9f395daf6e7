import unittest

import numpy as np

from core.additive_process import LinearFunctional
from core.errors import WrongSpecKind
from core.gaussian_pricers import (
    gaussian_moments,
    lpi_bond_gaussian,
    ratio_ladder_gaussian,
    yoy_caplet_gaussian,
    yoy_floorlet_gaussian,
    zc_cap_gaussian,
    zc_floor_gaussian,
)
from core.inflation_pricers import CAPLET, FLOORLET, LpiSpec, YoYOptionSpec, ZcOptionSpec
from core.rpks import MarketState, nominal_bond, yoy_swaplet_price

from .fixtures import gaussian_params, nig_params


class MomentTests(unittest.TestCase):
    def test_martingale_factor_moments(self):
        spec = gaussian_params().spec
        f = LinearFunctional.at(5.0, spec.weights.w_S)
        m = gaussian_moments(spec, 0.0, np.zeros(3), f, f)
        tau, _ = spec.clocks(5.0)
        self.assertAlmostEqual(m.var_x, float(tau), delta=1e-16)
        self.assertAlmostEqual(m.mu_x, -0.5 * float(tau), delta=1e-16)
        self.assertAlmostEqual(m.cov_xy, m.var_x, delta=1e-16)

    def test_nig_is_rejected(self):
        spec = nig_params().spec
        f = LinearFunctional.at(1.0, spec.weights.w_S)
        with self.assertRaises(WrongSpecKind):
            gaussian_moments(spec, 0.0, np.zeros(3), f, f)


class ClosedFormTests(unittest.TestCase):
    def setUp(self):
        self.params = gaussian_params()
        self.state = MarketState()

    def test_yoy_parity(self):
        for T in (1.0, 5.0, 10.0):
            for k in (-0.01, 0.0, 0.02):
                K = 1.0 + k
                opt = YoYOptionSpec(T - 1.0, T, T + 0.25, K)
                diff = yoy_caplet_gaussian(self.params, self.state, opt) - yoy_floorlet_gaussian(self.params, self.state, opt)
                swap = yoy_swaplet_price(self.params, self.state, T - 1.0, T, T + 0.25).price(K)
                self.assertAlmostEqual(diff, swap, delta=1e-10)

    def test_zc_parity(self):
        T = 7.0
        K = 1.01**T
        opt = ZcOptionSpec(0.0, T, T + 0.25, K)
        diff = zc_cap_gaussian(self.params, self.state, opt) - zc_floor_gaussian(self.params, self.state, opt)
        swap = yoy_swaplet_price(self.params, self.state, 0.0, T, T + 0.25).price(K)
        self.assertAlmostEqual(diff, swap, delta=1e-10)

    def test_floor_increases_with_strike(self):
        prices = ratio_ladder_gaussian(self.params, self.state, 4.0, 5.0, 5.0, [0.97, 0.99, 1.01, 1.03], FLOORLET)
        self.assertTrue(np.all(np.diff(prices) > 0.0))
        self.assertTrue(np.all(prices >= 0.0))

    def test_ladder_matches_single_options(self):
        strikes = [0.98, 1.0, 1.02]
        ladder = ratio_ladder_gaussian(self.params, self.state, 1.0, 2.0, 2.0, strikes, CAPLET)
        for K, value in zip(strikes, ladder):
            single = yoy_caplet_gaussian(self.params, self.state, YoYOptionSpec(1.0, 2.0, 2.0, K, CAPLET))
            self.assertAlmostEqual(value, single, delta=1e-15)

    def test_fixed_ratio_is_intrinsic(self):
        state = MarketState(t=3.5, fixings={2.0: 1.0, 3.0: 1.05})
        opt = YoYOptionSpec(2.0, 3.0, 4.0, 1.02)
        annuity = nominal_bond(self.params, state, 4.0)
        self.assertAlmostEqual(yoy_caplet_gaussian(self.params, state, opt), 0.03 * annuity, delta=1e-14)
        self.assertEqual(yoy_floorlet_gaussian(self.params, state, opt), 0.0)

    def test_nig_params_are_rejected(self):
        with self.assertRaises(WrongSpecKind):
            yoy_floorlet_gaussian(nig_params(), self.state, YoYOptionSpec(1.0, 2.0, 2.0, 1.0))


class LpiClosedFormTests(unittest.TestCase):
    def test_degenerate_collar_compounds(self):
        params = gaussian_params()
        lpi = LpiSpec(tuple(float(i) for i in range(6)), 0.02, 0.02)
        expected = 1.02**5 * nominal_bond(params, MarketState(), 5.0)
        self.assertAlmostEqual(lpi_bond_gaussian(params, MarketState(), lpi), expected, delta=1e-12)

    def test_collar_is_bounded(self):
        params = gaussian_params()
        state = MarketState()
        sched = tuple(float(i) for i in range(6))
        low = lpi_bond_gaussian(params, state, LpiSpec(sched, 0.0, 0.0))
        mid = lpi_bond_gaussian(params, state, LpiSpec(sched, 0.0, 0.05))
        high = lpi_bond_gaussian(params, state, LpiSpec(sched, 0.05, 0.05))
        self.assertLess(low, mid)
        self.assertLess(mid, high)


if __name__ == "__main__":
    unittest.main()
