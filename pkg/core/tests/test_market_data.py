import json
import tempfile
import unittest
from pathlib import Path

import numpy as np

from core.errors import (
    InsufficientStrikes,
    InvariantViolation,
    NonPositiveCurve,
    NoOverlap,
    OrderError,
    ParseError,
    PriceOutOfBounds,
)
from core.market_data import (
    CAP,
    FLOOR,
    DiscountCurve,
    KnotCurve,
    MarketSnapshot,
    StepCurve,
    YoYOptionGrid,
    YoYQuote,
    atm_vol_interp,
    bachelier_implied_vol,
    bachelier_price,
    black_implied_vol,
    forward_rate,
    load_snapshot,
    swap_rates_from_parity,
    write_snapshot,
    yoy_black_price,
    yoy_cap_black_price,
    yoy_cap_implied_vol,
    yoy_forward,
)

from .fixtures import NOMINAL_RATE, PILLARS, ZC_RATE, curves


class CurveTests(unittest.TestCase):
    def test_discount_curve_starts_at_one(self):
        nominal, _, _ = curves()
        self.assertEqual(nominal.pillars[0], 0.0)
        self.assertEqual(nominal(0.0), 1.0)

    def test_discount_curve_reproduces_pillars(self):
        nominal, _, _ = curves()
        for T in PILLARS:
            self.assertAlmostEqual(nominal(T), np.exp(-NOMINAL_RATE * T), places=14)

    def test_flat_forward_extrapolation(self):
        nominal, _, _ = curves()
        self.assertAlmostEqual(nominal(40.0), np.exp(-NOMINAL_RATE * 40.0), places=10)

    def test_non_positive_value(self):
        with self.assertRaises(NonPositiveCurve):
            DiscountCurve((1.0, 2.0), (0.98, -0.1))

    def test_duplicate_pillar(self):
        with self.assertRaises(InvariantViolation):
            DiscountCurve((1.0, 1.0), (0.98, 0.97))

    def test_knot_curve_is_flat_outside(self):
        curve = KnotCurve((1.0, 5.0), (0.01, 0.03))
        self.assertAlmostEqual(curve(0.0), 0.01, places=15)
        self.assertAlmostEqual(curve(10.0), 0.03, places=15)
        self.assertEqual(KnotCurve.constant(0.5, (1.0, 2.0, 3.0)).second_derivative(1.5), 0.0)

    def test_step_curve(self):
        curve = StepCurve((0.0, 1.0, 3.0), (0.1, 0.2))
        self.assertEqual(curve(0.5), 0.1)
        self.assertEqual(curve(1.0), 0.2)
        self.assertEqual(curve(9.0), 0.2)
        with self.assertRaises(InvariantViolation):
            StepCurve((0.0, 1.0), (0.1, 0.2))

    def test_forward_rate_on_flat_curve(self):
        nominal, _, _ = curves()
        self.assertAlmostEqual(forward_rate(nominal, 1.0, 2.0), np.expm1(NOMINAL_RATE), places=12)

    def test_inflation_curve_recovers_zc_rate(self):
        _, il, _ = curves()
        for T in (1.0, 5.0, 30.0):
            self.assertAlmostEqual(il.implied_rate(T), ZC_RATE, places=12)

    def test_implied_rate_needs_positive_maturity(self):
        _, il, _ = curves()
        with self.assertRaises(OrderError):
            il.implied_rate(0.0)
        with self.assertRaises(OrderError):
            il.implied_rate([0.0, 1.0])


class BlackTests(unittest.TestCase):
    def test_cap_floor_parity(self):
        F, K, D = 1.021, 1.015, 0.97
        cap = yoy_black_price(F, K, 0.01, 1.0, D, CAP)
        floor = yoy_black_price(F, K, 0.01, 1.0, D, FLOOR)
        self.assertAlmostEqual(cap - floor, D * (F - K), places=14)

    def test_implied_vol_round_trip(self):
        for side in (CAP, FLOOR):
            for K in (1.0, 1.02, 1.04):
                price = yoy_black_price(1.021, K, 0.012, 1.0, 0.97, side)
                vol = black_implied_vol(price, 1.021, K, 1.0, 0.97, side)
                self.assertAlmostEqual(vol, 0.012, delta=1e-9)

    def test_price_outside_bounds(self):
        with self.assertRaises(PriceOutOfBounds):
            black_implied_vol(2.0, 1.02, 1.0, 1.0, 0.97, CAP)

    def test_intrinsic_price_has_zero_vol(self):
        price = 0.97 * (1.03 - 1.0)
        self.assertEqual(black_implied_vol(price, 1.03, 1.0, 1.0, 0.97, CAP), 0.0)

    def test_strip_round_trip(self):
        nominal, il, _ = curves()
        price = yoy_cap_black_price(0.008, FLOOR, -0.02, 7.0, nominal, il, payment_lag=0.25)
        vol = yoy_cap_implied_vol(price, FLOOR, -0.02, 7.0, nominal, il, payment_lag=0.25)
        self.assertAlmostEqual(vol, 0.008, delta=1e-9)

    def test_yoy_forward_on_flat_curves(self):
        nominal, il, _ = curves()
        self.assertAlmostEqual(yoy_forward(nominal, il, 2.0, 3.0), 1.0 / (1.0 + ZC_RATE), places=12)


class BachelierTests(unittest.TestCase):
    def test_round_trip(self):
        for strike in (0.015, 0.02, 0.03):
            price = bachelier_price(0.02, strike, 0.0075, 5.0, 0.9)
            vol = bachelier_implied_vol(price, 0.9, 0.02, strike, 5.0)
            self.assertAlmostEqual(vol, 0.0075, delta=1e-9)

    def test_atm_price(self):
        std = 0.0075 * np.sqrt(5.0)
        self.assertAlmostEqual(bachelier_price(0.02, 0.02, 0.0075, 5.0, 0.9), 0.9 * std / np.sqrt(2 * np.pi), places=14)

    def test_payer_receiver_parity(self):
        payer = bachelier_price(0.02, 0.025, 0.01, 2.0, 0.95, "payer")
        receiver = bachelier_price(0.02, 0.025, 0.01, 2.0, 0.95, "receiver")
        self.assertAlmostEqual(payer - receiver, 0.95 * (0.02 - 0.025), places=14)


class ParityTests(unittest.TestCase):
    def _grid(self, nominal, il, strikes_cap, strikes_floor):
        quotes = []
        for T in (2.0, 5.0):
            for k in strikes_cap:
                quotes.append(YoYQuote(T, k, CAP, yoy_cap_black_price(0.01, CAP, k, T, nominal, il)))
            for k in strikes_floor:
                quotes.append(YoYQuote(T, k, FLOOR, yoy_cap_black_price(0.01, FLOOR, k, T, nominal, il)))
        return YoYOptionGrid(tuple(quotes))

    def test_swap_rate_from_parity(self):
        nominal, il, _ = curves()
        grid = self._grid(nominal, il, (-0.03, -0.02, -0.01), (-0.02, -0.01, 0.0))
        rates = swap_rates_from_parity(grid, nominal)
        for T in (2.0, 5.0):
            self.assertAlmostEqual(rates[T], 1.0 / (1.0 + ZC_RATE) - 1.0, places=10)

    def test_no_overlap(self):
        nominal, il, _ = curves()
        grid = self._grid(nominal, il, (0.03,), (0.0,))
        with self.assertRaises(NoOverlap):
            swap_rates_from_parity(grid, nominal)

    def test_zero_prices_are_dropped(self):
        grid = YoYOptionGrid((YoYQuote(2.0, 0.0, CAP, 0.0), YoYQuote(2.0, 0.01, CAP, 0.01)))
        self.assertEqual(len(grid.quotes), 1)

    def test_bad_side(self):
        with self.assertRaises(InvariantViolation):
            YoYOptionGrid((YoYQuote(2.0, 0.0, "straddle", 0.01),))

    def test_atm_interp(self):
        self.assertAlmostEqual(atm_vol_interp([0.0, 0.02], [0.01, 0.01], 0.013), 0.01, places=15)
        with self.assertRaises(InsufficientStrikes):
            atm_vol_interp([0.01], [0.01], 0.01)


class SnapshotIoTests(unittest.TestCase):
    def _snapshot(self):
        nominal, il, libor = curves()
        grid = YoYOptionGrid((
            YoYQuote(2.0, 0.01, CAP, yoy_cap_black_price(0.01, CAP, 0.01, 2.0, nominal, il)),
            YoYQuote(2.0, 0.01, FLOOR, yoy_cap_black_price(0.01, FLOOR, 0.01, 2.0, nominal, il)),
        ))
        zc = KnotCurve.constant(ZC_RATE, PILLARS, "zc rates")
        return MarketSnapshot(nominal, zc, grid, libor=libor, meta={"source": "test"})

    def test_directory_round_trip(self):
        snapshot = self._snapshot()
        with tempfile.TemporaryDirectory() as tmp:
            write_snapshot(snapshot, Path(tmp) / "market")
            loaded = load_snapshot(Path(tmp) / "market")
        np.testing.assert_allclose(loaded.nominal.values, snapshot.nominal.values, rtol=1e-15)
        self.assertEqual(len(loaded.yoy_grid.quotes), 2)
        self.assertIsNotNone(loaded.libor)

    def test_json_document(self):
        snapshot = self._snapshot()
        with tempfile.TemporaryDirectory() as tmp:
            path = write_snapshot(snapshot, Path(tmp) / "market.json")
            loaded = load_snapshot(path)
        self.assertEqual(loaded.yoy_grid.quotes, snapshot.yoy_grid.quotes)

    def test_missing_directory(self):
        with self.assertRaises(ParseError):
            load_snapshot("/nonexistent/market")

    def test_missing_file_in_directory(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ParseError):
                load_snapshot(tmp)

    def test_non_numeric_cell_reports_row(self):
        snapshot = self._snapshot()
        with tempfile.TemporaryDirectory() as tmp:
            root = write_snapshot(snapshot, Path(tmp) / "market")
            (root / "nominal.csv").write_text("maturity_years,value\n0,1\n1,abc\n", encoding="utf-8")
            with self.assertRaises(ParseError) as ctx:
                load_snapshot(root)
        self.assertEqual(ctx.exception.row, 3)
        self.assertEqual(ctx.exception.column, "value")

    def test_invalid_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.json"
            path.write_text("{not json", encoding="utf-8")
            with self.assertRaises(ParseError):
                load_snapshot(path)

    def test_document_missing_block(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "partial.json"
            path.write_text(json.dumps({"nominal": {"maturity_years": [1], "value": [0.98]}}), encoding="utf-8")
            with self.assertRaises(ParseError) as ctx:
                load_snapshot(path)
        self.assertEqual(ctx.exception.column, "zc_rates")


if __name__ == "__main__":
    unittest.main()
