import json
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

from core import settings
from core.errors import ParseError, UnsupportedTrade, WrongSpecKind
from core.gaussian_pricers import lpi_bond_gaussian
from core.inflation_pricers import FLOOR, FLOORLET, LpiSpec, YoYOptionSpec, ZcOptionSpec
from core.market_data import annual_schedule
from core.nominal_pricers import MULTI, SINGLE
from core.rpks import MarketState, nominal_bond
from core.trades import (
    LpiSwap,
    NominalBond,
    Swap,
    Trade,
    YoYCapFloor,
    ZcSwap,
    parse_trades,
    price_instrument,
    price_trade,
    price_trades,
    swaption_ladder_prices,
    trade_from_dict,
    trade_to_dict,
    yoy_ladder_prices,
)

from .fixtures import ZC_RATE, gaussian_params, nig_params

CSV = """trade_id,kind,start,end,pay,strike,side,mode,engine
B1,nominal_bond,,5,,,,,
Z1,zc_swap,,5,,0.022,,,
Y1,yoy_option,4,5,,-0.02,floor,,
C1,zc_option,0,3,3.5,0.01,cap,,fourier
S1,swap,1,3,,0.02,,single,
"""


class ParseTests(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, name, text):
        path = self.root / name
        path.write_text(text, encoding="utf-8")
        return path

    def test_csv_records(self):
        trades = parse_trades(self._write("trades.csv", CSV))
        self.assertEqual([t.trade_id for t in trades], ["B1", "Z1", "Y1", "C1", "S1"])
        self.assertEqual(trades[0].instrument, NominalBond(5.0))
        self.assertEqual(trades[1].instrument, ZcSwap(5.0, 0.022))
        yoy = trades[2].instrument
        self.assertIsInstance(yoy, YoYOptionSpec)
        self.assertEqual(yoy.side, FLOORLET)
        self.assertAlmostEqual(yoy.K, 0.98, places=15)
        self.assertAlmostEqual(yoy.T, 5.0 + settings.PAYMENT_LAG, places=15)
        zc = trades[3].instrument
        self.assertIsInstance(zc, ZcOptionSpec)
        self.assertAlmostEqual(zc.K, 1.01**3, places=14)
        self.assertEqual(zc.T, 3.5)
        self.assertEqual(trades[3].engine, "fourier")
        swap = trades[4].instrument
        self.assertIsInstance(swap, Swap)
        self.assertEqual(swap.mode, SINGLE)
        self.assertEqual(len(swap.swap.schedule), 9)

    def test_json_records(self):
        doc = [{"trade_id": "L1", "kind": "lpi_bond", "end": 5, "floor": 0.0, "cap": 0.05}]
        trades = parse_trades(self._write("trades.json", json.dumps(doc)))
        self.assertEqual(trades[0].instrument.schedule, annual_schedule(5.0))
        self.assertEqual(trade_to_dict(trades[0])["K_c"], 0.05)

    def test_file_errors(self):
        with self.assertRaises(ParseError):
            parse_trades(self.root / "missing.csv")
        with self.assertRaises(ParseError):
            parse_trades(self._write("bad.json", "{not json"))
        with self.assertRaises(ParseError):
            parse_trades(self._write("obj.json", json.dumps({"trade_id": "A"})))
        with self.assertRaises(ParseError) as ctx:
            parse_trades(self._write("cols.csv", "trade_id,kind,colour\nA,nominal_bond,red\n"))
        self.assertIn("colour", str(ctx.exception))

    def test_row_errors_carry_row(self):
        with self.assertRaises(ParseError) as ctx:
            trade_from_dict({"kind": "nominal_bond"}, 2)
        self.assertEqual(ctx.exception.row, 3)
        self.assertIn("T3", str(ctx.exception))
        with self.assertRaises(ParseError) as ctx:
            trade_from_dict({"trade_id": "X", "kind": "nominal_bond", "end": 5, "engine": "fast"}, 0)
        self.assertEqual(ctx.exception.column, "engine")
        with self.assertRaises(ParseError):
            trade_from_dict({"trade_id": "X", "kind": "bermudan", "end": 5}, 0)
        with self.assertRaises(ParseError):
            trade_from_dict({"trade_id": "X", "kind": "yoy_capfloor", "end": 5, "strike": 0.0, "side": "collar"}, 0)
        with self.assertRaises(ParseError):
            trade_from_dict({"trade_id": "X", "kind": "yoy_option", "start": 5, "end": 4, "strike": 0.0}, 0)


class PricingTests(unittest.TestCase):
    def setUp(self):
        self.params = gaussian_params()
        self.state = MarketState()

    def test_linear_instruments(self):
        self.assertAlmostEqual(
            price_instrument(self.params, NominalBond(5.0)), float(nominal_bond(self.params, self.state, 5.0)), places=15
        )
        self.assertAlmostEqual(price_instrument(self.params, ZcSwap(5.0, ZC_RATE)), 0.0, places=12)

    def test_engine_selection(self):
        trade = Trade("Y", "yoy_option", YoYOptionSpec(1.0, 2.0, K=0.98))
        self.assertEqual(price_trade(self.params, trade).engine, "gaussian")
        fourier = price_trade(self.params, Trade("Y", "yoy_option", trade.instrument, "fourier"))
        self.assertEqual(fourier.engine, "fourier")
        self.assertTrue(fourier.diagnostics)
        self.assertAlmostEqual(fourier.price, price_trade(self.params, trade).price, delta=1e-7)
        with self.assertRaises(WrongSpecKind):
            price_trade(nig_params(), Trade("Y", "yoy_option", trade.instrument, "gaussian"))
        with self.assertRaises(UnsupportedTrade):
            price_trade(self.params, Trade("B", "nominal_bond", NominalBond(5.0), "gaussian"))

    def test_strip_engines_agree(self):
        strip = YoYCapFloor(annual_schedule(3.0), 0.98, FLOOR)
        closed = price_instrument(self.params, strip, closed_form=True)
        quad = price_instrument(self.params, strip)
        self.assertGreater(closed, 0.0)
        self.assertAlmostEqual(closed, quad, delta=3e-7)

    def test_lpi_swap_at_fair_fixed_amount(self):
        lpi = LpiSpec(annual_schedule(5.0), 0.0, 0.05)
        K = lpi_bond_gaussian(self.params, self.state, lpi) / float(nominal_bond(self.params, self.state, lpi.T))
        self.assertAlmostEqual(price_instrument(self.params, LpiSwap(lpi, K), closed_form=True), 0.0, places=12)

    def test_price_frame(self):
        swap = trade_from_dict({"trade_id": "W1", "kind": "swap", "start": 1, "end": 2, "strike": 0.02})
        self.assertEqual(swap.instrument.mode, MULTI)
        trades = [Trade("B1", "nominal_bond", NominalBond(2.0)), swap]
        frame = price_trades(self.params, trades)
        self.assertEqual(list(frame["trade_id"]), ["B1", "W1"])
        self.assertTrue(np.isfinite(frame["price"]).all())

    def test_errors_name_the_trade(self):
        trades = [Trade("G1", "nominal_bond", NominalBond(2.0), "gaussian")]
        with self.assertRaises(UnsupportedTrade) as ctx:
            price_trades(self.params, trades)
        self.assertIn("G1 (row 1)", str(ctx.exception))


class LadderTests(unittest.TestCase):
    def test_yoy_ladder(self):
        params = gaussian_params()
        ladder = pd.DataFrame({"maturity": [2.0, 5.0], "strike": [-0.02, -0.02], "side": ["floor", "floor"]})
        out = yoy_ladder_prices(params, ladder)
        direct = price_instrument(params, YoYCapFloor(annual_schedule(5.0), 0.98, FLOOR), closed_form=True)
        self.assertAlmostEqual(out["price"].iloc[1], direct, places=15)
        self.assertLess(out["price"].iloc[0], out["price"].iloc[1])
        with self.assertRaises(ParseError):
            yoy_ladder_prices(params, ladder.drop(columns=["side"]))

    def test_swaption_ladder_atm(self):
        params = gaussian_params()
        out = swaption_ladder_prices(params, pd.DataFrame({"expiry": [1.0], "tenor": [1.0]}), mode=SINGLE)
        row = out.iloc[0]
        self.assertEqual(row["strike"], row["forward"])
        self.assertGreater(row["price"], 0.0)
        self.assertGreater(row["normal_vol_model"], 0.0)
        with self.assertRaises(ParseError):
            swaption_ladder_prices(params, pd.DataFrame({"expiry": [1.0]}))


if __name__ == "__main__":
    unittest.main()
