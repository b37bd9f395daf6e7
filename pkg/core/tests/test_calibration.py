import json
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np

from core.additive_process import WeightVectors
from core.calibration import (
    CalibConfig,
    _check_b_r,
    bootstrap_a,
    calibration_targets,
    fit_bL,
    fit_bR,
    fit_nig_global,
    initial_params,
    load_model_config,
    reference_params,
    residual_records,
    run_pipeline,
    synthetic_snapshot,
)
from core.errors import ConfigError, DomainError, IdentifiabilityWarning, InvariantViolation
from core.market_data import KnotCurve, annual_schedule
from core.rpks import B_R_KNOTS, MarketState, yoy_fair_rate

from .fixtures import gaussian_params, nig_params

MATURITIES = (2.0, 5.0)


class ConfigTests(unittest.TestCase):
    def test_defaults_are_valid(self):
        self.assertEqual(CalibConfig().weights, WeightVectors())

    def test_rejects_bad_values(self):
        with self.assertRaises(ConfigError):
            CalibConfig(engine="heston")
        with self.assertRaises(ConfigError):
            CalibConfig(b=-1.0)
        with self.assertRaises(ConfigError):
            CalibConfig(max_iter=0)

    def test_unknown_key(self):
        with self.assertRaises(ConfigError):
            CalibConfig.from_dict({"lambda_smoth": 1.0})

    def test_dict_round_trip(self):
        config = CalibConfig(engine="nig", b=20.0, tc_knots=(0.0, 1.0, 3.0))
        self.assertEqual(CalibConfig.from_dict(config.to_dict()), config)

    def test_toml_with_overrides(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "calib.toml"
            path.write_text('[calibration]\nb = 20.0\nengine = "gaussian"\n', encoding="utf-8")
            config = CalibConfig.load(path, {"engine": "nig", "a_R": None})
        self.assertEqual(config.b, 20.0)
        self.assertEqual(config.engine, "nig")
        self.assertEqual(config.a_R, CalibConfig().a_R)

    def test_missing_and_malformed_files(self):
        with self.assertRaises(ConfigError):
            CalibConfig.load("/nonexistent/calib.json")
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "calib.json"
            path.write_text("{", encoding="utf-8")
            with self.assertRaises(ConfigError):
                CalibConfig.load(path)

    def test_shipped_model_config(self):
        doc = load_model_config()
        self.assertIn("reference_model", doc)
        CalibConfig.from_dict(doc["calibration"])


class ReferenceModelTests(unittest.TestCase):
    def test_engines(self):
        self.assertEqual(reference_params(engine="gaussian").spec.kind, "gaussian")
        self.assertEqual(reference_params(engine="nig").spec.kind, "nig")

    def test_bad_document(self):
        with self.assertRaises(ConfigError):
            reference_params({"engine": "gaussian"})


class PipelineTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.truth = reference_params(engine="gaussian")
        cls.config = CalibConfig(engine="gaussian", progress=False)
        cls.snapshot = synthetic_snapshot(cls.truth, maturities=MATURITIES, expiries=())
        cls.targets = calibration_targets(cls.snapshot, cls.config)

    def test_parity_recovers_model_swap_rates(self):
        state = MarketState()
        for T in MATURITIES:
            model = yoy_fair_rate(self.truth, state, annual_schedule(T), self.config.payment_lag)
            self.assertAlmostEqual(self.targets.swap_rates[T], model, delta=1e-10)

    def test_bootstrap_recovers_clock(self):
        start = replace(initial_params(self.snapshot, self.config), b_r=self.truth.b_r)
        fitted = bootstrap_a(self.snapshot, self.config, start, self.targets)
        truth = self.truth.spec.time_change.rates
        np.testing.assert_allclose(fitted.spec.time_change.rates[:2], truth[:2], rtol=1e-6)

    def test_b_r_fit_matches_swap_rates(self):
        start = replace(initial_params(self.snapshot, self.config), spec=self.truth.spec)
        fitted = fit_bR(self.snapshot, self.config, start, self.targets)
        records = residual_records(fitted, self.snapshot, self.targets, self.config)
        swap = [r["residual"] for r in records if r["instrument"] == "yoy_swap_rate"]
        self.assertLess(max(abs(x) for x in swap), 0.01)

    def test_b_r_unidentified_without_correlation(self):
        config = replace(self.config, b=0.0)
        start = initial_params(self.snapshot, config)
        with self.assertWarns(IdentifiabilityWarning):
            fitted = fit_bR(self.snapshot, config, start, self.targets)
        self.assertEqual(fitted.b_r, start.b_r)

    def test_pipeline_without_swaptions(self):
        result = run_pipeline(self.snapshot, self.config)
        self.assertEqual([entry["step"] for entry in result.log], [1, 2, 3])
        frame = result.residual_frame()
        atm = frame[frame["instrument"] == "yoy_atm_vol"]
        self.assertEqual(len(atm), len(MATURITIES))
        self.assertLess(float(atm["residual"].abs().max()), 1e-6)
        json.dumps(result.to_dict(), default=float)


class SmileFitTests(unittest.TestCase):
    def test_nig_round_trip(self):
        truth = nig_params(nu=15.0, theta=-0.5, rates=1.1e-4)
        snapshot = synthetic_snapshot(truth, maturities=MATURITIES, expiries=())
        config = CalibConfig(engine="nig", nig_nu=17.0, nig_theta=-0.4, progress=False)
        start = replace(initial_params(snapshot, config), b_r=truth.b_r)
        fitted = fit_nig_global(snapshot, config, start)
        nig = fitted.spec.nig_s
        self.assertLess(abs(nig.nu / 15.0 - 1.0), 0.05)
        self.assertLess(abs(nig.theta / -0.5 - 1.0), 0.05)

    def test_needs_nig_engine(self):
        snapshot = synthetic_snapshot(gaussian_params(), maturities=MATURITIES, expiries=())
        config = CalibConfig(engine="gaussian", progress=False)
        with self.assertRaises(DomainError):
            fit_nig_global(snapshot, config, initial_params(snapshot, config))


class SwaptionFitTests(unittest.TestCase):
    EXPIRIES = (1.0, 5.0)

    def test_b_l_round_trip(self):
        truth = gaussian_params(b_l=0.003)
        snapshot = synthetic_snapshot(truth, maturities=MATURITIES, expiries=self.EXPIRIES)
        start = truth.with_b_l([0.0] * len(truth.b_l.values))
        fitted = fit_bL(snapshot, CalibConfig(engine="gaussian", progress=False), start)
        owned = {int(fitted.b_l.index(e)) for e in self.EXPIRIES}
        self.assertEqual(len(owned), len(self.EXPIRIES))
        for step, value in enumerate(fitted.b_l.values):
            if step in owned:
                self.assertAlmostEqual(value, 0.003, delta=1e-6)
            else:
                self.assertEqual(value, 0.0)


class BoundTests(unittest.TestCase):
    def test_b_r_bound(self):
        for value in (0.0, 0.5, 1.0, 1.0 + 5e-5):
            _check_b_r(KnotCurve.constant(value, B_R_KNOTS, "b_r"))
        for value in (-0.01, 1.01):
            with self.assertRaises(InvariantViolation):
                _check_b_r(KnotCurve.constant(value, B_R_KNOTS, "b_r"))


if __name__ == "__main__":
    unittest.main()
