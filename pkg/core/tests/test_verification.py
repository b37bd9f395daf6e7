import math
import unittest

import numpy as np

from core.errors import InvariantViolation
from core.verification import (
    Check,
    VerifyConfig,
    VerifyReport,
    gaussian_counterpart,
    mc_trades,
    run_verification,
)

from .fixtures import gaussian_params, nig_params


class ConfigTests(unittest.TestCase):
    def test_unknown_suite(self):
        with self.assertRaises(InvariantViolation):
            VerifyConfig(suites=("curves", "vibes"))

    def test_tightened(self):
        cfg = VerifyConfig().tightened(10.0)
        self.assertAlmostEqual(cfg.curve_tol, 1e-13, delta=1e-28)
        self.assertAlmostEqual(cfg.cross_tol, 1e-8, delta=1e-23)
        self.assertEqual(cfg.wide_collar_tol, VerifyConfig().wide_collar_tol)
        self.assertEqual(cfg.z_max, 3.0)
        with self.assertRaises(InvariantViolation):
            VerifyConfig().tightened(1.0)


class CheckTests(unittest.TestCase):
    def test_passed(self):
        self.assertTrue(Check("s", "n", 1e-13, 1e-12).passed)
        self.assertFalse(Check("s", "n", 1e-11, 1e-12).passed)
        self.assertFalse(Check("s", "n", math.inf, 1.0).passed)
        self.assertFalse(Check("s", "n", math.nan, 1.0).passed)

    def test_report_frame(self):
        report = VerifyReport([Check("a", "x", 0.0, 1.0), Check("b", "y", 2.0, 1.0, "T=5")])
        self.assertFalse(report.passed)
        self.assertEqual([c.name for c in report.failures], ["y"])
        frame = report.to_frame()
        self.assertEqual(list(frame.columns), ["suite", "check", "value", "threshold", "passed", "detail"])
        self.assertEqual(list(frame["passed"]), [True, False])


class SuiteTests(unittest.TestCase):
    def test_deterministic_suites_pass(self):
        for params in (gaussian_params(), nig_params()):
            report = run_verification(params, VerifyConfig(suites=("curves", "convexity")))
            self.assertTrue(report.passed, report.to_frame().to_string())
            self.assertEqual({c.suite for c in report.checks}, {"curves", "convexity"})

    def test_error_becomes_failed_check(self):
        cfg = VerifyConfig(suites=("mc",), seed=None, paths=100, martingale_grid=(1.0,))
        report = run_verification(gaussian_params(), cfg)
        self.assertEqual(len(report.checks), 1)
        check = report.checks[0]
        self.assertEqual(check.name, "error")
        self.assertFalse(check.passed)
        self.assertIn("SeedMissing", check.detail)

    def test_drift_fault_fails_mc_suite(self):
        cfg = VerifyConfig(suites=("mc",), paths=2_000, seed=3, martingale_grid=(1.0, 5.0), drift_fault=0.05)
        report = run_verification(gaussian_params(), cfg)
        martingale = next(c for c in report.checks if c.name == "martingale")
        self.assertFalse(martingale.passed)
        self.assertFalse(report.passed)

    def test_gaussian_counterpart(self):
        spec = nig_params().spec
        gauss = gaussian_counterpart(spec)
        self.assertTrue(gauss.is_gaussian)
        self.assertEqual(gauss.weights, spec.weights)
        np.testing.assert_allclose(gauss.clocks(4.0), spec.clocks(4.0))
        same = gaussian_params().spec
        self.assertIs(gaussian_counterpart(same), same)

    def test_mc_trades(self):
        trades = mc_trades(gaussian_params(), VerifyConfig())
        self.assertIn("nominal_bond_10y", trades)
        self.assertIn("lpi_bond_5y", trades)


if __name__ == "__main__":
    unittest.main()
