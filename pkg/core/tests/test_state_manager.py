import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

from core.errors import ParseError
from core.rpks import params_to_dict
from core.state_manager import LOG_FILE, StateManager

from .fixtures import nig_params


class StateManagerTests(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.sm = StateManager(Path(self.tmp.name) / "run")

    def tearDown(self):
        self.tmp.cleanup()

    def test_params_round_trip(self):
        params = nig_params(b_l=0.01)
        path = self.sm.save_params(params)
        self.assertTrue(path.exists())
        self.assertEqual(params_to_dict(self.sm.load_params()), params_to_dict(params))

    def test_missing_or_broken_params(self):
        with self.assertRaises(ParseError):
            self.sm.load_params()
        (self.sm.root / "params.json").write_text("{", encoding="utf-8")
        with self.assertRaises(ParseError):
            self.sm.load_params()

    def test_results_are_json_safe(self):
        self.sm.save_result("nested/result.json", {"x": np.float64(1.5), "bad": float("nan"), "v": np.arange(2)})
        self.assertEqual(self.sm._read("nested/result.json", None), {"x": 1.5, "bad": None, "v": [0, 1]})

    def test_table(self):
        path = self.sm.write_table("figures/t.csv", pd.DataFrame({"a": [1.0, 2.0]}))
        self.assertEqual(list(pd.read_csv(path)["a"]), [1.0, 2.0])

    def test_log(self):
        self.assertEqual(self.sm.read_log(), [])
        self.sm.append_log({"step": 1, "residual": np.float32(0.5)})
        self.sm.append_log({"step": 2, "residual": float("inf")})
        with (self.sm.root / LOG_FILE).open("a", encoding="utf-8") as f:
            f.write("not json\n\n")
        self.sm.append_log({"step": 2, "residual": 0.25})
        self.assertEqual(len(self.sm.read_log()), 3)
        step2 = self.sm.read_log(step=2)
        self.assertEqual([r["residual"] for r in step2], [None, 0.25])


if __name__ == "__main__":
    unittest.main()
