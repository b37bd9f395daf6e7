import os
import unittest
from unittest import mock

from core import settings
from core.errors import ConfigError


class EnvTests(unittest.TestCase):
    def test_blank_uses_default(self):
        with mock.patch.dict(os.environ, {"RPKS_TEST_VALUE": "  "}):
            self.assertEqual(settings.env_str("RPKS_TEST_VALUE", "x"), "x")
            self.assertEqual(settings.env_float("RPKS_TEST_VALUE", 1.5), 1.5)
            self.assertEqual(settings.env_int("RPKS_TEST_VALUE", 3), 3)
            self.assertTrue(settings.env_bool("RPKS_TEST_VALUE", True))

    def test_parsed_values(self):
        with mock.patch.dict(os.environ, {"RPKS_TEST_VALUE": "2e3"}):
            self.assertEqual(settings.env_float("RPKS_TEST_VALUE", 0.0), 2000.0)
            self.assertEqual(settings.env_int("RPKS_TEST_VALUE", 0), 2000)
        with mock.patch.dict(os.environ, {"RPKS_TEST_VALUE": "off"}):
            self.assertFalse(settings.env_bool("RPKS_TEST_VALUE", True))

    def test_bad_numbers(self):
        with mock.patch.dict(os.environ, {"RPKS_TEST_VALUE": "many"}):
            with self.assertRaises(ConfigError):
                settings.env_float("RPKS_TEST_VALUE", 0.0)
            with self.assertRaises(ConfigError):
                settings.env_int("RPKS_TEST_VALUE", 0)

    def test_engine(self):
        with mock.patch.dict(os.environ, {"RPKS_TEST_ENGINE": "NIG"}):
            self.assertEqual(settings.env_engine("RPKS_TEST_ENGINE"), "nig")
        with mock.patch.dict(os.environ, {"RPKS_TEST_ENGINE": "heston"}):
            with self.assertRaises(ConfigError):
                settings.env_engine("RPKS_TEST_ENGINE")


if __name__ == "__main__":
    unittest.main()
