import json
import os
import tempfile
import unittest

from cjs.exceptions import ConfigError
from cjs.settings import (
    PipelineConfig,
    _convert_value,
    build_config,
    parse_overrides,
    resolve_config,
    with_updates,
)


class TestPipelineConfig(unittest.TestCase):
    def test_defaults(self):
        config = PipelineConfig()
        self.assertEqual((config.gamma, config.N, config.runs), (20, 5, 20))
        self.assertEqual(config.max_iter, 10000)
        self.assertEqual(config.sigma, "median")
        self.assertEqual(config.sources, [])

    def test_sigma_forms(self):
        self.assertEqual(build_config({"sigma": "0.5"}).sigma, 0.5)
        self.assertEqual(build_config({"sigma": 2}).sigma, 2.0)
        self.assertEqual(build_config({"sigma": None}).sigma, "median")
        for bad in ("wide", -1.0, 0):
            with self.assertRaises(ConfigError):
                build_config({"sigma": bad})

    def test_cross_field_checks(self):
        for values in (
            {"N": 1},
            {"gamma": 4, "N": 5},
            {"runs": 0},
            {"mu": 0.0},
            {"rho": -0.1},
            {"label_base": 2},
            {"unknown": 1},
        ):
            with self.subTest(values=values), self.assertRaises(ConfigError):
                build_config(values)

    def test_config_error_is_value_error(self):
        with self.assertRaises(ValueError):
            build_config({"runs": -3})

    def test_echo_round_trips(self):
        config = build_config({"rho": 0.25, "sources": ["a.csv:b.csv"]})
        self.assertEqual(build_config(config.echo()), config)

    def test_with_updates_revalidates(self):
        config = PipelineConfig()
        self.assertEqual(with_updates(config, gamma=40).gamma, 40)
        with self.assertRaises(ConfigError):
            with_updates(config, N=50)


class TestOverrides(unittest.TestCase):
    def test_typed_conversion(self):
        self.assertEqual(_convert_value("3", "Int"), 3)
        self.assertEqual(_convert_value("0.5", "Float"), 0.5)
        self.assertTrue(_convert_value("true", "Check"))
        self.assertFalse(_convert_value("0", "Check"))
        self.assertEqual(_convert_value("median", "Sigma"), "median")
        self.assertEqual(_convert_value("a.csv,b.csv", "List"), ["a.csv", "b.csv"])
        self.assertEqual(_convert_value("out.json", "Data"), "out.json")

    def test_parse_overrides(self):
        values = parse_overrides(["rho=0.5", "runs = 3", "l2_normalize=yes"])
        self.assertEqual(values, {"rho": 0.5, "runs": 3, "l2_normalize": True})

    def test_bad_overrides(self):
        for pair in ("rho", "=1", "nope=1", "runs=many"):
            with self.subTest(pair=pair), self.assertRaises(ConfigError):
                parse_overrides([pair])


class TestResolveConfig(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmpdir.name, "config.json")

    def tearDown(self):
        self.tmpdir.cleanup()

    def write(self, data):
        with open(self.path, "w") as file:
            file.write(data if isinstance(data, str) else json.dumps(data))

    def test_precedence(self):
        self.write({"gamma": 30, "rho": 2.0, "runs": 4})
        config = resolve_config(self.path, {"rho": 0.5, "seed": None}, ["runs=7"])
        self.assertEqual(config.gamma, 30)
        self.assertEqual(config.rho, 0.5)
        self.assertEqual(config.runs, 7)
        self.assertEqual(config.seed, 0)

    def test_no_file(self):
        self.assertEqual(resolve_config(), PipelineConfig())

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            resolve_config(os.path.join(self.tmpdir.name, "absent.json"))

    def test_malformed_file(self):
        for text in ("{not json", "[1, 2]"):
            self.write(text)
            with self.assertRaises(ConfigError):
                resolve_config(self.path)


if __name__ == "__main__":
    unittest.main()
