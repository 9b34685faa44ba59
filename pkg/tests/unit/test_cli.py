"""Unit tests for the command-line interface."""
import io
import json
import logging
import math
import os
import tempfile
import unittest

from scipy.special import erf

from app.cli import EXIT_CAPABILITY, EXIT_OK, EXIT_USAGE, main, rounded, to_csv
from app.utils.settings import configure_logging

configure_logging()
logger = logging.getLogger()


def run(*argv):
    """Run the CLI and return the exit code and the captured output."""
    stream = io.StringIO()
    code = main(list(argv), stream)
    return code, stream.getvalue()


class TestCommands(unittest.TestCase):

    """Subcommands and their exit codes."""

    def test_partition(self):
        """Opposite drifts form one block."""
        code, out = run("partition", "--drifts", "1,-1")
        self.assertEqual(code, EXIT_OK)
        payload = json.loads(out)
        self.assertEqual(payload["m"], [2])
        self.assertEqual(payload["q"], 1)

    def test_law(self):
        """The driftless pair decays like t^{-1/2}."""
        code, out = run("law", "--drifts", "0,0")
        self.assertEqual(code, EXIT_OK)
        payload = json.loads(out)
        self.assertEqual(payload["gamma"], 0.0)
        self.assertEqual((payload["alpha_num"], payload["alpha_den"]), (1, 2))

    def test_tail(self):
        """closed2 reproduces the reflection principle."""
        code, out = run("tail", "--x", "0,1", "--drifts", "0,0", "--t", "1", "--method", "closed2")
        self.assertEqual(code, EXIT_OK)
        payload = json.loads(out)
        self.assertEqual(payload["method"], "closed2")
        self.assertAlmostEqual(payload["value"], erf(0.5), places=8)

    def test_tail_mc_long_horizon(self):
        """A coarse step makes t = 200 affordable and still gives 1 - 1/e for a separating pair."""
        code, out = run(*"tail --x 0,1 --drifts 0,1 --t 200 --method mc --mc-dt 0.05 --mc-replicas 10000".split())
        self.assertEqual(code, EXIT_OK)
        payload = json.loads(out)
        self.assertEqual(payload["method"], "mc")
        self.assertLess(abs(payload["value"] - (1 - math.exp(-1))), 4 * payload["error"] + 5e-3)

    def test_tail_grid_csv(self):
        """A time grid gives one CSV row per time."""
        code, out = run(
            "tail", "--x", "0,1", "--drifts", "0,0", "--t-grid", "1,2", "--method", "closed2", "--format", "csv"
        )
        self.assertEqual(code, EXIT_OK)
        lines = out.strip().splitlines()
        self.assertEqual(len(lines), 3)
        self.assertIn("value", lines[0].split(","))

    def test_tail_usage(self):
        """Missing times, asymptotic grids and malformed vectors are usage errors."""
        self.assertEqual(run("tail", "--x", "0,1", "--drifts", "0,0")[0], EXIT_USAGE)
        code, _ = run("tail", "--x", "0,1", "--drifts", "0,0", "--t-grid", "1,2", "--method", "asymptotic")
        self.assertEqual(code, EXIT_USAGE)
        self.assertEqual(run("tail", "--x", "1,0", "--drifts", "0,0", "--t", "1")[0], EXIT_USAGE)
        self.assertEqual(run("partition", "--drifts", "1,a")[0], EXIT_USAGE)
        self.assertEqual(run("bogus")[0], EXIT_USAGE)

    def test_constant_printed(self):
        """The drifts (2, 0, 3) carry the comparison with the printed value."""
        code, out = run("constant", "--drifts", "2,0,3")
        self.assertEqual(code, EXIT_OK)
        payload = json.loads(out)
        self.assertAlmostEqual(payload["c_direct"], 0.282095, places=5)
        self.assertIn("printed_comparison", payload)
        self.assertFalse(payload["printed_comparison"]["agrees"])

    def test_constant_equal_drifts(self):
        """Equal drifts report the closed form as well."""
        code, out = run("constant", "--drifts", "1,1")
        self.assertEqual(code, EXIT_OK)
        payload = json.loads(out)
        self.assertAlmostEqual(payload["c_direct"], payload["d_closed"], places=6)

    def test_capability(self):
        """Five particles exceed the quadrature range."""
        self.assertEqual(run("constant", "--drifts", "1,2,3,4,5")[0], EXIT_CAPABILITY)

    def test_extract_needs_grid(self):
        """Extraction without a start vector is a usage error."""
        self.assertEqual(run("constant", "--drifts", "1,-1", "--method", "extract")[0], EXIT_USAGE)

    def test_schema(self):
        """Schemas are printed as JSON Schema documents."""
        code, out = run("schema", "--name", "tail")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("value", json.loads(out)["properties"])

    def test_schema_write(self):
        """Every schema is written to the directory."""
        with tempfile.TemporaryDirectory() as directory:
            code, _ = run("schema", "--write", directory)
            self.assertEqual(code, EXIT_OK)
            self.assertTrue(os.path.exists(os.path.join(directory, "constant.schema.json")))

    def test_manifest(self):
        """A manifest records the command line and the outputs."""
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "run.json")
            code, _ = run("law", "--drifts", "3,1,2,5,1", "--manifest", path)
            self.assertEqual(code, EXIT_OK)
            with open(path, encoding="utf-8") as f:
                manifest = json.load(f)
        self.assertEqual(manifest["command"][:3], ["law", "--drifts", "3,1,2,5,1"])
        self.assertIn("gamma", manifest["outputs"])
        self.assertIn("quadrature", manifest["config"]["config"])

    def test_verify_partition(self):
        """The partition suite passes."""
        code, out = run("verify", "--suite", "partition")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(all(row["passed"] for row in json.loads(out)))


class TestFormatting(unittest.TestCase):

    """Output helpers."""

    def test_rounded(self):
        """Floats are rounded to twelve significant digits at any depth."""
        self.assertEqual(rounded({"a": [0.1 + 0.2]}), {"a": [0.3]})

    def test_csv_cells(self):
        """Lists are space-joined and objects JSON-encoded."""
        text = to_csv([{"m": [1, 3], "flags": {"a": 1}, "v": 0.5}])
        self.assertEqual(text.splitlines()[0], "m,flags,v")
        self.assertIn("1 3", text)
        self.assertIn('"{""a"": 1}"', text)


if __name__ == "__main__":
    unittest.main()
