"""Unit tests for the parsing and settings utilities."""
import copy
import logging
import os
import tempfile
import unittest
from fractions import Fraction
from unittest import mock

import yaml

from app.utils.errors import InvalidInputError, WeylExitError
from app.utils.parsing import format_number, parse_grid, parse_vector
from app.utils.settings import (
    CONFIG_ENV,
    THREADS_ENV,
    TailMethod,
    configure_logging,
    get_config,
    get_partition_tolerance,
    get_thread_count,
    get_version,
    reset_config,
)

configure_logging()
logger = logging.getLogger()


class TestParsing(unittest.TestCase):

    """Vectors, grids and number formatting."""

    def test_integers_and_rationals(self):
        """Components are read as exact rationals."""
        self.assertEqual(parse_vector("3,1,2,5,1"), [3, 1, 2, 5, 1])
        self.assertEqual(parse_vector("1/2, -1/3"), [Fraction(1, 2), Fraction(-1, 3)])

    def test_decimals_are_exact(self):
        """0.1 is one tenth, not the nearest double."""
        self.assertEqual(parse_vector("0.1")[0], Fraction(1, 10))

    def test_unicode_minus(self):
        """A typographic minus sign is accepted."""
        self.assertEqual(parse_vector("−1,2"), [-1, 2])

    def test_bad_component(self):
        """The message names the offending component."""
        with self.assertRaises(InvalidInputError) as ctx:
            parse_vector("1,x,3")
        self.assertIn("component 2", str(ctx.exception))
        with self.assertRaises(InvalidInputError):
            parse_vector("1/0")
        with self.assertRaises(InvalidInputError):
            parse_vector("  ")

    def test_grid(self):
        """Time grids must be positive."""
        self.assertEqual(parse_grid("1,2.5,10"), [1.0, 2.5, 10.0])
        with self.assertRaises(InvalidInputError):
            parse_grid("1,0")

    def test_format_number(self):
        """Twelve significant digits, fractions verbatim."""
        self.assertEqual(format_number(0.28209479177387814), "0.282094791774")
        self.assertEqual(format_number(Fraction(3, 2)), "3/2")
        self.assertEqual(format_number(2.0), "2")


class TestSettings(unittest.TestCase):

    """Configuration access."""

    def test_config_sections(self):
        """The shipped configuration carries every section."""
        config = get_config()
        for section in ("logging", "partition", "quadrature", "mc", "fit"):
            self.assertIn(section, config)
        self.assertEqual(get_partition_tolerance(), 1e-12)

    def test_config_file_override(self):
        """The environment variable points at another file, read again after a reset."""
        config = copy.deepcopy(get_config())
        config["partition"]["tolerance"] = 1e-9
        self.addCleanup(reset_config)
        with tempfile.TemporaryDirectory() as directory:
            config_path = os.path.join(directory, "config.yaml")
            with open(config_path, "w") as f:
                yaml.safe_dump(config, f)
            with mock.patch.dict(os.environ, {CONFIG_ENV: config_path}):
                self.assertEqual(get_partition_tolerance(), 1e-12)
                reset_config()
                self.assertEqual(get_partition_tolerance(), 1e-9)
            reset_config()
        self.assertEqual(get_partition_tolerance(), 1e-12)

    def test_thread_override(self):
        """The environment variable wins over the file and garbage is ignored."""
        with mock.patch.dict(os.environ, {THREADS_ENV: "4"}):
            self.assertEqual(get_thread_count(), 4)
        with mock.patch.dict(os.environ, {THREADS_ENV: "many"}):
            self.assertEqual(get_thread_count(), get_config().get("threads", 1))

    def test_version(self):
        """Manifests carry the package version."""
        from app import __version__

        self.assertEqual(get_version(), "weyl-exit/" + __version__)

    def test_method_tags(self):
        """Method tags serialise as their values."""
        self.assertEqual(TailMethod("closed2"), TailMethod.CLOSED2)
        self.assertEqual(TailMethod.MC.value, "mc")

    def test_error_hierarchy(self):
        """Input errors are also ValueErrors."""
        self.assertTrue(issubclass(InvalidInputError, ValueError))
        self.assertTrue(issubclass(InvalidInputError, WeylExitError))


if __name__ == "__main__":
    unittest.main()
