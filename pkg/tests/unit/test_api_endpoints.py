"""Unit tests for the REST endpoints."""
import logging
import unittest

from fastapi.testclient import TestClient
from scipy.special import erf

from app.main import app
from app.utils.settings import configure_logging

test_client = TestClient(app)
configure_logging()
logger = logging.getLogger()

drift_vectors = ["3,1,2,5,1", "2,0,3", "1,-1", "0,0", "1/2,-1/3"]


class TestPartitionAPI(unittest.TestCase):

    """Test the partition and coalescence endpoints."""

    def test_partition_endpoint(self):
        """Every sample drift vector is partitioned."""
        for drifts in drift_vectors:
            response = test_client.get("/api/partition", params={"drifts": drifts})
            self.assertEqual(response.status_code, 200)
            self.assertEqual(response.json()["m"][-1], len(drifts.split(",")))

    def test_partition_golden(self):
        """(3,1,2,5,1) splits as (3,1 | 2 | 5,1) with strong blocks (3,1,2 | 5,1)."""
        response = test_client.get("/api/partition", params={"drifts": "3,1,2,5,1"})
        data = response.json()
        self.assertEqual(data["m"], [2, 3, 5])
        self.assertEqual(data["m_prime"], [3, 5])
        self.assertEqual(data["k0"], 4)

    def test_brute_force_agrees(self):
        """The exhaustive search returns the same partition."""
        fast = test_client.get("/api/partition", params={"drifts": "3,1,2,5,1"}).json()
        slow = test_client.get("/api/partition", params={"drifts": "3,1,2,5,1", "brute_force": True}).json()
        self.assertEqual(fast, slow)

    def test_coalescence(self):
        """The particle system ends in the blocks of the stable partition."""
        response = test_client.get("/api/partition/coalescence", params={"x": "0,1,2,3,4", "drifts": "3,1,2,5,1"})
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response.json()["groups"], [[1, 2], [3], [4, 5]])

    def test_malformed(self):
        """Malformed vectors are rejected with the error class."""
        response = test_client.get("/api/partition", params={"drifts": "1,,2"})
        self.assertEqual(response.status_code, 422)
        self.assertEqual(response.json()["error"], "InvalidInputError")


class TestLawAPI(unittest.TestCase):

    """Test the asymptotic law endpoint."""

    def test_law(self):
        """(2,0,3) has gamma 1 and powers restarting on each strong block."""
        response = test_client.get("/api/law", params={"drifts": "2,0,3"})
        self.assertEqual(response.status_code, 200)
        data = response.json()
        self.assertAlmostEqual(data["gamma"], 1.0)
        self.assertEqual(data["h"]["p"], [0, 1, 0])


class TestTailAPI(unittest.TestCase):

    """Test the survival probability endpoint."""

    def test_closed2(self):
        """The driftless pair matches the reflection principle."""
        params = {"x": "0,1", "drifts": "0,0", "t": 1, "method": "closed2"}
        response = test_client.get("/api/tail", params=params)
        self.assertEqual(response.status_code, 200)
        self.assertAlmostEqual(response.json()["value"], erf(0.5), places=8)

    def test_exact_matches_closed2(self):
        """The general quadrature agrees with the n = 2 closed form."""
        base = {"x": "0,1", "drifts": "1,-1", "t": 2}
        exact = test_client.get("/api/tail", params=dict(base, method="exact")).json()
        closed = test_client.get("/api/tail", params=dict(base, method="closed2")).json()
        self.assertAlmostEqual(exact["value"] / closed["value"], 1.0, places=4)

    def test_nonpositive_time(self):
        """t must be positive."""
        response = test_client.get("/api/tail", params={"x": "0,1", "drifts": "0,0", "t": 0})
        self.assertEqual(response.status_code, 422)

    def test_outside_chamber(self):
        """A start vector outside the chamber is a 422."""
        response = test_client.get("/api/tail", params={"x": "1,0", "drifts": "0,0", "t": 1})
        self.assertEqual(response.status_code, 422)

    def test_asymptotic_needs_constant(self):
        """The asymptotic method without C is malformed input (422)."""
        params = {"x": "0,1", "drifts": "1,-1", "t": 10, "method": "asymptotic"}
        response = test_client.get("/api/tail", params=params)
        self.assertEqual(response.status_code, 422)
        self.assertEqual(response.json()["error"], "InvalidInputError")


class TestConstantAPI(unittest.TestCase):

    """Test the constant endpoints."""

    def test_direct(self):
        """C(1,-1) = 1 / (2 sqrt(pi))."""
        response = test_client.get("/api/constant", params={"drifts": "1,-1"})
        self.assertEqual(response.status_code, 200)
        self.assertAlmostEqual(response.json()["c_direct"], 0.282095, places=6)

    def test_extract(self):
        """Fitting closed2 tail values recovers the direct constant."""
        params = {"drifts": "1,-1", "method": "extract", "x": "0,1", "oracle": "closed2"}
        params["t_grid"] = "4,6,9,12,16,20,25,30"
        response = test_client.get("/api/constant", params=params)
        self.assertEqual(response.status_code, 200)
        self.assertLess(abs(response.json()["c_extracted"] / 0.282095 - 1), 0.02)

    def test_extract_needs_grid(self):
        """Extraction without a time grid is a 422."""
        response = test_client.get("/api/constant", params={"drifts": "1,-1", "method": "extract"})
        self.assertEqual(response.status_code, 422)

    def test_equal_drift(self):
        """Quadrature and closed form agree for n = 3."""
        response = test_client.get("/api/constant/equal-drift/3")
        self.assertEqual(response.status_code, 200)
        data = response.json()
        self.assertAlmostEqual(data["quadrature"], data["closed"], places=6)

    def test_equal_drift_range(self):
        """Only n = 2, 3, 4 are supported."""
        self.assertEqual(test_client.get("/api/constant/equal-drift/5").status_code, 422)

    def test_too_many_particles(self):
        """Five particles exceed the quadrature range."""
        response = test_client.get("/api/constant", params={"drifts": "1,2,3,4,5"})
        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.json()["error"], "CapabilityError")


class TestSchemaAPI(unittest.TestCase):

    """Test the schema endpoints."""

    def test_names(self):
        """Every output has a schema."""
        response = test_client.get("/api/schemas")
        self.assertEqual(response.json(), ["constant", "law", "manifest", "partition", "tail"])

    def test_unknown(self):
        """Unknown names are a 422."""
        self.assertEqual(test_client.get("/api/schemas/nothing").status_code, 422)


if __name__ == "__main__":
    unittest.main()
