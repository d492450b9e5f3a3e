"""
Tests for the verification suites behind verify-theorem.
"""

import pytest

from core.exceptions import InvalidInputError
from core.verification import TheoremCheck, available_theorems, verify


class TestVerify:
    """Test suite dispatch."""

    def test_available(self):
        """Test the registered ids."""
        assert available_theorems() == (
            "T1", "T2i", "T2ii", "T3", "T4", "T5", "T6", "T7", "T8",
        )

    def test_unknown_id(self):
        """Test that an unknown id is an input error."""
        with pytest.raises(InvalidInputError):
            verify("T9")

    def test_bad_scale(self):
        """Test that scale must be positive."""
        with pytest.raises(InvalidInputError):
            verify("T1", scale=0.0)

    def test_check_serialises(self):
        """Test the TheoremCheck record."""
        check = TheoremCheck("T1", False, "nothing ran", {"cases": 0})
        assert check.status == "FAIL"
        assert check.to_dict() == {
            "id": "T1",
            "status": "FAIL",
            "passed": False,
            "summary": "nothing ran",
            "evidence": {"cases": 0},
            "warnings": [],
        }


class TestQuickSuites:
    """Test each suite at a reduced scale."""

    def test_equilibria(self):
        """Test the equilibrium identities."""
        check = verify("T1", scale=0.1)
        assert check.passed, check.evidence
        assert check.evidence["cases"] == 100

    @pytest.mark.parametrize("theorem_id,parity", [("T2i", "even"), ("T2ii", "odd")])
    def test_parity_split(self, theorem_id, parity):
        """Test the parity split for 0 < A < 1."""
        check = verify(theorem_id, scale=0.1)
        assert check.passed, check.evidence["failures"]
        assert check.evidence["runs"] == 9
        assert parity in check.summary

    def test_unity_boundedness(self):
        """Test persistence and the A = 1 envelope."""
        check = verify("T3", scale=0.02)
        assert check.passed, check.evidence["failures"]
        assert check.evidence["min_sample"] > 1.0

    def test_semicycles(self):
        """Test semicycle tiling and alternation."""
        check = verify("T4", scale=0.04)
        assert check.passed, check.evidence["failures"]
        assert set(check.evidence["max_len_by_m"]) == {"1", "2", "3"}

    def test_boundedness(self):
        """Test the invariant box for A > 1."""
        check = verify("T5", scale=0.05)
        assert check.passed, check.evidence["failures"]
        assert check.evidence["runs"] == 12

    def test_family_stability(self):
        """Test the A = 1 family linearisation and probe."""
        check = verify("T6", scale=0.3)
        assert check.passed, check.evidence["failures"]
        probes = [p["probe_fraction"] for p in check.evidence["points"] if p["mu"] == 2.0]
        assert probes == [1.0, 1.0, 1.0]
        assert check.warnings

    def test_norm_certificate(self):
        """Test the scaled norm across A > 1 and m <= 8."""
        check = verify("T7")
        assert check.passed, check.evidence["failures"]
        assert check.evidence["cases"] == 120
        assert check.evidence["max_norm"] < 1.0

    def test_global_attraction(self):
        """Test convergence of a small sweep with A > 1."""
        check = verify("T8", scale=0.04)
        assert check.passed, check.evidence["failures"]
        assert check.evidence["runs"] == 32


@pytest.mark.slow
class TestFullSuites:
    """Test every suite at full scale."""

    @pytest.mark.parametrize("theorem_id", ["T1", "T2i", "T2ii", "T3", "T4", "T5", "T6", "T8"])
    def test_passes(self, theorem_id):
        """Test that the default-scale run passes."""
        check = verify(theorem_id)
        assert check.passed, check.to_dict()
