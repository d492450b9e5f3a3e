"""
Tests for the rdelab command line.
"""

import json

import pytest
from typer.testing import CliRunner

from rdelab.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, app, dispatch

runner = CliRunner()

CONFIG = """\
A = 2
m = 1
steps = 2
x[-1] = 1
x[0] = 1
y[-1] = 1
y[0] = 1
z[-1] = 1
z[0] = 1
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(CONFIG)
    return path


class TestHelp:
    """Test the Typer app surface."""

    def test_help_lists_commands(self):
        """Test that every command is registered."""
        result = runner.invoke(app, ["--help"])
        assert result.exit_code == 0
        for command in ("simulate", "equilibria", "stability", "classify", "sweep", "verify-theorem"):
            assert command in result.output

    def test_equilibria_via_runner(self):
        """Test a success path through CliRunner."""
        result = runner.invoke(app, ["equilibria", "--A", "3"])
        assert result.exit_code == 0
        assert json.loads(result.output) == {"kind": "isolated", "x": 4.0, "y": 4.0, "z": 4.0}


class TestDispatch:
    """Test commands and exit codes through dispatch."""

    def test_equilibria_family(self, capsys):
        """Test the A = 1 family member."""
        assert dispatch(["equilibria", "--A", "1", "--mu", "3"]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload == {"kind": "family", "mu": 3.0, "x": 3.0, "y": 3.0, "z": 1.5}

    def test_equilibria_needs_mu(self, capsys):
        """Test that A = 1 without mu is an input error."""
        assert dispatch(["equilibria", "--A", "1"]) == EXIT_INPUT
        assert "mu" in capsys.readouterr().err

    def test_equilibria_bad_a(self):
        """Test that A <= 0 is an input error."""
        assert dispatch(["equilibria", "--A", "0"]) == EXIT_INPUT

    def test_stability(self, capsys):
        """Test the certificate for A = 2, m = 1 at epsilon = 1/6."""
        code = dispatch(
            ["stability", "--A", "2", "--m", "1", "--epsilon", "0.16666666666666666"]
        )
        assert code == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["scaled_norm"] == pytest.approx(5.0 / 6.0)
        assert payload["row1_sum"] == pytest.approx(11.0 / 15.0)
        assert payload["rho_estimate"] < payload["scaled_norm"]
        assert payload["verdict"] == "LAS"
        assert payload["equilibrium"]["x"] == 3.0

    def test_stability_norm_below_unity(self):
        """Test that a norm-only request for A < 1 is an input error."""
        assert dispatch(["stability", "--A", "0.5", "--m", "1", "--method", "norm"]) == EXIT_INPUT

    def test_stability_bad_epsilon(self):
        """Test that epsilon outside (0, 1/m) is an input error."""
        assert dispatch(["stability", "--A", "2", "--m", "2", "--epsilon", "0.6"]) == EXIT_INPUT

    def test_simulate_csv(self, capsys, config_file):
        """Test trajectory CSV on stdout."""
        assert dispatch(["simulate", str(config_file)]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "n,x,y,z"
        assert lines[1] == "-1,1.0,1.0,1.0"
        assert lines[3] == "1,3.0,3.0,3.0"
        assert len(lines) == 5

    def test_simulate_json_file(self, tmp_path, config_file):
        """Test JSON output to a file with a steps override."""
        target = tmp_path / "out.json"
        code = dispatch(
            ["simulate", str(config_file), "--format", "json", "--steps", "10", "--out", str(target)]
        )
        assert code == EXIT_OK
        payload = json.loads(target.read_text())
        assert len(payload["samples"]) == 12

    def test_simulate_missing_config(self, tmp_path):
        """Test that an unreadable config is an input error."""
        assert dispatch(["simulate", str(tmp_path / "missing.cfg")]) == EXIT_INPUT

    def test_simulate_bad_config(self, tmp_path, capsys):
        """Test that parse errors carry the line number."""
        path = tmp_path / "bad.cfg"
        path.write_text("A = 2\nm = one\n")
        assert dispatch(["simulate", str(path)]) == EXIT_INPUT
        assert "line 2" in capsys.readouterr().err

    def test_simulate_zero_steps(self, capsys, config_file):
        """Test that --steps 0 is refused instead of falling back to the config."""
        assert dispatch(["simulate", str(config_file), "--steps", "0"]) == EXIT_INPUT
        captured = capsys.readouterr()
        assert "steps must be >= 1" in captured.err
        assert "n,x,y,z" not in captured.out

    def test_classify(self, capsys, config_file):
        """Test the regime label of a converging config."""
        assert dispatch(["classify", str(config_file), "--steps", "1000"]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["label"] == "Converged"
        assert payload["point"] == pytest.approx([3.0, 3.0, 3.0], abs=1e-6)
        assert payload["params"] == {"A": 2.0, "m": 1}

    def test_sweep(self, capsys, tmp_path):
        """Test sweep rows on stdout and the summary file."""
        summary = tmp_path / "summary.csv"
        args = [
            "sweep", "--A", "2,3", "--m", "1", "--trials", "3", "--horizon", "500",
            "--threads", "1", "--summary", str(summary),
        ]
        assert dispatch(args) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 7
        assert lines[0].startswith("A,m,trial,seed_used")
        assert summary.read_text().startswith("A,m,trials,")

    def test_sweep_thread_count_invariance(self, capsys):
        """Test identical stdout for 1 and 4 threads."""
        args = ["sweep", "--A", "0.5,2", "--m", "1,2", "--trials", "3", "--horizon", "800",
                "--seed", "4", "--executor", "thread"]
        assert dispatch(args + ["--threads", "1"]) == EXIT_OK
        single = capsys.readouterr().out
        assert dispatch(args + ["--threads", "4"]) == EXIT_OK
        assert capsys.readouterr().out == single

    def test_sweep_invalid_grid(self):
        """Test grid errors."""
        assert dispatch(["sweep", "--A", "2,x", "--m", "1"]) == EXIT_INPUT
        assert dispatch(["sweep", "--A", "2", "--m", "1", "--init-range", "5,1"]) == EXIT_INPUT
        assert dispatch(["sweep", "--A", "2", "--m", "1", "--executor", "cluster"]) == EXIT_INPUT

    def test_verify_theorem(self, capsys):
        """Test PASS output for a quick suite."""
        assert dispatch(["verify-theorem", "--id", "T1", "--scale", "0.01"]) == EXIT_OK
        out = capsys.readouterr().out
        first, rest = out.split("\n", 1)
        assert first == "PASS T1"
        assert json.loads(rest)["status"] == "PASS"

    def test_verify_unknown_id(self):
        """Test that an unknown theorem id is an input error."""
        assert dispatch(["verify-theorem", "--id", "T9"]) == EXIT_INPUT

    def test_verify_failure_exit_code(self, monkeypatch, capsys):
        """Test that a failing suite exits with code 2."""
        from core.verification import TheoremCheck
        from rdelab import cli

        monkeypatch.setattr(
            cli, "verify", lambda theorem_id, seed, scale: TheoremCheck(theorem_id, False, "forced")
        )
        assert dispatch(["verify-theorem", "--id", "T1"]) == EXIT_FAIL
        assert capsys.readouterr().out.startswith("FAIL T1")

    def test_usage_errors(self):
        """Test unknown commands and bad option types."""
        assert dispatch(["nonsense"]) == EXIT_INPUT
        assert dispatch(["equilibria", "--A", "abc"]) == EXIT_INPUT
        assert dispatch(["stability", "--A", "2"]) == EXIT_INPUT
