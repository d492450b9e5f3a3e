"""
Tests for run configs and the CSV/JSON formats.
"""

import io
import json

import pytest

from core.dynamics import validate_params
from core.exceptions import (
    ConflictingInitSources,
    IncompleteInitialBlock,
    InvalidInputError,
    ParseError,
    SinkError,
)
from core.serialization import (
    RunConfig,
    dump_config,
    emit_json,
    emit_summary_csv,
    emit_sweep_csv,
    emit_trajectory,
    parse_config,
    read_trajectory_csv,
    read_trajectory_json,
    to_json,
)
from core.sweep import SweepGrid, aggregate, generate_initials, run_sweep
from tests.helpers import run

EXPLICIT = """\
# A = 2 started from ones
A = 2
m = 1
steps = 100
x[-1] = 1
x[0] = 1
y[-1] = 1
y[0] = 1
z[-1] = 1
z[0] = 1.5
"""


class TestParseConfig:
    """Test the key = value grammar."""

    def test_explicit_block(self):
        """Test indexed initial values."""
        config = parse_config(EXPLICIT)
        assert (config.A, config.m, config.steps) == (2.0, 1, 100)
        assert config.explicit
        block = config.init_block()
        assert block.z == (1.0, 1.5)
        assert block.value("z", 0) == 1.5

    def test_seeded_block(self):
        """Test a seed plus range instead of indexed values."""
        config = parse_config("A = 1\nm = 2\nseed = 7\ninit_range = 0.1, 10\n")
        assert not config.explicit
        assert config.init_block() == generate_initials(7, 0, 0, 2, (0.1, 10.0))

    def test_comments_and_overrides(self):
        """Test inline comments and later keys winning."""
        text = "A = 2  # first\nA = 3\nm = 1\nseed = 1\ninit_range = 1, 2\nlabel = demo\n"
        config = parse_config(text)
        assert config.A == 3.0
        assert config.options == {"label": "demo"}

    def test_missing_required_key(self):
        """Test that A and m are required."""
        with pytest.raises(ParseError) as info:
            parse_config("m = 1\nseed = 1\ninit_range = 1, 2\n")
        assert info.value.line == 0

    def test_bad_line(self):
        """Test that a line without '=' reports its number."""
        with pytest.raises(ParseError) as info:
            parse_config("A = 2\nm 1\n")
        assert info.value.line == 2

    def test_bad_number(self):
        """Test that non-numeric values are rejected."""
        with pytest.raises(ParseError) as info:
            parse_config("A = two\nm = 1\n")
        assert info.value.line == 1

    def test_index_out_of_range(self):
        """Test that indices must lie in -m..0."""
        with pytest.raises(ParseError) as info:
            parse_config(EXPLICIT + "x[-2] = 1\n")
        assert info.value.line == 11

    def test_incomplete_block(self):
        """Test that a partial block is reported."""
        with pytest.raises(IncompleteInitialBlock):
            parse_config("A = 2\nm = 1\nx[0] = 1\n")

    def test_seed_needs_range(self):
        """Test that a seed alone is incomplete."""
        with pytest.raises(IncompleteInitialBlock):
            parse_config("A = 2\nm = 1\nseed = 4\n")

    def test_conflicting_sources(self):
        """Test that explicit values and a seed cannot be mixed."""
        with pytest.raises(ConflictingInitSources):
            parse_config(EXPLICIT + "seed = 3\n")

    def test_dump_round_trip(self):
        """Test that dumped text parses back to an equal config."""
        for text in (EXPLICIT, "A = 0.3\nm = 3\nseed = 11\ninit_range = 0.5, 4\ncap = 1e50\n"):
            config = parse_config(text)
            assert parse_config(dump_config(config)) == config

    def test_config_without_source(self):
        """Test init_block on a hand-built config with no source."""
        with pytest.raises(IncompleteInitialBlock):
            RunConfig(A=2.0, m=1).init_block()


class TestTrajectoryFormats:
    """Test trajectory output and read-back."""

    def test_csv_lines(self):
        """Test header and rows for a constant run."""
        traj = run(1.0, 1, (2, 2), (2, 2), (2, 2), 2)
        sink = io.StringIO()
        written = emit_trajectory(traj, "csv", sink)
        text = sink.getvalue()
        assert text.splitlines() == [
            "n,x,y,z",
            "-1,2.0,2.0,2.0",
            "0,2.0,2.0,2.0",
            "1,2.0,2.0,2.0",
            "2,2.0,2.0,2.0",
        ]
        assert "\r" not in text
        assert written == len(text.encode("utf-8"))

    def test_csv_read_back_is_exact(self):
        """Test that shortest-repr reals survive the CSV."""
        params, init = validate_params(1.5, 2, generate_initials(2, 0, 0, 2, (0.1, 10.0)))
        from core.dynamics import iterate

        traj = iterate(params, init, 200)
        sink = io.StringIO()
        emit_trajectory(traj, "csv", sink)
        assert read_trajectory_csv(sink.getvalue()) == list(traj.samples())

    def test_overflow_rows_stop(self, parity_run):
        """Test that output ends at the overflow index."""
        sink = io.StringIO()
        emit_trajectory(parity_run, "csv", sink)
        last = sink.getvalue().splitlines()[-1]
        assert last.startswith(f"{parity_run.overflow_at},")

    def test_json_document(self, parity_run):
        """Test the JSON record and its read-back."""
        sink = io.StringIO()
        emit_trajectory(parity_run, "json", sink)
        payload = json.loads(sink.getvalue())
        assert payload["overflow_at"] == parity_run.overflow_at
        assert payload["params"] == {"A": 0.5, "m": 1}
        back = read_trajectory_json(sink.getvalue())
        assert back.overflow_at == parity_run.overflow_at
        assert list(back.samples()) == list(parity_run.samples())
        assert back.init == parity_run.init

    def test_unknown_format(self, constant_unity_run):
        """Test that only csv and json are known."""
        with pytest.raises(InvalidInputError):
            emit_trajectory(constant_unity_run, "xml", io.StringIO())

    def test_bad_csv(self):
        """Test read-back errors."""
        with pytest.raises(ParseError):
            read_trajectory_csv("a,b\n")
        with pytest.raises(ParseError) as info:
            read_trajectory_csv("n,x,y,z\n1,2,3\n")
        assert info.value.line == 2

    def test_bad_json(self):
        """Test that a non-trajectory document is rejected."""
        with pytest.raises(ParseError):
            read_trajectory_json('{"params": {}}')

    def test_file_sink(self, tmp_path, constant_unity_run):
        """Test writing to a path."""
        target = tmp_path / "run.csv"
        emit_trajectory(constant_unity_run, "csv", target)
        assert target.read_text().startswith("n,x,y,z\n")

    def test_unwritable_sink(self, tmp_path, constant_unity_run):
        """Test that a directory path raises SinkError."""
        with pytest.raises(SinkError):
            emit_trajectory(constant_unity_run, "csv", tmp_path)


class TestJson:
    """Test JSON helpers."""

    def test_sorted_and_indented(self):
        """Test key order and numpy scalars."""
        import numpy as np

        text = to_json({"b": np.float64(1.5), "a": np.int64(2), "c": np.bool_(True)})
        assert text == '{\n  "a": 2,\n  "b": 1.5,\n  "c": true\n}\n'

    def test_emit_to_buffer(self):
        """Test emit_json on a text buffer."""
        sink = io.StringIO()
        emit_json({"x": 1}, sink)
        assert json.loads(sink.getvalue()) == {"x": 1}


class TestSweepFormats:
    """Test sweep CSV output."""

    def test_rows_and_summary(self):
        """Test the row CSV header and the summary CSV."""
        grid = SweepGrid.create(A_values=[2.0], m_values=[1], trials_per_cell=3, horizon=500)
        result = run_sweep(grid, workers=1)
        rows = io.StringIO()
        emit_sweep_csv(result, rows)
        lines = rows.getvalue().splitlines()
        assert len(lines) == 4
        header = lines[0].split(",")
        assert header[:6] == ["A", "m", "trial", "seed_used", "cell_index", "label"]
        assert header[-3:] == ["point_x", "point_y", "point_z"]

        summary = io.StringIO()
        emit_summary_csv(aggregate(result), summary)
        summary_lines = summary.getvalue().splitlines()
        assert summary_lines[0].startswith("A,m,trials,")
        assert len(summary_lines) == 2
