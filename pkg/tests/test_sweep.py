"""
Tests for seeded sweeps and the worker pool.
"""

import os

import pytest

import core.sweep as sweep_module
from core.analyze import classify_regime, convergence_error, semicycle_report
from core.dynamics import iterate, tail_length, validate_params
from core.equilibria import isolated_equilibrium
from core.exceptions import InvalidGrid, InvalidInputError
from core.serialization import emit_sweep_csv
from core.settings import reset_settings
from core.sweep import (
    LABELS,
    SweepGrid,
    SweepResult,
    TrialTask,
    aggregate,
    generate_initials,
    rows_to_frame,
    run_sweep,
    run_trial,
    sweep_tasks,
)
from workers.pool import TaskPool


def _square(value):
    return value * value


def _csv(result):
    import io

    buffer = io.StringIO()
    emit_sweep_csv(result, buffer)
    return buffer.getvalue()


class TestGenerateInitials:
    """Test seeded initial blocks."""

    def test_deterministic(self):
        """Test that the same key gives the same block."""
        first = generate_initials(42, 3, 7, 2, (0.1, 10.0))
        second = generate_initials(42, 3, 7, 2, (0.1, 10.0))
        assert first == second
        assert first.m == 2

    def test_keys_are_independent(self):
        """Test that trial, cell and seed each change the draw."""
        base = generate_initials(42, 3, 7, 2, (0.1, 10.0))
        assert generate_initials(42, 3, 8, 2, (0.1, 10.0)) != base
        assert generate_initials(42, 4, 7, 2, (0.1, 10.0)) != base
        assert generate_initials(43, 3, 7, 2, (0.1, 10.0)) != base

    def test_values_in_range(self):
        """Test that every value lies in [lo, hi]."""
        for trial in range(20):
            block = generate_initials(1, 0, trial, 4, (0.5, 2.0))
            for values in (block.x, block.y, block.z):
                assert len(values) == 5
                assert all(0.5 <= v <= 2.0 for v in values)

    def test_degenerate_range(self):
        """Test that lo == hi yields a constant block."""
        block = generate_initials(1, 0, 0, 1, (1.0, 1.0))
        assert block.x == block.y == block.z == (1.0, 1.0)

    def test_bad_range(self):
        """Test that the range must be positive and ordered."""
        with pytest.raises(InvalidInputError):
            generate_initials(1, 0, 0, 1, (0.0, 1.0))
        with pytest.raises(InvalidInputError):
            generate_initials(1, 0, 0, 1, (2.0, 1.0))


class TestSweepGrid:
    """Test grid validation."""

    def test_defaults(self):
        """Test default trials, range and horizon."""
        grid = SweepGrid.create(A_values=[2.0], m_values=[1])
        assert grid.trials_per_cell == 50
        assert grid.init_range == (0.1, 10.0)
        assert grid.horizon == 10_000

    def test_canonical_order(self):
        """Test that cells are sorted by A then m."""
        grid = SweepGrid.create(A_values=[2.0, 0.5], m_values=[3, 1])
        assert grid.cells() == [(0, 0.5, 1), (1, 0.5, 3), (2, 2.0, 1), (3, 2.0, 3)]

    @pytest.mark.parametrize(
        "fields",
        [
            {"A_values": [], "m_values": [1]},
            {"A_values": [-1.0], "m_values": [1]},
            {"A_values": [1.0, 1.0], "m_values": [1]},
            {"A_values": [1.0], "m_values": [0]},
            {"A_values": [1.0], "m_values": [1], "trials_per_cell": 0},
            {"A_values": [1.0], "m_values": [1], "init_range": (0.0, 1.0)},
            {"A_values": [1.0], "m_values": [1], "init_range": (3.0, 1.0)},
            {"A_values": [5.0], "m_values": [1], "cap": 2.0},
        ],
    )
    def test_invalid(self, fields):
        """Test that invalid grids raise InvalidGrid."""
        with pytest.raises(InvalidGrid):
            SweepGrid.create(**fields)

    def test_tasks(self):
        """Test one task per (cell, trial)."""
        grid = SweepGrid.create(A_values=[1.0, 2.0], m_values=[1, 2], trials_per_cell=3)
        tasks = sweep_tasks(grid)
        assert len(tasks) == 12
        assert [t.trial for t in tasks[:3]] == [0, 1, 2]
        assert tasks[-1].cell_index == 3


class TestRunTrial:
    """Test a single trial."""

    def test_converging_trial(self):
        """Test a converged row with its error and semicycle length."""
        task = TrialTask(
            A=2.0, m=1, cell_index=0, trial=0, seed=5, init_range=(0.1, 10.0),
            horizon=2_000, cap=1e100,
        )
        row = run_trial(task)
        assert row.label == "Converged"
        assert row.convergence_error <= 1e-6
        assert row.max_semicycle is not None
        assert row.point == pytest.approx((3.0, 3.0, 3.0), abs=1e-6)

    def test_failure_becomes_undetermined(self):
        """Test that a trial error is recorded, not raised."""
        task = TrialTask(
            A=2.0, m=1, cell_index=0, trial=0, seed=5, init_range=(0.0, 1.0),
            horizon=100, cap=1e100,
        )
        row = run_trial(task)
        assert row.label == "Undetermined"
        assert "init_range" in row.reason

    def test_unity_trial_has_no_error_column(self):
        """Test that A = 1 rows carry no convergence error."""
        task = TrialTask(
            A=1.0, m=2, cell_index=0, trial=1, seed=5, init_range=(0.1, 10.0),
            horizon=3_000, cap=1e100,
        )
        row = run_trial(task)
        assert row.label in ("Converged", "BoundedOscillatory")
        assert row.convergence_error is None

    @pytest.mark.parametrize("A,m", [(0.5, 1), (1.0, 2), (1.5, 3), (2.0, 1)])
    def test_matches_full_record_analysis(self, A, m):
        """Test that tail-mode rows agree with analysis of the whole orbit."""
        task = TrialTask(
            A=A, m=m, cell_index=0, trial=2, seed=17, init_range=(0.1, 10.0),
            horizon=3_000, cap=1e100,
        )
        row = run_trial(task)
        init = generate_initials(task.seed, task.cell_index, task.trial, m, task.init_range)
        params, init = validate_params(A, m, init)
        traj = iterate(params, init, task.horizon, cap=task.cap)
        report = classify_regime(traj, params)
        assert row.label == report.label
        assert row.point == report.point
        assert row.overflow_at == traj.overflow_at
        if A != 1 and not traj.overflowed:
            reference = isolated_equilibrium(A)
            assert row.max_semicycle == semicycle_report(traj, reference, 100).max_len
            assert row.convergence_error == convergence_error(report, reference)

    def test_keeps_bounded_memory(self, monkeypatch):
        """Test that trials ask the engine for a tail record."""
        records = []
        real_iterate = sweep_module.iterate

        def recording_iterate(*args, **kwargs):
            traj = real_iterate(*args, **kwargs)
            records.append((kwargs.get("record"), len(traj)))
            return traj

        monkeypatch.setattr(sweep_module, "iterate", recording_iterate)
        task = TrialTask(
            A=2.0, m=1, cell_index=0, trial=0, seed=5, init_range=(0.1, 10.0),
            horizon=20_000, cap=1e100,
        )
        assert run_trial(task).label == "Converged"
        assert records == [("tail", tail_length(1))]


class TestRunSweep:
    """Test full sweeps."""

    def test_all_converge(self):
        """Test that A = 2, m = 1 trials all converge to (3, 3, 3)."""
        grid = SweepGrid.create(A_values=[2.0], m_values=[1], trials_per_cell=20, horizon=2_000)
        result = run_sweep(grid, workers=1)
        assert len(result) == 20
        assert all(row.label == "Converged" for row in result.rows)
        assert all(row.convergence_error <= 1e-6 for row in result.rows)

    def test_unity_never_overflows(self):
        """Test that A = 1 cells produce no NumericOverflow rows."""
        grid = SweepGrid.create(
            A_values=[1.0], m_values=[1, 2], trials_per_cell=10, horizon=2_000, seed=3
        )
        result = run_sweep(grid, workers=2)
        assert not any(row.label == "NumericOverflow" for row in result.rows)

    def test_worker_count_does_not_change_output(self):
        """Test byte-identical CSV for 1 and 4 workers."""
        grid = SweepGrid.create(
            A_values=[0.5, 2.0], m_values=[1, 2], trials_per_cell=4, horizon=1_500, seed=9
        )
        single = run_sweep(grid, workers=1)
        pooled = run_sweep(grid, workers=4, kind="thread")
        assert _csv(single) == _csv(pooled)
        assert [row.trial for row in pooled.rows[:4]] == [0, 1, 2, 3]

    def test_process_workers_do_not_change_output(self):
        """Test byte-identical CSV from process pools of 1, 4 and auto workers."""
        grid = SweepGrid.create(
            A_values=[0.5, 1.0, 2.0], m_values=[1, 2], trials_per_cell=2, horizon=500, seed=13
        )
        outputs = [_csv(run_sweep(grid, workers=w, kind="process")) for w in (1, 4, 0)]
        assert outputs[0] == outputs[1] == outputs[2]
        assert outputs[0].count("\n") == 1 + 12

    def test_aggregate(self):
        """Test the per-cell histogram."""
        grid = SweepGrid.create(
            A_values=[2.0, 3.0], m_values=[1], trials_per_cell=5, horizon=2_000
        )
        summary = aggregate(run_sweep(grid, workers=1))
        assert list(summary["A"]) == [2.0, 3.0]
        assert list(summary["Converged"]) == [5, 5]
        assert list(summary[list(LABELS)].sum(axis=1)) == [5, 5]
        assert list(summary["trials"]) == [5, 5]
        assert (summary["mean_convergence_error"] <= 1e-6).all()

    def test_aggregate_empty(self):
        """Test that an empty result cannot be aggregated."""
        grid = SweepGrid.create(A_values=[2.0], m_values=[1])
        with pytest.raises(InvalidInputError):
            aggregate(SweepResult(grid=grid))

    def test_frame_columns(self):
        """Test the flattened row columns."""
        grid = SweepGrid.create(A_values=[2.0], m_values=[1], trials_per_cell=2, horizon=500)
        frame = rows_to_frame(run_sweep(grid, workers=1))
        for column in ("A", "m", "trial", "seed_used", "label", "point_x", "point_z"):
            assert column in frame.columns


class TestTaskPool:
    """Test the local worker pool."""

    def test_inline(self):
        """Test that one worker runs tasks in order."""
        assert TaskPool(workers=1).map(_square, [1, 2, 3]) == [1, 4, 9]

    def test_threads_keep_order(self):
        """Test that pooled results follow submission order."""
        pool = TaskPool(workers=4, kind="thread")
        assert pool.map(_square, range(50)) == [v * v for v in range(50)]
        assert pool.stats() == {"workers": 4, "kind": "thread"}

    def test_auto_workers(self):
        """Test that 0 workers means one per CPU."""
        assert TaskPool(workers=0).workers >= 1

    def test_zero_workers_ignores_configured_threads(self, monkeypatch):
        """Test that 0 means one per CPU even when RDE_LAB_THREADS is set."""
        monkeypatch.setenv("RDE_LAB_THREADS", "3")
        reset_settings()
        assert TaskPool(workers=0).workers == (os.cpu_count() or 1)
        assert TaskPool().workers == 3
        assert TaskPool(workers=2).workers == 2

    def test_empty_batch(self):
        """Test that no tasks gives no results."""
        assert TaskPool(workers=2).map(_square, []) == []

    def test_error_propagates(self):
        """Test that a failing task surfaces its exception."""
        with pytest.raises(ZeroDivisionError):
            TaskPool(workers=2, kind="thread").map(lambda v: 1 / v, [1, 0])

    def test_negative_workers(self):
        """Test that negative worker counts are refused."""
        with pytest.raises(ValueError):
            TaskPool(workers=-1)
