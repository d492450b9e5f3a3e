"""
Seeded Monte-Carlo sweeps over (A, m, initial block).

Every (cell, trial) pair draws its initial block from a Philox generator
keyed by the grid seed with (cell, trial) in the counter, so a trial's
inputs never depend on which worker runs it or in what order.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from workers.pool import ExecutorKind, TaskPool

from .analyze import (
    EnvelopeTracker,
    RegimeReport,
    SemicycleTracker,
    classify_regime,
    convergence_error,
)
from .dynamics import COMPONENTS, InitBlock, Params, Trajectory, iterate, validate_params
from .equilibria import estimate_mu, family_equilibrium, isolated_equilibrium
from .exceptions import InvalidGrid, InvalidInputError, RDELabError
from .settings import get_settings

logger = logging.getLogger(__name__)

LABELS = ("Converged", "ParityUnbounded", "BoundedOscillatory", "NumericOverflow", "Undetermined")
SEED_MASK = (1 << 64) - 1
SEMICYCLE_TRANSIENT = 100

DEFAULT_A_VALUES = (0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 5.0)
DEFAULT_M_VALUES = (1, 2, 3, 4, 5, 6)


class SweepGrid(BaseModel):
    """Cells (A, m), trials per cell and the shared initial-value range."""

    A_values: list[float] = Field(min_length=1)
    m_values: list[int] = Field(min_length=1)
    trials_per_cell: int = Field(default=50, ge=1)
    init_range: tuple[float, float] = (0.1, 10.0)
    seed: int = Field(default=0, ge=0, le=SEED_MASK)
    horizon: int = Field(default_factory=lambda: get_settings().classify_horizon, ge=1)
    cap: float = Field(default_factory=lambda: get_settings().cap, gt=0)

    @field_validator("A_values")
    @classmethod
    def _positive_a(cls, values: list[float]) -> list[float]:
        if any(not a > 0 for a in values):
            raise ValueError("every A must be positive")
        if len(set(values)) != len(values):
            raise ValueError("A values must be distinct")
        return sorted(values)

    @field_validator("m_values")
    @classmethod
    def _valid_m(cls, values: list[int]) -> list[int]:
        if any(m < 1 for m in values):
            raise ValueError("every m must be >= 1")
        if len(set(values)) != len(values):
            raise ValueError("m values must be distinct")
        return sorted(values)

    @model_validator(mode="after")
    def _check_range(self) -> "SweepGrid":
        lo, hi = self.init_range
        if not (lo > 0 and hi >= lo):
            raise ValueError(f"init_range needs 0 < lo <= hi, got {self.init_range}")
        if not self.cap > max(self.A_values):
            raise ValueError("cap must exceed every A")
        return self

    @classmethod
    def create(cls, **kwargs: Any) -> "SweepGrid":
        """Construct a grid, reporting validation failures as InvalidGrid."""
        try:
            return cls(**kwargs)
        except ValidationError as e:
            raise InvalidGrid(f"invalid sweep grid: {e.errors()[0]['msg']}") from e

    def cells(self) -> list[tuple[int, float, int]]:
        """(cell_index, A, m) in canonical order."""
        pairs = [(A, m) for A in self.A_values for m in self.m_values]
        return [(index, A, m) for index, (A, m) in enumerate(pairs)]


def generate_initials(
    seed: int, cell_index: int, trial_index: int, m: int, init_range: tuple[float, float]
) -> InitBlock:
    """3(m+1) uniform values in [lo, hi], keyed by (seed, cell, trial)."""
    lo, hi = init_range
    if not (lo > 0 and hi >= lo):
        raise InvalidInputError(f"init_range needs 0 < lo <= hi, got {init_range}")
    bitgen = np.random.Philox(
        key=seed & SEED_MASK, counter=[0, 0, trial_index, cell_index]
    )
    values = np.random.Generator(bitgen).uniform(lo, hi, size=3 * (m + 1))
    # rounding can land just past hi
    values = np.clip(values, lo, hi)
    x, y, z = (tuple(float(v) for v in chunk) for chunk in np.split(values, 3))
    return InitBlock(x, y, z)


@dataclass(frozen=True)
class TrialTask:
    """Everything one worker needs for one (cell, trial)."""

    A: float
    m: int
    cell_index: int
    trial: int
    seed: int
    init_range: tuple[float, float]
    horizon: int
    cap: float


@dataclass
class SweepRow:
    A: float
    m: int
    trial: int
    seed_used: int
    cell_index: int
    label: str
    point: tuple[float, float, float] | None = None
    convergence_error: float | None = None
    max_semicycle: int | None = None
    overflow_at: int | None = None
    diverging_parity: str | None = None
    other_limit: float | None = None
    reason: str | None = None

    def flat(self) -> dict[str, Any]:
        """Columns for CSV / DataFrame output."""
        row = asdict(self)
        point = row.pop("point")
        for name, value in zip(COMPONENTS, point or (None, None, None), strict=True):
            row[f"point_{name}"] = value
        return row


@dataclass
class SweepResult:
    grid: SweepGrid
    rows: list[SweepRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)


def _unity_semicycles(
    task: TrialTask, params: Params, init: InitBlock, traj: Trajectory, transient: int
) -> int | None:
    """Longest semicycle about the family point an A = 1 run drifts to.

    The reference is only known after the run, so the orbit is replayed
    with a tracker attached.
    """
    mu_hat, _ = estimate_mu(traj)
    if not mu_hat > 1:
        return None
    tracker = SemicycleTracker(family_equilibrium(mu_hat), transient)
    iterate(
        params, init, task.horizon, cap=task.cap, record="tail", tail=task.m + 1,
        observers=[tracker],
    )
    return tracker.max_len


def run_trial(task: TrialTask) -> SweepRow:
    """Simulate and classify one trial; failures become Undetermined rows.

    The orbit is kept as a tail record; envelope containment and semicycle
    lengths are accumulated while iterating.
    """
    row = SweepRow(
        A=task.A,
        m=task.m,
        trial=task.trial,
        seed_used=task.seed,
        cell_index=task.cell_index,
        label="Undetermined",
    )
    try:
        init = generate_initials(task.seed, task.cell_index, task.trial, task.m, task.init_range)
        params, init = validate_params(task.A, task.m, init)
        transient = min(SEMICYCLE_TRANSIENT, task.horizon // 2)
        envelope = EnvelopeTracker(params.A, params.m) if params.A >= 1 else None
        semicycle = (
            SemicycleTracker(isolated_equilibrium(params.A), transient) if params.A != 1 else None
        )
        traj = iterate(
            params,
            init,
            task.horizon,
            cap=task.cap,
            record="tail",
            observers=[t for t in (envelope, semicycle) if t is not None],
        )
        report: RegimeReport = classify_regime(traj, params, envelope=envelope)

        row.label = report.label
        row.point = report.point
        row.overflow_at = traj.overflow_at
        row.diverging_parity = report.diverging_parity
        row.other_limit = report.other_limit
        row.reason = report.reason

        if not traj.overflowed:
            if semicycle is not None:
                row.convergence_error = convergence_error(report, semicycle.reference)
                row.max_semicycle = semicycle.max_len
            else:
                row.max_semicycle = _unity_semicycles(task, params, init, traj, transient)
    except RDELabError as e:
        logger.error(f"Trial A={task.A}, m={task.m}, trial={task.trial} failed: {e}")
        row.label = "Undetermined"
        row.reason = str(e)
    return row


def sweep_tasks(grid: SweepGrid) -> list[TrialTask]:
    return [
        TrialTask(
            A=A,
            m=m,
            cell_index=cell,
            trial=trial,
            seed=grid.seed,
            init_range=grid.init_range,
            horizon=grid.horizon,
            cap=grid.cap,
        )
        for cell, A, m in grid.cells()
        for trial in range(grid.trials_per_cell)
    ]


def run_sweep(
    grid: SweepGrid, workers: int | None = None, kind: ExecutorKind | None = None
) -> SweepResult:
    """One classified row per (cell, trial), ordered by (A, m, trial)."""
    tasks = sweep_tasks(grid)
    pool = TaskPool(workers=workers, kind=kind)
    logger.info(
        f"Sweep: {len(grid.A_values)}x{len(grid.m_values)} cells, "
        f"{grid.trials_per_cell} trials, seed {grid.seed}"
    )
    rows = pool.map(run_trial, tasks)
    logger.info(f"Sweep finished: {len(rows)} rows")
    return SweepResult(grid=grid, rows=rows)


def rows_to_frame(result: SweepResult) -> pd.DataFrame:
    return pd.DataFrame([row.flat() for row in result.rows])


def aggregate(result: SweepResult) -> pd.DataFrame:
    """Per-cell label histogram, mean convergence error and longest semicycle."""
    if not result.rows:
        raise InvalidInputError("cannot aggregate an empty sweep")
    frame = rows_to_frame(result)
    for column in ("convergence_error", "max_semicycle"):
        frame[column] = pd.to_numeric(frame[column], errors="coerce")
    cells = frame.groupby(["A", "m"], sort=True)

    histogram = (
        frame.groupby(["A", "m", "label"], sort=True)
        .size()
        .unstack("label", fill_value=0)
        .reindex(columns=list(LABELS), fill_value=0)
    )
    summary = pd.DataFrame(
        {
            "trials": cells.size(),
            "mean_convergence_error": cells["convergence_error"].mean(),
            "max_semicycle": cells["max_semicycle"].max(),
        }
    )
    return summary.join(histogram).reset_index()
