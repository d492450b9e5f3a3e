#!/usr/bin/env python3
"""
rdelab Command Line Interface
"""

import logging
import sys
from pathlib import Path

import click
import typer
from rich.console import Console
from rich.markup import escape
from rich.table import Table
from typer import Option, Typer

from core.analyze import classify_regime
from core.dynamics import Trajectory, iterate, validate_params
from core.equilibria import equilibrium_for
from core.exceptions import (
    DelayLessThanOne,
    InvalidGrid,
    InvalidInputError,
    NonPositiveA,
)
from core.linearize import certify
from core.serialization import (
    RunConfig,
    emit_json,
    emit_summary_csv,
    emit_sweep_csv,
    emit_trajectory,
    parse_config,
)
from core.settings import get_settings
from core.sweep import (
    DEFAULT_A_VALUES,
    DEFAULT_M_VALUES,
    LABELS,
    SweepGrid,
    aggregate,
    run_sweep,
)
from core.verification import TheoremCheck, available_theorems, verify

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_FAIL = 2
EXIT_INTERNAL = 3

SUMMARY_COLUMNS = ("A", "m", "trials", *LABELS, "max_semicycle")

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

console = Console(stderr=True)

app = Typer(
    name="rdelab",
    help="Simulator and stability checker for a delayed rational difference system",
    add_completion=False,
)

_state = {"verbose": False}


@app.callback()
def configure(
    verbose: bool = Option(False, "--verbose", "-v", help="Debug logging and tracebacks"),
) -> None:
    """Set up logging on standard error."""
    _state["verbose"] = verbose
    level = logging.DEBUG if verbose else get_settings().log_level.upper()
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _load_config(path: Path) -> RunConfig:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidInputError(f"cannot read config {path}: {e}") from e
    return parse_config(text)


def _run_from_config(path: Path, steps: int | None, cap: float | None) -> Trajectory:
    config = _load_config(path)
    params, init = validate_params(config.A, config.m, config.init_block())
    settings = get_settings()
    if steps is not None:
        horizon = steps
    else:
        horizon = config.steps if config.steps is not None else settings.classify_horizon
    guard = cap if cap is not None else (config.cap if config.cap is not None else settings.cap)
    return iterate(params, init, horizon, cap=guard)


def _floats(raw: str, flag: str) -> list[float]:
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise InvalidGrid(f"{flag} expects comma-separated reals, got {raw!r}") from None


def _ints(raw: str, flag: str) -> list[int]:
    try:
        return [int(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise InvalidGrid(f"{flag} expects comma-separated integers, got {raw!r}") from None


@app.command()
def simulate(
    config: Path = typer.Argument(..., help="Run config file"),
    fmt: str = Option("csv", "--format", "-f", help="csv or json"),
    out: Path | None = Option(None, "--out", "-o", help="Output file (default stdout)"),
    steps: int | None = Option(None, "--steps", help="Override the config's steps"),
    cap: float | None = Option(None, "--cap", help="Override the overflow guard"),
) -> None:
    """Iterate a config and write the trajectory"""
    traj = _run_from_config(config, steps, cap)
    emit_trajectory(traj, fmt, out)
    if traj.overflowed:
        console.print(f"[yellow]Overflow guard hit at n={traj.overflow_at}[/yellow]")


@app.command()
def equilibria(
    A: float = Option(..., "--A", help="Parameter A > 0"),
    mu: float | None = Option(None, "--mu", help="Family member for A = 1"),
    out: Path | None = Option(None, "--out", "-o"),
) -> None:
    """Print the equilibrium for A (and mu when A = 1)"""
    if not A > 0:
        raise NonPositiveA(A)
    emit_json(equilibrium_for(A, mu).to_dict(), out)


@app.command()
def stability(
    A: float = Option(..., "--A", help="Parameter A > 0"),
    m: int = Option(..., "--m", help="Delay m >= 1"),
    mu: float | None = Option(None, "--mu", help="Family member for A = 1"),
    epsilon: float | None = Option(None, "--epsilon", help="Scaling epsilon (default: grid search)"),
    method: str = Option("both", "--method", help="norm, power or both"),
    out: Path | None = Option(None, "--out", "-o"),
) -> None:
    """Certificate and spectral estimate at the equilibrium"""
    if not A > 0:
        raise NonPositiveA(A)
    if m < 1:
        raise DelayLessThanOne(m)
    eq = equilibrium_for(A, mu)
    cert = certify(eq, A, m, epsilon=epsilon, method=method)  # type: ignore[arg-type]
    emit_json({"A": A, "m": m, "equilibrium": eq.to_dict(), **cert.to_dict()}, out)


@app.command()
def classify(
    config: Path = typer.Argument(..., help="Run config file"),
    out: Path | None = Option(None, "--out", "-o"),
    steps: int | None = Option(None, "--steps"),
    cap: float | None = Option(None, "--cap"),
) -> None:
    """Label the long-run regime of a config's trajectory"""
    traj = _run_from_config(config, steps, cap)
    report = classify_regime(traj, traj.params)
    emit_json({"params": traj.params.to_dict(), **report.to_dict()}, out)


@app.command()
def sweep(
    A_values: str = Option(
        ",".join(str(a) for a in DEFAULT_A_VALUES), "--A", help="Comma-separated A values"
    ),
    m_values: str = Option(
        ",".join(str(m) for m in DEFAULT_M_VALUES), "--m", help="Comma-separated delays"
    ),
    trials: int = Option(50, "--trials", "-n", help="Trials per (A, m) cell"),
    seed: int = Option(0, "--seed", "-s"),
    init_range: str = Option("0.1,10", "--init-range", help="lo,hi for initial values"),
    horizon: int | None = Option(None, "--horizon", help="Steps per trial"),
    cap: float | None = Option(None, "--cap"),
    threads: int | None = Option(None, "--threads", "-t", help="Workers; 0 = auto"),
    executor: str | None = Option(None, "--executor", help="process or thread"),
    out: Path | None = Option(None, "--out", "-o", help="Row CSV (default stdout)"),
    summary: Path | None = Option(None, "--summary", help="Write the per-cell summary CSV"),
) -> None:
    """Run a seeded regime sweep and write one CSV row per trial"""
    bounds = _floats(init_range, "--init-range")
    if len(bounds) != 2:
        raise InvalidGrid("--init-range expects exactly two values")
    fields = {
        "A_values": _floats(A_values, "--A"),
        "m_values": _ints(m_values, "--m"),
        "trials_per_cell": trials,
        "init_range": tuple(bounds),
        "seed": seed,
    }
    if horizon is not None:
        fields["horizon"] = horizon
    if cap is not None:
        fields["cap"] = cap
    if executor not in (None, "process", "thread"):
        raise InvalidGrid(f"--executor must be process or thread, got {executor!r}")

    grid = SweepGrid.create(**fields)
    result = run_sweep(grid, workers=threads, kind=executor)  # type: ignore[arg-type]
    emit_sweep_csv(result, out)

    frame = aggregate(result)
    if summary is not None:
        emit_summary_csv(frame, summary)
    table = Table(title="Sweep Summary")
    for column in SUMMARY_COLUMNS:
        table.add_column(column, style="cyan" if column in ("A", "m") else "green")
    for record in frame.to_dict("records"):
        table.add_row(*(str(record[column]) for column in SUMMARY_COLUMNS))
    console.print(table)


def display_check(check: TheoremCheck) -> None:
    """Render a verification outcome as a table on standard error."""
    style = "green" if check.passed else "red"
    table = Table(title=f"{check.id} - {check.status}")
    table.add_column("Evidence", style="cyan")
    table.add_column("Value", style=style)
    table.add_row("Summary", escape(check.summary))
    for key, value in check.evidence.items():
        if isinstance(value, list | dict):
            value = f"{len(value)} entries"
        table.add_row(key, escape(str(value)))
    console.print(table)
    for warning in check.warnings[:5]:
        console.print(f"[yellow]{escape(warning)}[/yellow]")


@app.command("verify-theorem")
def verify_theorem(
    theorem_id: str = Option(..., "--id", help=f"One of {', '.join(available_theorems())}"),
    seed: int = Option(20240, "--seed", "-s"),
    scale: float = Option(1.0, "--scale", help="Shrink trial counts, e.g. 0.1"),
    out: Path | None = Option(None, "--out", "-o"),
) -> None:
    """Run the desk-scale check for one theorem and print PASS/FAIL"""
    check = verify(theorem_id, seed=seed, scale=scale)
    display_check(check)
    sys.stdout.write(f"{check.status} {check.id}\n")
    emit_json(check.to_dict(), out)
    if not check.passed:
        raise typer.Exit(EXIT_FAIL)


def dispatch(argv: list[str] | None = None) -> int:
    """Run the CLI on argv and map every outcome to an exit code."""
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        result = app(args=args, prog_name="rdelab", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        console.print(f"[red]Error: {escape(e.format_message())}[/red]")
        return EXIT_INPUT
    except click.exceptions.Abort:
        console.print("[red]Aborted[/red]")
        return EXIT_INPUT
    except InvalidInputError as e:
        _report(e)
        return EXIT_INPUT
    except Exception as e:
        _report(e)
        return EXIT_INTERNAL
    return result if isinstance(result, int) else EXIT_OK


def _report(error: Exception) -> None:
    if _state["verbose"]:
        console.print_exception()
    console.print(f"[red]Error: {escape(str(error))}[/red]")


def main() -> None:
    """Main entry point"""
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
