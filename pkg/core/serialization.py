"""
Run configs and on-disk formats.

Config grammar (UTF-8, one ``key = value`` per line, ``#`` comments):

    A = 2
    m = 1
    x[-1] = 0.5          # indexed initial values, n = -m..0
    seed = 7             # or a seed plus a range instead of indexed values
    init_range = 0.1, 10
    steps = 100
    cap = 1e100

Unknown plain keys are kept as command options. Reals are always written
with Python's shortest round-trip repr, CSV uses LF line endings.
"""

import csv
import io
import json
import logging
import re
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TextIO

import numpy as np
import pandas as pd

from .dynamics import COMPONENTS, InitBlock, Params, Trajectory
from .exceptions import (
    ConflictingInitSources,
    IncompleteInitialBlock,
    InvalidInputError,
    ParseError,
    SinkError,
)
from .sweep import SweepResult, generate_initials

logger = logging.getLogger(__name__)

Sink = str | Path | TextIO | None
Sample = tuple[int, float, float, float]

TRAJECTORY_HEADER = ["n", "x", "y", "z"]

_INDEXED_KEY = re.compile(r"^([xyz])\[\s*([+-]?\d+)\s*\]$")
_PLAIN_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass
class RunConfig:
    """Inputs of one run: parameters, initial-value source and options."""

    A: float
    m: int
    steps: int | None = None
    cap: float | None = None
    seed: int | None = None
    init_range: tuple[float, float] | None = None
    init: dict[str, dict[int, float]] = field(default_factory=dict)
    options: dict[str, str] = field(default_factory=dict)

    @property
    def explicit(self) -> bool:
        return any(self.init.get(name) for name in COMPONENTS)

    def params(self) -> Params:
        return Params(A=self.A, m=self.m)

    def init_block(self) -> InitBlock:
        """Explicit values, or the block drawn from seed and range."""
        if self.explicit:
            lists = [
                tuple(self.init[name][n] for n in range(-self.m, 1)) for name in COMPONENTS
            ]
            return InitBlock(*lists)
        if self.seed is None or self.init_range is None:
            raise IncompleteInitialBlock("no initial values and no seed/init_range")
        return generate_initials(self.seed, 0, 0, self.m, self.init_range)


def _to_float(raw: str, line: int, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ParseError(line, f"{key} expects a real number, got {raw!r}") from None


def _to_int(raw: str, line: int, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ParseError(line, f"{key} expects an integer, got {raw!r}") from None


def parse_config(text: str) -> RunConfig:
    """Parse config text; later keys override earlier ones."""
    values: dict[str, Any] = {}
    init: dict[str, dict[int, float]] = {name: {} for name in COMPONENTS}
    index_lines: dict[tuple[str, int], int] = {}
    options: dict[str, str] = {}

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, "expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if not raw:
            raise ParseError(lineno, f"missing value for {key!r}")

        indexed = _INDEXED_KEY.match(key)
        if indexed:
            name, n = indexed.group(1), int(indexed.group(2))
            init[name][n] = _to_float(raw, lineno, key)
            index_lines[(name, n)] = lineno
        elif key in ("A", "cap"):
            values[key] = _to_float(raw, lineno, key)
        elif key in ("m", "steps", "seed"):
            values[key] = _to_int(raw, lineno, key)
        elif key == "init_range":
            parts = [p.strip() for p in raw.split(",")]
            if len(parts) != 2:
                raise ParseError(lineno, "init_range expects 'lo, hi'")
            values[key] = (_to_float(parts[0], lineno, key), _to_float(parts[1], lineno, key))
        elif _PLAIN_KEY.match(key):
            options[key] = raw
        else:
            raise ParseError(lineno, f"unrecognised key {key!r}")

    for required in ("A", "m"):
        if required not in values:
            raise ParseError(0, f"missing required key {required!r}")
    m = values["m"]

    for (name, n), lineno in sorted(index_lines.items(), key=lambda item: item[1]):
        if not -m <= n <= 0:
            raise ParseError(lineno, f"index {name}[{n}] outside -{m}..0")

    explicit = bool(index_lines)
    generated = "seed" in values or "init_range" in values
    if explicit and generated:
        raise ConflictingInitSources()
    if explicit:
        missing = [
            f"{name}[{n}]" for name in COMPONENTS for n in range(-m, 1) if n not in init[name]
        ]
        if missing:
            raise IncompleteInitialBlock(f"missing initial values: {', '.join(missing)}")
    elif not ("seed" in values and "init_range" in values):
        raise IncompleteInitialBlock(
            "give all 3(m+1) initial values or both seed and init_range"
        )

    config = RunConfig(
        A=values["A"],
        m=m,
        steps=values.get("steps"),
        cap=values.get("cap"),
        seed=values.get("seed"),
        init_range=values.get("init_range"),
        init=init if explicit else {},
        options=options,
    )
    logger.debug(f"Parsed config A={config.A}, m={config.m}, explicit={explicit}")
    return config


def dump_config(config: RunConfig) -> str:
    """Config text that parse_config reads back to an equal RunConfig."""
    lines = [f"A = {config.A!r}", f"m = {config.m}"]
    if config.steps is not None:
        lines.append(f"steps = {config.steps}")
    if config.cap is not None:
        lines.append(f"cap = {config.cap!r}")
    if config.explicit:
        for name in COMPONENTS:
            for n in range(-config.m, 1):
                lines.append(f"{name}[{n}] = {config.init[name][n]!r}")
    else:
        lines.append(f"seed = {config.seed}")
        lo, hi = config.init_range or (None, None)
        lines.append(f"init_range = {lo!r}, {hi!r}")
    for key, value in config.options.items():
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


# sinks


@contextmanager
def _open_sink(sink: Sink) -> Iterator[TextIO]:
    if sink is None:
        yield sys.stdout
        return
    if isinstance(sink, str | Path):
        try:
            with open(sink, "w", encoding="utf-8", newline="") as handle:
                yield handle
        except OSError as e:
            raise SinkError(f"cannot write {sink}: {e}") from e
        return
    yield sink


def _write(text: str, sink: Sink) -> int:
    try:
        with _open_sink(sink) as handle:
            handle.write(text)
            handle.flush()
    except OSError as e:
        raise SinkError(f"write failed: {e}") from e
    return len(text.encode("utf-8"))


def _csv_text(fieldnames: list[str], rows: list[dict[str, Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def to_json(payload: Any) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def emit_json(payload: Any, sink: Sink = None) -> int:
    return _write(to_json(payload), sink)


# trajectories


def emit_trajectory(traj: Trajectory, fmt: str = "csv", sink: Sink = None) -> int:
    """Write n,x,y,z rows (csv) or the full record (json); returns bytes written."""
    if fmt == "csv":
        rows = [dict(zip(TRAJECTORY_HEADER, s, strict=True)) for s in traj.samples()]
        text = _csv_text(TRAJECTORY_HEADER, rows)
    elif fmt == "json":
        text = to_json(traj.to_dict())
    else:
        raise InvalidInputError(f"unknown format {fmt!r}; use csv or json")
    written = _write(text, sink)
    logger.debug(f"Wrote {len(traj)} samples as {fmt} ({written} bytes)")
    return written


def read_trajectory_csv(text: str) -> list[Sample]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != TRAJECTORY_HEADER:
        raise ParseError(1, f"expected header {','.join(TRAJECTORY_HEADER)}")
    samples = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 4:
            raise ParseError(lineno, f"expected 4 fields, got {len(row)}")
        try:
            samples.append((int(row[0]), float(row[1]), float(row[2]), float(row[3])))
        except ValueError as e:
            raise ParseError(lineno, str(e)) from None
    return samples


def read_trajectory_json(text: str) -> Trajectory:
    try:
        payload = json.loads(text)
        params = Params(A=float(payload["params"]["A"]), m=int(payload["params"]["m"]))
        samples = [tuple(s) for s in payload["samples"]]
        cap = float(payload["cap"])
        overflow_at = payload["overflow_at"]
    except (ValueError, KeyError, TypeError) as e:
        raise ParseError(0, f"not a trajectory document: {e}") from None

    n = np.asarray([int(s[0]) for s in samples], dtype=np.int64)
    columns = [np.asarray([float(s[k]) for s in samples]) for k in (1, 2, 3)]
    head = slice(0, params.m + 1)
    init = InitBlock(*(tuple(float(v) for v in column[head]) for column in columns))
    return Trajectory(
        params=params,
        init=init,
        n=n,
        x=columns[0],
        y=columns[1],
        z=columns[2],
        cap=cap,
        overflow_at=overflow_at,
    )


# sweeps


def emit_sweep_csv(result: SweepResult, sink: Sink = None) -> int:
    rows = [row.flat() for row in result.rows]
    if not rows:
        raise InvalidInputError("sweep result has no rows")
    fieldnames = list(rows[0].keys())
    return _write(_csv_text(fieldnames, rows), sink)


def emit_summary_csv(frame: pd.DataFrame, sink: Sink = None) -> int:
    return _write(frame.to_csv(index=False, lineterminator="\n"), sink)
