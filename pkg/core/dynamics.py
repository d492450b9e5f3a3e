"""
Forward iteration engine for the delayed three-component rational system

    x[n+1] = A + x[n-m] / z[n]
    y[n+1] = A + y[n-m] / z[n]
    z[n+1] = A + z[n-m] / y[n]

Samples carry the signed index n, with the initial block at n = -m..0.
Stepping reads a ring buffer of the last m+1 triples. A full record keeps
every sample as float64 arrays; a tail record keeps only the latest
samples plus running extremes, which bounds memory on long sweeps.
"""

import logging
import math
import numbers
import operator
from collections import deque
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass
from typing import Any, Literal, NamedTuple

import numpy as np

from .exceptions import (
    DelayLessThanOne,
    InvalidInputError,
    NonPositiveA,
    NonPositiveInitial,
    WrongBlockLength,
)
from .settings import get_settings

logger = logging.getLogger(__name__)

COMPONENTS: tuple[str, str, str] = ("x", "y", "z")

Triple = tuple[float, float, float]
Parity = Literal["even", "odd"]
Component = Literal["x", "y", "z"]
Record = Literal["full", "tail"]
Observer = Callable[[int, Triple], None]

TAIL_WINDOWS = 4
MIN_TAIL = 400
FULL_CHUNK = 4096


def limit_window(m: int) -> int:
    """Samples a limit estimate looks at: 10(m+1)."""
    return 10 * (m + 1)


def tail_length(m: int) -> int:
    """Default retention of a tail record: four limit windows, at least MIN_TAIL."""
    return max(MIN_TAIL, TAIL_WINDOWS * limit_window(m))


@dataclass(frozen=True)
class Params:
    """The pair (A, m) of the system."""

    A: float
    m: int

    def to_dict(self) -> dict[str, Any]:
        return {"A": self.A, "m": self.m}


@dataclass(frozen=True)
class InitBlock:
    """Initial values, each list ordered by n = -m, ..., 0."""

    x: tuple[float, ...]
    y: tuple[float, ...]
    z: tuple[float, ...]

    @property
    def m(self) -> int:
        return len(self.x) - 1

    def component(self, name: str) -> tuple[float, ...]:
        return getattr(self, name)

    def value(self, name: str, n: int) -> float:
        """Initial value of a component at signed index n (-m <= n <= 0)."""
        return self.component(name)[n + self.m]

    def triples(self) -> list[Triple]:
        """Initial triples ordered from n = -m to n = 0."""
        return list(zip(self.x, self.y, self.z, strict=True))

    @classmethod
    def constant(cls, m: int, triple: Sequence[float]) -> "InitBlock":
        """Block holding the same triple at every index."""
        x, y, z = (float(v) for v in triple)
        return cls((x,) * (m + 1), (y,) * (m + 1), (z,) * (m + 1))

    @classmethod
    def from_equilibrium(cls, m: int, eq: Any) -> "InitBlock":
        """Constant block sitting on an equilibrium (anything with as_tuple())."""
        return cls.constant(m, eq.as_tuple())

    def to_dict(self) -> dict[str, list[float]]:
        return {"x": list(self.x), "y": list(self.y), "z": list(self.z)}


def initial_block(
    x: Sequence[float], y: Sequence[float], z: Sequence[float]
) -> InitBlock:
    """Build an InitBlock from three sequences ordered n = -m..0."""
    return InitBlock(
        tuple(float(v) for v in x),
        tuple(float(v) for v in y),
        tuple(float(v) for v in z),
    )


def validate_params(A: float, m: int, init: InitBlock) -> tuple[Params, InitBlock]:
    """Check A > 0, m >= 1 and a complete, strictly positive initial block.

    Any real A and any integer m (numpy scalars included) are accepted;
    booleans are not.
    """
    if isinstance(A, bool) or not isinstance(A, numbers.Real):
        raise NonPositiveA(A)
    if not (math.isfinite(A) and A > 0):
        raise NonPositiveA(A)
    if isinstance(m, bool):
        raise DelayLessThanOne(m)
    try:
        m = operator.index(m)
    except TypeError:
        raise DelayLessThanOne(m) from None
    if m < 1:
        raise DelayLessThanOne(m)

    for name in COMPONENTS:
        values = init.component(name)
        if len(values) != m + 1:
            raise WrongBlockLength(name, m + 1, len(values))
        for offset, value in enumerate(values):
            if not (math.isfinite(value) and value > 0):
                raise NonPositiveInitial(name, offset - m, value)

    return Params(A=float(A), m=m), init


def step(params: Params, window: Sequence[Triple]) -> Triple:
    """Advance one step from the last m+1 triples (oldest first)."""
    if len(window) != params.m + 1:
        raise InvalidInputError(
            f"window must hold {params.m + 1} triples, got {len(window)}"
        )
    x_old, y_old, z_old = window[0]
    _, y_now, z_now = window[-1]
    A = params.A
    return (A + x_old / z_now, A + y_old / z_now, A + z_old / y_now)


class Subsequence(NamedTuple):
    n: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class RunStats:
    """Extremes over every sample with n >= 1, and the first m+1 such triples."""

    count: int
    lowest: Triple
    highest: Triple
    head: tuple[Triple, ...]


@dataclass
class Trajectory:
    """Iterated triples for a contiguous range of n, plus the overflow marker.

    A full record starts at n = -m. A tail record starts wherever its
    retention window begins and carries its RunStats in `summary`.
    """

    params: Params
    init: InitBlock
    n: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    cap: float
    overflow_at: int | None = None
    summary: RunStats | None = None

    def __len__(self) -> int:
        return len(self.n)

    @property
    def first_n(self) -> int:
        return int(self.n[0])

    @property
    def last_n(self) -> int:
        return int(self.n[-1])

    @property
    def complete(self) -> bool:
        """Whether every sample from n = -m on is retained."""
        return len(self.n) > 0 and self.first_n == -self.params.m

    @property
    def overflowed(self) -> bool:
        return self.overflow_at is not None

    def index_of(self, n: int) -> int:
        """Array position of signed index n."""
        return n - self.first_n

    def component(self, name: str) -> np.ndarray:
        if name not in COMPONENTS:
            raise InvalidInputError(f"unknown component {name!r}")
        return getattr(self, name)

    def post_initial(self, name: str) -> np.ndarray:
        """Retained values of a component for n >= 1."""
        return self.component(name)[max(0, self.index_of(1)) :]

    @property
    def stats(self) -> RunStats:
        if self.summary is None:
            self.summary = self._stats_from_arrays()
        return self.summary

    def _stats_from_arrays(self) -> RunStats:
        if not self.complete:
            raise InvalidInputError("a partial record needs its run statistics")
        columns = [self.post_initial(name) for name in COMPONENTS]
        count = len(columns[0])
        if count == 0:
            return RunStats(0, (math.inf,) * 3, (-math.inf,) * 3, ())
        lowest = tuple(float(c.min()) for c in columns)
        highest = tuple(float(c.max()) for c in columns)
        head = tuple(
            (float(a), float(b), float(c))
            for a, b, c in zip(*(c[: self.params.m + 1] for c in columns), strict=True)
        )
        return RunStats(count, lowest, highest, head)  # type: ignore[arg-type]

    def final(self) -> Triple:
        return (float(self.x[-1]), float(self.y[-1]), float(self.z[-1]))

    def samples(self) -> Iterator[tuple[int, float, float, float]]:
        for n, x, y, z in zip(self.n, self.x, self.y, self.z, strict=True):
            yield int(n), float(x), float(y), float(z)

    def to_dict(self) -> dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "cap": self.cap,
            "overflow_at": self.overflow_at,
            "samples": [list(sample) for sample in self.samples()],
        }


def iterate(
    params: Params,
    init: InitBlock,
    steps: int,
    cap: float | None = None,
    record: Record = "full",
    tail: int | None = None,
    observers: Sequence[Observer] = (),
) -> Trajectory:
    """Run the system for n = 1..steps, halting when a component exceeds cap.

    record="tail" keeps only the last `tail` samples (default
    tail_length(m)) and tracks extremes on the fly; a run that fits in the
    tail comes back whole. Every observer is called as observer(n, triple)
    for each n >= 1, in either mode.
    """
    if steps < 1:
        raise InvalidInputError(f"steps must be >= 1, got {steps}")
    if cap is None:
        cap = get_settings().cap
    if not cap > params.A:
        raise InvalidInputError(f"cap must exceed A, got cap={cap!r}, A={params.A!r}")
    if record not in ("full", "tail"):
        raise InvalidInputError(f"record must be 'full' or 'tail', got {record!r}")

    m = params.m
    if tail is None:
        tail = tail_length(m)
    elif tail < m + 1:
        raise InvalidInputError(f"tail must keep at least {m + 1} samples, got {tail}")

    window: deque[Triple] = deque(init.triples(), maxlen=m + 1)
    overflow_at: int | None = None
    last = 0

    logger.debug(f"Iterating A={params.A}, m={m} for {steps} steps (cap {cap:g}, {record})")

    if record == "full":
        size = steps + m + 1
        capacity = min(size, max(FULL_CHUNK, 2 * (m + 1)))
        xs, ys, zs = np.empty(capacity), np.empty(capacity), np.empty(capacity)
        xs[: m + 1], ys[: m + 1], zs[: m + 1] = init.x, init.y, init.z
        for n in range(1, steps + 1):
            triple = step(params, window)
            window.append(triple)
            i = n + m
            if i == capacity:
                capacity = min(2 * capacity, size)
                xs, ys, zs = (np.resize(a, capacity) for a in (xs, ys, zs))
            xs[i], ys[i], zs[i] = triple
            for observe in observers:
                observe(n, triple)
            last = n
            if max(triple) > cap:
                overflow_at = n
                break

        used = last + m + 1
        return Trajectory(
            params=params,
            init=init,
            n=np.arange(-m, last + 1, dtype=np.int64),
            x=xs[:used].copy() if used < capacity else xs,
            y=ys[:used].copy() if used < capacity else ys,
            z=zs[:used].copy() if used < capacity else zs,
            cap=float(cap),
            overflow_at=overflow_at,
        )

    kept: deque[Triple] = deque(init.triples(), maxlen=tail)
    lowest = [math.inf] * 3
    highest = [-math.inf] * 3
    head: list[Triple] = []
    for n in range(1, steps + 1):
        triple = step(params, window)
        window.append(triple)
        kept.append(triple)
        if n <= m + 1:
            head.append(triple)
        for k, value in enumerate(triple):
            if value < lowest[k]:
                lowest[k] = value
            if value > highest[k]:
                highest[k] = value
        for observe in observers:
            observe(n, triple)
        last = n
        if max(triple) > cap:
            overflow_at = n
            break

    values = np.asarray(kept, dtype=np.float64)
    return Trajectory(
        params=params,
        init=init,
        n=np.arange(last - len(kept) + 1, last + 1, dtype=np.int64),
        x=np.ascontiguousarray(values[:, 0]),
        y=np.ascontiguousarray(values[:, 1]),
        z=np.ascontiguousarray(values[:, 2]),
        cap=float(cap),
        overflow_at=overflow_at,
        summary=RunStats(last, tuple(lowest), tuple(highest), tuple(head)),  # type: ignore[arg-type]
    )


def subsequence(traj: Trajectory, parity: Parity, component: Component) -> Subsequence:
    """Retained (n, value) pairs with n >= 1 of the requested parity, in order."""
    if parity not in ("even", "odd"):
        raise InvalidInputError(f"parity must be 'even' or 'odd', got {parity!r}")
    if len(traj) == 0:
        raise InvalidInputError("trajectory has no samples")
    remainder = 0 if parity == "even" else 1
    mask = (traj.n >= 1) & (traj.n % 2 == remainder)
    return Subsequence(traj.n[mask], traj.component(component)[mask])


def xy_symmetric(traj: Trajectory) -> bool:
    """True when the x and y series coincide exactly."""
    return bool(np.array_equal(traj.x, traj.y))
