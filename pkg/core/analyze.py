"""
Trajectory classifiers.

Persistence, boundedness envelopes, semicycle segmentation, parity
subsequence limits for 0 < A < 1, limsup/liminf estimation, an empirical
Lyapunov probe and the aggregate regime label.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Literal, NamedTuple

import numpy as np

from .dynamics import (
    COMPONENTS,
    InitBlock,
    Parity,
    Params,
    Trajectory,
    Triple,
    iterate,
    limit_window,
    subsequence,
)
from .equilibria import Equilibrium
from .exceptions import (
    AOutOfRange,
    DegenerateEnvelope,
    InvalidInputError,
    NoDivergenceDetected,
    WindowTooLarge,
    WrongBlockLength,
)

logger = logging.getLogger(__name__)

Label = Literal[
    "Converged", "ParityUnbounded", "BoundedOscillatory", "NumericOverflow", "Undetermined"
]
EnvelopeVariant = Literal["literal", "corrected", "invariant"]

CONVERGED_TOL = 1e-6
MONOTONE_RUN = 20
ENVELOPE_RTOL = 1e-12
SEMICYCLE_RTOL = 1e-9
PARITY_SETTLED_TOL = 1e-9
PROBE_HORIZON = 2_000


# persistence and boundedness


def _require_post_initial(traj: Trajectory, count: int = 1) -> None:
    available = traj.stats.count
    if available < count:
        raise InvalidInputError(
            f"need at least {count} samples with n >= 1, trajectory has {available}"
        )


def persistence_check(traj: Trajectory, A: float) -> tuple[bool, float]:
    """Whether every sample with n >= 1 exceeds A, and the smallest such value."""
    _require_post_initial(traj)
    lowest = min(traj.stats.lowest)
    return lowest > A, lowest


@dataclass
class Envelope:
    """Interval [M, upper] with the fraction of post-initial samples inside it."""

    M: float
    upper: float
    alpha: float
    beta: float
    containment: float
    variant: EnvelopeVariant = "literal"

    def to_dict(self) -> dict[str, Any]:
        return {
            "variant": self.variant,
            "M": self.M,
            "upper": self.upper,
            "alpha": self.alpha,
            "beta": self.beta,
            "containment": self.containment,
        }


def envelope_bounds(
    head: Sequence[Triple], A: float, variant: EnvelopeVariant = "literal"
) -> tuple[float, float, float, float]:
    """(M, upper, alpha, beta) from the first m+1 post-initial triples.

    literal:    M = min{alpha, beta/(beta-1)}, upper = M/(M-A) (M/(M-1) at A = 1)
    corrected:  M = min{alpha, beta/(beta-A)}, upper = M/(M-A)
    invariant:  [A, max{beta, A^2/(A-1)}] for A > 1; the literal box at A = 1

    Raises DegenerateEnvelope when the chosen M does not exceed A.
    """
    if not A >= 1:
        raise AOutOfRange(A, expected="[1, inf)")
    if not head:
        raise InvalidInputError("envelope needs at least one post-initial triple")
    alpha = min(min(triple) for triple in head)
    beta = max(max(triple) for triple in head)

    if variant == "invariant" and A > 1:
        return A, max(beta, A * A / (A - 1.0)), alpha, beta

    if variant == "corrected":
        M = min(alpha, beta / (beta - A)) if beta > A else alpha
    elif variant in ("literal", "invariant"):
        M = min(alpha, beta / (beta - 1.0)) if beta > 1 else alpha
    else:
        raise InvalidInputError(f"unknown envelope variant {variant!r}")

    if not M > A:
        raise DegenerateEnvelope(M, A)
    upper = M / (M - 1.0) if A == 1 else M / (M - A)
    return M, upper, alpha, beta


def _widened(lower: float, upper: float) -> tuple[float, float]:
    return lower * (1.0 - ENVELOPE_RTOL), upper * (1.0 + ENVELOPE_RTOL)


def _containment(traj: Trajectory, lower: float, upper: float) -> float:
    lo, hi = _widened(lower, upper)
    inside = np.ones(len(traj.post_initial("x")), dtype=bool)
    for name in COMPONENTS:
        values = traj.post_initial(name)
        inside &= (values >= lo) & (values <= hi)
    return float(inside.mean())


def boundedness_envelope(
    traj: Trajectory, A: float, variant: EnvelopeVariant = "literal"
) -> Envelope:
    """Envelope built from alpha/beta over the first m+1 post-initial triples.

    Containment counts every sample with n >= 1, so it needs a complete
    record; for tail records run an EnvelopeTracker alongside iterate.
    """
    if not A >= 1:
        raise AOutOfRange(A, expected="[1, inf)")
    m = traj.params.m
    _require_post_initial(traj, m + 1)
    M, upper, alpha, beta = envelope_bounds(traj.stats.head, A, variant)
    if not traj.complete:
        raise InvalidInputError(
            "envelope containment needs the full record; use an EnvelopeTracker"
        )
    return Envelope(M, upper, alpha, beta, _containment(traj, M, upper), variant)


class EnvelopeTracker:
    """Streaming envelope containment, usable as an iterate observer.

    Bounds are fixed once the first m+1 post-initial triples are in; those
    triples are counted as well.
    """

    def __init__(self, A: float, m: int, variant: EnvelopeVariant = "invariant"):
        if not A >= 1:
            raise AOutOfRange(A, expected="[1, inf)")
        self.A = A
        self.m = m
        self.variant: EnvelopeVariant = variant
        self.count = 0
        self.inside = 0
        self._head: list[Triple] = []
        self._bounds: tuple[float, float, float, float] | None = None
        self._box: tuple[float, float] | None = None
        self._error: DegenerateEnvelope | None = None

    def _contains(self, triple: Triple) -> bool:
        lo, hi = self._box  # type: ignore[misc]
        return lo <= min(triple) and max(triple) <= hi

    def __call__(self, n: int, triple: Triple) -> None:
        if n < 1 or self._error is not None:
            return
        self.count += 1
        if self._box is not None:
            self.inside += self._contains(triple)
            return
        self._head.append(triple)
        if len(self._head) < self.m + 1:
            return
        try:
            self._bounds = envelope_bounds(self._head, self.A, self.variant)
        except DegenerateEnvelope as exc:
            self._error = exc
            return
        self._box = _widened(self._bounds[0], self._bounds[1])
        self.inside = sum(self._contains(t) for t in self._head)

    def envelope(self) -> Envelope:
        """The envelope over everything observed so far."""
        if self._error is not None:
            raise self._error
        if self._bounds is None:
            raise InvalidInputError(
                f"need at least {self.m + 1} samples with n >= 1, saw {self.count}"
            )
        M, upper, alpha, beta = self._bounds
        return Envelope(M, upper, alpha, beta, self.inside / self.count, self.variant)


@dataclass
class EnvelopeReport:
    """All three envelope variants; a degenerate one is None with its reason."""

    literal: Envelope | None
    corrected: Envelope | None
    invariant: Envelope | None
    notes: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            name: (env.to_dict() if env is not None else None)
            for name, env in (
                ("literal", self.literal),
                ("corrected", self.corrected),
                ("invariant", self.invariant),
            )
        } | {"notes": dict(self.notes)}


def envelope_report(traj: Trajectory, A: float) -> EnvelopeReport:
    envelopes: dict[str, Envelope | None] = {}
    notes: dict[str, str] = {}
    for variant in ("literal", "corrected", "invariant"):
        try:
            envelopes[variant] = boundedness_envelope(traj, A, variant)
        except DegenerateEnvelope as exc:
            envelopes[variant] = None
            notes[variant] = str(exc)
    return EnvelopeReport(notes=notes, **envelopes)


# semicycles


class Run(NamedTuple):
    sign: Literal["+", "-"]
    start: int
    length: int


def semicycles(series: Sequence[float] | np.ndarray, reference: float) -> list[Run]:
    """Maximal runs of terms >= reference (+) or < reference (-).

    `start` is the position in `series`.
    """
    values = np.asarray(series, dtype=np.float64)
    if values.size == 0:
        raise InvalidInputError("semicycles need a nonempty series")
    positive = values >= reference
    # positions where the sign flips
    breaks = np.flatnonzero(positive[1:] != positive[:-1]) + 1
    starts = np.concatenate(([0], breaks))
    ends = np.concatenate((breaks, [values.size]))
    return [
        Run("+" if positive[s] else "-", int(s), int(e - s))
        for s, e in zip(starts, ends, strict=True)
    ]


@dataclass
class SemicycleReport:
    """Per-component semicycle runs relative to a reference equilibrium.

    `ranges` holds the analysed (first n, last n) per component; runs
    start at signed n.
    """

    runs: dict[str, list[Run]]
    max_len: int
    reference: Equilibrium
    ranges: dict[str, tuple[int, int] | None]
    transient: int = 0

    def max_len_of(self, sign: Literal["+", "-"]) -> int:
        return max(
            (run.length for runs in self.runs.values() for run in runs if run.sign == sign),
            default=0,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "reference": self.reference.to_dict(),
            "transient": self.transient,
            "max_len": self.max_len,
            "max_positive": self.max_len_of("+"),
            "max_negative": self.max_len_of("-"),
            "ranges": {k: (list(v) if v else None) for k, v in self.ranges.items()},
            "run_counts": {k: len(v) for k, v in self.runs.items()},
        }


def semicycle_report(
    traj: Trajectory, reference: Equilibrium, transient: int = 0
) -> SemicycleReport:
    """Segment each component for n > transient.

    The analysed range of a component ends at its last term whose distance
    to the reference exceeds the numeric resolution; beyond that the sign
    is rounding noise.
    """
    if transient < 0:
        raise InvalidInputError(f"transient must be >= 0, got {transient}")
    m = traj.params.m
    first = max(0, traj.index_of(1 + transient))
    runs: dict[str, list[Run]] = {}
    ranges: dict[str, tuple[int, int] | None] = {}

    for name, ref in zip(COMPONENTS, reference.as_tuple(), strict=True):
        values = traj.component(name)[first:]
        resolution = SEMICYCLE_RTOL * max(1.0, abs(ref))
        significant = np.flatnonzero(np.abs(values - ref) > resolution)
        if significant.size == 0:
            runs[name], ranges[name] = [], None
            continue
        kept = values[: significant[-1] + 1]
        offset = int(traj.n[first])
        runs[name] = [
            run._replace(start=run.start + offset) for run in semicycles(kept, ref)
        ]
        ranges[name] = (offset, offset + kept.size - 1)

    longest = max((run.length for rs in runs.values() for run in rs), default=0)
    logger.debug(f"Semicycles for m={m}: longest run {longest}")
    return SemicycleReport(runs, longest, reference, ranges, transient)


class _RunCounter:
    __slots__ = ("ref", "resolution", "positive", "run", "pending", "longest")

    def __init__(self, ref: float):
        self.ref = ref
        self.resolution = SEMICYCLE_RTOL * max(1.0, abs(ref))
        self.positive: bool | None = None
        self.run = 0
        self.pending = 0
        self.longest = 0

    def push(self, value: float) -> None:
        positive = value >= self.ref
        if positive == self.positive:
            self.run += 1
        else:
            self.pending = max(self.pending, self.run)
            self.positive, self.run = positive, 1
        if abs(value - self.ref) > self.resolution:
            self.longest = max(self.longest, self.pending, self.run)
            self.pending = 0


class SemicycleTracker:
    """Longest semicycle for n > transient, usable as an iterate observer.

    Runs after the last significant term are dropped, as in semicycle_report.
    """

    def __init__(self, reference: Equilibrium, transient: int = 0):
        if transient < 0:
            raise InvalidInputError(f"transient must be >= 0, got {transient}")
        self.reference = reference
        self.transient = transient
        self._counters = [_RunCounter(ref) for ref in reference.as_tuple()]

    def __call__(self, n: int, triple: Triple) -> None:
        if n <= self.transient:
            return
        for counter, value in zip(self._counters, triple, strict=True):
            counter.push(value)

    @property
    def max_len(self) -> int:
        return max(counter.longest for counter in self._counters)


# 0 < A < 1: parity behaviour


def _parity_of(n: int) -> Parity:
    return "even" if n % 2 == 0 else "odd"


def theorem2_hypothesis_check(
    init: InitBlock, A: float, m: int, variant: Literal["i", "ii"]
) -> bool:
    """Initial-block hypothesis for one parity to diverge and the other to tend to A.

    Requires odd m. Variant i: odd-indexed initial values in (0, 1) and
    even-indexed values above 1/(1-A); variant ii swaps the parities.
    """
    if not 0 < A < 1:
        raise AOutOfRange(A)
    if variant not in ("i", "ii"):
        raise InvalidInputError(f"variant must be 'i' or 'ii', got {variant!r}")
    for name in COMPONENTS:
        if len(init.component(name)) != m + 1:
            raise WrongBlockLength(name, m + 1, len(init.component(name)))
    if m % 2 == 0:
        return False

    threshold = 1.0 / (1.0 - A)
    small: Parity = "odd" if variant == "i" else "even"
    for name in COMPONENTS:
        for n in range(-m, 1):
            value = init.value(name, n)
            if _parity_of(n) == small:
                if not 0 < value < 1:
                    return False
            elif not value > threshold:
                return False
    return True


def growth_law_violations(traj: Trajectory, A: float, parity: Parity) -> list[int]:
    """Indices n >= m+2 of the given parity where v_n > 2A + v_{n-(2m+2)} fails.

    Only indices whose predecessor is retained are checked.
    """
    m = traj.params.m
    lag = 2 * m + 2
    failures = []
    for n in subsequence(traj, parity, "x").n:
        n = int(n)
        if n < m + 2 or n - lag < traj.first_n:
            continue
        now, past = traj.index_of(n), traj.index_of(n - lag)
        if any(
            not traj.component(name)[now] > 2.0 * A + traj.component(name)[past]
            for name in COMPONENTS
        ):
            failures.append(n)
    if failures:
        logger.warning(f"Growth law failed at {len(failures)} indices, first n={failures[0]}")
    return failures


def _growing(traj: Trajectory, parity: Parity, name: str, run: int = MONOTONE_RUN) -> bool:
    """Last `run` samples of the parity each exceed their same-parity delay predecessor.

    The lag is m+1 for odd m and 2(m+1) for even m, so the predecessor has
    the same parity and lies on the same delay chain.
    """
    m = traj.params.m
    lag = m + 1 if m % 2 else 2 * (m + 1)
    indices = [
        int(n) for n in subsequence(traj, parity, name).n if n - lag >= traj.first_n
    ]
    if len(indices) < run:
        return False
    values = traj.component(name)
    return all(
        values[traj.index_of(n)] > values[traj.index_of(n - lag)] for n in indices[-run:]
    )


@dataclass
class ParityLimits:
    """Parity split of a diverging run.

    `finite_spread` is limsup - liminf of each finite-side component over
    its last 10(m+1) samples (fewer on short runs); `settled` says every
    spread is within PARITY_SETTLED_TOL.
    """

    diverging_parity: Parity
    finite_limit_estimate: float
    finite_limits: dict[str, float]
    growth_violations: list[int]
    overflow_at: int
    finite_spread: dict[str, float] = field(default_factory=dict)
    settled: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "diverging_parity": self.diverging_parity,
            "finite_limit_estimate": self.finite_limit_estimate,
            "finite_limits": dict(self.finite_limits),
            "finite_spread": dict(self.finite_spread),
            "settled": self.settled,
            "growth_violations": list(self.growth_violations),
            "overflow_at": self.overflow_at,
        }


def _tail_spread(values: np.ndarray, window: int) -> float:
    window = min(window, values.size // 2)
    if window < 1:
        return math.inf
    hi, lo = limsup_liminf(values, window)
    return hi - lo


def parity_limits(traj: Trajectory, A: float) -> ParityLimits:
    """Which parity subsequence blows up, and where the other one settles.

    Divergence means a cap breach plus growth along the delay chains: each of
    the last MONOTONE_RUN samples of that parity exceeds its predecessor, in
    every component. The finite limit is read off the last sample of the
    other parity, and its spread over the final limit window says whether
    that side has actually settled.
    """
    if not 0 < A < 1:
        raise AOutOfRange(A)
    if traj.overflow_at is None:
        raise NoDivergenceDetected("no cap breach within the horizon")

    diverging = _parity_of(traj.overflow_at)
    finite: Parity = "odd" if diverging == "even" else "even"
    for name in COMPONENTS:
        if not _growing(traj, diverging, name):
            raise NoDivergenceDetected(
                f"{diverging} {name} subsequence is not increasing before the cap breach"
            )

    window = limit_window(traj.params.m)
    limits, spread = {}, {}
    for name in COMPONENTS:
        tail = subsequence(traj, finite, name).values
        if tail.size == 0:
            raise NoDivergenceDetected(f"no {finite} samples before the cap breach")
        limits[name] = float(tail[-1])
        spread[name] = _tail_spread(tail, window)
    settled = all(gap <= PARITY_SETTLED_TOL for gap in spread.values())

    violations = growth_law_violations(traj, A, diverging)
    logger.info(
        f"Parity split: {diverging} diverges at n={traj.overflow_at}, "
        f"{finite} x tends to {limits['x']!r} (spread {spread['x']:.3g})"
    )
    if not settled:
        logger.warning(f"The {finite} side has not settled before the cap breach")
    return ParityLimits(
        diverging, limits["x"], limits, violations, traj.overflow_at, spread, settled
    )


# limits and local stability


def limsup_liminf(series: Sequence[float] | np.ndarray, window: int) -> tuple[float, float]:
    """(max, min) over the final `window` samples."""
    values = np.asarray(series, dtype=np.float64)
    if window < 1 or values.size < 2 * window:
        raise WindowTooLarge(window, int(values.size))
    tail = values[-window:]
    return float(tail.max()), float(tail.min())


def probe_local_stability(
    eq: Equilibrium,
    params: Params,
    delta: float,
    eps: float,
    trials: int,
    seed: int | None = 0,
    horizon: int = PROBE_HORIZON,
) -> float:
    """Fraction of perturbed starts whose orbit stays within eps of eq.

    Each component list is perturbed by a vector of l1 norm below delta.
    """
    if delta < 0 or not eps > 0:
        raise InvalidInputError(f"need delta >= 0 and eps > 0, got {delta!r}, {eps!r}")
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    if delta >= min(eq.as_tuple()):
        raise InvalidInputError(f"delta {delta!r} would allow non-positive initial values")

    m = params.m
    rng = np.random.default_rng(seed)
    target = np.asarray(eq.as_tuple())
    stable = 0
    for _ in range(trials):
        lists = []
        for centre in target:
            shift = rng.uniform(-1.0, 1.0, m + 1) * (delta / (m + 1))
            lists.append(tuple(float(v) for v in centre + shift))
        init = InitBlock(*lists)
        traj = iterate(params, init, horizon)
        gap = max(
            float(np.max(np.abs(traj.component(name) - ref)))
            for name, ref in zip(COMPONENTS, target, strict=True)
        )
        if not traj.overflowed and gap < eps:
            stable += 1

    fraction = stable / trials
    logger.debug(f"Lyapunov probe at {eq.as_tuple()}: {stable}/{trials} stayed within {eps}")
    return fraction


# regime labels


@dataclass
class RegimeReport:
    """Long-run label of one trajectory with its supporting statistics."""

    label: Label
    point: tuple[float, float, float] | None = None
    diverging_parity: Parity | None = None
    other_limit: float | None = None
    evidence: dict[str, Any] = field(default_factory=dict)
    reason: str | None = None

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"label": self.label}
        if self.point is not None:
            payload["point"] = list(self.point)
        if self.diverging_parity is not None:
            payload["diverging_parity"] = self.diverging_parity
            payload["other_limit"] = self.other_limit
        if self.reason is not None:
            payload["reason"] = self.reason
        payload["evidence"] = self.evidence
        return payload


def _parity_settled(traj: Trajectory, window: int) -> dict[str, tuple[float, float]] | None:
    """Per-parity x limits when both parity subsequences have settled."""
    limits = {}
    for parity in ("even", "odd"):
        values = subsequence(traj, parity, "x").values
        if values.size < 2 * window:
            return None
        hi, lo = limsup_liminf(values, window)
        if hi - lo >= CONVERGED_TOL:
            return None
        limits[parity] = (hi, lo)
    return limits


def classify_regime(
    traj: Trajectory,
    params: Params | None = None,
    envelope: Envelope | EnvelopeTracker | None = None,
) -> RegimeReport:
    """Label a completed trajectory, full or tail record.

    Converged: limsup - liminf < 1e-6 per component over the last 10(m+1)
    samples. ParityUnbounded: cap breach with one parity strictly growing
    (0 < A < 1). BoundedOscillatory: no breach, no collapse of the gap and,
    for A >= 1, every sample inside the invariant envelope.
    A tail record needs `envelope`: an EnvelopeTracker that watched the
    whole run, or the Envelope it produced.
    """
    params = params or traj.params
    A, m = params.A, params.m
    evidence: dict[str, Any] = {"length": len(traj), "overflow_at": traj.overflow_at}

    if traj.overflowed:
        if 0 < A < 1:
            try:
                limits = parity_limits(traj, A)
            except NoDivergenceDetected as exc:
                return RegimeReport("NumericOverflow", evidence=evidence, reason=str(exc))
            evidence["parity"] = limits.to_dict()
            return RegimeReport(
                "ParityUnbounded",
                diverging_parity=limits.diverging_parity,
                other_limit=limits.finite_limit_estimate,
                evidence=evidence,
            )
        return RegimeReport(
            "NumericOverflow", evidence=evidence, reason=f"cap breached at n={traj.overflow_at}"
        )

    window = limit_window(m)
    evidence["window"] = window
    try:
        bounds = {
            name: limsup_liminf(traj.post_initial(name), window) for name in COMPONENTS
        }
    except WindowTooLarge as exc:
        return RegimeReport("Undetermined", evidence=evidence, reason=str(exc))
    evidence["limsup_liminf"] = {name: list(pair) for name, pair in bounds.items()}

    if all(hi - lo < CONVERGED_TOL for hi, lo in bounds.values()):
        x, y, z = (float(traj.post_initial(name)[-1]) for name in COMPONENTS)
        evidence["period"] = 1
        return RegimeReport("Converged", point=(x, y, z), evidence=evidence)

    settled = _parity_settled(traj, window)
    evidence["period"] = 2 if settled is not None else None
    if settled is not None:
        evidence["parity_x"] = {k: list(v) for k, v in settled.items()}

    if A >= 1:
        if isinstance(envelope, EnvelopeTracker):
            envelope = envelope.envelope()
        env = envelope or boundedness_envelope(traj, A, "invariant")
        evidence["envelope"] = env.to_dict()
        if env.containment < 1.0:
            return RegimeReport(
                "Undetermined", evidence=evidence, reason="samples outside the invariant envelope"
            )
        return RegimeReport("BoundedOscillatory", evidence=evidence)

    for parity in ("even", "odd"):
        if _growing(traj, parity, "x"):
            return RegimeReport(
                "Undetermined",
                evidence=evidence,
                reason=f"{parity} subsequence still increasing at the horizon",
            )
    return RegimeReport("BoundedOscillatory", evidence=evidence)


def convergence_error(report: RegimeReport, eq: Equilibrium | None) -> float | None:
    """Largest componentwise distance between a converged point and eq."""
    if report.point is None or eq is None:
        return None
    return max(abs(a - b) for a, b in zip(report.point, eq.as_tuple(), strict=True))
