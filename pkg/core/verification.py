"""
Desk-scale checks behind ``rdelab verify-theorem``.

Each suite draws its inputs from a seeded generator, runs the library and
returns a TheoremCheck with the evidence it based its verdict on. `scale`
shrinks trial counts (never below one per cell) for quick runs.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from .analyze import (
    SemicycleReport,
    boundedness_envelope,
    envelope_report,
    parity_limits,
    persistence_check,
    probe_local_stability,
    semicycle_report,
    theorem2_hypothesis_check,
)
from .dynamics import COMPONENTS, InitBlock, Params, iterate, validate_params
from .equilibria import (
    estimate_mu,
    family_equilibrium,
    hyperboloid_defect,
    isolated_equilibrium,
    residual,
)
from .exceptions import InvalidInputError, NoDivergenceDetected
from .linearize import (
    build_jacobian,
    epsilon_bound,
    family_tangent,
    finite_difference_jacobian,
    norm_certificate,
    printed_family_jacobian,
    scaling_matrix,
    spectral_radius,
)
from .settings import get_settings
from .sweep import SweepGrid, generate_initials, run_sweep

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20240


@dataclass
class TheoremCheck:
    """Outcome of one verification suite."""

    id: str
    passed: bool
    summary: str
    evidence: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "status": self.status,
            "passed": self.passed,
            "summary": self.summary,
            "evidence": self.evidence,
            "warnings": list(self.warnings),
        }


def _count(n: int, scale: float) -> int:
    return max(1, round(n * scale))


def _rng(seed: int, salt: int) -> np.random.Generator:
    return np.random.default_rng([seed, salt])


# T1


def check_equilibria(seed: int, scale: float) -> TheoremCheck:
    rng = _rng(seed, 1)
    cases = _count(1000, scale)
    worst_isolated = 0.0
    worst_family = 0.0
    for _ in range(cases):
        A = float(rng.uniform(0.0, 10.0))
        while A == 0.0 or A == 1.0:
            A = float(rng.uniform(0.0, 10.0))
        eq = isolated_equilibrium(A)
        scale_ref = max(1.0, *eq.as_tuple())
        worst_isolated = max(worst_isolated, max(abs(r) for r in residual(eq, A)) / scale_ref)

        mu = 50.0 - float(rng.uniform(0.0, 49.0))
        fam = family_equilibrium(mu)
        scale_ref = max(1.0, *fam.as_tuple())
        defects = [abs(r) for r in residual(fam, 1.0)] + [abs(hyperboloid_defect(fam))]
        worst_family = max(worst_family, max(defects) / scale_ref)

    passed = worst_isolated <= 1e-14 and worst_family <= 1e-14
    return TheoremCheck(
        "T1",
        passed,
        f"{cases} isolated and {cases} family equilibria checked",
        {"cases": cases, "max_rel_isolated": worst_isolated, "max_rel_family": worst_family},
    )


# T2


def _theorem2_block(
    rng: np.random.Generator, A: float, m: int, variant: Literal["i", "ii"]
) -> InitBlock:
    threshold = 1.0 / (1.0 - A)
    small_parity = 1 if variant == "i" else 0
    lists = []
    for _ in COMPONENTS:
        values = []
        for n in range(-m, 1):
            if n % 2 == small_parity:
                values.append(float(rng.uniform(0.05, 0.95)))
            else:
                values.append(float(rng.uniform(threshold + 0.5, threshold + 5.0)))
        lists.append(tuple(values))
    return InitBlock(*lists)


def check_parity_split(variant: Literal["i", "ii"], seed: int, scale: float) -> TheoremCheck:
    theorem_id = "T2i" if variant == "i" else "T2ii"
    expected = "even" if variant == "i" else "odd"
    rng = _rng(seed, 2 if variant == "i" else 3)
    settings = get_settings()
    trials = _count(10, scale)
    failures: list[str] = []
    worst_limit_gap = 0.0
    worst_spread = 0.0
    latest_overflow = 0
    runs = 0

    for A in (0.25, 0.5, 0.75):
        for m in (1, 3, 5):
            for trial in range(trials):
                init = _theorem2_block(rng, A, m, variant)
                tag = f"A={A}, m={m}, trial={trial}"
                if not theorem2_hypothesis_check(init, A, m, variant):
                    failures.append(f"{tag}: generated block misses the hypothesis")
                    continue
                params, init = validate_params(A, m, init)
                traj = iterate(params, init, settings.divergence_horizon, cap=1e100)
                runs += 1
                try:
                    limits = parity_limits(traj, A)
                except NoDivergenceDetected as e:
                    failures.append(f"{tag}: {e}")
                    continue
                latest_overflow = max(latest_overflow, limits.overflow_at)
                if limits.diverging_parity != expected:
                    failures.append(f"{tag}: {limits.diverging_parity} diverged")
                if limits.growth_violations:
                    failures.append(f"{tag}: growth law fails at n={limits.growth_violations[0]}")
                gap = max(abs(v - A) for v in limits.finite_limits.values())
                worst_limit_gap = max(worst_limit_gap, gap)
                if gap > 1e-6:
                    failures.append(f"{tag}: finite parity ends {gap:.3e} from A")
                worst_spread = max(worst_spread, max(limits.finite_spread.values()))
                if not limits.settled:
                    failures.append(f"{tag}: finite parity still moving at the cap breach")

    return TheoremCheck(
        theorem_id,
        not failures,
        f"{runs} runs, {expected} parity diverges, the other tends to A",
        {
            "runs": runs,
            "failures": failures[:20],
            "max_finite_gap": worst_limit_gap,
            "max_finite_spread": worst_spread,
            "latest_overflow_at": latest_overflow,
        },
    )


# T3


def check_unity_boundedness(seed: int, scale: float) -> TheoremCheck:
    settings = get_settings()
    trials = _count(100, scale)
    failures: list[str] = []
    lowest = math.inf
    runs = 0
    for cell, m in enumerate(range(1, 7)):
        for trial in range(trials):
            init = generate_initials(seed, cell, trial, m, (0.1, 10.0))
            params, init = validate_params(1.0, m, init)
            traj = iterate(params, init, settings.classify_horizon)
            runs += 1
            tag = f"m={m}, trial={trial}"
            if traj.overflowed:
                failures.append(f"{tag}: overflow at n={traj.overflow_at}")
                continue
            holds, low = persistence_check(traj, 1.0)
            lowest = min(lowest, low)
            if not holds:
                failures.append(f"{tag}: sample at or below 1 ({low!r})")
            env = boundedness_envelope(traj, 1.0, "literal")
            if env.containment < 1.0:
                failures.append(f"{tag}: envelope containment {env.containment}")

    return TheoremCheck(
        "T3",
        not failures,
        f"{runs} runs at A = 1 stay inside [M, M/(M-1)] and above 1",
        {"runs": runs, "failures": failures[:20], "min_sample": lowest},
    )


# T4


def _tiles(report: SemicycleReport) -> list[str]:
    problems = []
    for name, runs in report.runs.items():
        span = report.ranges[name]
        if not runs or span is None:
            continue
        start, end = span
        if sum(run.length for run in runs) != end - start + 1:
            problems.append(f"{name}: run lengths do not cover {start}..{end}")
        cursor = start
        for prev, run in zip([None, *runs[:-1]], runs, strict=True):
            if run.start != cursor:
                problems.append(f"{name}: gap before n={run.start}")
                break
            if prev is not None and prev.sign == run.sign:
                problems.append(f"{name}: consecutive {run.sign} runs at n={run.start}")
                break
            cursor += run.length
    return problems


def check_semicycles(seed: int, scale: float) -> TheoremCheck:
    settings = get_settings()
    trials = _count(50, scale)
    failures: list[str] = []
    warnings: list[str] = []
    longest: dict[str, int] = {}
    for cell, m in enumerate((1, 2, 3)):
        worst = 0
        for trial in range(trials):
            init = generate_initials(seed, cell, trial, m, (0.1, 10.0))
            params, init = validate_params(1.0, m, init)
            traj = iterate(params, init, settings.classify_horizon)
            tag = f"m={m}, trial={trial}"
            if traj.overflowed:
                failures.append(f"{tag}: overflow")
                continue
            mu_hat, defect = estimate_mu(traj)
            reference = family_equilibrium(mu_hat)
            report = semicycle_report(traj, reference, transient=100)
            failures.extend(f"{tag}: {p}" for p in _tiles(report))
            worst = max(worst, report.max_len)
            if report.max_len > m + 1:
                warnings.append(f"{tag}: semicycle of length {report.max_len} > m+1")
            elif report.max_len > m:
                logger.debug(f"{tag}: semicycle of length {report.max_len} exceeds m")
        longest[str(m)] = worst

    for message in warnings[:5]:
        logger.warning(message)
    return TheoremCheck(
        "T4",
        not failures,
        "semicycles tile the range and alternate; length bound m+1 is soft",
        {"max_len_by_m": longest, "failures": failures[:20]},
        warnings[:20],
    )


# T5


def check_boundedness(seed: int, scale: float) -> TheoremCheck:
    settings = get_settings()
    trials = _count(20, scale)
    failures: list[str] = []
    literal: list[float] = []
    corrected: list[float] = []
    degenerate = 0
    runs = 0
    cells = [(A, m) for A in (1.1, 1.5, 2.0, 5.0) for m in (1, 2, 3)]
    for cell, (A, m) in enumerate(cells):
        for trial in range(trials):
            init = generate_initials(seed, cell, trial, m, (0.1, 10.0))
            params, init = validate_params(A, m, init)
            traj = iterate(params, init, settings.classify_horizon)
            runs += 1
            tag = f"A={A}, m={m}, trial={trial}"
            if traj.overflowed:
                failures.append(f"{tag}: overflow")
                continue
            holds, low = persistence_check(traj, A)
            if not holds:
                failures.append(f"{tag}: sample {low!r} not above A")
            report = envelope_report(traj, A)
            if report.invariant is None or report.invariant.containment < 1.0:
                failures.append(f"{tag}: samples outside [A, max(beta, A^2/(A-1))]")
            for env, bucket in ((report.literal, literal), (report.corrected, corrected)):
                if env is None:
                    degenerate += 1
                else:
                    bucket.append(env.containment)

    return TheoremCheck(
        "T5",
        not failures,
        f"{runs} runs with A > 1 persist and stay in the invariant box",
        {
            "runs": runs,
            "failures": failures[:20],
            "literal_min_containment": min(literal, default=None),
            "corrected_min_containment": min(corrected, default=None),
            "degenerate_envelopes": degenerate,
        },
    )


# T6


def check_family_stability(seed: int, scale: float) -> TheoremCheck:
    failures: list[str] = []
    points: list[dict[str, Any]] = []
    trials = _count(10, scale)
    for mu in (1.5, 2.0, 3.0, 5.0):
        eq = family_equilibrium(mu)
        for m in (1, 2, 3):
            jac = build_jacobian(eq, m)
            dense = jac.to_dense()
            fd = finite_difference_jacobian(1.0, eq, m)
            fd_gap = float(np.max(np.abs(dense - fd))) / max(1.0, float(np.max(np.abs(dense))))
            if fd_gap > 1e-7:
                failures.append(f"mu={mu}, m={m}: analytic and finite-difference differ by {fd_gap:.2e}")

            tangent = family_tangent(mu, m)
            tangent_gap = float(np.max(np.abs(dense @ tangent - tangent)))
            if tangent_gap > 1e-12 * float(np.max(np.abs(tangent))):
                failures.append(f"mu={mu}, m={m}: family tangent is not fixed by B")

            upper = epsilon_bound(eq, 1.0, m)
            scal = scaling_matrix(m, 0.5 * upper)
            rho = spectral_radius(jac)
            entry: dict[str, Any] = {
                "mu": mu,
                "m": m,
                "fd_gap": fd_gap,
                "norm_analytic": norm_certificate(jac, scal),
                "norm_printed": norm_certificate(printed_family_jacobian(eq, m), scal),
                "rho": rho.rho,
                "rho_converged": rho.converged,
            }
            if mu == 2.0:
                fraction = probe_local_stability(
                    eq, Params(1.0, m), delta=1e-3, eps=0.1, trials=trials, seed=seed + m
                )
                entry["probe_fraction"] = fraction
                if fraction < 1.0:
                    failures.append(f"mu={mu}, m={m}: probe kept {fraction:.0%} of orbits")
            points.append(entry)

    return TheoremCheck(
        "T6",
        not failures,
        "A = 1 family points: Jacobian, tangent eigenvector and Lyapunov probe",
        {"points": points, "failures": failures},
        ["eigenvalue 1 along the family: the linearisation alone is inconclusive"],
    )


# T7


def check_norm_certificate(seed: int, scale: float) -> TheoremCheck:
    failures: list[str] = []
    worst_norm = 0.0
    worst_margin = -math.inf
    cases = 0
    for A in (1.1, 1.5, 2.0, 5.0, 10.0):
        eq = isolated_equilibrium(A)
        for m in range(1, 9):
            jac = build_jacobian(eq, m)
            upper = epsilon_bound(eq, A, m)
            rho = spectral_radius(jac)
            for fraction in (0.25, 0.5, 0.75):
                value = norm_certificate(jac, scaling_matrix(m, fraction * upper))
                cases += 1
                worst_norm = max(worst_norm, value)
                worst_margin = max(worst_margin, rho.rho - value)
                tag = f"A={A}, m={m}, eps={fraction}U"
                if not value < 1.0:
                    failures.append(f"{tag}: scaled norm {value!r}")
                if not rho.converged:
                    failures.append(f"{tag}: power iteration did not converge")
                elif rho.rho > value + 1e-9:
                    failures.append(f"{tag}: rho {rho.rho!r} exceeds norm {value!r}")

    return TheoremCheck(
        "T7",
        not failures,
        f"{cases} scaled norms below 1 and above the spectral radius",
        {"cases": cases, "max_norm": worst_norm, "max_rho_minus_norm": worst_margin, "failures": failures},
    )


# T8


def check_global_attraction(seed: int, scale: float) -> TheoremCheck:
    grid = SweepGrid.create(
        A_values=[1.1, 1.5, 2.0, 5.0],
        m_values=[1, 2, 3, 6],
        trials_per_cell=_count(50, scale),
        init_range=(0.1, 10.0),
        seed=seed,
    )
    result = run_sweep(grid)
    failures = [
        f"A={row.A}, m={row.m}, trial={row.trial}: {row.label}"
        + (f" (error {row.convergence_error:.2e})" if row.convergence_error is not None else "")
        for row in result.rows
        if row.label != "Converged"
        or row.convergence_error is None
        or row.convergence_error > 1e-6
    ]
    worst = max((row.convergence_error or 0.0) for row in result.rows)
    return TheoremCheck(
        "T8",
        not failures,
        f"{len(result)} runs with A > 1 converge to (A+1, A+1, A+1)",
        {"runs": len(result), "max_error": worst, "failures": failures[:20]},
    )


SUITES: dict[str, Callable[[int, float], TheoremCheck]] = {
    "T1": check_equilibria,
    "T2i": lambda seed, scale: check_parity_split("i", seed, scale),
    "T2ii": lambda seed, scale: check_parity_split("ii", seed, scale),
    "T3": check_unity_boundedness,
    "T4": check_semicycles,
    "T5": check_boundedness,
    "T6": check_family_stability,
    "T7": check_norm_certificate,
    "T8": check_global_attraction,
}


def available_theorems() -> tuple[str, ...]:
    return tuple(SUITES)


def verify(theorem_id: str, seed: int = DEFAULT_SEED, scale: float = 1.0) -> TheoremCheck:
    """Run the suite registered under theorem_id."""
    if theorem_id not in SUITES:
        raise InvalidInputError(
            f"unknown theorem id {theorem_id!r}; choose from {', '.join(SUITES)}"
        )
    if not scale > 0:
        raise InvalidInputError(f"scale must be positive, got {scale!r}")
    logger.info(f"Verifying {theorem_id} (seed {seed}, scale {scale})")
    check = SUITES[theorem_id](seed, scale)
    logger.info(f"{theorem_id}: {check.status}")
    return check
