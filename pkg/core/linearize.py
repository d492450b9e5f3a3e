"""
Linearisation about an equilibrium and stability certificates.

The stacked state is (x_n..x_{n-m}, y_n..y_{n-m}, z_n..z_{n-m}); indices in
this module are 0-based, so the x-row is 0, the y-row is m+1 and the
z-row is 2m+2. The Jacobian is kept as sparse triplets; the certificate
is the infinity norm of D B D^-1 for the diagonal scaling
d = (1, 1-e, ..., 1-me) repeated per block. An independent spectral
radius estimate comes from power iteration.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
import scipy.sparse as sparse

from .dynamics import Params, step
from .equilibria import Equilibrium
from .exceptions import (
    EpsilonOutOfRange,
    InvalidInputError,
    NoConvergence,
    UnsupportedRegime,
)

logger = logging.getLogger(__name__)

Verdict = Literal["LAS", "Unstable", "Inconclusive"]
Method = Literal["norm", "power", "both"]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000
EPSILON_GRID_POINTS = 16
CLASSIFY_TOL = 1e-6

Entry = tuple[int, int, float]


@dataclass(frozen=True)
class JacobianSpec:
    """Sparse (3m+3)x(3m+3) Jacobian about an equilibrium."""

    dim: int
    entries: tuple[Entry, ...]
    eq: Equilibrium
    m: int

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def to_sparse(self) -> sparse.csr_matrix:
        rows, cols, values = zip(*self.entries, strict=True) if self.entries else ((), (), ())
        return sparse.coo_matrix(
            (values, (rows, cols)), shape=(self.dim, self.dim)
        ).tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def couplings(self) -> tuple[Entry, ...]:
        """The six non-shift entries."""
        return tuple(e for e in self.entries if not _is_shift(e, self.m))

    def with_entries(self, entries: Sequence[Entry]) -> "JacobianSpec":
        return JacobianSpec(self.dim, tuple(entries), self.eq, self.m)


@dataclass(frozen=True)
class ScalingSpec:
    """Diagonal of the similarity D used by the certificate."""

    epsilon: float
    diag: tuple[float, ...]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.diag, dtype=np.float64)


@dataclass
class SpectralEstimate:
    """Power-iteration estimate of max |lambda|."""

    rho: float
    converged: bool
    iterations: int
    restarts: int = 0
    order: int = 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "rho": self.rho,
            "converged": self.converged,
            "iterations": self.iterations,
            "restarts": self.restarts,
            "order": self.order,
        }


@dataclass
class StabilityCertificate:
    """Scaled norm, epsilon, spectral estimate and the resulting verdict."""

    scaled_norm: float | None
    epsilon_used: float | None
    rho_estimate: float | None
    verdict: Verdict
    epsilon_bound: float | None = None
    rho_converged: bool | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "scaled_norm": self.scaled_norm,
            "epsilon_used": self.epsilon_used,
            "epsilon_bound": self.epsilon_bound,
            "rho_estimate": self.rho_estimate,
            "rho_converged": self.rho_converged,
            "verdict": self.verdict,
            **self.details,
        }


def _block_starts(m: int) -> tuple[int, int, int]:
    return (0, m + 1, 2 * m + 2)


def _is_shift(entry: Entry, m: int) -> bool:
    row, col, value = entry
    return row - col == 1 and row not in _block_starts(m) and value == 1.0


def _shift_entries(m: int) -> list[Entry]:
    entries = []
    for start in _block_starts(m):
        for k in range(1, m + 1):
            entries.append((start + k, start + k - 1, 1.0))
    return entries


def _coupling_entries(m: int, a: float, b: float, c: float, d: float, e: float) -> list[Entry]:
    """x-row: (a, -b); y-row: (a, -c); z-row: (-d, e), placed per the stacking."""
    x0, y0, z0 = _block_starts(m)
    return [
        (x0, x0 + m, a),
        (x0, z0, -b),
        (y0, y0 + m, a),
        (y0, z0, -c),
        (z0, y0, -d),
        (z0, z0 + m, e),
    ]


def build_jacobian(eq: Equilibrium, m: int) -> JacobianSpec:
    """Analytic Jacobian of the stacked map at eq."""
    if m < 1:
        raise InvalidInputError(f"delay m must be >= 1, got {m}")
    x, y, z = eq.as_tuple()
    couplings = _coupling_entries(
        m,
        a=1.0 / z,
        b=x / (z * z),
        c=y / (z * z),
        d=z / (y * y),
        e=1.0 / y,
    )
    entries = sorted(couplings + _shift_entries(m))
    return JacobianSpec(dim=3 * m + 3, entries=tuple(entries), eq=eq, m=m)


def printed_family_jacobian(eq: Equilibrium, m: int) -> JacobianSpec:
    """A = 1 Jacobian with the z-row y-entry printed as -1/(mu (mu-1)^2).

    Differentiation gives -z/y^2 = -1/(mu (mu-1)); this variant exists only
    so both norms can be compared.
    """
    if eq.kind != "family" or eq.mu is None:
        raise InvalidInputError("printed variant applies to A = 1 family points only")
    mu = eq.mu
    jac = build_jacobian(eq, m)
    z0 = 2 * m + 2
    y0 = m + 1
    replaced = [
        (r, c, -1.0 / (mu * (mu - 1.0) ** 2)) if (r, c) == (z0, y0) else (r, c, v)
        for r, c, v in jac.entries
    ]
    return jac.with_entries(replaced)


def stack_state(window: Sequence[tuple[float, float, float]]) -> np.ndarray:
    """Window (oldest first) -> stacked state (x_n..x_{n-m}, y.., z..)."""
    newest_first = list(reversed(window))
    return np.asarray(
        [t[0] for t in newest_first]
        + [t[1] for t in newest_first]
        + [t[2] for t in newest_first],
        dtype=np.float64,
    )


def unstack_state(state: np.ndarray, m: int) -> list[tuple[float, float, float]]:
    """Inverse of stack_state."""
    xs, ys, zs = state[: m + 1], state[m + 1 : 2 * m + 2], state[2 * m + 2 :]
    return [
        (float(xs[k]), float(ys[k]), float(zs[k])) for k in range(m, -1, -1)
    ]


def stacked_map(params: Params, state: np.ndarray) -> np.ndarray:
    """The system written as a map on the stacked state."""
    window = unstack_state(state, params.m)
    new = step(params, window)
    return stack_state(window[1:] + [new])


def finite_difference_jacobian(
    A: float, eq: Equilibrium, m: int, h: float = 1e-6
) -> np.ndarray:
    """Central finite differences of the stacked map at eq (dense)."""
    params = Params(A=A, m=m)
    base = stack_state([eq.as_tuple()] * (m + 1))
    dim = base.size
    jac = np.zeros((dim, dim))
    for j in range(dim):
        delta = np.zeros(dim)
        delta[j] = h * max(1.0, abs(base[j]))
        forward = stacked_map(params, base + delta)
        backward = stacked_map(params, base - delta)
        jac[:, j] = (forward - backward) / (2.0 * delta[j])
    return jac


def family_tangent(mu: float, m: int) -> np.ndarray:
    """d/dmu of the stacked family point; an eigenvector of B for lambda = 1."""
    if not mu > 1:
        raise InvalidInputError(f"mu must exceed 1, got {mu}")
    dz = -1.0 / (mu - 1.0) ** 2
    return np.concatenate([np.ones(m + 1), np.ones(m + 1), np.full(m + 1, dz)])


def scaling_matrix(m: int, epsilon: float) -> ScalingSpec:
    """d_{start+k} = 1 - k*epsilon within each block, k = 0..m."""
    if not (0 < epsilon < 1.0 / m):
        raise EpsilonOutOfRange(epsilon, m)
    block = [1.0 - k * epsilon for k in range(m + 1)]
    return ScalingSpec(epsilon=float(epsilon), diag=tuple(block * 3))


def epsilon_bound(eq: Equilibrium, A: float, m: int) -> float:
    """Upper end of the admissible epsilon window.

    A > 1:  min{1/m, (c-2)/(c m)} with c = A + 1.
    A = 1:  min{(mu^2-2mu+2)/(m mu), (mu^2-2mu+2)/(m mu (mu-1))}.
    """
    if A > 1:
        c = A + 1.0
        return min(1.0 / m, (c - 2.0) / (c * m))
    if A == 1:
        if eq.mu is None:
            raise InvalidInputError("A = 1 needs a family equilibrium with mu")
        mu = eq.mu
        top = mu * mu - 2.0 * mu + 2.0
        return min(top / (m * mu), top / (m * mu * (mu - 1.0)))
    raise UnsupportedRegime(A)


def scaled_row_sums(jac: JacobianSpec, scal: ScalingSpec) -> np.ndarray:
    """Row sums of |D B D^-1|."""
    if len(scal.diag) != jac.dim:
        raise InvalidInputError(
            f"scaling has {len(scal.diag)} entries, Jacobian is {jac.dim}x{jac.dim}"
        )
    d = scal.as_array()
    sums = np.zeros(jac.dim)
    for row, col, value in jac.entries:
        sums[row] += abs(d[row] * value / d[col])
    return sums


def norm_certificate(jac: JacobianSpec, scal: ScalingSpec) -> float:
    """||D B D^-1||_inf."""
    return float(scaled_row_sums(jac, scal).max())


def similar_matrix(jac: JacobianSpec, scal: ScalingSpec) -> JacobianSpec:
    """D B D^-1 as triplets (same spectrum as B)."""
    d = scal.as_array()
    return jac.with_entries([(r, c, d[r] * v / d[c]) for r, c, v in jac.entries])


def _start_vector(dim: int, attempt: int) -> np.ndarray:
    # ones plus a fixed ramp to break the block symmetry; later restarts rotate the ramp
    ramp = np.cos(np.arange(dim) * (1.0 + attempt) * 0.7 + attempt)
    v = np.ones(dim) + 1e-2 * ramp
    return v / np.linalg.norm(v)


def _krylov_radius(
    matrix: sparse.csr_matrix, v: np.ndarray, max_order: int, fit_tol: float
) -> tuple[float, int] | None:
    """Dominant modulus from the shortest recurrence fitting B^k v.

    Finds the smallest s with B^s v ~ sum_j c_j B^j v and returns the
    largest root modulus of z^s - sum_j c_j z^j. This resolves dominant
    sets with several eigenvalues of equal modulus (+-rho, complex pairs).
    """
    columns = [v]
    for _ in range(max_order):
        columns.append(matrix @ columns[-1])
    krylov = np.column_stack(columns)

    for order in range(1, max_order + 1):
        target = krylov[:, order]
        scale = np.linalg.norm(target)
        if scale == 0.0:
            return 0.0, order
        basis = krylov[:, :order]
        coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
        misfit = np.linalg.norm(basis @ coef - target) / scale
        if misfit <= fit_tol:
            poly = np.concatenate(([1.0], -coef[::-1]))
            return float(np.max(np.abs(np.roots(poly)))), order
    return None


def spectral_radius(
    jac: JacobianSpec,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    check_every: int = 10,
    max_order: int = 8,
    patience: int = 200,
    max_restarts: int = 3,
) -> SpectralEstimate:
    """Estimate max |lambda| of B by power iteration.

    The normalised iterate is refined by repeated multiplication; every
    `check_every` steps the short Krylov window starting at the iterate
    is fitted with the lowest-order recurrence, whose largest root is the
    current estimate. Convergence means two consecutive estimates agree
    to `tol` (relative to max(1, rho)). If no recurrence fits for
    `patience` checks the iteration restarts from another deterministic
    start vector. When max_iter is exhausted the last estimate is
    returned with converged=False; use the scaled norm as the upper bound.
    """
    if tol <= 0:
        raise InvalidInputError(f"tol must be positive, got {tol}")
    matrix = jac.to_sparse()
    order_cap = min(max_order, jac.dim)
    fit_tol = max(1e-9, math.sqrt(tol))

    attempt = 0
    v = _start_vector(jac.dim, attempt)
    previous: float | None = None
    estimate = math.nan
    order = 1
    stalled = 0

    for iteration in range(1, max_iter + 1):
        w = matrix @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return SpectralEstimate(0.0, True, iteration, attempt, order=0)
        v = w / norm
        if not math.isfinite(estimate):
            estimate = float(norm)

        if iteration % check_every:
            continue

        fitted = _krylov_radius(matrix, v, order_cap, fit_tol)
        if fitted is None:
            stalled += 1
            if stalled >= patience and attempt < max_restarts:
                attempt += 1
                stalled = 0
                previous = None
                v = _start_vector(jac.dim, attempt)
                logger.debug(f"Power iteration stalled; restart {attempt}")
            continue

        stalled = 0
        estimate, order = fitted
        if previous is not None and abs(estimate - previous) <= tol * max(1.0, estimate):
            return SpectralEstimate(estimate, True, iteration, attempt, order)
        previous = estimate

    logger.warning(
        f"Power iteration not converged after {max_iter} steps; estimate {estimate!r}"
    )
    return SpectralEstimate(estimate, False, max_iter, attempt, order)


def classify_stability(
    cert_norm: float | None, rho: float | None, tol: float = CLASSIFY_TOL
) -> Verdict:
    """LAS / Unstable / Inconclusive from a norm bound and a radius estimate."""
    if (cert_norm is not None and cert_norm < 1.0) or (
        rho is not None and rho < 1.0 - tol
    ):
        return "LAS"
    if rho is not None and rho > 1.0 + tol:
        return "Unstable"
    return "Inconclusive"


def epsilon_grid(upper: float, points: int = EPSILON_GRID_POINTS) -> np.ndarray:
    """Geometric grid inside (0.05 U, 0.95 U)."""
    return np.geomspace(0.05 * upper, 0.95 * upper, points)


def best_certificate(jac: JacobianSpec, upper: float) -> tuple[float, float]:
    """(epsilon, norm) minimising the scaled norm over the epsilon grid."""
    best_eps, best_norm = math.nan, math.inf
    for eps in epsilon_grid(upper):
        eps = float(eps)
        if not eps < 1.0 / jac.m:
            continue
        value = norm_certificate(jac, scaling_matrix(jac.m, eps))
        if value < best_norm:
            best_eps, best_norm = eps, value
    return best_eps, best_norm


def certify(
    eq: Equilibrium,
    A: float,
    m: int,
    epsilon: float | None = None,
    method: Method = "both",
    tol: float = CLASSIFY_TOL,
    power_tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> StabilityCertificate:
    """Norm certificate and/or spectral estimate at eq, with a verdict."""
    if method not in ("norm", "power", "both"):
        raise InvalidInputError(f"unknown method {method!r}")
    jac = build_jacobian(eq, m)
    details: dict[str, Any] = {}

    scaled: float | None = None
    eps_used: float | None = None
    upper: float | None = None
    if method in ("norm", "both"):
        try:
            upper = epsilon_bound(eq, A, m)
        except UnsupportedRegime:
            if method == "norm":
                raise
            logger.info(f"No scaling certificate for A={A}; using the spectral estimate only")
        if upper is not None:
            if epsilon is None:
                eps_used, scaled = best_certificate(jac, upper)
            else:
                eps_used = float(epsilon)
                scaled = norm_certificate(jac, scaling_matrix(m, eps_used))
            details["row1_sum"] = float(
                scaled_row_sums(jac, scaling_matrix(m, eps_used))[0]
            )
            if eq.kind == "family":
                printed = printed_family_jacobian(eq, m)
                details["printed_entry_norm"] = norm_certificate(
                    printed, scaling_matrix(m, eps_used)
                )

    rho: float | None = None
    converged: bool | None = None
    if method in ("power", "both"):
        estimate = spectral_radius(jac, tol=power_tol, max_iter=max_iter)
        rho, converged = estimate.rho, estimate.converged
        details["power_iterations"] = estimate.iterations

    verdict = classify_stability(scaled, rho if converged else None, tol)
    if converged is False and verdict == "Inconclusive":
        details["note"] = str(NoConvergence(max_iter, rho))

    logger.info(
        f"Certificate A={A}, m={m}: norm={scaled}, rho={rho}, verdict={verdict}"
    )
    return StabilityCertificate(
        scaled_norm=scaled,
        epsilon_used=eps_used,
        rho_estimate=rho,
        verdict=verdict,
        epsilon_bound=upper,
        rho_converged=converged,
        details=details,
    )
