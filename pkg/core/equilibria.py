"""
Closed-form equilibria of the system.

For A != 1 the only positive equilibrium is (A+1, A+1, A+1). For A = 1
there is a one-parameter family (mu, mu, mu/(mu-1)), mu > 1, lying on the
hyperboloid y*z = y + z. No root finder is involved.
"""

import logging
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np

from .dynamics import Trajectory
from .exceptions import (
    AEqualsOne,
    InvalidInputError,
    MuOutOfRange,
    NotUnityA,
    OverflowedTrajectory,
)

logger = logging.getLogger(__name__)

TAIL_FRACTION = 0.25
MIN_TAIL_SAMPLES = 100


@dataclass(frozen=True)
class Equilibrium:
    """A fixed point, isolated (A != 1) or a family member mu (A = 1)."""

    x_bar: float
    y_bar: float
    z_bar: float
    kind: Literal["isolated", "family"]
    mu: float | None = None

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x_bar, self.y_bar, self.z_bar)

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "x": self.x_bar,
            "y": self.y_bar,
            "z": self.z_bar,
            "kind": self.kind,
        }
        if self.mu is not None:
            payload["mu"] = self.mu
        return payload


def isolated_equilibrium(A: float) -> Equilibrium:
    """(A+1, A+1, A+1) for A > 0, A != 1."""
    if A == 1:
        raise AEqualsOne()
    c = A + 1.0
    return Equilibrium(c, c, c, kind="isolated")


def family_equilibrium(mu: float) -> Equilibrium:
    """(mu, mu, mu/(mu-1)) on the A = 1 hyperboloid."""
    if not mu > 1:
        raise MuOutOfRange(mu)
    mu = float(mu)
    return Equilibrium(mu, mu, mu / (mu - 1.0), kind="family", mu=mu)


def equilibrium_for(A: float, mu: float | None = None) -> Equilibrium:
    """Dispatch to the isolated point or, for A = 1, the family member mu."""
    if A == 1:
        if mu is None:
            raise AEqualsOne()
        return family_equilibrium(mu)
    return isolated_equilibrium(A)


def residual(eq: Equilibrium, A: float) -> tuple[float, float, float]:
    """Signed defects of the three equilibrium equations."""
    x, y, z = eq.as_tuple()
    return (x - A - x / z, y - A - y / z, z - A - z / y)


def hyperboloid_defect(eq: Equilibrium) -> float:
    """y*z - y - z; zero for every A = 1 equilibrium."""
    return eq.y_bar * eq.z_bar - eq.y_bar - eq.z_bar


def estimate_mu(traj: Trajectory) -> tuple[float, float]:
    """Empirical family parameter from the tail of an A = 1 run.

    Returns the tail mean of x together with |y*z - y - z| evaluated at
    the tail means of y and z. The system gives no guarantee that an
    A = 1 orbit settles on a family member, so the residual is always
    reported alongside the estimate.
    """
    if traj.params.A != 1:
        raise NotUnityA(traj.params.A)
    if traj.overflow_at is not None:
        raise OverflowedTrajectory(traj.overflow_at)

    xs = traj.post_initial("x")
    if len(xs) == 0:
        raise InvalidInputError("trajectory has no samples with n >= 1")
    count = max(int(len(xs) * TAIL_FRACTION), MIN_TAIL_SAMPLES)
    count = min(count, len(xs))

    mu_hat = float(np.mean(xs[-count:]))
    y_hat = float(np.mean(traj.post_initial("y")[-count:]))
    z_hat = float(np.mean(traj.post_initial("z")[-count:]))
    defect = abs(y_hat * z_hat - y_hat - z_hat)

    logger.debug(f"mu estimate {mu_hat!r} from {count} samples, residual {defect:.3e}")
    return mu_hat, defect
