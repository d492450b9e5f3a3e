"""
Arbitrary-precision re-iteration used to check the binary64 engine.
"""

import logging

import mpmath

from .dynamics import COMPONENTS, InitBlock, Trajectory
from .exceptions import InvalidInputError

logger = logging.getLogger(__name__)

DEFAULT_PREC_BITS = 256

OracleSample = tuple[int, mpmath.mpf, mpmath.mpf, mpmath.mpf]


def oracle_iterate(
    A: float, m: int, init: InitBlock, steps: int, prec_bits: int = DEFAULT_PREC_BITS
) -> list[OracleSample]:
    """Samples (n, x, y, z) for n = -m..steps at prec_bits of working precision.

    The binary64 inputs are taken as exact. There is no overflow guard.
    """
    if steps < 1:
        raise InvalidInputError(f"steps must be >= 1, got {steps}")
    if len(init.x) != m + 1:
        raise InvalidInputError(f"initial block has {len(init.x)} entries, expected {m + 1}")

    with mpmath.workprec(prec_bits):
        a = mpmath.mpf(A)
        xs = [mpmath.mpf(v) for v in init.x]
        ys = [mpmath.mpf(v) for v in init.y]
        zs = [mpmath.mpf(v) for v in init.z]

        for _ in range(steps):
            x_old, y_old, z_old = xs[-m - 1], ys[-m - 1], zs[-m - 1]
            y_now, z_now = ys[-1], zs[-1]
            xs.append(a + x_old / z_now)
            ys.append(a + y_old / z_now)
            zs.append(a + z_old / y_now)

    logger.debug(f"Oracle iterated A={A}, m={m} for {steps} steps at {prec_bits} bits")
    return [(n - m, xs[n], ys[n], zs[n]) for n in range(len(xs))]


def max_deviation(traj: Trajectory, oracle_samples: list[OracleSample]) -> float:
    """Largest |binary64 - oracle| over the indices both cover."""
    by_n = {sample[0]: sample[1:] for sample in oracle_samples}
    worst = 0.0
    for n, *values in traj.samples():
        reference = by_n.get(n)
        if reference is None:
            continue
        for name, value, exact in zip(COMPONENTS, values, reference, strict=True):
            gap = float(abs(mpmath.mpf(value) - exact))
            if gap > worst:
                worst = gap
                logger.debug(f"New worst deviation {gap:.3e} at n={n} ({name})")
    return worst
