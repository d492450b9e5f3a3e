"""
Small builders shared by the test modules.
"""

from core.dynamics import InitBlock, Trajectory, iterate, validate_params


def run(A, m, x, y, z, steps, cap=None) -> Trajectory:
    """Validate and iterate in one call."""
    params, init = validate_params(
        A, m, InitBlock(*(tuple(float(v) for v in values) for values in (x, y, z)))
    )
    return iterate(params, init, steps, cap=cap)
