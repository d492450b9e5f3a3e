"""
Numerical core of rdelab.

Iteration engine, closed-form equilibria, linearisation certificates,
trajectory classifiers, seeded sweeps and the verification suites.
"""

__version__ = "1.0.0"
