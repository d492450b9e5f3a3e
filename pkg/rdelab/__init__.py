"""
rdelab - simulator and theorem checker for the delayed rational system

    x[n+1] = A + x[n-m] / z[n]
    y[n+1] = A + y[n-m] / z[n]
    z[n+1] = A + z[n-m] / y[n]
"""

__version__ = "1.0.0"

from .cli import dispatch, main

__all__ = ["dispatch", "main", "__version__"]
