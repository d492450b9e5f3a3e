"""
Worker module for rdelab.

Local process/thread pool used by parameter sweeps.
"""

from .pool import TaskPool

__version__ = "1.0.0"

__all__ = ["TaskPool"]
