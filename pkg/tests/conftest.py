"""
Shared fixtures for the rdelab tests.
"""

import logging

import pytest

from core.settings import reset_settings
from tests.helpers import run


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Thread pools and a clean settings cache for every test."""
    monkeypatch.setenv("RDE_LAB_EXECUTOR", "thread")
    for name in ("RDE_LAB_THREADS", "RDE_LAB_CAP", "RDE_LAB_CLASSIFY_HORIZON"):
        monkeypatch.delenv(name, raising=False)
    reset_settings()
    yield
    reset_settings()


@pytest.fixture(autouse=True)
def restore_root_handlers():
    """The CLI reconfigures the root logger; undo that after each test."""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def parity_run():
    """A = 0.5, m = 1 with the even side large: even terms blow up."""
    return run(0.5, 1, (0.5, 3.0), (0.5, 3.0), (0.5, 3.0), 100_000)


@pytest.fixture
def constant_unity_run():
    """A = 1 started on the family point (2, 2, 2)."""
    return run(1.0, 1, (2, 2), (2, 2), (2, 2), 400)
