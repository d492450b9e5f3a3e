"""
Local worker pool for rdelab.

Sweeps hand independent (cell, trial) tasks to a process or thread pool
from ``concurrent.futures``. Results are collected by submission index,
so the returned order never depends on completion order.
"""

import logging
import os
from collections.abc import Callable, Iterable
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from typing import Literal, TypeVar

from core.settings import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

ExecutorKind = Literal["process", "thread"]


class TaskPool:
    """Runs a pure function over a batch of tasks on local workers."""

    def __init__(self, workers: int | None = None, kind: ExecutorKind | None = None):
        settings = get_settings()
        if workers is not None and workers < 0:
            raise ValueError(f"workers must be >= 0, got {workers}")
        if workers is None:
            self.workers = settings.resolved_threads()
        else:
            self.workers = workers or os.cpu_count() or 1
        self.kind: ExecutorKind = kind or settings.executor

    def _executor(self) -> Executor:
        if self.kind == "process":
            return ProcessPoolExecutor(max_workers=self.workers)
        return ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix="rdelab")

    def map(self, fn: Callable[[T], R], tasks: Iterable[T]) -> list[R]:
        """Apply fn to every task; results come back in task order."""
        batch = list(tasks)
        if not batch:
            return []

        if self.workers == 1:
            logger.debug(f"Running {len(batch)} tasks inline")
            return [fn(task) for task in batch]

        logger.info(f"Running {len(batch)} tasks on {self.workers} {self.kind} workers")
        results: list[R | None] = [None] * len(batch)
        with self._executor() as executor:
            futures = {executor.submit(fn, task): index for index, task in enumerate(batch)}
            for future, index in futures.items():
                try:
                    results[index] = future.result()
                except Exception as e:
                    logger.error(f"Task {index} failed in the pool: {e}")
                    raise
        return results  # type: ignore[return-value]

    def stats(self) -> dict[str, int | str]:
        return {"workers": self.workers, "kind": self.kind}
