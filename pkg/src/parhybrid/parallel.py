"""Deterministic fan-out of independent evaluations and argmax reduction."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import DimensionError, Vector

WORKERS_ENV = "PARHYBRID_WORKERS"


@dataclass(frozen=True)
class WorkerPoolConfig:
    workers: int = 1
    chunking: str = "one-task-per-index"

    def __post_init__(self):
        if int(self.workers) < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.chunking != "one-task-per-index":
            raise ValueError(f"unsupported chunking {self.chunking!r}")


def workers_from_env(default: int) -> int:
    value = os.environ.get(WORKERS_ENV)
    if value is None or value.strip() == "":
        return default
    return int(value)


class WorkerPool:
    """Thread pool used for the per-phase fan-out.

    ``workers == 1`` evaluates tasks in the calling thread. Use as a context
    manager, or call :meth:`close` when done.
    """

    def __init__(self, config: WorkerPoolConfig | int = 1):
        if isinstance(config, int):
            config = WorkerPoolConfig(config)
        self.config = config
        self._executor: Optional[ThreadPoolExecutor] = None
        if config.workers > 1:
            self._executor = ThreadPoolExecutor(
                max_workers=config.workers, thread_name_prefix="parhybrid"
            )

    @property
    def workers(self) -> int:
        return self.config.workers

    def close(self):
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def map(self, tasks: Sequence[Callable[[], Vector]]) -> list:
        return par_map(tasks, self)


def par_map(tasks: Sequence[Callable[[], Vector]], pool: Optional[WorkerPool] = None) -> list:
    """Run zero-argument tasks and return their results in index order.

    Every task runs to completion before anything is returned; if several
    fail, the exception of the lowest-indexed one is raised.
    """
    tasks = list(tasks)
    if pool is None or pool._executor is None or len(tasks) <= 1:
        return [task() for task in tasks]
    futures = [pool._executor.submit(task) for task in tasks]
    results = []
    first_error = None
    for fut in futures:
        try:
            results.append(fut.result())
        except Exception as exc:  # noqa: BLE001 - re-raised below in index order
            if first_error is None:
                first_error = exc
            results.append(None)
    if first_error is not None:
        raise first_error
    return results


def argmax_distance(results: Sequence[Vector], x) -> tuple[int, Vector]:
    """Index (0-based) and value of the result farthest from ``x``.

    Ties go to the lowest index.
    """
    if len(results) == 0:
        raise ValueError("argmax over an empty family")
    x = np.asarray(x, dtype=np.float64)
    shape = x.shape
    dot = np.dot
    best_i, best_d = 0, -1.0
    for i, r in enumerate(results):
        if not isinstance(r, np.ndarray):
            r = np.asarray(r, dtype=np.float64)
        if r.shape != shape:
            raise DimensionError(f"result {i} has shape {r.shape}, expected {shape}")
        diff = r - x
        d = math.sqrt(dot(diff, diff))
        if d > best_d:
            best_i, best_d = i, d
    return best_i, results[best_i]
