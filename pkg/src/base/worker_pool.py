import logging
import os
from concurrent.futures import ThreadPoolExecutor
from threading import Lock
from types import TracebackType
from typing import Callable, Iterable, List, Optional, Type, TypeVar

from src.base.config import Config, ConfigInvalidValueError

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def default_threads() -> int:
    return os.cpu_count() or 1


class WorkerPool:
    """
    Thread pool shared by the per-client work of a round.

    The number of workers is read from the FED3R_THREADS environment variable
    (default: available parallelism) unless given explicitly. Numpy releases the
    GIL in its BLAS kernels, so threads are enough for the per-client linear algebra.

    The pool is context managed by the service initializer and the CLI runner:

    >>> with WorkerPool.from_config(config) as pool:
    ...     stats = pool.map(compute, shards)

    `map` always returns results in submission order, so the outcome of a round
    never depends on scheduling.
    """

    def __init__(self, *, threads: Optional[int] = None):
        threads = default_threads() if threads is None else threads
        if threads < 1:
            raise ConfigInvalidValueError(f"value of FED3R_THREADS must be positive: '{threads}'")
        self.threads = threads
        self._executor_lock: Lock = Lock()
        self._executor: Optional[ThreadPoolExecutor] = None

    @classmethod
    def from_config(cls, config: Config, threads: Optional[int] = None) -> "WorkerPool":
        if threads is None:
            threads = config.get_int("FED3R_THREADS", default_threads())
        return cls(threads=threads)

    def __enter__(self) -> "WorkerPool":
        return self

    def __exit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc_val: Optional[BaseException],
        exc_tb: Optional[TracebackType]
    ) -> None:
        self.shutdown()

    def shutdown(self) -> None:
        with self._executor_lock:
            if self._executor is not None:
                self._executor.shutdown(wait=True)
                self._executor = None

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        items = list(items)
        if self.threads == 1 or len(items) <= 1:
            return [fn(item) for item in items]

        with self._executor_lock:
            if self._executor is None:
                logger.debug("worker_pool_started threads=%d", self.threads)
                self._executor = ThreadPoolExecutor(max_workers=self.threads, thread_name_prefix="fed3r")
            executor = self._executor

        return list(executor.map(fn, items))


def run_serially_or_pooled(pool: Optional[WorkerPool], fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    if pool is None:
        return [fn(item) for item in items]
    return pool.map(fn, items)
