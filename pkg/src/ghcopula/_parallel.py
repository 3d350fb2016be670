"""Ordered process-pool map used by replicated experiments."""

import os
from concurrent.futures import ProcessPoolExecutor


def _single_threaded_blas():
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = "1"


def ordered_map(fn, tasks, threads=1):
    """
    ``[fn(t) for t in tasks]``, optionally on ``threads`` worker processes.
    Results come back in task order, so output never depends on scheduling.
    """
    tasks = list(tasks)
    if threads is None or threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    workers = min(int(threads), len(tasks))
    with ProcessPoolExecutor(max_workers=workers, initializer=_single_threaded_blas) as ex:
        return list(ex.map(fn, tasks))
