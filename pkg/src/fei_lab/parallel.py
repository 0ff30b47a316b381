"""Order-preserving parallel map for sweeps.

Work items are handed to worker processes as they free up, and results are
collected in submission order, so the reduction is the same for every job
count.
"""

import os
from concurrent.futures import ProcessPoolExecutor


def default_jobs():
    env = os.environ.get("FEI_LAB_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def ordered_map(fn, items, jobs=None):
    items = list(items)
    if jobs is None:
        jobs = default_jobs()
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items, chunksize=1))
