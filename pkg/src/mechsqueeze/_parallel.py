import os
from concurrent.futures import ProcessPoolExecutor

JOBS_ENV = "MECHSQUEEZE_JOBS"


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def pmap(func, items, jobs=None):
    """Order-preserving map, optionally over a process pool."""
    items = list(items)
    jobs = default_jobs() if jobs is None else jobs
    if jobs <= 1 or len(items) < 2:
        return [func(item) for item in items]
    chunk = max(1, len(items) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items, chunksize=chunk))
