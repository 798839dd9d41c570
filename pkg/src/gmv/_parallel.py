import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    """Worker cap from ``GMV_THREADS`` (default: CPU count)."""
    raw = os.environ.get("GMV_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def map_ordered(fn, items):
    """``list(map(fn, items))``, threaded when more than one worker is allowed.

    Results come back in input order whatever the schedule, so callers that
    write them into fixed slots stay deterministic.
    """
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
