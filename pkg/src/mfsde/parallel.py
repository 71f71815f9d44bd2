"""Worker-cap plumbing with thread-count-independent results.

Work is always split into fixed-size chunks and partial results are
combined in chunk order, so raising or lowering the worker cap changes
wall-clock time only, never the computed values.
"""

from concurrent.futures import ThreadPoolExecutor

_max_threads = 1

#: default number of items per chunk; fixed so that results do not depend
#: on the worker count
CHUNK = 16384


def set_max_threads(n):
    """Cap the number of worker threads used by chunked scans."""
    global _max_threads
    n = int(n)
    if n < 1:
        raise ValueError("thread cap must be >= 1")
    _max_threads = n


def get_max_threads():
    return _max_threads


def chunk_ranges(n, chunk=CHUNK):
    """Yield (start, stop) pairs covering range(n) in fixed-size pieces."""
    start = 0
    while start < n:
        yield start, min(start + chunk, n)
        start += chunk


def map_chunks(fn, n, chunk=CHUNK):
    """Apply ``fn(start, stop)`` over fixed chunks of range(n).

    Returns the list of per-chunk results in chunk order.  With a thread
    cap of 1 the chunks run sequentially; otherwise they are dispatched to
    a thread pool, but the returned order (and hence any downstream
    reduction) is identical.
    """
    ranges = list(chunk_ranges(n, chunk))
    if _max_threads == 1 or len(ranges) == 1:
        return [fn(a, b) for a, b in ranges]
    with ThreadPoolExecutor(max_workers=min(_max_threads, len(ranges))) as ex:
        futures = [ex.submit(fn, a, b) for a, b in ranges]
        return [f.result() for f in futures]
