"""Small shared utilities: deterministic chunked parallelism and stable hashing."""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor


def chunk_spans(total: int, chunk: int):
    return [(i, min(i + chunk, total)) for i in range(0, total, chunk)]


def map_chunks(fn, total: int, threads: int = 1, chunk: int = 1024):
    """Apply fn(start, stop) over fixed chunks; results in chunk order.

    Chunk boundaries never depend on the thread count, and all randomness is
    keyed per sample index, so outputs are identical for any `threads`.
    """
    spans = chunk_spans(total, chunk)
    if threads <= 1 or len(spans) <= 1:
        return [fn(a, b) for a, b in spans]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda s: fn(*s), spans))


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
