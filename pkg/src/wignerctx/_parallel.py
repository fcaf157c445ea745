"""Thread-pool plumbing shared by grid evaluators.

Work is always split at fixed boundaries; the pool only changes who computes
each piece, never the piece boundaries or the order results are combined in.
"""

from __future__ import annotations

import contextlib
import os

import numpy as np
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "WIGNER_CTX_THREADS"


def thread_count(threads: int | None = None) -> int:
    """Resolve a worker count: explicit value, else ``WIGNER_CTX_THREADS``; 0 means auto."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
        try:
            threads = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if threads < 0:
        raise ValueError("thread count must be >= 0")
    if threads == 0:
        threads = os.cpu_count() or 1
    return threads


@contextlib.contextmanager
def executor(threads: int | None = None):
    """Yield a ``ThreadPoolExecutor`` or ``None`` when a single worker is requested."""
    n = thread_count(threads)
    if n <= 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=n) as pool:
        yield pool


def block_uniforms(seed: int, count: int, block: int = 16384):
    """``count`` uniforms in [0, 1) drawn in fixed blocks from children of ``SeedSequence(seed)``."""
    starts = range(0, count, block)
    children = np.random.SeedSequence(seed).spawn(len(starts))
    parts = [np.random.default_rng(c).random(min(block, count - s)) for c, s in zip(children, starts)]
    return np.concatenate(parts) if parts else np.zeros(0)
