"""Small shared helpers: stable seeding and bounded thread parallelism."""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

from emprobe.errors import ValidationError

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "EMPROBE_THREADS"


def stable_seed(*parts) -> int:
    """Derive a 64-bit seed from the given parts, stable across runs and platforms.

    Python's builtin ``hash`` is salted per process, so seeds derived from it
    would not reproduce; this uses SHA-256 of the string forms instead.
    """
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def max_workers() -> int:
    """Parallelism cap from the EMPROBE_THREADS env var (0 or unset = auto)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw in ("", "0"):
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValidationError(f"{THREADS_ENV} must be >= 0, got {n}")
    return n


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Map ``fn`` over ``items``, possibly on a thread pool, preserving order.

    Each work item must be independent and internally deterministic; the
    result is then identical for any worker count, so EMPROBE_THREADS never
    changes computed values.
    """
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
