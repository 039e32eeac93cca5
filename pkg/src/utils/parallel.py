import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar
from dotenv import load_dotenv
from loguru import logger

load_dotenv()

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    """File-level parallelism cap from CIF_TTS_THREADS (defaults to the CPU count)."""
    raw = os.getenv("CIF_TTS_THREADS")
    if raw is None or not raw.strip():
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning(f"Ignoring non-integer CIF_TTS_THREADS={raw!r}")
        return os.cpu_count() or 1


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """Map over independent files; results keep the input order."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
