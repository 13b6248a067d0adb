"""Counter-based deterministic random streams.

Every random draw in this package is a pure function of a 64-bit key and an
integer index, so a computation sharded over any number of workers produces
bit-identical results as long as partial results are combined in index order.
The generator is the splitmix64 finalizer applied to a Weyl sequence, which
has full avalanche and is more than adequate for Monte Carlo at the sample
sizes used here.
"""

from __future__ import annotations

import concurrent.futures
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

_MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_INV53 = float(2.0 ** -53)


def mix64(x: int) -> int:
    """splitmix64 finalizer on a Python int, reduced mod 2**64."""
    x &= _MASK
    x = ((x ^ (x >> 30)) * _M1) & _MASK
    x = ((x ^ (x >> 27)) * _M2) & _MASK
    return x ^ (x >> 31)


def derive_key(*words: int) -> int:
    """Fold any number of integer words into one well-mixed 64-bit key."""
    key = 0
    for w in words:
        key = mix64(key ^ mix64((w + GOLDEN) & _MASK))
    return key


def uniform_at(key: int, index: int) -> float:
    """Single uniform in the open interval (0, 1)."""
    z = mix64((key + (index + 1) * GOLDEN) & _MASK)
    return ((z >> 11) + 0.5) * _INV53


def _mix64_np(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> _U30)
    x = x * _U_M1
    x = x ^ (x >> _U27)
    x = x * _U_M2
    return x ^ (x >> _U31)


def _to_unit(z: np.ndarray) -> np.ndarray:
    return ((z >> _U11).astype(np.float64) + 0.5) * _INV53


def uniforms(key: int, start: int, count: int) -> np.ndarray:
    """Uniforms in (0,1) for indices start .. start+count-1 of stream `key`."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix64_np(np.uint64(key & _MASK) + idx * _U_GOLDEN)
    return _to_unit(z)


def uniform_matrix(key: int, streams: np.ndarray, count: int) -> np.ndarray:
    """Matrix of uniforms; row i is the first `count` draws of sub-stream
    streams[i] under `key`.  Pure function of (key, stream, column)."""
    streams = np.asarray(streams, dtype=np.uint64)
    with np.errstate(over="ignore"):
        row_keys = _mix64_np(np.uint64(key & _MASK) ^ (streams + np.uint64(1)) * _U_M2)
        idx = np.arange(1, count + 1, dtype=np.uint64)
        z = _mix64_np(row_keys[:, None] + idx[None, :] * _U_GOLDEN)
    return _to_unit(z)


T = TypeVar("T")


def run_chunks(
    n_items: int,
    chunk_size: int,
    worker: Callable[[int, int], T],
    threads: int = 1,
) -> list[T]:
    """Evaluate worker(start, stop) over consecutive chunks of range(n_items).

    Results are returned in chunk order no matter how many threads execute
    them, which is what makes every aggregate downstream of this helper
    independent of the worker count.
    """
    bounds = [(s, min(s + chunk_size, n_items)) for s in range(0, n_items, chunk_size)]
    if threads <= 1 or len(bounds) <= 1:
        return [worker(s, t) for s, t in bounds]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, s, t) for s, t in bounds]
        return [f.result() for f in futures]
