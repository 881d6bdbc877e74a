"""64-bit hash mixing shared by every structure that needs pseudo-random keys.

Scalar helpers work on Python ints, the ``*_np`` variants on ``uint64`` arrays.
Both produce identical values, which the build/query agreement relies on.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1
MASK32 = (1 << 32) - 1

# splitmix64 finalizer constants
_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """Bijective 64-bit mixer (splitmix64 finalizer)."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def mix64_np(x: np.ndarray) -> np.ndarray:
    z = np.asarray(x, dtype=np.uint64) + np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


def hash_int(x: int, seed: int) -> int:
    return mix64((x ^ mix64(seed)) & MASK64)


def hash_int_np(x: np.ndarray, seed: int) -> np.ndarray:
    return mix64_np(np.asarray(x, dtype=np.uint64) ^ np.uint64(mix64(seed)))


def hash_bytes(s: bytes, seed: int) -> int:
    digest = hashlib.blake2b(s, digest_size=8, key=seed.to_bytes(8, "little")).digest()
    return int.from_bytes(digest, "little")


def hash_bytes_many(strings, seed: int) -> np.ndarray:
    key = seed.to_bytes(8, "little")
    blake = hashlib.blake2b
    out = np.fromiter(
        (int.from_bytes(blake(s, digest_size=8, key=key).digest(), "little") for s in strings),
        dtype=np.uint64,
        count=len(strings),
    )
    return out


def fastrange32(h32: int, n: int) -> int:
    """Map a 32-bit hash uniformly onto ``[0, n)`` without division."""
    return (h32 * n) >> 32


def fastrange32_np(h32: np.ndarray, n: int) -> np.ndarray:
    return (h32 * np.uint64(n)) >> np.uint64(32)


def ceil_log2(x: int) -> int:
    """Smallest ``k`` with ``2**k >= x`` (0 for ``x <= 1``)."""
    return (x - 1).bit_length() if x > 1 else 0


def ceil_log2_np(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    # frexp exponent of x - 1 is its bit length (exact below 2**53)
    _, exp = np.frexp(np.maximum(x - 1, 0).astype(np.float64))
    return exp.astype(np.int64)
