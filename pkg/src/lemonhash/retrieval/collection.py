"""Local ranks stored in one retrieval function per bucket-size class.

A key in a bucket of size ``b >= 2`` lives in class ``ceil(log2 b)``, whose
function stores exactly that many bits. Buckets of size one need nothing.
"""

from __future__ import annotations

import numpy as np

from .._hashing import ceil_log2, ceil_log2_np, mix64
from .._io import Reader, Writer
from . import MAX_WIDTH, build_retrieval, read_retrieval, write_retrieval


class RetrievalCollection:
    def __init__(self, functions: dict, backend: str, seed: int) -> None:
        self.functions = functions  # class i -> retrieval function of width i
        self.backend = backend
        self.seed = seed

    @classmethod
    def build(cls, hashes, local_ranks, sizes, backend: str = "ribbon", seed: int = 0) -> "RetrievalCollection":
        hashes = np.asarray(hashes, dtype=np.uint64)
        ranks = np.asarray(local_ranks, dtype=np.uint64)
        sizes = np.asarray(sizes, dtype=np.uint64)
        if not (len(hashes) == len(ranks) == len(sizes)):
            raise ValueError("hashes, ranks and sizes differ in length")
        if len(sizes) and sizes.min() < 2:
            raise ValueError("entries from buckets of size <= 1 must not be stored")
        if np.any(ranks >= sizes):
            raise ValueError("local rank must be smaller than its bucket size")
        classes = ceil_log2_np(sizes)
        functions = {}
        for i in np.unique(classes).tolist():
            if i > MAX_WIDTH:
                raise ValueError("mapping too skewed: bucket needs more than 64 rank bits")
            sel = classes == i
            functions[i] = build_retrieval(hashes[sel], ranks[sel], i, backend, seed=mix64(seed + i))
        return cls(functions, backend, seed)

    @property
    def max_class(self) -> int:
        return max(self.functions, default=0)

    def query(self, h: int, b: int) -> int:
        if b < 1:
            raise ValueError("bucket size must be positive")
        if b == 1:
            return 0
        f = self.functions.get(ceil_log2(b))
        if f is None:
            return 0
        return min(f.query(h), b - 1)

    def query_many(self, hashes, sizes) -> np.ndarray:
        hashes = np.asarray(hashes, dtype=np.uint64)
        sizes = np.asarray(sizes, dtype=np.uint64)
        if len(sizes) and sizes.min() < 1:
            raise ValueError("bucket size must be positive")
        out = np.zeros(len(hashes), dtype=np.uint64)
        classes = ceil_log2_np(sizes)
        for i, f in self.functions.items():
            sel = np.flatnonzero(classes == i)
            if sel.size:
                out[sel] = f.query_many(hashes[sel])
        return np.minimum(out, np.maximum(sizes, 1) - np.uint64(1))

    def payload_bits(self) -> int:
        return sum(f.payload_bits() for f in self.functions.values())

    def value_bits(self) -> int:
        """Lower bound ``sum(i * keys in class i)``, before retrieval overhead."""
        return sum(i * f.n for i, f in self.functions.items())

    def space_bits(self) -> int:
        return 3 * 64 + sum(64 + f.space_bits() for f in self.functions.values())

    def class_sizes(self) -> dict[int, int]:
        return {i: f.n for i, f in sorted(self.functions.items())}

    def write(self, w: Writer) -> None:
        w.raw(self.backend.encode())
        w.u64(self.seed)
        w.u64(len(self.functions))
        for i, f in sorted(self.functions.items()):
            w.u64(i)
            write_retrieval(w, f)

    @classmethod
    def read(cls, r: Reader) -> "RetrievalCollection":
        backend = r.raw().decode()
        seed = r.u64()
        functions = {}
        for _ in range(r.u64()):
            i = r.u64()
            f = read_retrieval(r)
            if f.width != i:
                raise ValueError("retrieval class width mismatch")
            functions[i] = f
        return cls(functions, backend, seed)
