"""Monotone minimal perfect hashing for 64-bit integers.

A monotone mapper splits the sorted keys into buckets. The rank of the first
key of every bucket is kept in an Elias-Fano sequence, and the position of a
key inside its bucket comes from a retrieval collection. A query adds the two.
"""

from __future__ import annotations

import numpy as np

from ._hashing import hash_int, hash_int_np, mix64
from ._io import FormatError, Reader, Writer
from .elias_fano import EliasFano
from .mappers import build_mapper, read_mapper, write_mapper
from .retrieval import DuplicateKeyError, RetrievalCollection, RetrievalError

MAGIC = b"LMHI"
VERSION = 1
HASH_ATTEMPTS = 4


def _check_keys(keys) -> np.ndarray:
    if isinstance(keys, np.ndarray) and keys.dtype.kind in "iu":
        if keys.dtype.kind == "i" and len(keys) and keys.min() < 0:
            raise ValueError("keys must be non-negative")
        arr = keys.astype(np.uint64)
    else:
        seq = [int(k) for k in keys]
        if any(k < 0 or k >> 64 for k in seq):
            raise ValueError("keys must be 64-bit unsigned integers")
        arr = np.array(seq, dtype=np.uint64)
    if len(arr) == 0:
        raise ValueError("cannot build over an empty key set")
    if len(arr) > 1:
        d = arr[1:] > arr[:-1]
        if not d.all():
            if np.any(arr[1:] == arr[:-1]):
                raise ValueError("duplicate keys")
            raise ValueError("keys must be sorted in increasing order")
    return arr


class LeMonHash:
    """``query(key) -> rank`` for a static sorted set of 64-bit integers."""

    def __init__(self, n: int, mapper, global_ranks: EliasFano, ranks: RetrievalCollection, seed: int) -> None:
        self.n = n
        self.mapper = mapper
        self.global_ranks = global_ranks
        self.ranks = ranks
        self.seed = seed
        self.build_buckets: np.ndarray | None = None

    @classmethod
    def build(cls, keys, mapper: str = "pgm", eps: int = 31, backend: str = "ribbon",
              seed: int = 0, record_buckets: bool = False) -> "LeMonHash":
        """Build over strictly increasing keys.

        ``mapper`` is one of ``linear``, ``segmented``, ``pgm`` or ``auto``;
        ``eps`` only matters for ``pgm``. With ``record_buckets`` the
        construction-time bucket of every key is kept in ``build_buckets``.
        """
        keys = _check_keys(keys)
        n = len(keys)
        m = build_mapper(mapper, keys, eps)
        buckets = np.asarray(m.map_many(keys), dtype=np.int64)
        if n > 1 and np.any(buckets[1:] < buckets[:-1]):
            raise AssertionError("mapper is not monotone on the keys")
        sizes = np.bincount(buckets, minlength=m.bucket_count)
        starts = np.concatenate(([0], np.cumsum(sizes)))
        global_ranks = EliasFano(starts, n + 1)
        local = np.arange(n, dtype=np.int64) - starts[buckets]
        b = sizes[buckets]
        sel = b >= 2
        last_error: Exception | None = None
        for attempt in range(HASH_ATTEMPTS):
            s = seed if attempt == 0 else mix64(seed + attempt)
            try:
                coll = RetrievalCollection.build(hash_int_np(keys[sel], s), local[sel], b[sel], backend, seed=s)
            except (DuplicateKeyError, RetrievalError) as exc:
                last_error = exc
                continue
            h = cls(n, m, global_ranks, coll, s)
            if record_buckets:
                h.build_buckets = buckets
            return h
        raise RetrievalError(f"could not build the rank collection: {last_error}")

    def bucket_of(self, q: int) -> int:
        return self.mapper.map(q)

    def bucket_of_many(self, qs) -> np.ndarray:
        return np.asarray(self.mapper.map_many(qs), dtype=np.int64)

    def query(self, q: int) -> int:
        q = int(q)
        j = self.mapper.map(q)
        g = self.global_ranks[j]
        b = self.global_ranks[j + 1] - g
        if b == 0:
            return min(g, self.n - 1)
        return g + self.ranks.query(hash_int(q, self.seed), b)

    def query_many(self, qs) -> np.ndarray:
        qs = np.asarray(qs, dtype=np.uint64)
        j = self.bucket_of_many(qs)
        g = self.global_ranks.access_many(j).astype(np.int64)
        b = self.global_ranks.access_many(j + 1).astype(np.int64) - g
        out = np.minimum(g, self.n - 1)
        sel = np.flatnonzero(b >= 2)
        if sel.size:
            local = self.ranks.query_many(hash_int_np(qs[sel], self.seed), b[sel].astype(np.uint64))
            out[sel] = g[sel] + local.astype(np.int64)
        return out

    __call__ = query

    def space_breakdown(self) -> dict:
        parts = {
            "headerBits": 3 * 64,
            "mapperBits": self.mapper.space_bits(),
            "globalRankBits": self.global_ranks.space_bits(),
            "retrievalBits": self.ranks.space_bits(),
        }
        total = sum(parts.values())
        parts["totalBits"] = total
        parts["bitsPerKey"] = total / self.n
        parts["retrievalPayloadBits"] = self.ranks.value_bits()
        return parts

    def bits_per_key(self) -> float:
        return self.space_breakdown()["bitsPerKey"]

    def describe(self) -> dict:
        d = {"n": self.n, "backend": self.ranks.backend, "seed": self.seed}
        d.update(self.mapper.describe())
        d["maxClass"] = self.ranks.max_class
        return d

    def to_bytes(self) -> bytes:
        w = Writer()
        w.raw(MAGIC)
        w.u64(VERSION)
        w.u64(self.n)
        w.u64(self.seed)
        write_mapper(w, self.mapper)
        self.global_ranks.write(w)
        self.ranks.write(w)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "LeMonHash":
        r = Reader(data)
        try:
            magic = r.raw()
        except FormatError:
            raise FormatError("not a LeMonHash file") from None
        if magic != MAGIC:
            raise FormatError("not a LeMonHash file")
        version = r.u64()
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")
        n, seed = r.u64(), r.u64()
        mapper = read_mapper(r)
        global_ranks = EliasFano.read(r)
        ranks = RetrievalCollection.read(r)
        if not r.at_end():
            raise FormatError("trailing bytes after structure")
        return cls(n, mapper, global_ranks, ranks, seed)

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "LeMonHash":
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())
