"""MWHC retrieval: XOR of three cells chosen by a 3-uniform hypergraph.

Construction peels the hypergraph in rounds: every vertex of degree one
frees its edge, and edges freed in the same round never share their free
vertex, so a whole round can be peeled and later assigned at once.
"""

from __future__ import annotations

import numpy as np

from .._hashing import MASK32, fastrange32, fastrange32_np, hash_int, hash_int_np, mix64, mix64_np
from .._io import Reader, Writer
from ..elias_fano import PackedInts

SLOTS_PER_100_KEYS = 123
MAX_ATTEMPTS = 16
# below SMALL_N keys a 1.23n hypergraph fails to peel too often (>50% per
# seed around n = 100); those use the looser 1.30n + 16 cells
SMALL_N = 10_000
SMALL_SLOTS_PER_100_KEYS = 130
SMALL_PAD = 16


class RetrievalError(RuntimeError):
    """A retrieval structure could not be constructed."""


def peeling_slots(n: int) -> int:
    """Cell count for ``n`` keys: exactly ``ceil(1.23 n)`` once ``n >= 10_000``."""
    if n == 0:
        return 0
    if n < SMALL_N:
        return -(-SMALL_SLOTS_PER_100_KEYS * n // 100) + SMALL_PAD
    return -(-SLOTS_PER_100_KEYS * n // 100)


def _parts(m: int) -> tuple[int, int, int]:
    p = m // 3
    return p, p, m - 2 * p


def _vertices(h: int, seed: int, m: int) -> tuple[int, int, int]:
    p0, p1, p2 = _parts(m)
    x = hash_int(h, seed)
    y = mix64(x)
    return (
        fastrange32(x & MASK32, p0),
        p0 + fastrange32(x >> 32, p1),
        p0 + p1 + fastrange32(y & MASK32, p2),
    )


def _vertices_np(h: np.ndarray, seed: int, m: int) -> np.ndarray:
    p0, p1, p2 = _parts(m)
    x = hash_int_np(h, seed)
    y = mix64_np(x)
    lo = np.uint64(MASK32)
    out = np.empty((len(h), 3), dtype=np.int64)
    out[:, 0] = fastrange32_np(x & lo, p0)
    out[:, 1] = p0 + fastrange32_np(x >> np.uint64(32), p1).astype(np.int64)
    out[:, 2] = p0 + p1 + fastrange32_np(y & lo, p2).astype(np.int64)
    return out


def _peel(edges: np.ndarray, m: int) -> list[tuple[np.ndarray, np.ndarray]] | None:
    """Peel rounds as ``(edge ids, free vertices)``; ``None`` if a 2-core remains."""
    n = len(edges)
    flat = edges.ravel()
    deg = np.bincount(flat, minlength=m).astype(np.int64)
    xor_edge = np.zeros(m, dtype=np.int64)
    np.bitwise_xor.at(xor_edge, flat, np.repeat(np.arange(n, dtype=np.int64), 3))
    frontier = np.flatnonzero(deg == 1)
    rounds = []
    peeled = 0
    while frontier.size:
        frontier = frontier[deg[frontier] == 1]
        if not frontier.size:
            break
        edge_ids, first = np.unique(xor_edge[frontier], return_index=True)
        free = frontier[first]
        rounds.append((edge_ids, free))
        peeled += len(edge_ids)
        touched = edges[edge_ids].ravel()
        np.subtract.at(deg, touched, 1)
        np.bitwise_xor.at(xor_edge, touched, np.repeat(edge_ids, 3))
        frontier = np.unique(touched[deg[touched] == 1])
    if peeled != n:
        return None
    return rounds


class PeelingRetrieval:
    """Static function ``hash -> width-bit value`` in ``ceil(1.23 n) * width`` bits."""

    backend = "peeling"

    def __init__(self, width: int, n: int, m: int, seed: int, cells: PackedInts) -> None:
        self.width = width
        self.n = n
        self.m = m
        self.seed = seed
        self._cells = cells

    @classmethod
    def build(cls, hashes: np.ndarray, values: np.ndarray, width: int, seed: int = 0) -> "PeelingRetrieval":
        hashes = np.asarray(hashes, dtype=np.uint64)
        values = np.asarray(values, dtype=np.uint64)
        n = len(hashes)
        m = peeling_slots(n)
        if n == 0:
            return cls(width, 0, 0, seed, PackedInts(np.zeros(0, dtype=np.uint64), width))
        for attempt in range(MAX_ATTEMPTS):
            s = mix64(seed + attempt) if attempt else seed
            edges = _vertices_np(hashes, s, m)
            rounds = _peel(edges, m)
            if rounds is None:
                continue
            cells = np.zeros(m, dtype=np.uint64)
            for edge_ids, free in reversed(rounds):
                e = edges[edge_ids]
                cells[free] = values[edge_ids] ^ cells[e[:, 0]] ^ cells[e[:, 1]] ^ cells[e[:, 2]]
            return cls(width, n, m, s, PackedInts(cells, width))
        raise RetrievalError(f"hypergraph peeling failed {MAX_ATTEMPTS} times for {n} keys")

    def query(self, h: int) -> int:
        if self.m == 0:
            return 0
        a, b, c = _vertices(h, self.seed, self.m)
        cells = self._cells
        return cells[a] ^ cells[b] ^ cells[c]

    def query_many(self, hashes: np.ndarray) -> np.ndarray:
        hashes = np.asarray(hashes, dtype=np.uint64)
        if self.m == 0:
            return np.zeros(len(hashes), dtype=np.uint64)
        v = _vertices_np(hashes, self.seed, self.m)
        get = self._cells.get_many
        return get(v[:, 0]) ^ get(v[:, 1]) ^ get(v[:, 2])

    def payload_bits(self) -> int:
        return self.m * self.width

    def space_bits(self) -> int:
        return 4 * 64 + self.payload_bits()

    def write(self, w: Writer) -> None:
        w.u64(self.width)
        w.u64(self.n)
        w.u64(self.m)
        w.u64(self.seed)
        self._cells.write(w)

    @classmethod
    def read(cls, r: Reader) -> "PeelingRetrieval":
        width, n, m, seed = r.u64(), r.u64(), r.u64(), r.u64()
        cells = PackedInts.read(r)
        if cells.n != m or cells.width != width:
            raise ValueError("corrupt peeling retrieval header")
        return cls(width, n, m, seed, cells)
