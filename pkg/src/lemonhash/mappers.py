"""Monotone key -> bucket mappers.

Every mapper sends a sorted key set of size ``n`` to buckets ``0..n-1`` and is
non-decreasing over the whole 64-bit domain, not just on the keys.
"""

from __future__ import annotations

import bisect
import math

import numpy as np

from ._hashing import ceil_log2_np
from ._io import Reader, Writer
from .pgm import PgmModel

AUTO_EPSILONS = (15, 31, 63)
SLICE_KEYS_LOG2 = 12


def poisson_payload_constant(terms: int = 40) -> float:
    """Expected local-rank bits per key when bucket sizes are Poisson(1)."""
    total = 0.0
    for k in range(2, terms):
        total += k * math.ceil(math.log2(k)) / (math.factorial(k) * math.e)
    return total


def linear_map(x: int, n: int, u: int) -> int:
    return (min(x, u - 1) * n) // u


class LinearMapper:
    kind = "linear"

    def __init__(self, n: int, u: int) -> None:
        if n < 1 or u < 1:
            raise ValueError("linear mapper needs n >= 1 and u >= 1")
        self.n = n
        self.u = u

    @classmethod
    def build(cls, keys: np.ndarray) -> "LinearMapper":
        return cls(len(keys), int(keys[-1]) + 1)

    @property
    def bucket_count(self) -> int:
        return self.n

    def map(self, x: int) -> int:
        return linear_map(x, self.n, self.u)

    def map_many(self, xs) -> np.ndarray:
        n, u = self.n, self.u
        top = u - 1
        xs = np.asarray(xs, dtype=np.uint64)
        if u <= 1 << 32 and n <= 1 << 32:
            return ((np.minimum(xs, np.uint64(top)) * np.uint64(n)) // np.uint64(u)).astype(np.int64)
        # the product needs more than 64 bits
        return np.array([(min(x, top) * n) // u for x in xs.tolist()], dtype=np.int64)

    def space_bits(self) -> int:
        return 2 * 64

    def describe(self) -> dict:
        return {"kind": self.kind}

    def write(self, w: Writer) -> None:
        w.u64(self.n)
        w.raw(self.u.to_bytes(9, "little"))

    @classmethod
    def read(cls, r: Reader) -> "LinearMapper":
        n = r.u64()
        return cls(n, int.from_bytes(r.raw(), "little"))


class SegmentedMapper:
    """Equal-width universe slices, linear interpolation of ranks inside each."""

    kind = "segmented"

    def __init__(self, n: int, u: int, boundary_ranks: np.ndarray) -> None:
        self.n = n
        self.u = u
        self.ranks = np.asarray(boundary_ranks, dtype=np.int64)
        self.s = len(self.ranks) - 1
        if self.s < 1 or self.ranks[0] != 0 or self.ranks[-1] != n or np.any(np.diff(self.ranks) < 0):
            raise ValueError("invalid boundary ranks")
        self._starts = [j * u // self.s for j in range(self.s + 1)]
        self._ranks_list = self.ranks.tolist()

    @staticmethod
    def default_slices(n: int) -> int:
        return max(1, n >> SLICE_KEYS_LOG2)

    @classmethod
    def build(cls, keys: np.ndarray, s: int | None = None) -> "SegmentedMapper":
        n = len(keys)
        u = int(keys[-1]) + 1
        if s is None:
            s = cls.default_slices(n)
        if s < 1:
            raise ValueError("slice count must be positive")
        s = min(s, u)
        starts = [j * u // s for j in range(s)]
        inner = np.searchsorted(keys, np.array(starts, dtype=np.uint64), side="left")
        ranks = np.append(inner, n)
        return cls(n, u, ranks)

    @property
    def bucket_count(self) -> int:
        return self.n

    def _map(self, x: int, j: int) -> int:
        lo, hi = self._starts[j], self._starts[j + 1]
        r0, r1 = self._ranks_list[j], self._ranks_list[j + 1]
        return min(r0 + (min(x, self.u - 1) - lo) * (r1 - r0) // (hi - lo), self.n - 1)

    def map(self, x: int) -> int:
        j = min(bisect.bisect_right(self._starts, x) - 1, self.s - 1)
        return self._map(x, j)

    def map_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.uint64)
        starts = np.array(self._starts[:-1], dtype=np.uint64)
        js = np.searchsorted(starts, xs, side="right") - 1
        return np.array([self._map(x, j) for x, j in zip(xs.tolist(), js.tolist())], dtype=np.int64)

    def space_bits(self) -> int:
        return 3 * 64 + 64 * (self.s + 1)

    def describe(self) -> dict:
        return {"kind": self.kind, "slices": self.s}

    def write(self, w: Writer) -> None:
        w.u64(self.n)
        w.raw(self.u.to_bytes(9, "little"))
        w.array(self.ranks, np.int64)

    @classmethod
    def read(cls, r: Reader) -> "SegmentedMapper":
        n = r.u64()
        u = int.from_bytes(r.raw(), "little")
        return cls(n, u, r.array(np.int64))


class PgmMapper:
    """Bucket = PGM rank estimate, so buckets hold at most ``2 eps + 1`` keys."""

    kind = "pgm"

    def __init__(self, model: PgmModel) -> None:
        self.model = model

    @classmethod
    def build(cls, keys: np.ndarray, eps: int = 31, encoding: str = "compressed") -> "PgmMapper":
        if eps < 1:
            raise ValueError("PGM mapper needs eps >= 1")
        return cls(PgmModel.build(keys, eps, encoding))

    @property
    def eps(self) -> int:
        return self.model.eps

    @property
    def bucket_count(self) -> int:
        return self.model.n

    def map(self, x: int) -> int:
        return self.model.estimate(x)

    def map_many(self, xs) -> np.ndarray:
        return self.model.estimate_many(xs)

    def space_bits(self) -> int:
        return self.model.space_bits()

    def describe(self) -> dict:
        return {"kind": self.kind, "eps": self.eps, "segments": self.model.m}

    def write(self, w: Writer) -> None:
        self.model.write(w)

    @classmethod
    def read(cls, r: Reader) -> "PgmMapper":
        return cls(PgmModel.read(r))


MAPPERS = {"linear": LinearMapper, "segmented": SegmentedMapper, "pgm": PgmMapper}
_TAGS = {"linear": 1, "segmented": 2, "pgm": 3}


def payload_bits(buckets: np.ndarray, bucket_count: int) -> int:
    """Sum of ``b * ceil(log2 b)`` over buckets with ``b >= 2``."""
    sizes = np.bincount(np.asarray(buckets, dtype=np.int64), minlength=bucket_count)
    sizes = sizes[sizes >= 2]
    return int(np.sum(sizes * ceil_log2_np(sizes)))


def mapper_cost_estimate(mapper, keys: np.ndarray) -> int:
    """Predicted total bits: mapper, local-rank payload and ``2n`` for global ranks."""
    n = len(keys)
    return mapper.space_bits() + payload_bits(mapper.map_many(keys), mapper.bucket_count) + 2 * n


def auto_tune(keys: np.ndarray, epsilons=AUTO_EPSILONS) -> tuple[PgmMapper, list[dict]]:
    """Cheapest PGM mapper over ``epsilons``; ties go to the smaller eps.

    Returns the winner and a log with one entry per candidate.
    """
    best = None
    best_cost = None
    log = []
    for eps in sorted(epsilons):
        cand = PgmMapper.build(keys, eps)
        mbits = cand.space_bits()
        if best_cost is not None and mbits + 2 * len(keys) >= best_cost:
            log.append({"eps": eps, "mapper_bits": mbits, "cost": None, "skipped": True})
            continue
        cost = mapper_cost_estimate(cand, keys)
        log.append({"eps": eps, "mapper_bits": mbits, "cost": cost, "skipped": False})
        if best_cost is None or cost < best_cost:
            best, best_cost = cand, cost
    return best, log


def build_mapper(kind: str, keys: np.ndarray, eps: int = 31):
    keys = np.asarray(keys, dtype=np.uint64)
    if len(keys) == 0:
        raise ValueError("cannot build a mapper for an empty key set")
    if kind == "linear":
        return LinearMapper.build(keys)
    if kind == "segmented":
        return SegmentedMapper.build(keys)
    if kind == "pgm":
        return PgmMapper.build(keys, eps)
    if kind == "auto":
        return auto_tune(keys)[0]
    raise ValueError(f"unknown mapper kind {kind!r}")


def write_mapper(w: Writer, mapper) -> None:
    w.u64(_TAGS[mapper.kind])
    mapper.write(w)


def read_mapper(r: Reader):
    tag = r.u64()
    for kind, t in _TAGS.items():
        if t == tag:
            return MAPPERS[kind].read(r)
    raise ValueError(f"unknown mapper tag {tag}")
