"""Elias-Fano coded monotone sequences.

:class:`EliasFano` stores a nondecreasing sequence of ``n`` integers below a
universe ``u`` in ``n * floor(log2(u/n)) + 2n + o(n)`` bits and supports access
and predecessor queries. :class:`DedupEliasFano` additionally drops groups of
three values that merely repeat the value in front of them, which is what the
per-level rank sequences of the string structure are full of.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ._io import Reader, Writer
from .bits import BitVector

_LINEAR_SCAN_WINDOW = 8


def _low_width(universe: int, n: int) -> int:
    # floor(log2(universe / n)); the high part then has at most 2n bits
    ratio = universe // n
    return ratio.bit_length() - 1 if ratio > 1 else 0


def _pack_fixed(values: np.ndarray, width: int) -> np.ndarray:
    """Pack ``values`` (< 2**width, width <= 64) into little-endian uint64 words."""
    n = len(values)
    n_words = (n * width + 63) // 64 + 1
    if width == 0 or n == 0:
        return np.zeros(n_words, dtype=np.uint64)
    bits = ((values[:, None] >> np.arange(width, dtype=np.uint64)[None, :]) & np.uint64(1)).astype(bool)
    flat = np.zeros(n_words * 64, dtype=bool)
    flat[: n * width] = bits.ravel()
    return np.packbits(flat, bitorder="little").view("<u8").astype(np.uint64)


def _unpack_fixed(words: np.ndarray, width: int, idx: np.ndarray) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    if width == 0:
        return np.zeros(idx.shape, dtype=np.uint64)
    bit = idx * width
    w = bit >> 6
    off = (bit & 63).astype(np.uint64)
    lo = words[w] >> off
    # second word only matters when the field straddles a word boundary
    hi_shift = (np.uint64(64) - off) & np.uint64(63)
    hi = np.where(off > np.uint64(0), words[w + 1] << hi_shift, np.uint64(0))
    val = lo | hi
    if width < 64:
        val &= np.uint64((1 << width) - 1)
    return val


def _get_fixed(words_list: list[int], width: int, i: int) -> int:
    if width == 0:
        return 0
    bit = i * width
    w, off = bit >> 6, bit & 63
    val = words_list[w] >> off
    if off + width > 64:
        val |= words_list[w + 1] << (64 - off)
    return val & ((1 << width) - 1)


class PackedInts:
    """Fixed-width packed integer array (width 0..64)."""

    def __init__(self, values: np.ndarray, width: int) -> None:
        values = np.asarray(values, dtype=np.uint64)
        if width < 64 and len(values) and int(values.max()) >> width:
            raise ValueError(f"value does not fit in {width} bits")
        self.width = width
        self.n = len(values)
        self._words = _pack_fixed(values, width)
        self._list = self._words.tolist()

    @classmethod
    def _from_words(cls, words: np.ndarray, width: int, n: int) -> "PackedInts":
        obj = cls.__new__(cls)
        obj.width, obj.n = width, n
        obj._words = np.asarray(words, dtype=np.uint64)
        obj._list = obj._words.tolist()
        return obj

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> int:
        return _get_fixed(self._list, self.width, i)

    def get_many(self, idx: np.ndarray) -> np.ndarray:
        return _unpack_fixed(self._words, self.width, idx)

    def space_bits(self) -> int:
        return self.n * self.width

    def write(self, w: Writer) -> None:
        w.u64(self.width)
        w.u64(self.n)
        w.array(self._words, np.uint64)

    @classmethod
    def read(cls, r: Reader) -> "PackedInts":
        width, n = r.u64(), r.u64()
        return cls._from_words(r.array(np.uint64), width, n)


class EliasFano:
    """Elias-Fano coded nondecreasing sequence.

    ``universe`` is an exclusive bound on the values; pass ``None`` (or 0) to
    use ``max(values) + 1``.
    """

    def __init__(self, values: Sequence[int] | np.ndarray, universe: int | None = None) -> None:
        vals = np.asarray(values, dtype=np.uint64)
        n = len(vals)
        if n == 0:
            raise ValueError("Elias-Fano sequence needs at least one value")
        if n > 1 and np.any(vals[1:] < vals[:-1]):
            raise ValueError("values must be nondecreasing")
        top = int(vals[-1])
        if not universe:
            universe = top + 1
        if top >= universe:
            raise ValueError(f"value {top} not below universe {universe}")
        self.n = n
        self.universe = int(universe)
        self.low_width = _low_width(self.universe, n)
        lw = np.uint64(self.low_width)
        if self.low_width < 64:
            low = vals & np.uint64((1 << self.low_width) - 1)
            high = (vals >> lw).astype(np.int64)
        else:
            low = vals
            high = np.zeros(n, dtype=np.int64)
        self._low = PackedInts(low, self.low_width)
        high_len = n + int(high[-1]) + 1
        self._high = BitVector.from_positions(high + np.arange(n, dtype=np.int64), high_len)

    # -- access ------------------------------------------------------------

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> int:
        if i < 0:
            i += self.n
        if not 0 <= i < self.n:
            raise IndexError(f"index {i} out of range for length {self.n}")
        return ((self._high.select1(i) - i) << self.low_width) | self._low[i]

    def access_many(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise IndexError("index out of range")
        high = (self._high.select1_many(idx) - idx).astype(np.uint64)
        if self.low_width >= 64:
            return self._low.get_many(idx)
        return (high << np.uint64(self.low_width)) | self._low.get_many(idx)

    def to_numpy(self) -> np.ndarray:
        return self.access_many(np.arange(self.n))

    def __iter__(self):
        return iter(self.to_numpy().tolist())

    # -- predecessor ---------------------------------------------------------

    def _high_range(self, h: int) -> tuple[int, int]:
        """Index range of the elements whose high part equals ``h``."""
        zeros = self._high.count_zeros
        start = 0 if h == 0 else self._high.select0(h - 1) - (h - 1)
        end = self._high.select0(h) - h if h < zeros else self.n
        return start, end

    def predecessor(self, q: int) -> tuple[int, int] | None:
        """``(index, value)`` of the largest element ``<= q``; ties go to the largest index.

        Returns ``None`` when every element is larger than ``q``.
        """
        if q >= self.universe:
            q = self.universe - 1
        h = q >> self.low_width
        if h >= self._high.count_zeros:
            return self.n - 1, self[self.n - 1]
        start, end = self._high_range(h)
        q_low = q & ((1 << self.low_width) - 1)
        low = self._low
        if end - start <= _LINEAR_SCAN_WINDOW:
            i = start
            while i < end and low[i] <= q_low:
                i += 1
        else:
            lo, hi = start, end
            while lo < hi:
                mid = (lo + hi) // 2
                if low[mid] <= q_low:
                    lo = mid + 1
                else:
                    hi = mid
            i = lo
        idx = i - 1
        if idx < 0:
            return None
        return idx, self[idx]

    def predecessor_many(self, q: np.ndarray) -> np.ndarray:
        """Indices of the predecessors of ``q``; -1 where none exists."""
        q = np.minimum(np.asarray(q, dtype=np.uint64), np.uint64(self.universe - 1))
        lw = self.low_width
        if lw >= 64:
            h = np.zeros(q.shape, dtype=np.int64)
            q_low = q
        else:
            h = (q >> np.uint64(lw)).astype(np.int64)
            q_low = q & np.uint64((1 << lw) - 1)
        zeros = self._high.count_zeros
        beyond = h >= zeros
        hc = np.minimum(h, zeros - 1)
        start = np.zeros(q.shape, dtype=np.int64)
        nz = hc > 0
        start[nz] = self._high.select0_many(hc[nz] - 1) - (hc[nz] - 1)
        end = self._high.select0_many(hc) - hc
        lo, hi = start, end
        active = lo < hi
        while active.any():
            mid = (lo + hi) // 2
            go_right = np.zeros(q.shape, dtype=bool)
            go_right[active] = self._low.get_many(mid[active]) <= q_low[active]
            lo = np.where(active & go_right, mid + 1, lo)
            hi = np.where(active & ~go_right, mid, hi)
            active = lo < hi
        out = lo - 1
        out[beyond] = self.n - 1
        return out

    # -- space & serialization ---------------------------------------------

    def space_bits(self) -> int:
        """Exact bits: 3-word header, packed low parts, high bit vector and its index."""
        return 3 * 64 + self._low.space_bits() + self._high.space_bits()

    def write(self, w: Writer) -> None:
        w.u64(self.n)
        w.u64(self.universe)
        w.u64(self.low_width)
        self._low.write(w)
        self._high.write(w)

    @classmethod
    def read(cls, r: Reader) -> "EliasFano":
        obj = cls.__new__(cls)
        obj.n, obj.universe, obj.low_width = r.u64(), r.u64(), r.u64()
        obj._low = PackedInts.read(r)
        obj._high = BitVector.read(r)
        if obj._high.count_ones != obj.n or obj._low.n != obj.n:
            raise ValueError("corrupt Elias-Fano header")
        return obj

    def to_bytes(self) -> bytes:
        w = Writer()
        self.write(w)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "EliasFano":
        return cls.read(Reader(data))


GROUP = 3


class DedupEliasFano:
    """Elias-Fano sequence that skips groups of 3 values repeating their predecessor.

    Element 0 is always kept; groups start at index 1. A group is dropped when
    all three of its values equal the value right before the group. A bit
    vector with rank support marks the dropped groups.
    """

    def __init__(self, values: Sequence[int] | np.ndarray, universe: int | None = None) -> None:
        vals = np.asarray(values, dtype=np.uint64)
        n = len(vals)
        if n == 0:
            raise ValueError("sequence needs at least one value")
        if n > 1 and np.any(vals[1:] < vals[:-1]):
            raise ValueError("values must be nondecreasing")
        self.n = n
        n_groups = (n - 1) // GROUP
        self.n_groups = n_groups
        if n_groups:
            grouped = vals[1 : 1 + GROUP * n_groups].reshape(n_groups, GROUP)
            before = vals[GROUP * np.arange(n_groups)]
            # nondecreasing: the group repeats its predecessor iff its last value does
            removed = grouped[:, -1] == before
        else:
            removed = np.zeros(0, dtype=bool)
        self._removed = BitVector.from_bools(removed, n_groups)
        keep = np.ones(n, dtype=bool)
        if n_groups:
            keep[1 : 1 + GROUP * n_groups] = np.repeat(~removed, GROUP)
        self._inner = EliasFano(vals[keep], universe)

    @property
    def removed_groups(self) -> int:
        return self._removed.count_ones

    def __len__(self) -> int:
        return self.n

    def _inner_index(self, i: int) -> int:
        if i == 0:
            return 0
        g = (i - 1) // GROUP
        if g >= self.n_groups:
            return i - GROUP * self._removed.count_ones
        dropped_before = self._removed.rank1(g)
        if self._removed[g]:
            # last retained element in front of the group
            return GROUP * (g - dropped_before)
        return 1 + GROUP * (g - dropped_before) + (i - 1) % GROUP

    def __getitem__(self, i: int) -> int:
        if i < 0:
            i += self.n
        if not 0 <= i < self.n:
            raise IndexError(f"index {i} out of range for length {self.n}")
        return self._inner[self._inner_index(i)]

    def access_many(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise IndexError("index out of range")
        g = (idx - 1) // GROUP
        inner = np.empty(idx.shape, dtype=np.int64)
        head = idx == 0
        tail = (~head) & (g >= self.n_groups)
        mid = ~(head | tail)
        inner[head] = 0
        inner[tail] = idx[tail] - GROUP * self._removed.count_ones
        if mid.any():
            gm = g[mid]
            dropped_before = self._removed.rank1_many(gm)
            is_removed = self._removed.get_many(gm).astype(bool)
            kept = 1 + GROUP * (gm - dropped_before) + (idx[mid] - 1) % GROUP
            inner[mid] = np.where(is_removed, GROUP * (gm - dropped_before), kept)
        return self._inner.access_many(inner)

    def to_numpy(self) -> np.ndarray:
        return self.access_many(np.arange(self.n))

    def space_bits(self) -> int:
        return 64 + self._inner.space_bits() + self._removed.space_bits()

    def write(self, w: Writer) -> None:
        w.u64(self.n)
        self._removed.write(w)
        self._inner.write(w)

    @classmethod
    def read(cls, r: Reader) -> "DedupEliasFano":
        obj = cls.__new__(cls)
        obj.n = r.u64()
        obj.n_groups = (obj.n - 1) // GROUP
        obj._removed = BitVector.read(r)
        obj._inner = EliasFano.read(r)
        if len(obj._removed) != obj.n_groups:
            raise ValueError("corrupt dedup sequence header")
        return obj
