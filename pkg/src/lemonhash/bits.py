"""Plain bit vectors with rank and select support.

The auxiliary index is a two-level rank directory plus sampled select hints:

* superblocks of 65536 bits hold an absolute 64-bit count of preceding 1-bits,
* blocks of 1024 bits (16 words) hold a 16-bit count relative to their superblock,
* every 8192nd 1-bit and 0-bit has its position sampled.

Rank adds the two directory entries and popcounts at most 16 words. Select
narrows the block range with the samples, binary-searches the block counts and
finishes inside a word with byte tables. Everything is also available in
vectorised form (``*_many``) operating on numpy arrays.

Positions are exclusive for rank and 0-based for select throughout.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from ._io import Reader, Writer

WORD_BITS = 64
BLOCK_WORDS = 16
BLOCK_BITS = BLOCK_WORDS * WORD_BITS
SUPER_BLOCKS = 64
SUPER_BITS = SUPER_BLOCKS * BLOCK_BITS
SELECT_SAMPLE = 8192

_BYTE_POP = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)
# _SELECT_IN_BYTE[b, k] = position of the k-th set bit of byte b (8 if absent)
_SELECT_IN_BYTE = np.full((256, 8), 8, dtype=np.uint8)
for _b in range(256):
    _k = 0
    for _bit in range(8):
        if _b >> _bit & 1:
            _SELECT_IN_BYTE[_b, _k] = _bit
            _k += 1
_SELECT_IN_BYTE_LIST = _SELECT_IN_BYTE.tolist()


def _select_in_word(word: int, k: int) -> int:
    """Position of the k-th (0-based) set bit of a 64-bit int."""
    pos = 0
    while True:
        byte = word & 0xFF
        c = _BYTE_POP_LIST[byte]
        if k < c:
            return pos + _SELECT_IN_BYTE_LIST[byte][k]
        k -= c
        word >>= 8
        pos += 8


_BYTE_POP_LIST = _BYTE_POP.tolist()


def _select_in_word_np(words: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Vectorised select inside 64-bit words; ``k`` must be < popcount(word)."""
    as_bytes = words.astype("<u8").view(np.uint8).reshape(-1, 8)
    counts = _BYTE_POP[as_bytes].astype(np.int64)
    cum = np.cumsum(counts, axis=1)
    k = k.astype(np.int64)
    byte_idx = (cum <= k[:, None]).sum(axis=1)
    before = np.where(byte_idx > 0, cum[np.arange(len(k)), np.maximum(byte_idx - 1, 0)], 0)
    byte_idx_c = np.minimum(byte_idx, 7)
    byte_vals = as_bytes[np.arange(len(k)), byte_idx_c]
    return byte_idx_c * 8 + _SELECT_IN_BYTE[byte_vals, k - before].astype(np.int64)


class BitVector:
    """Immutable bit vector with constant-time rank and fast select."""

    def __init__(self, words: np.ndarray, length: int) -> None:
        words = np.ascontiguousarray(words, dtype=np.uint64)
        need = (length + WORD_BITS - 1) // WORD_BITS
        if len(words) < need:
            raise ValueError(f"{len(words)} words cannot hold {length} bits")
        words = words[:need].copy()
        if length % WORD_BITS and need:
            words[-1] &= np.uint64((1 << (length % WORD_BITS)) - 1)
        self._words = words
        self._length = int(length)
        self._build_index()

    # -- construction -------------------------------------------------

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(np.zeros((length + 63) // 64, dtype=np.uint64), length)

    @classmethod
    def from_positions(cls, positions: Iterable[int] | np.ndarray, length: int) -> "BitVector":
        """Bit vector of ``length`` bits with exactly the given positions set."""
        pos = np.asarray(positions, dtype=np.int64)
        if pos.size and (pos.min() < 0 or pos.max() >= length):
            raise ValueError("bit position out of range")
        bools = np.zeros(((length + 63) // 64) * 64, dtype=bool)
        bools[pos] = True
        return cls.from_bools(bools, length)

    @classmethod
    def from_bools(cls, bools, length: int | None = None) -> "BitVector":
        bools = np.asarray(bools, dtype=bool)
        if length is None:
            length = len(bools)
        padded = np.zeros(((length + 63) // 64) * 64, dtype=bool)
        padded[:length] = bools[:length]
        packed = np.packbits(padded, bitorder="little")
        return cls(packed.view("<u8").astype(np.uint64), length)

    @classmethod
    def from_string(cls, bits: str) -> "BitVector":
        """``BitVector.from_string("10110")`` sets bits 0, 2 and 3."""
        return cls.from_bools([c == "1" for c in bits], len(bits))

    def _build_index(self) -> None:
        words = self._words
        n_words = len(words)
        n_blocks = (n_words + BLOCK_WORDS - 1) // BLOCK_WORDS
        pops = np.bitwise_count(words).astype(np.int64)
        padded = np.zeros(n_blocks * BLOCK_WORDS, dtype=np.int64)
        padded[:n_words] = pops
        block_pops = padded.reshape(n_blocks, BLOCK_WORDS).sum(axis=1)
        block_abs = np.zeros(n_blocks + 1, dtype=np.int64)
        np.cumsum(block_pops, out=block_abs[1:])
        n_super = (n_blocks + SUPER_BLOCKS - 1) // SUPER_BLOCKS
        self._super = block_abs[: n_blocks : SUPER_BLOCKS].astype(np.uint64)
        if n_super == 0:
            self._super = np.zeros(0, dtype=np.uint64)
        sb = np.arange(n_blocks) // SUPER_BLOCKS
        self._block = (block_abs[:n_blocks] - self._super[sb].astype(np.int64)).astype(np.uint16)
        self._ones = int(block_abs[-1])
        self._n_blocks = n_blocks
        # select samples: positions of every SELECT_SAMPLE-th one / zero
        if self._ones:
            ranks = np.arange(0, self._ones, SELECT_SAMPLE, dtype=np.int64)
            self._sel1 = self._select_many_raw(ranks, ones=True).astype(np.uint64)
        else:
            self._sel1 = np.zeros(0, dtype=np.uint64)
        zeros = self._length - self._ones
        if zeros:
            ranks = np.arange(0, zeros, SELECT_SAMPLE, dtype=np.int64)
            self._sel0 = self._select_many_raw(ranks, ones=False).astype(np.uint64)
        else:
            self._sel0 = np.zeros(0, dtype=np.uint64)
        self._words_list = None

    # -- basic properties ---------------------------------------------

    def __len__(self) -> int:
        return self._length

    @property
    def words(self) -> np.ndarray:
        return self._words

    @property
    def count_ones(self) -> int:
        return self._ones

    @property
    def count_zeros(self) -> int:
        return self._length - self._ones

    def __getitem__(self, pos: int) -> int:
        if not 0 <= pos < self._length:
            raise IndexError(f"bit {pos} out of range for length {self._length}")
        return int(self._words[pos >> 6] >> np.uint64(pos & 63)) & 1

    def get_many(self, pos: np.ndarray) -> np.ndarray:
        pos = np.asarray(pos, dtype=np.int64)
        return ((self._words[pos >> 6] >> (pos & 63).astype(np.uint64)) & np.uint64(1)).astype(np.uint8)

    def to_bools(self) -> np.ndarray:
        bits = np.unpackbits(self._words.astype("<u8").view(np.uint8), bitorder="little")
        return bits[: self._length].astype(bool)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self._length == other._length and np.array_equal(self._words, other._words)

    def __repr__(self) -> str:
        return f"BitVector(length={self._length}, ones={self._ones})"

    # -- rank -------------------------------------------------------------

    def _block_rank(self, block: int) -> int:
        return int(self._super[block // SUPER_BLOCKS]) + int(self._block[block])

    def rank1(self, pos: int) -> int:
        """Number of 1-bits in positions ``[0, pos)``."""
        if not 0 <= pos <= self._length:
            raise IndexError(f"rank position {pos} out of range [0, {self._length}]")
        if pos == self._length:
            return self._ones
        w = pos >> 6
        block = w // BLOCK_WORDS
        r = self._block_rank(block)
        start = block * BLOCK_WORDS
        if w > start:
            r += int(np.bitwise_count(self._words[start:w]).sum())
        off = pos & 63
        if off:
            r += (int(self._words[w]) & ((1 << off) - 1)).bit_count()
        return r

    def rank0(self, pos: int) -> int:
        return pos - self.rank1(pos)

    def rank1_many(self, pos: np.ndarray) -> np.ndarray:
        pos = np.asarray(pos, dtype=np.int64)
        if pos.size and (pos.min() < 0 or pos.max() > self._length):
            raise IndexError("rank position out of range")
        out = np.empty(pos.shape, dtype=np.int64)
        full = pos == self._length
        out[full] = self._ones
        p = pos[~full]
        if p.size:
            w = p >> 6
            block = w // BLOCK_WORDS
            r = self._super[block // SUPER_BLOCKS].astype(np.int64) + self._block[block].astype(np.int64)
            base = block * BLOCK_WORDS
            idx = base[:, None] + np.arange(BLOCK_WORDS)[None, :]
            in_range = idx < w[:, None]
            idx = np.minimum(idx, len(self._words) - 1)
            wp = np.bitwise_count(self._words[idx]).astype(np.int64)
            r += (wp * in_range).sum(axis=1)
            off = (p & 63).astype(np.uint64)
            mask = (np.uint64(1) << off) - np.uint64(1)
            r += np.bitwise_count(self._words[w] & mask).astype(np.int64)
            out[~full] = r
        return out

    def rank0_many(self, pos: np.ndarray) -> np.ndarray:
        pos = np.asarray(pos, dtype=np.int64)
        return pos - self.rank1_many(pos)

    # -- select -----------------------------------------------------------

    def _word(self, i: int) -> int:
        return int(self._words[i])

    def select1(self, i: int) -> int:
        """Position of the i-th (0-based) 1-bit."""
        if not 0 <= i < self._ones:
            raise IndexError(f"select1({i}) out of range: {self._ones} ones")
        return self._select(i, True)

    def select0(self, i: int) -> int:
        """Position of the i-th (0-based) 0-bit."""
        if not 0 <= i < self._length - self._ones:
            raise IndexError(f"select0({i}) out of range: {self._length - self._ones} zeros")
        return self._select(i, False)

    def _block_count(self, block: int, ones: bool) -> int:
        r = self._block_rank(block)
        return r if ones else block * BLOCK_BITS - r

    def _select(self, i: int, ones: bool) -> int:
        samples = self._sel1 if ones else self._sel0
        s = i // SELECT_SAMPLE
        lo = int(samples[s]) // BLOCK_BITS
        hi = int(samples[s + 1]) // BLOCK_BITS if s + 1 < len(samples) else self._n_blocks - 1
        # last block in [lo, hi] whose preceding count is <= i
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self._block_count(mid, ones) <= i:
                lo = mid
            else:
                hi = mid - 1
        k = i - self._block_count(lo, ones)
        w = lo * BLOCK_WORDS
        while True:
            word = self._word(w)
            if not ones:
                word = ~word & 0xFFFFFFFFFFFFFFFF
            c = word.bit_count()
            if k < c:
                return w * 64 + _select_in_word(word, k)
            k -= c
            w += 1

    def _select_many_raw(self, idx: np.ndarray, ones: bool) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size == 0:
            return np.zeros(0, dtype=np.int64)
        blocks = np.arange(self._n_blocks, dtype=np.int64)
        block_ranks = self._super[blocks // SUPER_BLOCKS].astype(np.int64) + self._block.astype(np.int64)
        if not ones:
            block_ranks = blocks * BLOCK_BITS - block_ranks
        block = np.searchsorted(block_ranks, idx, side="right") - 1
        k = idx - block_ranks[block]
        base = block * BLOCK_WORDS
        widx = base[:, None] + np.arange(BLOCK_WORDS)[None, :]
        valid = widx < len(self._words)
        widx = np.minimum(widx, len(self._words) - 1)
        words = self._words[widx]
        if not ones:
            words = ~words
            # bits past the end of the vector are not zeros
            last = len(self._words) - 1
            tail = self._length - last * 64
            if tail < 64:
                pad = np.uint64(((1 << 64) - 1) ^ ((1 << tail) - 1))
                words = np.where(widx == last, words & ~pad, words)
        pops = np.bitwise_count(words).astype(np.int64) * valid
        cum = np.cumsum(pops, axis=1)
        word_in_block = (cum <= k[:, None]).sum(axis=1)
        rows = np.arange(len(idx))
        before = np.where(word_in_block > 0, cum[rows, np.maximum(word_in_block - 1, 0)], 0)
        target = words[rows, word_in_block]
        return (base + word_in_block) * 64 + _select_in_word_np(target, k - before)

    def select1_many(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self._ones):
            raise IndexError("select1 index out of range")
        return self._select_many_raw(idx, True)

    def select0_many(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.count_zeros):
            raise IndexError("select0 index out of range")
        return self._select_many_raw(idx, False)

    # -- space & serialization ------------------------------------------

    def index_bits(self) -> int:
        """Bits of the rank/select directory on top of the raw bits."""
        return 64 * len(self._super) + 16 * len(self._block) + 64 * (len(self._sel1) + len(self._sel0))

    def space_bits(self) -> int:
        return 64 + 64 * len(self._words) + self.index_bits()

    def to_bytes(self) -> bytes:
        w = Writer()
        self.write(w)
        return w.getvalue()

    def write(self, w: Writer) -> None:
        w.u64(self._length)
        w.array(self._words, np.uint64)

    @classmethod
    def read(cls, r: Reader) -> "BitVector":
        length = r.u64()
        words = r.array(np.uint64)
        return cls(words, length)

    @classmethod
    def from_bytes(cls, data: bytes) -> "BitVector":
        return cls.read(Reader(data))
