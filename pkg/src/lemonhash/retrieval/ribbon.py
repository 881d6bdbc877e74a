"""Bumped ribbon retrieval (simplified).

Each key contributes one equation ``XOR_j coeff_j * Z[start + j] = value`` over
GF(2) with a 64-bit coefficient window, so the system is a band matrix that is
solved by on-the-fly Gaussian elimination. Start positions are grouped in
blocks of 1024; when a block's rows cannot all be inserted, the block's
insertions are rolled back and retried with a larger bump threshold. Bumped
keys are those whose offset in the block is below the threshold; they move to
the next, smaller layer. A 2-bit code per block records the threshold. After a
few ribbon layers the remaining keys go to a peeling retrieval.

The solution is stored bit-plane by bit-plane, so a query is ``width``
parities of a 64-bit window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._hashing import MASK64, fastrange32, fastrange32_np, hash_int, hash_int_np, mix64, mix64_np
from .._io import Reader, Writer
from .peeling import PeelingRetrieval


@dataclass(frozen=True)
class RibbonConfig:
    ribbon_width: int = 64
    load_num: int = 96
    load_den: int = 100
    block_slots: int = 1024
    thresholds: tuple[int, int, int, int] = (0, 128, 384, 1024)
    max_layers: int = 4
    # fewer remaining keys than this go straight to the peeling fallback
    min_layer_keys: int = 2048

    def __post_init__(self) -> None:
        if not 0 < self.ribbon_width <= 64:
            raise ValueError("ribbon width must be in 1..64")
        if not 0.5 < self.load_num / self.load_den < 1.0:
            raise ValueError("load factor must be in (0.5, 1)")
        if len(self.thresholds) != 4 or self.thresholds[-1] != self.block_slots:
            raise ValueError("need 4 thresholds ending with a full-block bump")


DEFAULT_CONFIG = RibbonConfig()


def _layer_seed(seed: int, layer: int) -> int:
    return mix64((seed + 0x632BE59BD9B4E019 * (layer + 1)) & MASK64)


def _row(h: int, seed: int, starts: int) -> tuple[int, int]:
    x = hash_int(h, seed)
    return fastrange32(x >> 32, starts), mix64(x) | 1


def _rows_np(h: np.ndarray, seed: int, starts: int) -> tuple[np.ndarray, np.ndarray]:
    x = hash_int_np(h, seed)
    start = fastrange32_np(x >> np.uint64(32), starts).astype(np.int64)
    return start, mix64_np(x) | np.uint64(1)


class _Layer:
    __slots__ = ("m", "seed", "codes", "planes", "_plane_lists", "_code_list")

    def __init__(self, m: int, seed: int, codes: np.ndarray, planes: np.ndarray) -> None:
        self.m = m
        self.seed = seed
        self.codes = codes
        self.planes = planes  # (width, words) uint64, one bit per slot
        self._plane_lists = [p.tolist() for p in planes]
        self._code_list = codes.tolist()

    @property
    def starts(self) -> int:
        return self.m - 64 + 1


def _solve_layer(start, coeff, value, m: int, cfg: RibbonConfig):
    """Insert rows block by block; return (codes, bumped mask, C, V)."""
    order = np.argsort(start, kind="stable")
    s_sorted = start[order]
    block = cfg.block_slots
    n_blocks = (m - cfg.ribbon_width + 1 + block - 1) // block
    bounds = np.searchsorted(s_sorted, np.arange(n_blocks + 1) * block)
    starts_l = s_sorted.tolist()
    coeff_l = coeff[order].tolist()
    value_l = value[order].tolist()
    C = [0] * m
    V = [0] * m
    codes = np.zeros(n_blocks, dtype=np.uint8)
    bumped = np.zeros(len(start), dtype=bool)
    thresholds = cfg.thresholds
    for b in range(n_blocks):
        lo, hi = int(bounds[b]), int(bounds[b + 1])
        base = b * block
        for code, thr in enumerate(thresholds):
            if thr >= block:
                codes[b] = code
                bumped[order[lo:hi]] = True
                break
            written = []
            ok = True
            cut = base + thr
            for j in range(lo, hi):
                s = starts_l[j]
                if s < cut:
                    continue
                c = coeff_l[j]
                v = value_l[j]
                while True:
                    cs = C[s]
                    if not cs:
                        C[s] = c
                        V[s] = v
                        written.append(s)
                        break
                    c ^= cs
                    v ^= V[s]
                    if not c:
                        ok = not v
                        break
                    tz = (c & -c).bit_length() - 1
                    s += tz
                    c >>= tz
                if not ok:
                    break
            if ok:
                codes[b] = code
                if thr:
                    k = lo + int(np.searchsorted(s_sorted[lo:hi], cut))
                    bumped[order[lo:k]] = True
                break
            for s in written:
                C[s] = 0
                V[s] = 0
    return codes, bumped, C, V


def _back_substitute(C: list[int], V: list[int], m: int, width: int) -> np.ndarray:
    n_words = m // 64 + 2
    planes = np.zeros((width, n_words), dtype=np.uint64)
    mask63 = (1 << 63) - 1
    rows = [(i, C[i] >> 1, V[i]) for i in range(m - 1, -1, -1) if C[i]]
    for k in range(width):
        bits = bytearray(m)
        window = 0
        nxt = m  # slot whose bit is window bit 0
        for i, c_rest, v in rows:
            gap = nxt - i - 1
            if gap:
                # skipped empty slots have value 0
                window = (window << gap) & mask63
            z = ((v >> k) ^ (c_rest & window).bit_count()) & 1
            bits[i] = z
            window = ((window << 1) | z) & mask63
            nxt = i
        packed = np.packbits(np.frombuffer(bytes(bits), dtype=np.uint8).astype(bool), bitorder="little")
        buf = np.zeros(n_words * 8, dtype=np.uint8)
        buf[: len(packed)] = packed
        planes[k] = buf.view("<u8")
    return planes


def _window_np(plane: np.ndarray, s: np.ndarray) -> np.ndarray:
    w = s >> 6
    off = (s & 63).astype(np.uint64)
    lo = plane[w] >> off
    hi = np.where(off > np.uint64(0), plane[w + 1] << ((np.uint64(64) - off) & np.uint64(63)), np.uint64(0))
    return lo | hi


class RibbonRetrieval:
    """Static function ``hash -> width-bit value`` with a few percent overhead."""

    backend = "ribbon"

    def __init__(self, width: int, n: int, seed: int, layers: list[_Layer],
                 fallback: PeelingRetrieval | None, config: RibbonConfig = DEFAULT_CONFIG) -> None:
        self.width = width
        self.n = n
        self.seed = seed
        self.layers = layers
        self.fallback = fallback
        self.config = config

    @classmethod
    def build(cls, hashes: np.ndarray, values: np.ndarray, width: int, seed: int = 0,
              config: RibbonConfig = DEFAULT_CONFIG) -> "RibbonRetrieval":
        hashes = np.asarray(hashes, dtype=np.uint64)
        values = np.asarray(values, dtype=np.uint64)
        n = len(hashes)
        layers: list[_Layer] = []
        rem_h, rem_v = hashes, values
        W = config.ribbon_width
        for layer_idx in range(config.max_layers):
            k = len(rem_h)
            if k < config.min_layer_keys:
                break
            m = max(W, -(-k * config.load_den // config.load_num))
            lseed = _layer_seed(seed, layer_idx)
            start, coeff = _rows_np(rem_h, lseed, m - W + 1)
            codes, bumped, C, V = _solve_layer(start, coeff, rem_v, m, config)
            layers.append(_Layer(m, lseed, codes, _back_substitute(C, V, m, width)))
            rem_h, rem_v = rem_h[bumped], rem_v[bumped]
        fallback = None
        if len(rem_h):
            fallback = PeelingRetrieval.build(rem_h, rem_v, width, seed=_layer_seed(seed, config.max_layers))
        return cls(width, n, seed, layers, fallback, config)

    def _bumped(self, layer: _Layer, s: int) -> bool:
        block = self.config.block_slots
        return s - (s // block) * block < self.config.thresholds[layer._code_list[s // block]]

    def query(self, h: int) -> int:
        for layer in self.layers:
            s, c = _row(h, layer.seed, layer.starts)
            if self._bumped(layer, s):
                continue
            out = 0
            w0, off = s >> 6, s & 63
            for k, plane in enumerate(layer._plane_lists):
                window = plane[w0] >> off
                if off:
                    window |= plane[w0 + 1] << (64 - off)
                out |= ((c & window).bit_count() & 1) << k
            return out
        if self.fallback is not None:
            return self.fallback.query(h)
        return 0

    def query_many(self, hashes: np.ndarray) -> np.ndarray:
        hashes = np.asarray(hashes, dtype=np.uint64)
        out = np.zeros(len(hashes), dtype=np.uint64)
        pending = np.arange(len(hashes))
        block = self.config.block_slots
        thr = np.array(self.config.thresholds, dtype=np.int64)
        for layer in self.layers:
            if not pending.size:
                break
            s, c = _rows_np(hashes[pending], layer.seed, layer.starts)
            bumped = (s % block) < thr[layer.codes[s // block]]
            here = ~bumped
            sh, ch = s[here], c[here]
            acc = np.zeros(len(sh), dtype=np.uint64)
            for k in range(self.width):
                par = np.bitwise_count(ch & _window_np(layer.planes[k], sh)) & np.uint8(1)
                acc |= par.astype(np.uint64) << np.uint64(k)
            out[pending[here]] = acc
            pending = pending[bumped]
        if pending.size and self.fallback is not None:
            out[pending] = self.fallback.query_many(hashes[pending])
        return out

    def payload_bits(self) -> int:
        bits = sum(layer.m * self.width + 2 * len(layer.codes) for layer in self.layers)
        if self.fallback is not None:
            bits += self.fallback.payload_bits()
        return bits

    def space_bits(self) -> int:
        header = 4 * 64 + 2 * 64 * len(self.layers)
        if self.fallback is not None:
            header += self.fallback.space_bits() - self.fallback.payload_bits()
        return header + self.payload_bits()

    def overhead(self) -> float:
        """Measured eta: space beyond ``width * n`` bits, relative to it."""
        if self.n == 0 or self.width == 0:
            return 0.0
        return self.space_bits() / (self.width * self.n) - 1.0

    def write(self, w: Writer) -> None:
        w.u64(self.width)
        w.u64(self.n)
        w.u64(self.seed)
        w.u64(len(self.layers))
        for layer in self.layers:
            w.u64(layer.m)
            w.u64(layer.seed)
            w.array(layer.codes, np.uint8)
            w.array(layer.planes.ravel(), np.uint64)
        w.u64(1 if self.fallback is not None else 0)
        if self.fallback is not None:
            self.fallback.write(w)

    @classmethod
    def read(cls, r: Reader) -> "RibbonRetrieval":
        width, n, seed, n_layers = r.u64(), r.u64(), r.u64(), r.u64()
        layers = []
        for _ in range(n_layers):
            m, lseed = r.u64(), r.u64()
            codes = r.array(np.uint8)
            planes = r.array(np.uint64)
            n_words = m // 64 + 2
            if planes.size != width * n_words or codes.size and codes.max() > 3:
                raise ValueError("corrupt ribbon layer")
            layers.append(_Layer(m, lseed, codes, planes.reshape(width, n_words)))
        fallback = PeelingRetrieval.read(r) if r.u64() else None
        return cls(width, n, seed, layers, fallback)
