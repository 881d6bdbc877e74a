"""Monotone minimal perfect hashing for variable-length byte strings.

Each node covers a contiguous range of the sorted strings. It skips their
common prefix, reads a 64-bit chunk from each string and maps chunks to
buckets monotonically: a small retrieval-based bijection when there are few
distinct chunks, a PGM model otherwise. Buckets with at least ``threshold``
strings get a child node, smaller ones store local ranks in a retrieval
collection. Bucket start ranks of all nodes on a level share one sequence.

Chunks use alphabet reduction: only characters at positions where two
neighbouring strings first differ are kept, and each gets its index in that
small alphabet as digit. Characters that never branch get digit 0; they can
only occur where the compared strings agree, so order is unaffected.
If some string of the node ends inside the chunk window while its neighbour
continues, digits become 1-based and 0 stands for "string ended".
"""

from __future__ import annotations

import numpy as np

from ._hashing import hash_bytes, hash_bytes_many, hash_int, hash_int_np, mix64
from ._io import FormatError, Reader, Writer
from .elias_fano import DedupEliasFano, EliasFano
from .pgm import PgmModel
from .retrieval import DuplicateKeyError, RetrievalCollection, RetrievalError

MAGIC = b"LMHV"
VERSION = 1
DEFAULT_THRESHOLD = 128
PERFECT_CHUNK_LIMIT = 128
NODE_EPS = 63
MAX_CHARS = 64
_BATCH = 1 << 15
SEED_ATTEMPTS = 4


class _FingerprintClash(RuntimeError):
    pass


def chars_per_chunk(radix: int) -> int:
    """Largest ``k`` (at most 64) with ``radix**k <= 2**64``."""
    if radix < 2:
        return MAX_CHARS
    k = 0
    p = 1
    while k < MAX_CHARS and p * radix <= 1 << 64:
        p *= radix
        k += 1
    return k


def _lcp(a: bytes, b: bytes) -> int:
    lo, hi = 0, min(len(a), len(b))
    if a[:hi] == b[:hi]:
        return hi
    # invariant: a[:lo] == b[:lo] and a[:hi] != b[:hi]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if a[:mid] == b[:mid]:
            lo = mid
        else:
            hi = mid
    return lo


def lcp_length(strings) -> int:
    """Length of the longest prefix shared by all strings of a sorted, nonempty slice."""
    if not strings:
        raise ValueError("need at least one string")
    if len(strings) == 1:
        return len(strings[0])
    return min(_lcp(strings[i - 1], strings[i]) for i in range(1, len(strings)))


class Alphabet:
    """Digit assignment for one node: byte -> digit, plus radix and chunk width."""

    __slots__ = ("mode", "bitmap", "base", "radix", "chars", "table", "digits")

    def __init__(self, mode: str, bitmap: np.ndarray | None, base: int, chars: int | None = None) -> None:
        self.mode = mode
        self.base = base
        # table index 0 = end of string, index c + 1 = byte c
        table = np.zeros(257, dtype=np.uint64)
        if mode == "reduced":
            self.bitmap = np.asarray(bitmap, dtype=bool)
            present = np.flatnonzero(self.bitmap)
            table[present + 1] = np.arange(len(present), dtype=np.uint64) + np.uint64(base)
            self.radix = len(present) + base
        elif mode == "raw":
            self.bitmap = None
            table[1:] = np.arange(256, dtype=np.uint64) + np.uint64(base)
            self.radix = 256 + base
        else:
            raise ValueError(f"unknown alphabet mode {mode!r}")
        self.table = table
        self.digits = table.tolist()
        self.chars = chars if chars is not None else chars_per_chunk(self.radix)
        self._check()

    def _check(self) -> None:
        if self.base not in (0, 1) or not 1 <= self.chars <= chars_per_chunk(self.radix):
            raise ValueError("chunk window does not fit in 64 bits")

    @property
    def sigma(self) -> int:
        return self.radix - self.base

    def index_of(self, c: int) -> int:
        return int(self.table[c + 1])

    def branching(self) -> bytes:
        if self.bitmap is None:
            return bytes(range(256))
        return bytes(np.flatnonzero(self.bitmap).tolist())

    def bitmap_bits(self) -> int:
        if self.bitmap is None:
            return 0
        return 128 if not self.bitmap[128:].any() else 256

    def write(self, w: Writer) -> None:
        w.u64(0 if self.mode == "raw" else 1)
        w.u64(self.base)
        w.u64(self.chars)
        if self.bitmap is not None:
            w.raw(np.packbits(self.bitmap, bitorder="little").tobytes())

    @classmethod
    def read(cls, r: Reader) -> "Alphabet":
        mode = "raw" if r.u64() == 0 else "reduced"
        base, chars = r.u64(), r.u64()
        bitmap = None
        if mode == "reduced":
            raw = np.frombuffer(r.raw(), dtype=np.uint8)
            if raw.size != 32:
                raise FormatError("alphabet bitmap must have 256 bits")
            bitmap = np.unpackbits(raw, bitorder="little").astype(bool)
        return cls(mode, bitmap, base, chars)


class _Pairs:
    """Adjacent-pair facts of a sorted string list, shared by all nodes."""

    def __init__(self, strings: list[bytes]) -> None:
        n = len(strings)
        lcp = np.zeros(n, dtype=np.int64)
        left = np.full(n, -1, dtype=np.int16)
        right = np.full(n, -1, dtype=np.int16)
        for i in range(1, n):
            a, b = strings[i - 1], strings[i]
            d = _lcp(a, b)
            lcp[i] = d
            if d < len(a):
                left[i] = a[d]
            right[i] = b[d]
        self.lcp = lcp
        self.left = left  # -1: the left string ends at the LCP
        self.right = right


def _window_alphabet(pairs: _Pairs, lo: int, hi: int, p: int) -> Alphabet:
    """Largest window whose branching alphabet still packs into 64 bits."""
    sl = slice(lo + 1, hi)
    off = pairs.lcp[sl] - p
    inwin = off < MAX_CHARS
    off = off[inwin]
    left = pairs.left[sl][inwin]
    right = pairs.right[sl][inwin]
    present = np.zeros((MAX_CHARS, 256), dtype=bool)
    present[off, right] = True
    has_left = left >= 0
    present[off[has_left], left[has_left]] = True
    ends = np.zeros(MAX_CHARS, dtype=bool)
    ends[off[~has_left]] = True
    present = np.logical_or.accumulate(present, axis=0)
    ends = np.logical_or.accumulate(ends)
    sigma = present.sum(axis=1)
    best = 1
    for k in range(1, MAX_CHARS + 1):
        if k > chars_per_chunk(int(sigma[k - 1]) + int(ends[k - 1])):
            break
        best = k
    return Alphabet("reduced", present[best - 1], int(ends[best - 1]), best)


def _raw_alphabet(pairs: _Pairs, lo: int, hi: int, p: int) -> Alphabet:
    off = pairs.lcp[lo + 1 : hi] - p
    prefix = np.any((off < 8) & (pairs.left[lo + 1 : hi] < 0))
    if prefix:
        return Alphabet("raw", None, 1, 7)
    return Alphabet("raw", None, 0, 8)


def build_alphabet(strings, offset: int | None = None) -> Alphabet:
    """Branching alphabet of a sorted node; ``offset`` defaults to the common prefix."""
    strings = [bytes(s) for s in strings]
    if len(strings) < 2:
        raise ValueError("alphabet needs at least two strings")
    pairs = _Pairs(strings)
    p = lcp_length(strings) if offset is None else offset
    if p > lcp_length(strings):
        raise ValueError("offset lies beyond the common prefix")
    return _window_alphabet(pairs, 0, len(strings), p)


def extract_chunk(s: bytes, offset: int, alphabet: Alphabet | None = None, chars: int | None = None) -> int:
    """Chunk of ``s`` starting at ``offset``; ``None`` alphabet means raw bytes."""
    if alphabet is None:
        alphabet = Alphabet("raw", None, 0, 8)
    k = alphabet.chars if chars is None else chars
    digits = alphabet.digits
    radix = alphabet.radix
    v = 0
    seg = s[offset : offset + k]
    for c in seg:
        v = v * radix + digits[c + 1]
    end = digits[0]
    for _ in range(k - len(seg)):
        v = v * radix + end
    return v


class _StringBuffer:
    """Strings flattened into one byte array for vectorised chunk extraction."""

    def __init__(self, strings) -> None:
        lens = np.fromiter((len(s) for s in strings), dtype=np.int64, count=len(strings))
        self.lens = lens
        self.starts = np.concatenate(([0], np.cumsum(lens)[:-1])).astype(np.int64) if len(lens) else lens
        # one spare byte so gathers never index an empty array
        self.data = np.frombuffer(b"".join(strings) + b"\0", dtype=np.uint8)

    def chunks(self, rows: np.ndarray, p: int, alpha: Alphabet) -> np.ndarray:
        k = alpha.chars
        radix = np.uint64(alpha.radix)
        pos = p + np.arange(k, dtype=np.int64)
        out = np.empty(len(rows), dtype=np.uint64)
        for b0 in range(0, len(rows), _BATCH):
            r = rows[b0 : b0 + _BATCH]
            valid = pos[None, :] < self.lens[r][:, None]
            idx = np.where(valid, self.starts[r][:, None] + pos[None, :], 0)
            sym = np.where(valid, self.data[idx].astype(np.int64) + 1, 0)
            dig = alpha.table[sym]
            v = np.zeros(len(r), dtype=np.uint64)
            for j in range(k):
                v = v * radix + dig[:, j]
            out[b0 : b0 + _BATCH] = v
        return out


class _Node:
    __slots__ = ("level", "offset", "p", "alphabet", "c", "model")

    def __init__(self, level: int, offset: int, p: int, alphabet: Alphabet, c: int, model: PgmModel | None) -> None:
        self.level = level
        self.offset = offset  # index of this node's first entry in its level sequence
        self.p = p
        self.alphabet = alphabet
        self.c = c
        self.model = model

    def space_bits(self) -> int:
        # fingerprint, level + offset, p + window + flags, chunk count
        return 4 * 64 + self.alphabet.bitmap_bits() + (self.model.space_bits() if self.model is not None else 0)

    def write(self, w: Writer) -> None:
        w.u64(self.level)
        w.u64(self.offset)
        w.u64(self.p)
        w.u64(self.c)
        self.alphabet.write(w)
        w.u64(1 if self.model is not None else 0)
        if self.model is not None:
            self.model.write(w)

    @classmethod
    def read(cls, r: Reader) -> "_Node":
        level, offset, p, c = r.u64(), r.u64(), r.u64(), r.u64()
        alphabet = Alphabet.read(r)
        model = PgmModel.read(r) if r.u64() else None
        return cls(level, offset, p, alphabet, c, model)


def _level_sequence(values: np.ndarray, universe: int):
    """Grouped-dedup sequence, or plain Elias-Fano when dedup would not save space."""
    dedup = DedupEliasFano(values, universe)
    if dedup.removed_groups:
        plain = EliasFano(values, universe)
        if plain.space_bits() < dedup.space_bits():
            return plain
        return dedup
    return EliasFano(values, universe)


def _write_level(w: Writer, seq) -> None:
    w.u64(1 if isinstance(seq, DedupEliasFano) else 0)
    seq.write(w)


def _read_level(r: Reader):
    return DedupEliasFano.read(r) if r.u64() else EliasFano.read(r)


def _child_fp(fp: int, bucket: int) -> int:
    return hash_int(bucket, fp)


def _chunk_hash_seed(fp: int) -> int:
    return mix64(fp ^ 0x5851F42D4C957F2D)


class VlTree:
    """``query(string) -> rank`` for a static sorted set of byte strings."""

    def __init__(self, n: int, seed: int, threshold: int, root_fp: int, nodes: dict,
                 levels: list, chunk_maps: RetrievalCollection | None,
                 ranks: RetrievalCollection | None, alphabet_reduction: bool = True) -> None:
        self.n = n
        self.seed = seed
        self.threshold = threshold
        self.root_fp = root_fp
        self.nodes = nodes
        self.levels = levels
        self.chunk_maps = chunk_maps
        self.ranks = ranks
        self.alphabet_reduction = alphabet_reduction

    @property
    def height(self) -> int:
        return len(self.levels)

    @classmethod
    def build(cls, strings, threshold: int = DEFAULT_THRESHOLD, backend: str = "ribbon",
              seed: int = 0, alphabet_reduction: bool = True, node_eps: int = NODE_EPS) -> "VlTree":
        strings = [s.encode() if isinstance(s, str) else bytes(s) for s in strings]
        if not strings:
            raise ValueError("cannot build over an empty string set")
        for i in range(1, len(strings)):
            if strings[i] <= strings[i - 1]:
                if strings[i] == strings[i - 1]:
                    raise ValueError("duplicate strings")
                raise ValueError("strings must be sorted in increasing byte order")
        if threshold < 2:
            raise ValueError("threshold must be at least 2")
        last: Exception | None = None
        pairs = _Pairs(strings)
        buf = _StringBuffer(strings)
        for attempt in range(SEED_ATTEMPTS):
            s = seed if attempt == 0 else mix64(seed + attempt)
            try:
                return cls._build(strings, pairs, buf, threshold, backend, s, alphabet_reduction, node_eps)
            except (DuplicateKeyError, RetrievalError, _FingerprintClash) as exc:
                last = exc
        raise RetrievalError(f"string MMPHF construction failed: {last}")

    @classmethod
    def _build(cls, strings, pairs, buf, threshold, backend, seed, alphabet_reduction, node_eps) -> "VlTree":
        n = len(strings)
        root_fp = mix64(seed ^ 0x2545F4914F6CDD1D)
        if n == 1:
            return cls(1, seed, threshold, root_fp, {}, [], None, None, alphabet_reduction)
        nodes: dict[int, _Node] = {}
        level_parts: list[list[np.ndarray]] = []
        level_len: list[int] = []
        cm_h, cm_v, cm_b = [], [], []
        rk_rows, rk_v, rk_b = [], [], []
        stack = [(0, n, root_fp, 0)]
        while stack:
            lo, hi, fp, level = stack.pop()
            p = int(pairs.lcp[lo + 1 : hi].min())
            if alphabet_reduction:
                alpha = _window_alphabet(pairs, lo, hi, p)
            else:
                alpha = _raw_alphabet(pairs, lo, hi, p)
            rows = np.arange(lo, hi, dtype=np.int64)
            chunks = buf.chunks(rows, p, alpha)
            if np.any(chunks[1:] < chunks[:-1]):
                raise AssertionError("chunk order does not follow string order")
            new = np.concatenate(([True], chunks[1:] != chunks[:-1]))
            distinct = chunks[new]
            c = len(distinct)
            if c < PERFECT_CHUNK_LIMIT:
                model = None
                buckets = np.cumsum(new) - 1
                cm_h.append(hash_int_np(distinct, _chunk_hash_seed(fp)))
                cm_v.append(np.arange(c, dtype=np.uint64))
                cm_b.append(np.full(c, c, dtype=np.uint64))
            else:
                model = PgmModel.build(distinct, node_eps, "explicit")
                buckets = model.estimate_many(chunks)
            sizes = np.bincount(buckets, minlength=c)
            starts = lo + np.concatenate(([0], np.cumsum(sizes)))
            while len(level_parts) <= level:
                level_parts.append([])
                level_len.append(0)
            offset = level_len[level]
            level_parts[level].append(starts)
            level_len[level] += len(starts)
            if fp in nodes:
                raise _FingerprintClash("node fingerprint collision")
            nodes[fp] = _Node(level, offset, p, alpha, c, model)
            b = sizes[buckets]
            leaf = (b >= 2) & (b < threshold)
            if leaf.any():
                rk_rows.append(rows[leaf])
                rk_v.append((rows - starts[buckets])[leaf])
                rk_b.append(b[leaf])
            big = np.flatnonzero(sizes >= threshold)
            for j in big[::-1].tolist():
                stack.append((int(starts[j]), int(starts[j + 1]), _child_fp(fp, j), level + 1))
        levels = [_level_sequence(np.concatenate(parts), n + 1) for parts in level_parts]
        chunk_maps = None
        if cm_h:
            h = np.concatenate(cm_h)
            v = np.concatenate(cm_v)
            b = np.concatenate(cm_b)
            chunk_maps = RetrievalCollection.build(h, v, b, backend, seed=mix64(seed + 1))
        if rk_rows:
            rows = np.concatenate(rk_rows)
            h = hash_bytes_many([strings[i] for i in rows.tolist()], seed)
            ranks = RetrievalCollection.build(h, np.concatenate(rk_v), np.concatenate(rk_b), backend,
                                              seed=mix64(seed + 2))
        else:
            ranks = RetrievalCollection({}, backend, mix64(seed + 2))
        if chunk_maps is None:
            chunk_maps = RetrievalCollection({}, backend, mix64(seed + 1))
        return cls(n, seed, threshold, root_fp, nodes, levels, chunk_maps, ranks, alphabet_reduction)

    def _node(self, fp: int) -> _Node:
        node = self.nodes.get(fp)
        if node is None:
            raise KeyError("fingerprint not in node table; structure is corrupt")
        return node

    def query(self, s) -> int:
        if isinstance(s, str):
            s = s.encode()
        if self.n == 1:
            return 0
        fp = self.root_fp
        while True:
            node = self._node(fp)
            chunk = extract_chunk(s, node.p, node.alphabet)
            if node.model is None:
                j = self.chunk_maps.query(hash_int(chunk, _chunk_hash_seed(fp)), node.c)
            else:
                j = node.model.estimate(chunk)
            seq = self.levels[node.level]
            g = seq[node.offset + j]
            b = seq[node.offset + j + 1] - g
            if b >= self.threshold:
                fp = _child_fp(fp, j)
                continue
            if b == 0:
                return min(g, self.n - 1)
            if b == 1:
                return g
            return g + self.ranks.query(hash_bytes(s, self.seed), b)

    def query_many(self, strings) -> np.ndarray:
        strings = [s.encode() if isinstance(s, str) else bytes(s) for s in strings]
        m = len(strings)
        out = np.zeros(m, dtype=np.int64)
        if self.n == 1 or m == 0:
            return out
        buf = _StringBuffer(strings)
        active = np.arange(m, dtype=np.int64)
        fps = np.full(m, self.root_fp, dtype=np.uint64)
        leaf_rows, leaf_g, leaf_b = [], [], []
        while active.size:
            order = np.argsort(fps, kind="stable")
            active, fps = active[order], fps[order]
            cut = np.flatnonzero(np.concatenate(([True], fps[1:] != fps[:-1], [True])))
            next_active, next_fps = [], []
            for a, z in zip(cut[:-1].tolist(), cut[1:].tolist()):
                fp = int(fps[a])
                node = self._node(fp)
                rows = active[a:z]
                chunks = buf.chunks(rows, node.p, node.alphabet)
                if node.model is None:
                    hs = hash_int_np(chunks, _chunk_hash_seed(fp))
                    j = self.chunk_maps.query_many(hs, np.full(len(rows), node.c, dtype=np.uint64)).astype(np.int64)
                else:
                    j = node.model.estimate_many(chunks)
                seq = self.levels[node.level]
                g = seq.access_many(node.offset + j).astype(np.int64)
                b = seq.access_many(node.offset + j + 1).astype(np.int64) - g
                down = b >= self.threshold
                if down.any():
                    next_active.append(rows[down])
                    next_fps.append(hash_int_np(j[down].astype(np.uint64), fp))
                stay = ~down
                out[rows[stay]] = np.minimum(g[stay], self.n - 1)
                multi = stay & (b >= 2)
                if multi.any():
                    leaf_rows.append(rows[multi])
                    leaf_g.append(g[multi])
                    leaf_b.append(b[multi])
            if not next_active:
                break
            active = np.concatenate(next_active)
            fps = np.concatenate(next_fps)
        if leaf_rows:
            rows = np.concatenate(leaf_rows)
            h = hash_bytes_many([strings[i] for i in rows.tolist()], self.seed)
            local = self.ranks.query_many(h, np.concatenate(leaf_b).astype(np.uint64))
            out[rows] = np.concatenate(leaf_g) + local.astype(np.int64)
        return out

    __call__ = query

    def depth_histogram(self) -> dict[int, int]:
        """Number of strings resolved at each node depth (1 = root)."""
        hist: dict[int, int] = {}
        if self.n == 1:
            return {1: 1}
        for node in self.nodes.values():
            seq = self.levels[node.level]
            starts = seq.access_many(node.offset + np.arange(node.c + 1))
            sizes = np.diff(starts)
            resolved = int(sizes[sizes < self.threshold].sum())
            hist[node.level + 1] = hist.get(node.level + 1, 0) + resolved
        return dict(sorted(hist.items()))

    def space_breakdown(self) -> dict:
        parts = {
            "headerBits": 6 * 64,
            "nodeTableBits": 4 * 64 * len(self.nodes),
            "alphabetBits": sum(nd.alphabet.bitmap_bits() for nd in self.nodes.values()),
            "mapperBits": sum(nd.model.space_bits() for nd in self.nodes.values() if nd.model is not None),
            "chunkMapBits": self.chunk_maps.space_bits() if self.chunk_maps is not None else 0,
            "levelSequenceBits": sum(seq.space_bits() for seq in self.levels),
            "retrievalBits": self.ranks.space_bits() if self.ranks is not None else 0,
        }
        total = sum(parts.values())
        parts["totalBits"] = total
        parts["bitsPerKey"] = total / self.n
        parts["nodes"] = len(self.nodes)
        parts["height"] = self.height
        return parts

    def bits_per_key(self) -> float:
        return self.space_breakdown()["bitsPerKey"]

    def describe(self) -> dict:
        return {
            "n": self.n,
            "threshold": self.threshold,
            "alphabetReduction": self.alphabet_reduction,
            "nodes": len(self.nodes),
            "height": self.height,
            "backend": self.ranks.backend if self.ranks is not None else None,
        }

    def to_bytes(self) -> bytes:
        w = Writer()
        w.raw(MAGIC)
        w.u64(VERSION)
        w.u64(self.n)
        w.u64(self.seed)
        w.u64(self.threshold)
        w.u64(self.root_fp)
        w.u64(1 if self.alphabet_reduction else 0)
        w.u64(len(self.levels))
        for seq in self.levels:
            _write_level(w, seq)
        w.u64(len(self.nodes))
        for fp, node in self.nodes.items():
            w.u64(fp)
            node.write(w)
        w.u64(0 if self.chunk_maps is None else 1)
        if self.chunk_maps is not None:
            self.chunk_maps.write(w)
            self.ranks.write(w)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "VlTree":
        r = Reader(data)
        try:
            magic = r.raw()
        except FormatError:
            raise FormatError("not a LeMonHash-VL file") from None
        if magic != MAGIC:
            raise FormatError("not a LeMonHash-VL file")
        version = r.u64()
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")
        n, seed, threshold, root_fp, ar = r.u64(), r.u64(), r.u64(), r.u64(), r.u64()
        levels = [_read_level(r) for _ in range(r.u64())]
        nodes = {}
        for _ in range(r.u64()):
            fp = r.u64()
            nodes[fp] = _Node.read(r)
        chunk_maps = ranks = None
        if r.u64():
            chunk_maps = RetrievalCollection.read(r)
            ranks = RetrievalCollection.read(r)
        if not r.at_end():
            raise FormatError("trailing bytes after structure")
        return cls(n, seed, threshold, root_fp, nodes, levels, chunk_maps, ranks, bool(ar))

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "VlTree":
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())

