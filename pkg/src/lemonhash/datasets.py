"""Synthetic key sets and the two on-disk dataset formats.

Integer files: 8-byte little-endian count followed by the sorted keys as
little-endian u64. String files: one key per line, raw bytes, sorted; keys
cannot contain a newline.
"""

from __future__ import annotations

import os

import numpy as np

INT_KINDS = ("uniform", "normal", "exponential", "clustered")
STRING_KINDS = ("random-strings", "kmer", "urls")
KINDS = INT_KINDS + STRING_KINDS

NORMAL_MEAN = 1e15
NORMAL_STD = 1e10
EXP_SCALE = 1e15
MAX_ROUNDS = 64


class DatasetError(ValueError):
    pass


def _draw_ints(kind: str, rng: np.random.Generator, m: int, params: dict) -> np.ndarray:
    if kind == "uniform":
        return rng.integers(0, 2**64, m, dtype=np.uint64, endpoint=False)
    if kind == "normal":
        x = rng.normal(params.get("mean", NORMAL_MEAN), params.get("std", NORMAL_STD), m)
        return np.clip(np.rint(x), 0, 2.0**64 - 4096).astype(np.uint64)
    if kind == "exponential":
        x = rng.exponential(1.0, m) * params.get("scale", EXP_SCALE)
        return np.clip(np.rint(x), 0, 2.0**64 - 4096).astype(np.uint64)
    if kind == "clustered":
        clusters = params.get("clusters", 16)
        width = params.get("width", 1 << 24)
        centers = np.sort(rng.integers(0, 2**64 - width, clusters, dtype=np.uint64))
        which = rng.integers(0, clusters, m)
        return centers[which] + rng.integers(0, width, m, dtype=np.uint64)
    raise DatasetError(f"unknown integer dataset kind {kind!r}")


def generate_ints(kind: str, n: int, seed: int = 0, **params) -> np.ndarray:
    """``n`` distinct sorted keys; duplicates are re-drawn."""
    if n < 1:
        raise DatasetError("n must be positive")
    rng = np.random.default_rng(seed)
    keys = np.unique(_draw_ints(kind, rng, n, params))
    for _ in range(MAX_ROUNDS):
        if len(keys) >= n:
            break
        extra = _draw_ints(kind, rng, 2 * (n - len(keys)) + 16, params)
        keys = np.union1d(keys, extra)
    else:
        raise DatasetError(f"could not draw {n} distinct {kind} keys")
    if len(keys) > n:
        keep = np.sort(rng.choice(len(keys), n, replace=False))
        keys = keys[keep]
    return keys


def _draw_strings(kind: str, rng: np.random.Generator, m: int, params: dict) -> list[bytes]:
    if kind == "kmer":
        k = params.get("k", 32)
        letters = np.frombuffer(params.get("alphabet", b"ACGT"), dtype=np.uint8)
        mat = letters[rng.integers(0, len(letters), (m, k))]
        return [bytes(r) for r in mat]
    if kind == "random-strings":
        lo, hi = params.get("min_len", 1), params.get("max_len", 32)
        lens = rng.integers(lo, hi + 1, m)
        # every byte except the newline separator
        pool = np.array([b for b in range(256) if b != 10], dtype=np.uint8)
        flat = pool[rng.integers(0, len(pool), int(lens.sum()))]
        out, pos = [], 0
        for ln in lens.tolist():
            out.append(flat[pos : pos + ln].tobytes())
            pos += ln
        return out
    if kind == "urls":
        hosts = params.get("hosts", 64)
        words = [b"index", b"news", b"article", b"user", b"img", b"static", b"api", b"v2", b"search", b"tag"]
        out = []
        h = rng.integers(0, hosts, m)
        depth = rng.integers(1, 5, m)
        segs = rng.integers(0, len(words) * 8, (m, 4))
        ids = rng.integers(0, 10**6, m)
        for i in range(m):
            parts = [words[s % len(words)] + (b"%d" % (s // len(words))) for s in segs[i, : depth[i]].tolist()]
            out.append(b"https://www.site%d.example/" % h[i] + b"/".join(parts) + b"?id=%d" % ids[i])
        return out
    raise DatasetError(f"unknown string dataset kind {kind!r}")


def generate_strings(kind: str, n: int, seed: int = 0, **params) -> list[bytes]:
    if n < 1:
        raise DatasetError("n must be positive")
    rng = np.random.default_rng(seed)
    keys = set(_draw_strings(kind, rng, n, params))
    for _ in range(MAX_ROUNDS):
        if len(keys) >= n:
            break
        keys.update(_draw_strings(kind, rng, 2 * (n - len(keys)) + 16, params))
    else:
        raise DatasetError(f"could not draw {n} distinct {kind} strings")
    out = sorted(keys)
    if len(out) > n:
        keep = np.sort(rng.choice(len(out), n, replace=False))
        out = [out[i] for i in keep.tolist()]
    return out


def generate(kind: str, n: int, seed: int = 0, **params):
    if kind in INT_KINDS:
        return generate_ints(kind, n, seed, **params)
    if kind in STRING_KINDS:
        return generate_strings(kind, n, seed, **params)
    raise DatasetError(f"unknown dataset kind {kind!r}")


def write_ints(path, keys) -> None:
    keys = np.asarray(keys, dtype="<u8")
    with open(path, "wb") as f:
        f.write(np.uint64(len(keys)).astype("<u8").tobytes())
        f.write(keys.tobytes())


def read_ints(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 8:
        raise DatasetError("integer file too short")
    n = int(np.frombuffer(data[:8], dtype="<u8")[0])
    if len(data) != 8 + 8 * n:
        raise DatasetError("integer file size does not match its count")
    return np.frombuffer(data[8:], dtype="<u8").astype(np.uint64)


def write_strings(path, strings) -> None:
    with open(path, "wb") as f:
        for s in strings:
            if b"\n" in s:
                raise DatasetError("strings may not contain newlines")
            f.write(s)
            f.write(b"\n")


def read_strings(path) -> list[bytes]:
    with open(path, "rb") as f:
        data = f.read()
    if not data:
        return []
    lines = data.split(b"\n")
    if lines[-1] == b"":
        lines.pop()
    return lines


def is_int_file(path) -> bool:
    size = os.path.getsize(path)
    if size < 8:
        return False
    with open(path, "rb") as f:
        n = int(np.frombuffer(f.read(8), dtype="<u8")[0])
    return size == 8 + 8 * n


def write_dataset(path, keys) -> None:
    if isinstance(keys, np.ndarray):
        write_ints(path, keys)
    else:
        write_strings(path, keys)


def read_dataset(path, kind: str = "auto"):
    """Integer array or list of byte strings; ``kind`` is ``ints``, ``strings`` or ``auto``."""
    if kind == "auto":
        kind = "ints" if is_int_file(path) else "strings"
    if kind == "ints":
        return read_ints(path)
    if kind == "strings":
        return read_strings(path)
    raise DatasetError(f"unknown file kind {kind!r}")
