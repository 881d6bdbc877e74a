"""Static functions from 64-bit key hashes to r-bit values."""

from __future__ import annotations

import numpy as np

from .._io import Reader, Writer
from .peeling import PeelingRetrieval, RetrievalError, peeling_slots
from .ribbon import RibbonConfig, RibbonRetrieval

BACKENDS = {"peeling": PeelingRetrieval, "ribbon": RibbonRetrieval}
_TAGS = {"peeling": 1, "ribbon": 2}
MAX_WIDTH = 64


class DuplicateKeyError(ValueError):
    """Two construction entries share the same key hash."""


def check_distinct(hashes: np.ndarray) -> None:
    if len(hashes) > 1:
        s = np.sort(hashes)
        if np.any(s[1:] == s[:-1]):
            raise DuplicateKeyError("duplicate key hashes in retrieval input")


def build_retrieval(hashes, values, width: int, backend: str = "ribbon", seed: int = 0):
    """Build a retrieval function; values must fit in ``width`` bits."""
    if backend not in BACKENDS:
        raise ValueError(f"unknown retrieval backend {backend!r}")
    if not 1 <= width <= MAX_WIDTH:
        raise ValueError(f"value width must be in 1..{MAX_WIDTH}, got {width}")
    hashes = np.asarray(hashes, dtype=np.uint64)
    values = np.asarray(values, dtype=np.uint64)
    if hashes.shape != values.shape:
        raise ValueError("hashes and values differ in length")
    if width < 64 and len(values) and int(values.max()) >> width:
        raise ValueError(f"value does not fit in {width} bits")
    check_distinct(hashes)
    return BACKENDS[backend].build(hashes, values, width, seed=seed)


def write_retrieval(w: Writer, f) -> None:
    w.u64(_TAGS[f.backend])
    f.write(w)


def read_retrieval(r: Reader):
    tag = r.u64()
    for name, t in _TAGS.items():
        if t == tag:
            return BACKENDS[name].read(r)
    raise ValueError(f"unknown retrieval backend tag {tag}")


from .collection import RetrievalCollection  # noqa: E402

__all__ = [
    "BACKENDS",
    "DuplicateKeyError",
    "MAX_WIDTH",
    "PeelingRetrieval",
    "RetrievalCollection",
    "RetrievalError",
    "RibbonConfig",
    "RibbonRetrieval",
    "build_retrieval",
    "check_distinct",
    "peeling_slots",
    "read_retrieval",
    "write_retrieval",
]
