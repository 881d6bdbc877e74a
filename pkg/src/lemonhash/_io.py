"""Tiny little-endian binary writer/reader used by every ``to_bytes``/``from_bytes``."""

from __future__ import annotations

import struct

import numpy as np


class FormatError(ValueError):
    """Serialized data is truncated or does not describe a valid structure."""


class Writer:
    def __init__(self) -> None:
        self._parts: list[bytes] = []

    def u64(self, value: int) -> None:
        self._parts.append(struct.pack("<Q", value))

    def i64(self, value: int) -> None:
        self._parts.append(struct.pack("<q", value))

    def f64(self, value: float) -> None:
        self._parts.append(struct.pack("<d", value))

    def raw(self, data: bytes) -> None:
        self.u64(len(data))
        self._parts.append(data)

    def array(self, arr: np.ndarray, dtype) -> None:
        data = np.ascontiguousarray(arr, dtype=np.dtype(dtype).newbyteorder("<")).tobytes()
        self.raw(data)

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes) -> None:
        self._view = memoryview(data)
        self._pos = 0

    def _take(self, size: int) -> memoryview:
        if self._pos + size > len(self._view):
            raise FormatError("unexpected end of data")
        chunk = self._view[self._pos : self._pos + size]
        self._pos += size
        return chunk

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def i64(self) -> int:
        return struct.unpack("<q", self._take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def raw(self) -> bytes:
        return bytes(self._take(self.u64()))

    def array(self, dtype) -> np.ndarray:
        dt = np.dtype(dtype).newbyteorder("<")
        data = self.raw()
        if len(data) % dt.itemsize:
            raise FormatError("array payload size is not a multiple of the item size")
        return np.frombuffer(data, dtype=dt).astype(np.dtype(dtype), copy=True)

    def at_end(self) -> bool:
        return self._pos == len(self._view)
