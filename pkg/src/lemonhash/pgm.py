"""Piecewise linear epsilon-approximation of the rank function.

The fitter is the optimal streaming algorithm: it keeps the upper and lower
convex hulls of the error band and the two extreme feasible lines, and closes
a segment only when no line fits the next point. Hull arithmetic is done in
exact integers. Ranks are scaled by ``SCALE`` and the band is shrunk by one
unit at both ends, so the stored float line has ``1/SCALE`` of slack before
the floored estimate could leave ``[rank - eps, rank + eps]``.

Estimates are capped at the next segment's floored intercept. Together with
non-negative slopes this makes the estimate a non-decreasing function of the
query, which the integer MMPHF relies on.
"""

from __future__ import annotations

import bisect
import math
from fractions import Fraction

import numpy as np

from ._io import Reader, Writer
from .elias_fano import EliasFano

SCALE = 1024


def _cross(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _less(d1, d2) -> bool:
    # slope d1.y/d1.x < d2.y/d2.x, both x > 0
    return d1[1] * d2[0] < d2[1] * d1[0]


def _sub(p, q):
    return (p[0] - q[0], p[1] - q[1])


class _Fitter:
    """Incremental optimal PLA over points with integer band [lo, hi]."""

    def __init__(self) -> None:
        self.count = 0

    def add(self, x: int, lo: int, hi: int) -> bool:
        p1 = (x, hi)
        p2 = (x, lo)
        if self.count == 0:
            self.first_x = x
            self.rect = [p1, p2, None, None]
            self.upper = [p1]
            self.lower = [p2]
            self.upper_start = 0
            self.lower_start = 0
            self.count = 1
            return True
        rect = self.rect
        if self.count == 1:
            rect[2] = p2
            rect[3] = p1
            self.upper.append(p1)
            self.lower.append(p2)
            self.count = 2
            return True
        slope1 = _sub(rect[2], rect[0])
        slope2 = _sub(rect[3], rect[1])
        if _less(_sub(p1, rect[2]), slope1) or _less(slope2, _sub(p2, rect[3])):
            return False
        upper, lower = self.upper, self.lower
        if _less(_sub(p1, rect[1]), slope2):
            best = _sub(lower[self.lower_start], p1)
            best_i = self.lower_start
            for i in range(self.lower_start + 1, len(lower)):
                val = _sub(lower[i], p1)
                if _less(best, val):
                    break
                best, best_i = val, i
            rect[1] = lower[best_i]
            rect[3] = p1
            self.lower_start = best_i
            end = len(upper)
            while end >= self.upper_start + 2 and _cross(upper[end - 2], upper[end - 1], p1) <= 0:
                end -= 1
            del upper[end:]
            upper.append(p1)
        if _less(slope1, _sub(p2, rect[0])):
            best = _sub(upper[self.upper_start], p2)
            best_i = self.upper_start
            for i in range(self.upper_start + 1, len(upper)):
                val = _sub(upper[i], p2)
                if _less(val, best):
                    break
                best, best_i = val, i
            rect[0] = upper[best_i]
            rect[2] = p2
            self.upper_start = best_i
            end = len(lower)
            while end >= self.lower_start + 2 and _cross(lower[end - 2], lower[end - 1], p2) >= 0:
                end -= 1
            del lower[end:]
            lower.append(p2)
        self.count += 1
        return True

    def line(self) -> tuple[float, float]:
        """(slope, value at first_x), both in unscaled rank units."""
        rect = self.rect
        if self.count == 1:
            return 0.0, float(Fraction(rect[0][1] + rect[1][1], 2 * SCALE))
        p0, p1, p2, p3 = rect
        d1 = _sub(p2, p0)
        d2 = _sub(p3, p1)
        s1 = Fraction(d1[1], d1[0])
        s2 = Fraction(d2[1], d2[0])
        if s1 == s2:
            ix = Fraction(p0[0] + p1[0], 2)
            iy = Fraction(p0[1] + p1[1], 2)
        else:
            # intersection of the lines p0-p2 and p1-p3
            ix = (p1[1] - p0[1] + s1 * p0[0] - s2 * p1[0]) / (s1 - s2)
            iy = p0[1] + s1 * (ix - p0[0])
        slope = float(max((s1 + s2) / 2, Fraction(0)) / SCALE)
        intercept = (iy + Fraction(slope) * SCALE * (self.first_x - ix)) / SCALE
        return slope, float(intercept)


def pla_build(keys, eps: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fit segments to strictly increasing ``keys``; returns (first keys, slopes, intercepts)."""
    if eps < 0:
        raise ValueError("epsilon must be non-negative")
    keys = [int(k) for k in keys]
    firsts: list[int] = []
    slopes: list[float] = []
    icpts: list[float] = []
    fitter = _Fitter()
    lo_off = -SCALE * eps + 1
    hi_off = SCALE * (eps + 1) - 1
    prev = None
    for r, x in enumerate(keys):
        if prev is not None and x <= prev:
            raise ValueError("keys must be strictly increasing")
        prev = x
        y = SCALE * r
        if not fitter.add(x, y + lo_off, y + hi_off):
            s, c = fitter.line()
            firsts.append(fitter.first_x)
            slopes.append(s)
            icpts.append(c)
            fitter.count = 0
            fitter.add(x, y + lo_off, y + hi_off)
    if fitter.count:
        s, c = fitter.line()
        firsts.append(fitter.first_x)
        slopes.append(s)
        icpts.append(c)
    return (
        np.array(firsts, dtype=np.uint64),
        np.array(slopes, dtype=np.float64),
        np.array(icpts, dtype=np.float64),
    )


class PgmModel:
    """Segments plus a predecessor index over their first keys."""

    ENCODINGS = ("compressed", "explicit")

    def __init__(self, eps: int, n: int, first_keys: np.ndarray, slopes: np.ndarray,
                 intercepts: np.ndarray, encoding: str = "compressed") -> None:
        if encoding not in self.ENCODINGS:
            raise ValueError(f"unknown encoding {encoding!r}")
        self.eps = eps
        self.n = n
        self.encoding = encoding
        self.first_keys = np.asarray(first_keys, dtype=np.uint64)
        self.slopes = np.asarray(slopes, dtype=np.float64)
        self.intercepts = np.asarray(intercepts, dtype=np.float64)
        m = len(self.first_keys)
        if m and np.any(self.first_keys[1:] <= self.first_keys[:-1]):
            raise ValueError("segment keys must be strictly increasing")
        starts = np.floor(self.intercepts).astype(np.int64) if m else np.zeros(0, dtype=np.int64)
        if m > 1 and np.any(starts[1:] <= starts[:-1]):
            raise ValueError("segment start estimates must be strictly increasing")
        # cap for each segment: the next segment's start, or n-1 for the last
        self._caps = np.append(starts[1:], max(n - 1, 0)).astype(np.int64)
        self._index = EliasFano(self.first_keys, 1 << 64) if encoding == "compressed" and m else None
        self._keys_list = self.first_keys.tolist()
        self._slopes_list = self.slopes.tolist()
        self._icpts_list = self.intercepts.tolist()
        self._caps_list = self._caps.tolist()

    @classmethod
    def build(cls, keys, eps: int, encoding: str = "compressed") -> "PgmModel":
        keys = np.asarray(keys, dtype=np.uint64)
        fk, sl, ic = pla_build(keys, eps)
        return cls(eps, len(keys), fk, sl, ic, encoding)

    @property
    def m(self) -> int:
        return len(self.first_keys)

    def _segment(self, q: int) -> int:
        if self._index is not None:
            hit = self._index.predecessor(q)
            return 0 if hit is None else hit[0]
        return max(bisect.bisect_right(self._keys_list, q) - 1, 0)

    def _segments_many(self, q: np.ndarray) -> np.ndarray:
        if self._index is not None:
            j = self._index.predecessor_many(q)
        else:
            j = np.searchsorted(self.first_keys, q, side="right") - 1
        return np.maximum(j, 0)

    def estimate(self, q: int) -> int:
        if self.n == 0:
            raise ValueError("empty model")
        j = self._segment(q)
        fk = self._keys_list[j]
        d = float(q - fk) if q >= fk else -float(fk - q)
        v = self._slopes_list[j] * d + self._icpts_list[j]
        v = min(max(v, -1.0), float(self.n))
        est = min(math.floor(v), self._caps_list[j])
        return min(max(est, 0), self.n - 1)

    def estimate_many(self, q) -> np.ndarray:
        if self.n == 0:
            raise ValueError("empty model")
        q = np.asarray(q, dtype=np.uint64)
        j = self._segments_many(q)
        fk = self.first_keys[j]
        ge = q >= fk
        d = np.where(ge, (q - fk).astype(np.float64), -(fk - q).astype(np.float64))
        v = self.slopes[j] * d + self.intercepts[j]
        v = np.clip(v, -1.0, float(self.n))
        est = np.minimum(np.floor(v).astype(np.int64), self._caps[j])
        return np.clip(est, 0, self.n - 1)

    def space_bits(self) -> int:
        header = 4 * 64
        if self.encoding == "explicit":
            return header + 192 * self.m
        index = self._index.space_bits() if self._index is not None else 0
        return header + index + 128 * self.m

    def write(self, w: Writer) -> None:
        w.raw(self.encoding.encode())
        w.u64(self.eps)
        w.u64(self.n)
        w.array(self.first_keys, np.uint64)
        w.array(self.slopes, np.float64)
        w.array(self.intercepts, np.float64)

    @classmethod
    def read(cls, r: Reader) -> "PgmModel":
        encoding = r.raw().decode()
        eps, n = r.u64(), r.u64()
        fk = r.array(np.uint64)
        sl = r.array(np.float64)
        ic = r.array(np.float64)
        if not (len(fk) == len(sl) == len(ic)):
            raise ValueError("corrupt PGM segment arrays")
        return cls(eps, n, fk, sl, ic, encoding)
