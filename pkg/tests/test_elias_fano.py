import numpy as np
import pytest

from lemonhash.elias_fano import DedupEliasFano, EliasFano


def test_examples():
    assert EliasFano([0, 1, 2, 3], 4)[2] == 2
    assert EliasFano([5, 5, 5], 8)[1] == 5
    ef = EliasFano([2, 3, 5, 7, 11], 12)
    assert ef.predecessor(6) == (2, 5)
    assert ef.predecessor(2) == (0, 2)
    assert ef.predecessor(1) is None
    assert EliasFano([4, 4, 4, 9], 10).predecessor(4) == (2, 4)


def test_construction_errors():
    with pytest.raises(ValueError):
        EliasFano([3, 2], 10)
    with pytest.raises(ValueError):
        EliasFano([1, 10], 10)
    with pytest.raises(ValueError):
        EliasFano([], 10)


def test_round_trip_and_predecessor(rng):
    for u in [10**5, 10**9, 2**64]:
        n = 10**5
        v = np.sort(rng.integers(0, u, n, dtype=np.uint64))
        ef = EliasFano(v, u)
        assert (ef.access_many(np.arange(n)) == v).all()
        q = rng.integers(0, min(u, 2**63), 10_000).astype(np.uint64)
        ref = np.searchsorted(v, q, side="right") - 1
        assert (ef.predecessor_many(q) == ref).all()
        for x, r in zip(q[:300].tolist(), ref[:300].tolist()):
            hit = ef.predecessor(x)
            assert (hit is None) if r < 0 else hit == (r, int(v[r]))


def test_space_bound(rng):
    n, u = 10**5, 10**9
    v = np.sort(rng.integers(0, u, n, dtype=np.uint64))
    ef = EliasFano(v, u)
    bound = n * int(np.ceil(np.log2(u / n))) + 2 * n
    assert ef.space_bits() <= 1.15 * bound


def test_serialization(rng):
    v = np.sort(rng.integers(0, 10**6, 1000, dtype=np.uint64))
    ef = EliasFano(v, 10**6)
    back = EliasFano.from_bytes(ef.to_bytes())
    assert (back.to_numpy() == v).all()


def test_dedup_examples():
    d = DedupEliasFano([7] * 7)
    assert d.removed_groups == 2
    assert d[5] == 7
    assert DedupEliasFano([1, 2, 3, 4]).removed_groups == 0


def test_dedup_random(rng):
    for _ in range(20):
        n = 10**4
        steps = np.where(rng.random(n) < 0.8, 0, rng.integers(1, 5, n))
        v = np.cumsum(steps).astype(np.uint64)
        d = DedupEliasFano(v)
        assert (d.access_many(np.arange(n)) == v).all()
        assert all(d[i] == v[i] for i in rng.integers(0, n, 100).tolist())


def test_dedup_saves_space_on_runs(rng):
    # runs of length >= 4 dominate
    runs = rng.integers(4, 12, 20_000)
    v = np.repeat(np.arange(len(runs), dtype=np.uint64) * 3, runs)
    assert DedupEliasFano(v).space_bits() < EliasFano(v).space_bits()
