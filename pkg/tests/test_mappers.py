import math

import numpy as np
import pytest

from lemonhash._io import Reader, Writer
from lemonhash.mappers import (
    LinearMapper,
    PgmMapper,
    SegmentedMapper,
    auto_tune,
    build_mapper,
    linear_map,
    mapper_cost_estimate,
    payload_bits,
    poisson_payload_constant,
    read_mapper,
    write_mapper,
)


def poisson_oracle(terms=25):
    # independent evaluation with exact rationals before the final division
    from fractions import Fraction

    s = Fraction(0)
    for k in range(2, terms):
        s += Fraction(k * (k - 1).bit_length(), math.factorial(k))
    return float(s) / math.e


def test_poisson_constant():
    assert poisson_payload_constant() == pytest.approx(0.91536, abs=1e-5)
    assert poisson_payload_constant() == pytest.approx(poisson_oracle(), rel=1e-12)


def test_linear_map_examples():
    assert linear_map(0, 10, 100) == 0
    assert linear_map(99, 10, 100) == 9
    assert linear_map(2**63, 100, 2**64) == 50


def test_segmented_single_slice_is_linear(rng):
    keys = np.unique(rng.integers(0, 2**64, 3000, dtype=np.uint64))
    seg = SegmentedMapper.build(keys, 1)
    lin = LinearMapper.build(keys)
    q = rng.integers(0, 2**64, 2000, dtype=np.uint64)
    assert (seg.map_many(q) == lin.map_many(q)).all()


def kinds(keys):
    return [LinearMapper.build(keys), SegmentedMapper.build(keys), SegmentedMapper.build(keys, 37),
            PgmMapper.build(keys, 15)]


def test_monotone_on_random_pairs(rng):
    keys = np.unique((rng.exponential(1, 50_000) * 1e15).astype(np.uint64))
    a = rng.integers(0, 2**64, 100_000, dtype=np.uint64)
    b = rng.integers(0, 2**64, 100_000, dtype=np.uint64)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    for m in kinds(keys):
        ma, mb = m.map_many(lo), m.map_many(hi)
        assert (ma <= mb).all(), m.kind
        assert ma.min() >= 0 and mb.max() < m.bucket_count


def test_scalar_matches_vector(rng):
    keys = np.unique(rng.integers(0, 2**64, 20_000, dtype=np.uint64))
    q = np.concatenate([keys[::13], rng.integers(0, 2**64, 300, dtype=np.uint64),
                        np.array([0, 2**64 - 1], dtype=np.uint64)])
    for m in kinds(keys):
        assert [m.map(int(x)) for x in q] == m.map_many(q).tolist()


def test_pgm_collinear_buckets_size_one():
    keys = np.arange(0, 5000, 7, dtype=np.uint64)
    m = PgmMapper.build(keys, 15)
    assert (m.map_many(keys) == np.arange(len(keys))).all()


@pytest.mark.parametrize("eps", [15, 31, 63])
def test_pgm_bucket_bound(eps, rng):
    for keys in (
        np.unique(rng.integers(0, 2**64, 100_000, dtype=np.uint64)),
        np.unique((rng.exponential(1, 100_000) * 1e15).astype(np.uint64)),
    ):
        sizes = np.bincount(PgmMapper.build(keys, eps).map_many(keys))
        assert sizes.max() <= 2 * eps + 1


def test_payload_examples():
    assert payload_bits(np.arange(10), 10) == 0
    assert payload_bits(np.array([3, 3, 3, 3]), 5) == 8


def test_single_key_maps_to_zero():
    keys = np.array([12345], dtype=np.uint64)
    for kind in ("linear", "segmented", "pgm", "auto"):
        m = build_mapper(kind, keys)
        assert m.map(0) == 0 and m.map(12345) == 0 and m.map(2**64 - 1) == 0


def test_auto_tune_tie_goes_to_smallest():
    keys = np.arange(0, 10_000, 3, dtype=np.uint64)
    best, log = auto_tune(keys)
    assert best.eps == 15
    assert log[0]["eps"] == 15


def test_auto_tune_not_worse_than_fixed(rng):
    keys = np.unique(rng.integers(0, 2**64, 100_000, dtype=np.uint64))
    best, log = auto_tune(keys)
    costs = [mapper_cost_estimate(PgmMapper.build(keys, e), keys) for e in (15, 31, 63)]
    assert mapper_cost_estimate(best, keys) == min(costs)
    assert len(log) == 3


def test_auto_tune_early_abort():
    # zero payload: later candidates cannot beat the first, so they are skipped
    keys = np.arange(0, 10_000, 3, dtype=np.uint64)
    _, log = auto_tune(keys)
    assert [e["skipped"] for e in log] == [False, True, True]


def test_serialization(rng):
    keys = np.unique(rng.integers(0, 2**64, 10_000, dtype=np.uint64))
    for m in kinds(keys):
        w = Writer()
        write_mapper(w, m)
        back = read_mapper(Reader(w.getvalue()))
        assert (back.map_many(keys) == m.map_many(keys)).all()
