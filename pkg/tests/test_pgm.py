import numpy as np
import pytest

from lemonhash.pgm import PgmModel, pla_build


def check_error(model, keys):
    est = model.estimate_many(keys)
    return int(np.abs(est - np.arange(len(keys))).max())


def test_collinear():
    keys = np.arange(0, 1000, 10, dtype=np.uint64)
    fk, slopes, _ = pla_build(keys, 0)
    assert len(fk) == 1 and slopes[0] == pytest.approx(0.1)
    m = PgmModel.build(keys, 0)
    assert m.estimate(500) == 50
    assert m.estimate(0) == 0


def test_clamped_below_and_above():
    keys = np.array([100, 200, 300, 5000], dtype=np.uint64)
    m = PgmModel.build(keys, 1)
    assert m.estimate(0) >= 0
    assert m.estimate(2**64 - 1) <= 3


def test_empty_input():
    fk, _, _ = pla_build(np.zeros(0, dtype=np.uint64), 3)
    assert len(fk) == 0


def test_rejects_unsorted():
    with pytest.raises(ValueError):
        pla_build(np.array([3, 2], dtype=np.uint64), 1)


@pytest.mark.parametrize("eps", [0, 1, 7, 31])
def test_error_bound_random(eps, rng):
    keys = np.unique(rng.integers(0, 2**64, 20_000, dtype=np.uint64))
    m = PgmModel.build(keys, eps)
    assert check_error(m, keys) <= eps
    q = rng.choice(keys, 10_000)
    ref = np.searchsorted(keys, q)
    assert np.abs(m.estimate_many(q) - ref).max() <= eps


def test_segment_bound():
    rng = np.random.default_rng(3)
    keys = np.unique(rng.integers(0, 2**64, 100_000, dtype=np.uint64))
    m = PgmModel.build(keys, 15)
    assert m.m <= len(keys) / 30


def test_skewed_inputs(rng):
    for keys in (
        np.unique((rng.exponential(1, 50_000) * 1e15).astype(np.uint64)),
        np.unique((rng.lognormal(0, 3, 50_000) * 1e6).astype(np.uint64)),
        np.unique(np.concatenate([np.arange(10_000, dtype=np.uint64), 2**63 + np.arange(0, 10**9, 10**5, dtype=np.uint64)])),
    ):
        for eps in (15, 63):
            m = PgmModel.build(keys, eps, "explicit")
            assert check_error(m, keys) <= eps


def test_monotone_over_arbitrary_queries(rng):
    keys = np.unique((rng.exponential(1, 20_000) * 1e12).astype(np.uint64))
    m = PgmModel.build(keys, 31)
    q = np.sort(np.concatenate([keys, rng.integers(0, 2**64, 20_000, dtype=np.uint64)]))
    assert (np.diff(m.estimate_many(q)) >= 0).all()


def test_scalar_matches_vector(rng):
    keys = np.unique(rng.integers(0, 2**64, 5_000, dtype=np.uint64))
    for enc in ("compressed", "explicit"):
        m = PgmModel.build(keys, 15, enc)
        q = np.concatenate([keys[::7], rng.integers(0, 2**64, 500, dtype=np.uint64)])
        assert [m.estimate(int(x)) for x in q] == m.estimate_many(q).tolist()


def test_space_accounting(rng):
    m1 = PgmModel.build(np.array([1, 2, 3], dtype=np.uint64), 1, "explicit")
    assert m1.m == 1 and m1.space_bits() == 192 + 4 * 64
    keys = np.unique(rng.integers(0, 2**64, 200_000, dtype=np.uint64))
    exp = PgmModel.build(keys, 3, "explicit")
    comp = PgmModel.build(keys, 3, "compressed")
    assert comp.m >= 8
    assert comp.space_bits() <= exp.space_bits()


def test_serialization(rng):
    from lemonhash._io import Reader, Writer

    keys = np.unique(rng.integers(0, 2**64, 3_000, dtype=np.uint64))
    m = PgmModel.build(keys, 7)
    w = Writer()
    m.write(w)
    back = PgmModel.read(Reader(w.getvalue()))
    assert (back.estimate_many(keys) == m.estimate_many(keys)).all()
