"""End-to-end acceptance checks at full scale.

Each test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary, or directly when this file is run as a script.
"""

import functools
import math
import random
import time

import numpy as np

from lemonhash import LeMonHash, VlTree
from lemonhash.cli import run_bench
from lemonhash.datasets import generate_ints, generate_strings
from lemonhash.mappers import poisson_payload_constant
from lemonhash.pgm import pla_build, PgmModel
from lemonhash.retrieval import build_retrieval, peeling_slots
from lemonhash.vl import build_alphabet, extract_chunk

from helpers import INT_DISTS, corpus, is_mmphf

RESULTS = []
BIG = 10**6


def record(num, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@functools.lru_cache(maxsize=None)
def big_keys(dist):
    return generate_ints(dist, BIG, 1)


@functools.lru_cache(maxsize=None)
def big_structure(dist, mapper, eps=31):
    return LeMonHash.build(big_keys(dist), mapper, eps, "ribbon")


def test_correctness_sweep():
    t0 = time.perf_counter()
    failures = []
    count = 0
    for dist in INT_DISTS:
        for n in (1, 2, 10, 1000, 100_000):
            keys = generate_ints(dist, n, n)
            for mapper in ("linear", "segmented", "pgm", "auto"):
                for backend in ("peeling", "ribbon"):
                    h = LeMonHash.build(keys, mapper, 31, backend)
                    count += 1
                    if not is_mmphf(h, keys):
                        failures.append((dist, n, mapper, backend))
    took = time.perf_counter() - t0
    record(1, not failures and took <= 120, f"{count} configurations, {len(failures)} failures, {took:.1f}s (limit 120s)")


def test_linear_payload_constant():
    const = poisson_payload_constant()
    h = big_structure("uniform", "linear")
    per_key = h.space_breakdown()["retrievalPayloadBits"] / BIG
    ok = abs(const - 0.91536) <= 1e-5 and abs(per_key - 0.915) <= 0.02
    record(2, ok, f"payload {per_key:.4f} bits/key (target 0.915 +- 0.02), series constant {const:.5f}")


def test_uniform_space():
    lin = big_structure("uniform", "linear").bits_per_key()
    pgm = big_structure("uniform", "pgm").bits_per_key()
    ok = abs(lin - 2.94) <= 0.15 and abs(pgm - 2.98) <= 0.30
    record(3, ok, f"linear {lin:.3f} bpk (2.94 +- 0.15), pgm eps=31 {pgm:.3f} bpk (2.98 +- 0.30)")


def test_robustness():
    normal = big_structure("normal", "pgm").bits_per_key()
    expo = big_structure("exponential", "pgm").bits_per_key()
    lin = big_structure("normal", "linear").bits_per_key()
    ok = normal <= 3.3 and expo <= 3.3 and lin >= 10
    record(4, ok, f"pgm normal {normal:.3f}, pgm exponential {expo:.3f} (<= 3.3), linear normal {lin:.2f} (>= 10)")


def test_epsilon_bound():
    worst = []
    ok = True
    for dist in INT_DISTS:
        keys = generate_ints(dist, 100_000, 5)
        n = len(keys)
        for eps in (15, 31, 63):
            h = LeMonHash.build(keys, "pgm", eps, record_buckets=True)
            sb = h.space_breakdown()
            biggest = int(np.bincount(h.build_buckets).max())
            bound = math.ceil(math.log2(2 * eps + 1)) + 2 + sb["mapperBits"] / n + 0.15
            ok &= biggest <= 2 * eps + 1 and sb["bitsPerKey"] <= bound and is_mmphf(h, keys)
            worst.append(sb["bitsPerKey"] - bound)
    record(5, ok, f"12 configurations, largest bpk minus bound {max(worst):.3f} (must be <= 0)")


def test_pla_oracle():
    ok = True
    worst_err = 0
    worst_ratio = 0.0
    for i in range(50):
        eps = (15, 31, 63)[i % 3]
        n = 10_000
        kind = INT_DISTS[i % 4]
        keys = generate_ints(kind, n, 1000 + i)
        fk, sl, ic = pla_build(keys, eps)
        model = PgmModel(eps, n, fk, sl, ic)
        est = np.array([model.estimate(int(k)) for k in keys])
        err = int(np.abs(est - np.arange(n)).max())
        worst_err = max(worst_err, err / eps)
        worst_ratio = max(worst_ratio, model.m / (n / (2 * eps)))
        ok &= err <= eps and model.m <= n / (2 * eps)
    record(6, ok, f"50 instances n=10^4, max |estimate - rank| / eps {worst_err:.3f} (<= 1), max m/(n/2eps) {worst_ratio:.3f} (<= 1)")


def test_retrieval():
    rng = np.random.default_rng(7)
    n = 100_000
    h = np.unique(rng.integers(0, 2**64, n + 100, dtype=np.uint64))[:n]
    rng.shuffle(h)
    ok = True
    etas = {}
    for r in (1, 2, 4, 8):
        v = rng.integers(0, 2**r, n, dtype=np.uint64)
        peel = build_retrieval(h, v, r, "peeling")
        rib = build_retrieval(h, v, r, "ribbon")
        ok &= bool((peel.query_many(h) == v).all() and (rib.query_many(h) == v).all())
        ok &= peel.payload_bits() == peeling_slots(n) * r == math.ceil(1.23 * n) * r
        etas[r] = rib.overhead()
        ok &= etas[r] <= 0.10
    shown = ", ".join(f"r={r} eta={e:.4f}" for r, e in etas.items())
    record(7, ok, f"round trips ok, peeling bits = ceil(1.23n)*r, ribbon {shown} (<= 0.10)")


def test_vl_correctness():
    a = build_alphabet([b"shoppers", b"shopping", b"shops"], 4)
    ok = extract_chunk(b"shoppers", 4, a, 4) == 131
    rnd = random.Random(8)
    kinds = ("bytes", "kmer", "prefix", "cluster")
    for i in range(100):
        s = corpus(rnd, kinds[i % 4], rnd.choice([1, 2, 50, 500, 3000]))
        tree = VlTree.build(s, threshold=rnd.choice([8, 32, 128]), backend=("peeling", "ribbon")[i % 2], seed=i)
        ok &= bool((tree.query_many(s) == np.arange(len(s))).all())
    record(8, ok, "\"pers\" -> 131 and 100 randomized corpora verified")


def test_vl_alphabet_reduction():
    s = generate_strings("kmer", BIG, 9)
    on = VlTree.build(s, alphabet_reduction=True).bits_per_key()
    off = VlTree.build(s, alphabet_reduction=False).bits_per_key()
    record(9, on < off, f"4-letter corpus n=10^6: reduced {on:.3f} bpk vs raw {off:.3f} bpk")


def test_query_ordering():
    keys = big_keys("uniform")
    lin = run_bench(big_structure("uniform", "linear"), keys, 20_000, seed=10, rebuild=False)
    pgm = run_bench(big_structure("uniform", "pgm"), keys, 20_000, seed=10, rebuild=False)
    a, b = lin["queryThroughputKqPerSec"], pgm["queryThroughputKqPerSec"]
    record(10, a >= b, f"uniform 10^6 query throughput linear {a:.1f} kq/s >= pgm {b:.1f} kq/s "
                       f"(batch {lin['batchQueryThroughputKqPerSec']:.0f} vs {pgm['batchQueryThroughputKqPerSec']:.0f})")


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            try:
                fn()
            except AssertionError:
                pass
