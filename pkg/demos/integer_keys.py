"""
Integer keys: how the bucket mapper decides the space
=====================================================

Builds the integer structure over four synthetic distributions and prints
the space of each mapper. Run with ``python demos/integer_keys.py [n]``.
"""

import sys
import time

import numpy as np

from lemonhash import LeMonHash
from lemonhash.datasets import generate_ints
from lemonhash.mappers import poisson_payload_constant

n = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000

# With a perfect uniform spread, bucket sizes are Poisson(1) and each key
# needs about this many bits for its rank inside the bucket.
print(f"expected payload for uniform keys: {poisson_payload_constant():.5f} bits/key\n")

print(f"{'distribution':<12} {'mapper':<10} {'bpk':>7} {'payload':>8} {'mapper':>8} {'build s':>8}")
for dist in ("uniform", "normal", "exponential", "clustered"):
    keys = generate_ints(dist, n, seed=1)
    for mapper in ("linear", "segmented", "pgm", "auto"):
        t0 = time.perf_counter()
        h = LeMonHash.build(keys, mapper, eps=31)
        took = time.perf_counter() - t0
        sb = h.space_breakdown()
        assert (h.query_many(keys) == np.arange(n)).all()
        print(f"{dist:<12} {mapper:<10} {sb['bitsPerKey']:7.3f} "
              f"{sb['retrievalPayloadBits'] / n:8.3f} {sb['mapperBits'] / n:8.3f} {took:8.2f}")
    print()

# The linear mapper assumes the keys fill their range evenly. On normal
# data almost everything lands in a few buckets, so the local ranks get wide.
keys = generate_ints("normal", n, seed=1)
lin = LeMonHash.build(keys, "linear", record_buckets=True)
sizes = np.bincount(lin.build_buckets)
print(f"normal keys, linear mapper: {np.count_nonzero(sizes)} non-empty buckets of {n}, largest {sizes.max()}")

# Queries outside the key set still return a rank-like value in [0, n).
x = int(keys[n // 2]) + 1
print(f"non-key {x} -> {lin.query(x)} (key {n // 2} -> {lin.query(int(keys[n // 2]))})")
