"""
String keys: the LCP tree and alphabet reduction
================================================

Builds the string structure over DNA k-mers and a URL-like corpus, shows
the tree shape and what packing more characters per chunk buys.
Run with ``python demos/string_keys.py [n]``.
"""

import sys

import numpy as np

from lemonhash import VlTree
from lemonhash.datasets import generate_strings
from lemonhash.vl import build_alphabet, extract_chunk

n = int(sys.argv[1]) if len(sys.argv) > 1 else 100_000

# a node only needs the characters that actually branch right after the
# common prefix, so fewer bits per character and more characters per chunk
words = [b"shoppers", b"shopping", b"shops"]
alpha = build_alphabet(words, 4)
print("branching characters after 'shop':", alpha.branching().decode(), "->", alpha.chars, "chars per chunk")
for w in words:
    print(f"  {w.decode():<9} chunk {extract_chunk(w, 4, alpha)}")
print()

for kind in ("kmer", "urls"):
    keys = generate_strings(kind, n, seed=2)
    print(f"{kind}: {n} keys, e.g. {keys[n // 3].decode()}")
    for reduce in (False, True):
        tree = VlTree.build(keys, alphabet_reduction=reduce)
        assert (tree.query_many(keys) == np.arange(n)).all()
        sb = tree.space_breakdown()
        print(f"  alphabet reduction {'on ' if reduce else 'off'}: {sb['bitsPerKey']:.3f} bpk, "
              f"{sb['nodes']} nodes, height {sb['height']}")
    hist = tree.depth_histogram()
    print("  keys resolved per depth:", dict(sorted(hist.items())))
    print()

# keys that share a long prefix are pushed into child nodes
tree = VlTree.build(keys)
parts = {k: v for k, v in tree.space_breakdown().items() if k.endswith("Bits")}
for k, v in parts.items():
    print(f"  {k:<18} {v / n:8.3f} bits/key")
