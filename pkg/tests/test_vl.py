import random

import numpy as np
import pytest

from lemonhash.vl import VlTree, build_alphabet, chars_per_chunk, extract_chunk, lcp_length
from lemonhash.datasets import generate_strings

from helpers import corpus


def test_lcp_examples():
    assert lcp_length([b"cherry", b"cocoa", b"coconut"]) == 1
    assert lcp_length([b"banana"]) == 6


def test_lcp_against_pairwise_scan():
    rnd = random.Random(1)
    for _ in range(200):
        s = sorted({bytes(rnd.choice(b"ab") for _ in range(rnd.randint(0, 8))) for _ in range(rnd.randint(1, 8))})
        ref = min(
            (next((k for k in range(min(len(a), len(b))) if a[k] != b[k]), min(len(a), len(b))) for a in s for b in s if a != b),
            default=len(s[0]),
        )
        assert lcp_length(s) == ref


def test_alphabet_example():
    a = build_alphabet([b"shoppers", b"shopping", b"shops"], 4)
    assert a.branching() == b"eips"
    assert a.sigma == 4
    assert a.chars == 32
    assert extract_chunk(b"shoppers", 4, a, 4) == 131
    assert a.bitmap_bits() == 128


def test_bitmap_size_for_high_bytes():
    a = build_alphabet([b"\x01", b"\xf0"], 0)
    assert a.bitmap_bits() == 256


def test_chars_per_chunk():
    assert chars_per_chunk(3) == 40
    assert chars_per_chunk(4) == 32
    assert chars_per_chunk(256) == 8
    assert chars_per_chunk(257) == 7


def test_raw_chunks_share_oco():
    assert extract_chunk(b"cocoa", 1, None, 3) == extract_chunk(b"coconut", 1, None, 3)


def test_chunk_order_property():
    rnd = random.Random(2)
    for _ in range(100):
        s = sorted({bytes(rnd.choice(b"abcz\x00") for _ in range(rnd.randint(0, 12))) for _ in range(30)})
        if len(s) < 2:
            continue
        p = lcp_length(s)
        a = build_alphabet(s, p)
        ch = [extract_chunk(x, p, a) for x in s]
        assert ch == sorted(ch)


@pytest.mark.parametrize("kind", ["bytes", "kmer", "prefix", "cluster"])
def test_randomized_corpora(kind):
    rnd = random.Random(kind)
    for i in range(6):
        n = rnd.choice([2, 10, 200, 2000])
        s = corpus(rnd, kind, n)
        t = rnd.choice([4, 16, 128])
        tree = VlTree.build(s, threshold=t, backend=("peeling", "ribbon")[i % 2], alphabet_reduction=i % 3 != 0, seed=i)
        assert (tree.query_many(s) == np.arange(len(s))).all()
        assert [tree.query(x) for x in s[:: max(1, len(s) // 40)]] == list(range(0, len(s), max(1, len(s) // 40)))


def test_singleton_and_errors():
    assert VlTree.build([b"a"]).query(b"a") == 0
    with pytest.raises(ValueError):
        VlTree.build([b"a", b"a"])
    with pytest.raises(ValueError):
        VlTree.build([b"b", b"a"])


def test_height_one_for_small_sets():
    rnd = random.Random(5)
    s = corpus(rnd, "bytes", 100)
    tree = VlTree.build(s)
    assert tree.height == 1 and len(tree.nodes) == 1


def test_kmers_resolve_shallow():
    s = generate_strings("kmer", 100_000, 1)
    tree = VlTree.build(s)
    hist = tree.depth_histogram()
    assert sum(v for d, v in hist.items() if d <= 2) >= 0.99 * len(s)


def test_url_corpus_recurses():
    s = generate_strings("urls", 20_000, 2)
    tree = VlTree.build(s)
    assert len(tree.nodes) > 1
    assert (tree.query_many(s) == np.arange(len(s))).all()


def test_non_keys_deterministic():
    s = generate_strings("random-strings", 3000, 3)
    tree = VlTree.build(s, threshold=8)
    probes = [b"", b"\x00", b"zzzz", s[0][:1], s[5] + b"!"]
    a = tree.query_many(probes).tolist()
    assert a == [tree.query(p) for p in probes]
    assert all(0 <= x < len(s) for x in a)


def test_space_breakdown_components():
    s = generate_strings("urls", 5000, 4)
    sb = VlTree.build(s).space_breakdown()
    keys = ("headerBits", "nodeTableBits", "alphabetBits", "mapperBits", "chunkMapBits", "levelSequenceBits", "retrievalBits")
    assert sum(sb[k] for k in keys) == sb["totalBits"]


def test_alphabet_reduction_helps_on_dna():
    s = generate_strings("kmer", 50_000, 7)
    on = VlTree.build(s, alphabet_reduction=True).bits_per_key()
    off = VlTree.build(s, alphabet_reduction=False).bits_per_key()
    assert on < off


def test_level_sequences_reconstruct():
    s = generate_strings("urls", 20_000, 9)
    tree = VlTree.build(s, threshold=16)
    for node in tree.nodes.values():
        seq = tree.levels[node.level]
        starts = seq.access_many(node.offset + np.arange(node.c + 1))
        assert (np.diff(starts) >= 0).all()


def test_save_load(tmp_path):
    s = generate_strings("urls", 5000, 11)
    tree = VlTree.build(s, threshold=32)
    path = tmp_path / "t.lmh"
    tree.save(path)
    back = VlTree.load(path)
    assert (back.query_many(s) == np.arange(len(s))).all()
    assert back.to_bytes() == tree.to_bytes()
