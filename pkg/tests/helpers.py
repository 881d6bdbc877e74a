import numpy as np

from lemonhash.datasets import generate_ints

INT_DISTS = ("uniform", "normal", "exponential", "clustered")


def int_keys(dist, n, seed):
    return generate_ints(dist, n, seed)


def is_mmphf(h, keys):
    """Every key maps to its rank; this is perfect, minimal and monotone at once."""
    got = h.query_many(keys)
    return bool((np.asarray(got) == np.arange(len(keys))).all())


def corpus(rnd, kind, n):
    out = set()
    while len(out) < n:
        if kind == "bytes":
            out.add(bytes(rnd.randrange(256) for _ in range(rnd.randint(1, 200))))
        elif kind == "kmer":
            out.add("".join(rnd.choice("ACGT") for _ in range(rnd.randint(4, 16))).encode())
        elif kind == "prefix":
            w = "".join(rnd.choice("xy") for _ in range(rnd.randint(1, 120))).encode()
            out.add(w)
            out.add(w[: rnd.randint(1, len(w))])
        else:
            host = rnd.choice([b"http://a.org/", b"http://a.org/docs/", b"https://longhost.example.com/x/"])
            out.add(host + "".join(rnd.choice("ab/.") for _ in range(rnd.randint(1, 60))).encode())
    return sorted(out)
