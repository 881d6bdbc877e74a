"""Command line: gen, build, verify, bench, stats.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 build failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import datasets
from ._io import FormatError
from .lemon import MAGIC as INT_MAGIC
from .lemon import LeMonHash
from .vl import MAGIC as VL_MAGIC
from .vl import VlTree

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_BUILD = 3

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = [
    "schema_version", "structure", "dataset", "n", "key_kind", "mapper", "epsilon", "backend",
    "bits_per_key", "construction_mkeys_per_s", "query_kq_per_s", "batch_query_kq_per_s", "wall_clock_s",
]
MAPPER_CHOICES = ("linear", "segmented", "pgm", "pgm-auto")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _emit(args, payload: dict, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def load_structure(path):
    with open(path, "rb") as f:
        data = f.read()
    # both formats start with a length-prefixed magic
    magic = data[8:12]
    if magic == INT_MAGIC:
        return LeMonHash.from_bytes(data)
    if magic == VL_MAGIC:
        return VlTree.from_bytes(data)
    raise FormatError(f"{path}: not a LeMonHash structure")


def build_structure(keys, mapper: str = "pgm", epsilon: int = 31, backend: str = "ribbon",
                    threshold: int = 128, seed: int = 0, alphabet_reduction: bool = True):
    if isinstance(keys, np.ndarray):
        kind = "auto" if mapper == "pgm-auto" else mapper
        return LeMonHash.build(keys, kind, epsilon, backend, seed)
    return VlTree.build(keys, threshold=threshold, backend=backend, seed=seed,
                        alphabet_reduction=alphabet_reduction, node_eps=epsilon)


def _structure_config(h) -> dict:
    if isinstance(h, LeMonHash):
        d = h.describe()
        return {"mapper": d["kind"], "epsilon": d.get("eps", 0), "backend": d["backend"], "seed": h.seed}
    d = h.describe()
    return {"mapper": "vl", "epsilon": 63, "backend": d["backend"] or "ribbon",
            "threshold": h.threshold, "alphabet_reduction": h.alphabet_reduction, "seed": h.seed}


def _rebuild_args(h) -> dict:
    cfg = _structure_config(h)
    if isinstance(h, LeMonHash):
        return {"mapper": cfg["mapper"], "epsilon": cfg["epsilon"] or 31, "backend": cfg["backend"], "seed": 0}
    return {"backend": cfg["backend"], "threshold": cfg["threshold"],
            "alphabet_reduction": cfg["alphabet_reduction"], "seed": 0}


def cmd_gen(args) -> int:
    params = {}
    if args.k is not None:
        params["k"] = args.k
    if args.min_len is not None:
        params["min_len"] = args.min_len
    if args.max_len is not None:
        params["max_len"] = args.max_len
    if args.n < 1:
        raise UsageError("gen: --n must be positive")
    try:
        keys = datasets.generate(args.kind, args.n, args.seed, **params)
    except datasets.DatasetError as exc:
        print(f"gen: {exc}", file=sys.stderr)
        return EXIT_BUILD
    datasets.write_dataset(args.out, keys)
    _emit(args, {"kind": args.kind, "n": len(keys), "seed": args.seed, "out": args.out},
          f"wrote {len(keys)} {args.kind} keys to {args.out}")
    return EXIT_OK


def cmd_build(args) -> int:
    try:
        keys = datasets.read_dataset(args.dataset, args.kind)
        t0 = time.perf_counter()
        h = build_structure(keys, args.mapper, args.epsilon, args.backend, args.threshold, args.seed,
                            not args.no_alphabet_reduction)
        elapsed = time.perf_counter() - t0
        h.save(args.out)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"build failed: {exc}", file=sys.stderr)
        return EXIT_BUILD
    sb = h.space_breakdown()
    n = len(keys)
    payload = {"n": n, "bitsPerKey": sb["bitsPerKey"], "constructionMKeysPerSec": n / elapsed / 1e6,
               "seconds": elapsed, "breakdown": sb, "config": _structure_config(h), "out": args.out}
    _emit(args, payload, f"n={n} bpk={sb['bitsPerKey']:.4f} construction={n / elapsed / 1e6:.3f} MKeys/s -> {args.out}")
    return EXIT_OK


def verify_structure(h, keys) -> tuple[bool, dict | None]:
    """Check ``query(key_i) == i``; returns (ok, first violation)."""
    got = h.query_many(keys)
    expected = np.arange(len(keys))
    bad = np.flatnonzero(got != expected)
    if bad.size:
        i = int(bad[0])
        return False, {"index": i, "key": _show(keys[i]), "expected": i, "got": int(got[i]), "violations": int(bad.size)}
    # the scalar path must agree with the batched one
    rng = random.Random(len(keys))
    for i in rng.sample(range(len(keys)), min(len(keys), 2000)):
        g = h.query(keys[i] if not isinstance(keys, np.ndarray) else int(keys[i]))
        if g != i:
            return False, {"index": i, "key": _show(keys[i]), "expected": i, "got": int(g), "violations": 1}
    return True, None


def _show(key):
    if isinstance(key, bytes):
        return key.decode("utf-8", "backslashreplace")
    return int(key)


def cmd_verify(args) -> int:
    try:
        keys = datasets.read_dataset(args.dataset, args.kind)
    except (OSError, ValueError) as exc:
        print(f"verify: cannot read dataset: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        h = load_structure(args.structure)
        if isinstance(h, LeMonHash) != isinstance(keys, np.ndarray):
            ok, violation = False, {"reason": "dataset key type does not match the structure"}
        elif h.n != len(keys):
            ok, violation = False, {"reason": f"structure has {h.n} keys, dataset {len(keys)}"}
        else:
            ok, violation = verify_structure(h, keys)
    except (OSError, ValueError, KeyError, IndexError, RuntimeError) as exc:
        ok, violation = False, {"reason": f"structure unreadable: {exc}"}
    if ok:
        _emit(args, {"ok": True, "n": len(keys)}, f"OK: {len(keys)} keys map to their ranks")
        return EXIT_OK
    text = "FAIL: " + ", ".join(f"{k}={v}" for k, v in violation.items())
    _emit(args, {"ok": False, "violation": violation}, text)
    return EXIT_VERIFY


def run_bench(h, keys, queries: int = 10_000, seed: int = 0, rebuild: bool = True, threads: int = 1) -> dict:
    """Benchmark report: shuffled in-set queries, warm-up, two timed runs averaged."""
    n = len(keys)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, queries)
    if isinstance(keys, np.ndarray):
        probes = [int(x) for x in keys[idx]]
        batch = keys[idx]
    else:
        probes = [keys[i] for i in idx.tolist()]
        batch = probes
    q = h.query
    checksum = 0
    for x in probes[: max(1, queries // 10)]:
        checksum ^= q(x)
    times = []
    for _ in range(2):
        t0 = time.perf_counter()
        acc = 0
        for x in probes:
            acc += q(x)
        times.append(time.perf_counter() - t0)
        checksum ^= acc
    batch_times = []
    for _ in range(2):
        t0 = time.perf_counter()
        checksum ^= int(np.sum(h.query_many(batch)))
        batch_times.append(time.perf_counter() - t0)
    report = {
        "n": n,
        "queries": queries,
        "bitsPerKey": h.space_breakdown()["totalBits"] / n,
        "queryThroughputKqPerSec": queries / (sum(times) / 2) / 1e3,
        "batchQueryThroughputKqPerSec": queries / (sum(batch_times) / 2) / 1e3,
        "breakdown": h.space_breakdown(),
        "config": _structure_config(h),
        "checksum": checksum,
    }
    if threads > 1:
        parts = [batch[i::threads] for i in range(threads)]
        t0 = time.perf_counter()
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(h.query_many, parts))
        report["threadedBatchQueryThroughputKqPerSec"] = queries / (time.perf_counter() - t0) / 1e3
        report["threads"] = threads
    if rebuild:
        builds = []
        for _ in range(2):
            t0 = time.perf_counter()
            build_structure(keys, **_rebuild_args(h))
            builds.append(time.perf_counter() - t0)
        report["constructionMKeysPerSec"] = n / (sum(builds) / 2) / 1e6
    return report


def cmd_bench(args) -> int:
    try:
        keys = datasets.read_dataset(args.dataset, args.kind)
        h = load_structure(args.structure)
    except (OSError, ValueError) as exc:
        print(f"bench: {exc}", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    report = run_bench(h, keys, args.queries, args.seed, rebuild=not args.no_rebuild, threads=args.threads)
    report["wallClockSec"] = time.perf_counter() - t0
    report["structure"] = args.structure
    report["dataset"] = args.dataset
    if args.csv:
        write_csv_row(args.csv, report, keys)
    text = (f"bpk={report['bitsPerKey']:.4f} query={report['queryThroughputKqPerSec']:.1f} kq/s "
            f"batch={report['batchQueryThroughputKqPerSec']:.1f} kq/s")
    if "constructionMKeysPerSec" in report:
        text += f" construction={report['constructionMKeysPerSec']:.3f} MKeys/s"
    _emit(args, report, text)
    return EXIT_OK


def write_csv_row(path, report: dict, keys) -> None:
    cfg = report["config"]
    row = {
        "schema_version": CSV_SCHEMA_VERSION,
        "structure": report.get("structure", ""),
        "dataset": report.get("dataset", ""),
        "n": report["n"],
        "key_kind": "ints" if isinstance(keys, np.ndarray) else "strings",
        "mapper": cfg.get("mapper", ""),
        "epsilon": cfg.get("epsilon", ""),
        "backend": cfg.get("backend", ""),
        "bits_per_key": f"{report['bitsPerKey']:.6f}",
        "construction_mkeys_per_s": f"{report.get('constructionMKeysPerSec', float('nan')):.6f}",
        "query_kq_per_s": f"{report['queryThroughputKqPerSec']:.3f}",
        "batch_query_kq_per_s": f"{report['batchQueryThroughputKqPerSec']:.3f}",
        "wall_clock_s": f"{report.get('wallClockSec', 0.0):.3f}",
    }
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        if new:
            w.writeheader()
        w.writerow(row)


def cmd_stats(args) -> int:
    try:
        h = load_structure(args.structure)
    except (OSError, ValueError) as exc:
        print(f"stats: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sb = h.space_breakdown()
    payload = {"describe": h.describe(), "breakdown": sb}
    lines = [f"{k}: {v}" for k, v in h.describe().items()]
    lines += [f"{k}: {v:.4f}" if isinstance(v, float) else f"{k}: {v}" for k, v in sb.items()]
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lemonhash", description="Monotone minimal perfect hashing for integers and strings.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--json", action="store_true", help="print a JSON report")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("gen", help="generate a synthetic dataset")
    g.add_argument("kind", choices=datasets.KINDS)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--k", type=int, help="k-mer length")
    g.add_argument("--min-len", type=int)
    g.add_argument("--max-len", type=int)
    common(g)

    b = sub.add_parser("build", help="build and save a structure")
    b.add_argument("dataset")
    b.add_argument("--out", required=True)
    b.add_argument("--mapper", choices=MAPPER_CHOICES, default="pgm")
    b.add_argument("--epsilon", type=int, default=31)
    b.add_argument("--backend", choices=("peeling", "ribbon"), default="ribbon")
    b.add_argument("--threshold", type=int, default=128, help="recursion threshold for strings")
    b.add_argument("--no-alphabet-reduction", action="store_true")
    b.add_argument("--kind", choices=("auto", "ints", "strings"), default="auto")
    common(b)

    v = sub.add_parser("verify", help="check that every key maps to its rank")
    v.add_argument("structure")
    v.add_argument("dataset")
    v.add_argument("--kind", choices=("auto", "ints", "strings"), default="auto")
    common(v, seed=False)

    be = sub.add_parser("bench", help="measure space and throughput")
    be.add_argument("structure")
    be.add_argument("dataset")
    be.add_argument("--queries", type=int, default=10_000)
    be.add_argument("--csv", help="append a row to this CSV file")
    be.add_argument("--threads", type=int, default=1)
    be.add_argument("--no-rebuild", action="store_true", help="skip the construction timing")
    be.add_argument("--kind", choices=("auto", "ints", "strings"), default="auto")
    common(be)

    s = sub.add_parser("stats", help="print the space breakdown of a structure")
    s.add_argument("structure")
    common(s, seed=False)
    return p


COMMANDS = {"gen": cmd_gen, "build": cmd_build, "verify": cmd_verify, "bench": cmd_bench, "stats": cmd_stats}


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("lemonhash: error: a subcommand is required")
        if getattr(args, "epsilon", 1) < 1:
            raise UsageError("--epsilon must be at least 1")
        if getattr(args, "threshold", 2) < 2:
            raise UsageError("--threshold must be at least 2")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
