import csv
import json

import numpy as np
import pytest

from lemonhash import cli, datasets


def test_generation_is_deterministic():
    a = datasets.generate("exponential", 5000, 7)
    assert (a == datasets.generate("exponential", 5000, 7)).all()
    assert not (a == datasets.generate("exponential", 5000, 8)).all()
    assert datasets.generate("kmer", 300, 2) == datasets.generate("kmer", 300, 2)


@pytest.mark.parametrize("kind", datasets.KINDS)
def test_generated_sets_are_sorted_and_distinct(kind):
    keys = datasets.generate(kind, 2000, 1)
    assert len(keys) == 2000
    if isinstance(keys, np.ndarray):
        assert (np.diff(keys.astype(np.float64)) >= 0).all() and (keys[1:] > keys[:-1]).all()
    else:
        assert all(a < b for a, b in zip(keys, keys[1:]))
        assert all(b"\n" not in s for s in keys)


def test_distribution_moments():
    normal = datasets.generate("normal", 100_000, 3).astype(np.float64)
    assert abs(normal.mean() - 1e15) <= 1e-3 * 1e15
    expo = datasets.generate("exponential", 100_000, 3).astype(np.float64)
    assert abs(expo.mean() - 1e15) <= 0.01 * 1e15


def test_kmer_shape():
    keys = datasets.generate("kmer", 100, 0)
    assert all(len(k) == 32 and set(k) <= set(b"ACGT") for k in keys)


def test_impossible_request():
    with pytest.raises(datasets.DatasetError):
        datasets.generate("kmer", 20, 0, k=2)


def test_file_round_trips(tmp_path):
    ints = datasets.generate("uniform", 100, 0)
    datasets.write_dataset(tmp_path / "i.bin", ints)
    assert (datasets.read_dataset(tmp_path / "i.bin") == ints).all()
    strs = datasets.generate("urls", 100, 0)
    datasets.write_dataset(tmp_path / "s.txt", strs)
    assert datasets.read_dataset(tmp_path / "s.txt") == strs
    with pytest.raises(datasets.DatasetError):
        datasets.write_strings(tmp_path / "bad.txt", [b"a\nb"])


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.mark.parametrize("kind,mapper", [("clustered", "pgm"), ("uniform", "linear"), ("normal", "pgm-auto"),
                                         ("exponential", "segmented"), ("urls", "pgm"), ("kmer", "pgm")])
def test_end_to_end(workdir, capsys, kind, mapper):
    assert cli.main(["gen", kind, "--n", "3000", "--out", "d", "--seed", "4"]) == 0
    capsys.readouterr()
    assert cli.main(["build", "d", "--out", "s", "--mapper", mapper, "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n"] == 3000 and report["bitsPerKey"] > 0
    assert cli.main(["verify", "s", "d"]) == 0
    assert "OK" in capsys.readouterr().out
    assert cli.main(["bench", "s", "d", "--queries", "500", "--no-rebuild", "--json"]) == 0
    bench = json.loads(capsys.readouterr().out)
    assert bench["queryThroughputKqPerSec"] > 0
    assert cli.main(["stats", "s", "--json"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["breakdown"]["totalBits"] == report["breakdown"]["totalBits"]


def test_verify_detects_wrong_keys(workdir, capsys):
    cli.main(["gen", "uniform", "--n", "1000", "--out", "a", "--seed", "1"])
    cli.main(["gen", "uniform", "--n", "1000", "--out", "b", "--seed", "2"])
    cli.main(["gen", "urls", "--n", "1000", "--out", "c"])
    cli.main(["build", "a", "--out", "s"])
    capsys.readouterr()
    assert cli.main(["verify", "s", "b"]) == 2
    assert "FAIL" in capsys.readouterr().out
    assert cli.main(["verify", "s", "c"]) == 2


def test_verify_detects_tampering(workdir):
    cli.main(["gen", "uniform", "--n", "2000", "--out", "d"])
    cli.main(["build", "d", "--out", "s", "--mapper", "linear"])
    data = bytearray((workdir / "s").read_bytes())
    # flip bits near the end, inside the retrieval payload
    for i in range(len(data) - 200, len(data) - 100):
        data[i] ^= 0x5A
    (workdir / "s").write_bytes(bytes(data))
    assert cli.main(["verify", "s", "d"]) == 2


def test_usage_errors(workdir):
    assert cli.main([]) == 1
    assert cli.main(["frobnicate"]) == 1
    assert cli.main(["build"]) == 1
    assert cli.main(["gen", "uniform", "--n", "0", "--out", "x"]) == 1
    assert cli.main(["build", "x", "--out", "y", "--epsilon", "0"]) == 1


def test_build_failure(workdir):
    datasets.write_ints(workdir / "dup", np.array([5, 5, 7], dtype=np.uint64))
    assert cli.main(["build", "dup", "--out", "s"]) == 3
    assert cli.main(["build", "missing", "--out", "s"]) == 3


def test_csv_rows(workdir):
    cli.main(["gen", "uniform", "--n", "2000", "--out", "d"])
    cli.main(["build", "d", "--out", "s"])
    for _ in range(2):
        assert cli.main(["bench", "s", "d", "--queries", "200", "--csv", "r.csv", "--threads", "2"]) == 0
    with open(workdir / "r.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == cli.CSV_COLUMNS
    assert len(rows) == 3
    rec = dict(zip(rows[0], rows[1]))
    assert rec["schema_version"] == str(cli.CSV_SCHEMA_VERSION)
    assert rec["key_kind"] == "ints" and rec["n"] == "2000"
    assert float(rec["construction_mkeys_per_s"]) > 0
