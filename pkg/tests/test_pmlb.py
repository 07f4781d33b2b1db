import gzip
import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from maccollab import pmlb
from maccollab.data import standardize
from maccollab.errors import BadFormat, CorruptCache, FetchFailed, TooFewRows

FIXTURES = Path(__file__).parent / "fixtures" / "pmlb"
TINY = gzip.compress(b"a\tb\ttarget\n1\t2\t3\n4\t5\t6\n7\t8\t9\n", mtime=0)


class Stub:
    """Transport that serves fixed bytes and counts calls."""

    def __init__(self, payload=TINY):
        self.payload = payload
        self.urls = []

    def __call__(self, url):
        self.urls.append(url)
        if isinstance(self.payload, Exception):
            raise self.payload
        return self.payload


def test_fetch_then_cache_hit(tmp_path):
    stub = Stub()
    path = pmlb.fetch("tiny", tmp_path, stub, known=["tiny"])
    assert stub.urls == [pmlb.dataset_url("tiny")]
    ds = pmlb.parse(path)
    assert ds.n == 3 and ds.width == 2
    again = pmlb.fetch("tiny", tmp_path, Stub(OSError("network is off")), known=["tiny"])
    assert again == path
    entry = pmlb.read_manifest(tmp_path)["datasets"]["tiny"]
    assert entry["n_rows"] == 3 and len(entry["sha256"]) == 64


def test_unknown_name_is_echoed(tmp_path):
    with pytest.raises(FetchFailed, match="no_such_dataset"):
        pmlb.fetch("no_such_dataset", tmp_path, Stub())


def test_network_failure_with_empty_cache(tmp_path):
    with pytest.raises(FetchFailed, match="tiny"):
        pmlb.fetch("tiny", tmp_path, Stub(OSError("unreachable")), known=["tiny"])
    assert not list(tmp_path.glob("*.gz"))


def test_corrupted_cache_detected(tmp_path):
    path = pmlb.fetch("tiny", tmp_path, Stub(), known=["tiny"])
    path.write_bytes(gzip.compress(b"a\ttarget\n0\t0\n", mtime=0))
    with pytest.raises(CorruptCache):
        pmlb.fetch("tiny", tmp_path, Stub(), known=["tiny"])


def test_fixture_manifest_checksums_hold(tmp_path):
    entries = pmlb.cached_corpus(FIXTURES / "manifest.json")
    assert [e.name for e in entries] == sorted(e.name for e in entries)
    assert len(entries) == 5
    for e in entries:
        ds = pmlb.parse(pmlb.verify(e))
        assert (ds.n, ds.width) == (e.n_rows, e.n_features)
    # tampering with a copy is caught by the pinned checksum
    shutil.copytree(FIXTURES, tmp_path / "c")
    victim = tmp_path / "c" / f"{entries[0].name}.tsv.gz"
    victim.write_bytes(victim.read_bytes() + b"\0")
    with pytest.raises(CorruptCache):
        pmlb.verify(pmlb.cached_corpus(tmp_path / "c" / "manifest.json")[0])


def test_parse_two_column(tmp_path):
    f = tmp_path / "two.tsv"
    f.write_text("a\ttarget\n1\t2\n3\t4\n")
    ds = pmlb.parse(f)
    assert np.array_equal(ds.features, [[1.0], [3.0]])
    assert np.array_equal(ds.target, [2.0, 4.0])
    assert ds.feature_names == ("a",)


def test_parse_target_in_middle(tmp_path):
    f = tmp_path / "mid.tsv"
    f.write_text("a\ttarget\tb\n1\t2\t3\n")
    ds = pmlb.parse(f)
    assert np.array_equal(ds.features, [[1.0, 3.0]]) and ds.feature_names == ("a", "b")


def test_parse_header_only(tmp_path):
    f = tmp_path / "h.tsv"
    f.write_text("a\ttarget\n")
    with pytest.raises(TooFewRows):
        pmlb.parse(f)


@pytest.mark.parametrize(
    "body, needle",
    [
        ("a\ttarget\n1\tnan\n", "line 2, column 'target'"),
        ("a\ttarget\n1\t2\nx\t3\n", "line 3, column 'a'"),
        ("a\tb\n1\t2\n", "target"),
        ("a\ttarget\n1\t2\t3\n", "cells"),
    ],
)
def test_parse_bad_format(tmp_path, body, needle):
    f = tmp_path / "bad.tsv"
    f.write_text(body)
    with pytest.raises(BadFormat, match=needle):
        pmlb.parse(f)


def test_parse_deterministic():
    path = FIXTURES / "fx_linear.tsv.gz"
    assert pmlb.parse(path) == pmlb.parse(path)


def test_corpus_filters():
    full = pmlb.known_datasets()
    assert len(pmlb.corpus(10**6)) == 119
    assert pmlb.corpus(0) == []
    small = pmlb.corpus(50)
    assert min(m.n_rows for m in full) == 47
    assert any(m.n_rows == 47 for m in small)
    names = [m.name for m in pmlb.corpus()]
    assert names == sorted(names)
    assert max(m.n_rows for m in pmlb.corpus()) == 177147


def test_fetch_all_uses_corpus(tmp_path, monkeypatch):
    monkeypatch.setattr(pmlb, "corpus", lambda max_rows=pmlb.MAX_ROWS: [pmlb.DatasetManifest("tiny", 3, 2, "")])
    monkeypatch.setattr(pmlb, "known_datasets", lambda: [pmlb.DatasetManifest("tiny", 3, 2, "")])
    stub = Stub()
    (path,) = pmlb.fetch_all(tmp_path, transport=stub)
    assert path.name == "tiny.tsv.gz" and len(stub.urls) == 1


def test_fixtures_standardize_without_errors():
    for e in pmlb.cached_corpus(FIXTURES / "manifest.json"):
        ds, rec = standardize(pmlb.parse(e.cache_path))
        assert ds.n == e.n_rows
    _, rec = standardize(pmlb.parse(FIXTURES / "fx_counts.tsv.gz"))
    assert rec.dropped == ("f2",)


def test_manifest_is_valid_json():
    data = json.loads((FIXTURES / "manifest.json").read_text())
    assert data["version"] == 1
