"""Download, cache and parse PMLB regression datasets.

Cache layout::

    DIR/<name>.tsv.gz
    DIR/manifest.json   {"version": 1, "datasets": {name: {sha256, n_rows, ...}}}

A dataset's checksum is pinned the first time it lands in the cache; later
reads verify it and refuse a mismatching file.
"""

from __future__ import annotations

import csv
import gzip
import hashlib
import io
import json
import os
import threading
import urllib.request
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .data import Dataset
from .errors import BadFormat, CorruptCache, FetchFailed, TooFewRows

BASE_URL = "https://github.com/EpistasisLab/pmlb/raw/master/datasets"
MAX_ROWS = 10**6
MANIFEST = "manifest.json"

Transport = Callable[[str], bytes]

_manifest_lock = threading.Lock()


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    n_rows: int
    n_features: int
    url: str
    cache_path: str | None = None
    checksum: str | None = None


def dataset_url(name: str, base_url: str = BASE_URL) -> str:
    return f"{base_url}/{name}/{name}.tsv.gz"


def known_datasets() -> list[DatasetManifest]:
    """The bundled list of PMLB regression datasets (name, rows, features)."""
    text = resources.files("maccollab").joinpath("pmlb_regression.tsv").read_text()
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    out = []
    for row in csv.DictReader(lines, delimiter="\t"):
        name = row["dataset"]
        out.append(DatasetManifest(name, int(row["n_instances"]), int(row["n_features"]), dataset_url(name)))
    return out


def corpus(max_rows: int = MAX_ROWS, manifest: Iterable[DatasetManifest] | None = None) -> list[DatasetManifest]:
    """Regression datasets with fewer than ``max_rows`` rows, sorted by name."""
    entries = known_datasets() if manifest is None else list(manifest)
    return sorted((m for m in entries if m.n_rows < max_rows), key=lambda m: m.name)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(f".{path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def read_manifest(cache_dir) -> dict:
    path = Path(cache_dir) / MANIFEST
    if not path.exists():
        return {"version": 1, "datasets": {}}
    return json.loads(path.read_text())


def _record(cache_dir: Path, name: str, entry: dict) -> None:
    with _manifest_lock:
        manifest = read_manifest(cache_dir)
        manifest["datasets"][name] = entry
        manifest["datasets"] = dict(sorted(manifest["datasets"].items()))
        _atomic_write(cache_dir / MANIFEST, (json.dumps(manifest, indent=1, sort_keys=True) + "\n").encode())


def _default_transport(url: str) -> bytes:
    with urllib.request.urlopen(url, timeout=60) as resp:
        return resp.read()


def fetch(
    name: str,
    cache_dir,
    transport: Transport | None = None,
    base_url: str = BASE_URL,
    known: Iterable[str] | None = None,
) -> Path:
    """Return the cached ``<name>.tsv.gz``, downloading it on a cache miss.

    ``known`` restricts the accepted names (default: the bundled PMLB list);
    ``transport`` maps a URL to the response bytes.
    """
    cache_dir = Path(cache_dir)
    path = cache_dir / f"{name}.tsv.gz"
    pinned = read_manifest(cache_dir)["datasets"].get(name, {}).get("sha256")
    if path.exists():
        digest = _sha256(path.read_bytes())
        if pinned is not None and digest != pinned:
            raise CorruptCache(f"{path}: sha256 {digest} does not match pinned {pinned}")
        if pinned is None:
            _record(cache_dir, name, _entry(name, path, digest, base_url))
        return path

    names = {m.name for m in known_datasets()} if known is None else set(known)
    if name not in names:
        raise FetchFailed(name, "not a known regression dataset")
    url = dataset_url(name, base_url)
    try:
        data = (transport or _default_transport)(url)
    except Exception as err:  # any transport failure with an empty cache
        raise FetchFailed(name, f"{type(err).__name__}: {err}") from err
    digest = _sha256(data)
    if pinned is not None and digest != pinned:
        raise CorruptCache(f"download of {name} has sha256 {digest}, pinned {pinned}")
    cache_dir.mkdir(parents=True, exist_ok=True)
    _atomic_write(path, data)
    _record(cache_dir, name, _entry(name, path, digest, base_url))
    return path


def _entry(name, path, digest, base_url):
    ds = parse(path)
    return {
        "sha256": digest,
        "n_rows": ds.n,
        "n_features": ds.width,
        "url": dataset_url(name, base_url),
        "file": path.name,
    }


def fetch_all(cache_dir, max_rows: int = MAX_ROWS, transport: Transport | None = None) -> list[Path]:
    return [fetch(m.name, cache_dir, transport) for m in corpus(max_rows)]


def cached_corpus(manifest_path, max_rows: int = MAX_ROWS) -> list[DatasetManifest]:
    """Datasets recorded in a cache manifest, under the row cap, sorted by name."""
    manifest_path = Path(manifest_path)
    cache_dir = manifest_path.parent
    data = json.loads(manifest_path.read_text())
    entries = [
        DatasetManifest(name, int(e["n_rows"]), int(e["n_features"]), e.get("url", ""),
                        str(cache_dir / e.get("file", f"{name}.tsv.gz")), e["sha256"])
        for name, e in data["datasets"].items()
    ]
    return corpus(max_rows, entries)


def verify(entry: DatasetManifest) -> Path:
    path = Path(entry.cache_path)
    digest = _sha256(path.read_bytes())
    if entry.checksum is not None and digest != entry.checksum:
        raise CorruptCache(f"{path}: sha256 {digest} does not match pinned {entry.checksum}")
    return path


def parse(path) -> Dataset:
    """Read a PMLB TSV (optionally gzip-compressed) with a ``target`` column."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    reader = csv.reader(io.StringIO(raw.decode("utf-8")), delimiter="\t")
    try:
        header = next(reader)
    except StopIteration:
        raise BadFormat(f"{path}: empty file") from None
    if "target" not in header:
        raise BadFormat(f"{path}: header has no 'target' column")
    t = header.index("target")
    names = tuple(h for j, h in enumerate(header) if j != t)
    rows = []
    for r, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise BadFormat(f"{path}: line {r} has {len(row)} cells, header has {len(header)}")
        vals = []
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise BadFormat(f"{path}: line {r}, column {header[c]!r}: non-numeric {cell!r}") from None
            if not np.isfinite(v):
                raise BadFormat(f"{path}: line {r}, column {header[c]!r}: non-finite {cell!r}")
            vals.append(v)
        rows.append(vals)
    if not rows:
        raise TooFewRows(f"{path}: no data rows")
    A = np.asarray(rows, dtype=float)
    if not names:
        raise BadFormat(f"{path}: no feature columns")
    return Dataset(np.delete(A, t, axis=1), A[:, t], names)
