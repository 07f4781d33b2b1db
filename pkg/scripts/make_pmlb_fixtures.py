"""Write the small PMLB-format datasets used by the offline test-suite.

The files are byte-deterministic (fixed seeds, gzip mtime 0), so their
checksums can be pinned in the committed manifest.

    python3 scripts/make_pmlb_fixtures.py tests/fixtures/pmlb
"""

from __future__ import annotations

import argparse
import gzip
import hashlib
import json
from pathlib import Path

import numpy as np


def friedman1(rng, n):
    X = rng.uniform(size=(n, 6))
    y = 10 * np.sin(np.pi * X[:, 0] * X[:, 1]) + 20 * (X[:, 2] - 0.5) ** 2 + 10 * X[:, 3] + 5 * X[:, 4]
    return X, y + rng.normal(size=n)


def linear(rng, n):
    X = rng.normal(size=(n, 4))
    return X, X @ [1.5, -2.0, 0.0, 0.7] + 0.5 * rng.normal(size=n)


def steps(rng, n):
    X = rng.normal(size=(n, 3))
    y = 3.0 * (X[:, 0] > 0) - 2.0 * (X[:, 1] > 0.5) + 0.3 * rng.normal(size=n)
    return X, y


def interaction(rng, n):
    X = rng.uniform(-2, 2, size=(n, 5))
    return X, X[:, 0] * X[:, 1] + np.cos(X[:, 2]) + 0.4 * rng.normal(size=n)


def counts(rng, n):
    # integer-valued features and a count-like target, plus a constant column
    X = np.column_stack([rng.integers(0, 10, size=n), rng.integers(0, 3, size=n), np.full(n, 7)])
    y = rng.poisson(1 + X[:, 0] / 3 + X[:, 1]).astype(float)
    return X.astype(float), y


FIXTURES = {
    "fx_counts": (counts, 140),
    "fx_friedman": (friedman1, 200),
    "fx_interaction": (interaction, 180),
    "fx_linear": (linear, 120),
    "fx_steps": (steps, 160),
}


def to_tsv(X, y) -> bytes:
    header = [f"f{j}" for j in range(X.shape[1])] + ["target"]
    lines = ["\t".join(header)]
    for row, t in zip(X, y):
        lines.append("\t".join(f"{v:.10g}" for v in (*row, t)))
    return ("\n".join(lines) + "\n").encode()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    datasets = {}
    for seed, (name, (make, n)) in enumerate(sorted(FIXTURES.items())):
        X, y = make(np.random.default_rng(1000 + seed), n)
        data = gzip.compress(to_tsv(X, y), mtime=0)
        (args.out / f"{name}.tsv.gz").write_bytes(data)
        datasets[name] = {
            "sha256": hashlib.sha256(data).hexdigest(),
            "n_rows": n,
            "n_features": X.shape[1],
            "url": "",
            "file": f"{name}.tsv.gz",
        }
    manifest = {"version": 1, "datasets": datasets}
    (args.out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    for name, e in datasets.items():
        print(name, e["n_rows"], e["n_features"], e["sha256"][:12])


if __name__ == "__main__":
    main()
