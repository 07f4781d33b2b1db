"""Sample representation, seeded splitting, standardization and risk."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import InvalidConfig, InvalidInput, TooFewRows, UninformativeTarget


class Loss(str, Enum):
    SQUARED = "squared"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix ``X`` (n x l), target ``y`` (n,) and column names."""

    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.target, dtype=float).ravel()
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise InvalidInput(f"features must be 2-d, got shape {X.shape}")
        n, l = X.shape
        if n < 1 or l < 1:
            raise TooFewRows(f"dataset needs at least one row and column, got {X.shape}")
        if y.shape[0] != n:
            raise InvalidInput(f"target length {y.shape[0]} != row count {n}")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise InvalidInput("features and target must be finite")
        names = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(l))
        if len(names) != l:
            raise InvalidInput(f"{len(names)} feature names for {l} columns")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "target", _frozen(y))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def width(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.features[idx], self.target[idx], self.feature_names)

    def with_target(self, target) -> "Dataset":
        return Dataset(self.features, target, self.feature_names)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.target, other.target)
        )


@dataclass(frozen=True)
class DataSplit:
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray | None
    p: float

    def parts(self, dataset: Dataset):
        out = [dataset.subset(self.train_idx), dataset.subset(self.val_idx)]
        if self.test_idx is not None:
            out.append(dataset.subset(self.test_idx))
        return tuple(out)


def _part_size(frac: float, n: int) -> int:
    # guard against 0.16 * 1000 = 159.99999...
    return int(math.floor(frac * n + 1e-9))


def split(dataset: Dataset | int, proportions: Sequence[float], seed: int) -> DataSplit:
    """Uniformly random train/val(/test) partition reproducible from ``seed``.

    Validation and test sizes are floored; training takes the remainder.
    """
    n = dataset if isinstance(dataset, (int, np.integer)) else dataset.n
    fracs = [float(f) for f in proportions]
    if len(fracs) not in (2, 3):
        raise InvalidConfig("proportions must be (train, val) or (train, val, test)")
    if any(f <= 0 for f in fracs):
        raise InvalidConfig(f"proportions must be positive, got {fracs}")
    if abs(sum(fracs) - 1.0) > 1e-12:
        raise InvalidConfig(f"proportions must sum to 1, got {sum(fracs)!r}")

    n_val = _part_size(fracs[1], n)
    n_test = _part_size(fracs[2], n) if len(fracs) == 3 else 0
    n_train = n - n_val - n_test
    sizes = [n_train, n_val] + ([n_test] if len(fracs) == 3 else [])
    if min(sizes) < 1:
        raise TooFewRows(f"n={n} too small for proportions {fracs}: part sizes {sizes}")

    perm = np.random.default_rng(seed).permutation(n)
    train = np.sort(perm[:n_train])
    val = np.sort(perm[n_train:n_train + n_val])
    test = np.sort(perm[n_train + n_val:]) if n_test else None
    p = fracs[1] / (fracs[0] + fracs[1])
    return DataSplit(train, val, test, p)


@dataclass(frozen=True)
class Standardization:
    """Per-column (mean, sd) used by :func:`standardize`, plus dropped columns."""

    feature_means: np.ndarray
    feature_sds: np.ndarray
    target_mean: float
    target_sd: float
    kept: tuple[str, ...]
    dropped: tuple[str, ...] = field(default=())


def standardize(dataset: Dataset) -> tuple[Dataset, Standardization]:
    """Scale every column to sample mean 0 and variance 1 (ddof=1).

    Constant feature columns are dropped and reported; a constant target is
    an error.
    """
    X, y = dataset.features, dataset.target
    if dataset.n < 2:
        raise TooFewRows("standardization needs at least two rows")
    if np.ptp(y) == 0:
        raise UninformativeTarget("target column is constant")
    constant = np.ptp(X, axis=0) == 0
    if constant.all():
        raise UninformativeTarget("every feature column is constant")
    names = dataset.feature_names
    kept = tuple(nm for nm, c in zip(names, constant) if not c)
    dropped = tuple(nm for nm, c in zip(names, constant) if c)
    Xk = X[:, ~constant]

    mu = Xk.mean(axis=0)
    sd = Xk.std(axis=0, ddof=1)
    ymu = float(y.mean())
    ysd = float(y.std(ddof=1))
    Xs = (Xk - mu) / sd
    ys = (y - ymu) / ysd
    record = Standardization(mu, sd, ymu, ysd, kept, dropped)
    return Dataset(Xs, ys, kept), record


def empirical_risk(actual, predicted, loss: Loss = Loss.SQUARED) -> float:
    """Mean loss between two equal-length vectors."""
    a = np.asarray(actual, dtype=float).ravel()
    b = np.asarray(predicted, dtype=float).ravel()
    if a.shape != b.shape:
        raise InvalidInput(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.size == 0:
        raise InvalidInput("empirical risk of empty vectors")
    if Loss(loss) is not Loss.SQUARED:
        raise InvalidInput(f"unsupported loss {loss!r}")
    d = a - b
    return float(np.dot(d, d) / d.size)
