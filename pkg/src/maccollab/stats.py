"""Paired comparison statistics for per-replication MSPE vectors."""

from __future__ import annotations

import math

import numpy as np

from .data import Loss, empirical_risk
from .errors import DegenerateStatistic, InvalidInput


def mspe(actual, predicted) -> float:
    """Mean squared prediction error (squared-loss empirical risk)."""
    return empirical_risk(actual, predicted, Loss.SQUARED)


def _diffs(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise InvalidInput(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise InvalidInput("paired statistics need at least two pairs")
    d = a - b
    if not d.std(ddof=1) > 0:
        raise DegenerateStatistic("paired differences have zero standard deviation")
    return d


def paired_t(a, b) -> float:
    """``mean(d) / (sd(d) / sqrt(m))`` for ``d = a - b`` (sd with ddof=1)."""
    d = _diffs(a, b)
    return float(d.mean() / (d.std(ddof=1) / math.sqrt(d.size)))


def cohens_d(a, b) -> float:
    """Paired-design effect size ``mean(d) / sd(d)``, i.e. ``paired_t / sqrt(m)``."""
    d = _diffs(a, b)
    return float(d.mean() / d.std(ddof=1))


def win_counts(mac, alt, tol: float = 0.0) -> tuple[int, int, int]:
    """(MaC wins, alternative wins, ties) over paired MSPEs; lower is a win."""
    mac = np.asarray(mac, dtype=float)
    alt = np.asarray(alt, dtype=float)
    d = alt - mac
    return int(np.sum(d > tol)), int(np.sum(d < -tol)), int(np.sum(np.abs(d) <= tol))
