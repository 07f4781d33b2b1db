"""Simulated regression data with correlated Gaussian features.

Two data-generating processes over ten features ``x1..x10`` drawn from
``N(0, Sigma)`` with ``Sigma_ij = rho^|i-j|``; only ``x1..x5`` enter the
response.  Each stochastic term is scaled by ``c_j = 1/sd(term)`` and a
single offset ``c0`` cancels the term means, all estimated by Monte Carlo.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import CalibrationFailed, FactorizationFailed, InvalidConfig

DIM = 10
DEFAULT_RHO = 0.1
DEFAULT_MC_SIZE = 10**7
MIN_MC_SIZE = 10**6
_CHUNK = 10**6

# sign each standardized term enters the response with
TERM_SIGNS = {1: (1, 1, 1, 1), 2: (1, 1, -1, 1, 1)}


def covariance(rho: float = DEFAULT_RHO, dim: int = DIM) -> np.ndarray:
    if not abs(rho) < 1:
        raise InvalidConfig(f"|rho| must be < 1, got {rho}")
    i = np.arange(dim)
    return rho ** np.abs(i[:, None] - i[None, :]).astype(float)


def sample_mvn(n: int, cov, seed) -> np.ndarray:
    """``n`` draws of ``N(0, cov)`` as ``Z @ L.T`` with ``L`` the Cholesky factor."""
    cov = np.asarray(cov, dtype=float)
    if not np.allclose(cov, cov.T):
        raise FactorizationFailed("covariance matrix is not symmetric")
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as err:
        raise FactorizationFailed(f"covariance is not positive definite: {err}") from None
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.standard_normal((n, cov.shape[0])) @ L.T


def dgp_terms(which: int, X) -> np.ndarray:
    """Raw (unscaled) stochastic terms, one column per term.

    Reads only the first five columns.
    """
    X = np.asarray(X, dtype=float)
    x1, x2, x3, x4, x5 = (X[:, j] for j in range(5))
    cube = (x1 + x2 + 0.5 * x3 + 0.3 * x4 + 0.2 * x5) ** 3
    if which == 1:
        return np.column_stack([
            cube,
            (x4 > 0).astype(float),
            (x5 > 1).astype(float),
            (x1 * x2 > 0).astype(float),
        ])
    if which == 2:
        return np.column_stack([
            cube,
            (x1 > 0) * x2,
            (x1 < 1) * x2,
            (x1 > 0) * np.power(3.0, x2),
            (x3 * x4 > 0) * np.sin(x5),
        ])
    raise InvalidConfig(f"unknown DGP {which!r}; expected 1 or 2")


@dataclass(frozen=True)
class Calibration:
    which: int
    mc_size: int
    seed: int
    rho: float
    constants: tuple[float, ...]  # (c0, c1, ..., cm)
    term_means: tuple[float, ...]
    term_sds: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "dgp": self.which,
            "mc_size": self.mc_size,
            "seed": self.seed,
            "rho": self.rho,
            "c": list(self.constants),
            "term_means": list(self.term_means),
            "term_sds": list(self.term_sds),
        }

    @classmethod
    def from_dict(cls, d) -> "Calibration":
        return cls(int(d["dgp"]), int(d["mc_size"]), int(d["seed"]), float(d["rho"]),
                   tuple(d["c"]), tuple(d["term_means"]), tuple(d["term_sds"]))


def default_cache_dir() -> Path:
    return Path(os.environ.get("MACCOLLAB_CACHE", Path.home() / ".cache" / "maccollab"))


def term_moments(which: int, mc_size: int, seed: int, rho: float = DEFAULT_RHO):
    """Monte Carlo mean and sd (ddof=1) of each raw term, in chunks."""
    cov = covariance(rho)
    rng = np.random.default_rng(seed)
    count = 0
    mean = None
    m2 = None
    remaining = mc_size
    # Chan et al. pairwise combination of chunk moments
    while remaining > 0:
        size = min(_CHUNK, remaining)
        T = dgp_terms(which, sample_mvn(size, cov, rng))
        c_mean = T.mean(axis=0)
        c_m2 = ((T - c_mean) ** 2).sum(axis=0)
        if mean is None:
            mean, m2 = c_mean, c_m2
        else:
            delta = c_mean - mean
            tot = count + size
            mean = mean + delta * size / tot
            m2 = m2 + c_m2 + delta**2 * count * size / tot
        count += size
        remaining -= size
    return mean, np.sqrt(m2 / (count - 1))


def calibrate_constants(
    which: int,
    mc_size: int = DEFAULT_MC_SIZE,
    seed: int = 0,
    rho: float = DEFAULT_RHO,
    cache_dir=None,
) -> Calibration:
    """Estimate ``c0..cm`` so each scaled term has variance 1 and the signal mean 0.

    Results are cached as JSON under ``cache_dir`` (pass ``False`` to skip).
    """
    if which not in TERM_SIGNS:
        raise InvalidConfig(f"unknown DGP {which!r}; expected 1 or 2")
    if mc_size < MIN_MC_SIZE:
        raise InvalidConfig(f"mc_size must be >= {MIN_MC_SIZE}, got {mc_size}")
    path = None
    if cache_dir is not False:
        cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()
        path = cache / f"dgp{which}_mc{mc_size}_seed{seed}_rho{rho!r}.json"
        if path.exists():
            return Calibration.from_dict(json.loads(path.read_text()))

    mean, sd = term_moments(which, mc_size, seed, rho)
    if not (np.isfinite(sd).all() and (sd > 0).all()):
        raise CalibrationFailed(f"degenerate term variance in DGP {which}: sd={sd}")
    scale = 1.0 / sd
    signs = np.asarray(TERM_SIGNS[which], dtype=float)
    c0 = -float(np.sum(signs * scale * mean))
    cal = Calibration(which, mc_size, seed, rho, (c0, *map(float, scale)),
                      tuple(map(float, mean)), tuple(map(float, sd)))
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(cal.to_dict(), indent=1))
        os.replace(tmp, path)
    return cal


@dataclass(frozen=True)
class DgpConfig:
    which: int
    n: int
    seed: int
    constants: tuple[float, ...]
    rho: float = DEFAULT_RHO
    noise: bool = True

    def __post_init__(self):
        if self.which not in TERM_SIGNS:
            raise InvalidConfig(f"unknown DGP {self.which!r}; expected 1 or 2")
        if self.n < 1:
            raise InvalidConfig(f"n must be >= 1, got {self.n}")
        if not abs(self.rho) < 1:
            raise InvalidConfig(f"|rho| must be < 1, got {self.rho}")
        constants = tuple(float(c) for c in self.constants)
        if len(constants) != len(TERM_SIGNS[self.which]) + 1:
            raise InvalidConfig(
                f"DGP {self.which} needs {len(TERM_SIGNS[self.which]) + 1} constants, got {len(constants)}"
            )
        if not np.isfinite(constants).all():
            raise InvalidConfig("calibration constants must be finite")
        object.__setattr__(self, "constants", constants)


def response(which: int, X, constants, eps=None) -> np.ndarray:
    c = np.asarray(constants, dtype=float)
    signs = np.asarray(TERM_SIGNS[which], dtype=float)
    y = c[0] + dgp_terms(which, X) @ (signs * c[1:])
    return y if eps is None else y + eps


def generate(config: DgpConfig) -> Dataset:
    """Draw features then noise from one seeded stream and build the response."""
    rng = np.random.default_rng(config.seed)
    X = sample_mvn(config.n, covariance(config.rho), rng)
    eps = rng.standard_normal(config.n)
    y = response(config.which, X, config.constants, eps if config.noise else None)
    return Dataset(X, y, tuple(f"x{j + 1}" for j in range(DIM)))
