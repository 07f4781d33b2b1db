"""Shared fixtures for the test-suite."""

from __future__ import annotations

import math
from contextlib import contextmanager
from unittest import mock

import numpy as np

from maccollab.data import Dataset
from maccollab.machines import MachineSpec, observe_fits

# one line per acceptance criterion, echoed in the pytest terminal summary
ACCEPTANCE_LINES: list[str] = []

RIDGE = MachineSpec("ridge", tuple({"penalty": v} for v in (1e-2, 1.0, 100.0)))
TREE = MachineSpec("tree", tuple({"max_depth": 4, "cc_alpha": a, "min_leaf": 5} for a in (0.0, 1e-2, 0.1)))
MLP = MachineSpec("mlp", ({"width": 4, "activation": "tanh", "learning_rate": 1e-2, "epochs": 5, "seed": 0},))


def fixture(seed: int, n: int = 150, p: int = 4, noise: float = 0.5):
    """A (train, val, test) triple with a mixed linear/step signal."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = X[:, 0] + 2.0 * (X[:, 1] > 0) + np.sin(X[:, 2]) + noise * rng.normal(size=n)
    a, b = int(0.6 * n), int(0.8 * n)
    return Dataset(X[:a], y[:a]), Dataset(X[a:b], y[a:b]), Dataset(X[b:], y[b:])


def _Phi(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _phi(x):
    return math.exp(-x * x / 2.0) / math.sqrt(2.0 * math.pi)


def analytic_term_moments(which: int, rho: float = 0.1):
    """Closed-form (mean, variance) per raw term; None where no simple form exists.

    Relies on Gaussian identities: E[L^6] = 15 s^6 for L ~ N(0, s^2),
    P(x1 x2 > 0) = 1/2 + arcsin(rho)/pi, E[x2 | x1] = rho x1 and
    E[1{x1 > 0} exp(b x2)] = exp(b^2/2) Phi(b rho).
    """
    a = np.array([1.0, 1.0, 0.5, 0.3, 0.2])
    i = np.arange(5)
    s2 = float(a @ (rho ** np.abs(i[:, None] - i[None, :])) @ a)
    cube = (0.0, 15.0 * s2**3)

    def bern(p):
        return p, p * (1 - p)

    if which == 1:
        return [cube, bern(0.5), bern(_Phi(-1.0)), bern(0.5 + math.asin(rho) / math.pi)]
    m1 = rho * _phi(0.0)
    m2 = -rho * _phi(1.0)
    b = math.log(3.0)
    m3 = math.exp(b * b / 2) * _Phi(b * rho)
    return [
        cube,
        (m1, 0.5 - m1**2),
        (m2, (1 - rho**2) * _Phi(1.0) + rho**2 * (_Phi(1.0) - _phi(1.0)) - m2**2),
        (m3, math.exp(2 * b * b) * _Phi(2 * b * rho) - m3**2),
        None,
    ]


FAST_GRIDS = {
    "ridge": [{"penalty": v} for v in (1e-2, 1.0)],
    "tree": [{"max_depth": 4, "cc_alpha": a, "min_leaf": 5} for a in (1e-3, 1e-2)],
    "mlp": [{"width": 4, "activation": "tanh", "learning_rate": 1e-2, "epochs": 5, "seed": 0}],
}


@contextmanager
def provenance_guard(refit: bool):
    """Check every fit inside the harness sees exactly the training rows
    (or training + validation rows when ``refit``), never a test row.

    The split used by the harness is intercepted to know the current parts;
    each fit's feature matrix must equal one of the permitted matrices.
    """
    from maccollab import harness

    state = {"allowed": (), "fits": 0, "violations": []}
    original = harness.split

    def spy(data, fractions, seed):
        s = original(data, fractions, seed)
        train, val, _ = s.parts(data)
        allowed = [train.features]
        if refit:
            allowed.append(np.vstack([train.features, val.features]))
        state["allowed"] = allowed
        return s

    def check(kind, X, y):
        state["fits"] += 1
        if not any(X.shape == a.shape and np.array_equal(X, a) for a in state["allowed"]):
            state["violations"].append((kind, X.shape))

    with mock.patch.object(harness, "split", spy), observe_fits(check):
        yield state
