"""Ridge regression with an unpenalized intercept."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfig, TooFewRows
from .base import FittedMachine


@dataclass(frozen=True, eq=False)
class RidgeMachine(FittedMachine):
    coef: np.ndarray
    intercept: float

    kind = "ridge"

    @property
    def width(self):
        return self.coef.shape[0]

    def _predict(self, X):
        return X @ self.coef + self.intercept

    def _state(self):
        return {"coef": self.coef.tolist(), "intercept": float(self.intercept)}

    @classmethod
    def _from_state(cls, hyperparams, state):
        return cls(hyperparams, np.asarray(state["coef"], dtype=float), float(state["intercept"]))


def ridge_objective(X, y, coef, intercept, penalty):
    r = y - X @ coef - intercept
    return float(r @ r + penalty * coef @ coef)


def fit_ridge(X, y, penalty: float) -> RidgeMachine:
    """Minimise ``||y - Xb - c||^2 + penalty * ||b||^2``.

    Solved on centred data so the intercept is unpenalized.  With
    ``penalty == 0`` the minimum-norm least-squares solution is returned,
    so collinear designs never raise.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if penalty < 0 or not np.isfinite(penalty):
        raise InvalidConfig(f"ridge penalty must be finite and >= 0, got {penalty}")
    if X.shape[0] < 2:
        raise TooFewRows("ridge needs at least two rows")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    if penalty == 0:
        coef = np.linalg.lstsq(Xc, yc, rcond=None)[0]
    else:
        gram = Xc.T @ Xc
        gram[np.diag_indices_from(gram)] += penalty
        coef = np.linalg.solve(gram, Xc.T @ yc)
    intercept = float(y_mean - x_mean @ coef)
    return RidgeMachine({"penalty": float(penalty)}, coef, intercept)
