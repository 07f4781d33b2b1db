"""Comparator ensembles: super learner (stacking) and LS-Boost."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Dataset, empirical_risk
from .errors import InvalidConfig, InvalidInput, MacError, MachineFitError
from .machines import FittedMachine, MachineSpec, TuneResult, fit_machine, tune

FORMAT_VERSION = 1


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto ``{w >= 0, sum(w) = 1}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def _objective(P, y, w):
    r = y - P @ w
    return float(r @ r / y.size)


def _gradient(P, y, w):
    return -2.0 * P.T @ (y - P @ w) / y.size


def stationarity(P, y, w) -> float:
    """Norm of the projected-gradient mapping; zero exactly at the optimum."""
    P = np.asarray(P, dtype=float)
    y = np.asarray(y, dtype=float)
    L = _lipschitz(P, y.size)
    return float(L * np.linalg.norm(w - project_simplex(w - _gradient(P, y, w) / L)))


def _lipschitz(P, n):
    return max(2.0 * float(np.linalg.eigvalsh(P.T @ P).max()) / n, 1e-300)


def _polish(P, y, w):
    """Exact equality-constrained least squares on the support of ``w``."""
    S = np.nonzero(w > 1e-12)[0]
    Ps = P[:, S]
    m = S.size
    kkt = np.zeros((m + 1, m + 1))
    kkt[:m, :m] = 2.0 * Ps.T @ Ps
    kkt[:m, m] = kkt[m, :m] = 1.0
    rhs = np.concatenate([2.0 * Ps.T @ y, [1.0]])
    try:
        if np.linalg.cond(kkt) > 1e12:
            return None
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        return None
    if (sol[:m] < 0).any():
        return None
    out = np.zeros_like(w)
    out[S] = sol[:m]
    return out


def simplex_weights(P, y, tol: float = 1e-8, max_iter: int = 20000) -> np.ndarray:
    """Minimise ``mean((y - P w)^2)`` over the probability simplex.

    Projected gradient with step ``1/L`` from every vertex and the uniform
    point, each followed by an exact solve on the detected support.  Later
    starts replace earlier ones only on a clear (1e-12 relative) improvement,
    so degenerate problems resolve to the earliest start.
    """
    P = np.asarray(P, dtype=float)
    y = np.asarray(y, dtype=float)
    if P.ndim != 2 or P.shape[0] != y.size:
        raise InvalidInput(f"prediction matrix shape {P.shape} does not match target {y.shape}")
    K = P.shape[1]
    if K == 1:
        return np.ones(1)
    L = _lipschitz(P, y.size)
    starts = [np.eye(K)[k] for k in range(K)] + [np.full(K, 1.0 / K)]
    best_w, best_f = None, np.inf
    for w in starts:
        for it in range(1, max_iter + 1):
            w_new = project_simplex(w - _gradient(P, y, w) / L)
            step = L * np.linalg.norm(w_new - w)
            w = w_new
            if step < tol:
                break
            if it % 50 == 0:
                # the support usually settles long before the iterates converge
                polished = _polish(P, y, w)
                if polished is not None and stationarity(P, y, polished) < tol:
                    w = polished
                    break
        polished = _polish(P, y, w)
        if polished is not None and _objective(P, y, polished) <= _objective(P, y, w) + 1e-15:
            w = polished
        f = _objective(P, y, w)
        if best_w is None or f < best_f - 1e-12 * (1.0 + abs(best_f)):
            best_w, best_f = w, f
    return best_w


@dataclass(frozen=True, eq=False)
class SuperLearnerModel:
    machines: tuple[FittedMachine, ...]
    weights: np.ndarray

    def predict(self, X) -> np.ndarray:
        X = _as_matrix(X, self.machines[0].width)
        out = np.zeros(X.shape[0])
        for w, m in zip(self.weights, self.machines):
            if w != 0.0:
                out = out + w * m.predict(X)
        return out

    def to_dict(self) -> dict:
        return {
            "format": "maccollab.super_learner",
            "version": FORMAT_VERSION,
            "machines": [m.to_dict() for m in self.machines],
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        _check_version(d)
        return cls(tuple(FittedMachine.from_dict(m) for m in d["machines"]), np.asarray(d["weights"], dtype=float))

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


def fit_super_learner(
    specs: Sequence[MachineSpec],
    train: Dataset,
    val: Dataset,
    refit_on_full_data: bool = False,
    tuned: Sequence[TuneResult] | None = None,
) -> SuperLearnerModel:
    """Tune each machine on the split, weight their validation predictions.

    ``tuned`` lets a caller reuse tuning results it already computed on the
    same split.  With ``refit_on_full_data`` the weights come from the
    train-only fits and the machines are then refit on train + validation.
    """
    specs = list(specs)
    if not specs:
        raise InvalidConfig("super learner needs at least one machine")
    if tuned is None:
        tuned = []
        for k, spec in enumerate(specs):
            try:
                tuned.append(tune(spec, train.features, train.target, val.features, val.target))
            except MacError as err:
                raise MachineFitError(k, 0, err) from err
    P = np.column_stack([t.machine.predict(val.features) for t in tuned])
    w = simplex_weights(P, val.target)
    machines = [t.machine for t in tuned]
    if refit_on_full_data:
        X = np.vstack([train.features, val.features])
        y = np.concatenate([train.target, val.target])
        machines = []
        for k, t in enumerate(tuned):
            try:
                machines.append(fit_machine(specs[k].kind, t.hyperparams, X, y))
            except MacError as err:
                raise MachineFitError(k, 0, err) from err
    return SuperLearnerModel(tuple(machines), w)


@dataclass(frozen=True, eq=False)
class LsBoostModel:
    """Forward-stagewise sum ``shrinkage * sum(stage predictions)``.

    ``stages`` holds only the kept stages; ``trace`` has the validation MSPE
    after every stage that was fitted, including truncated ones.
    """

    stages: tuple[FittedMachine, ...]
    shrinkage: float
    width: int
    machine_index: tuple[int, ...] = ()
    trace: tuple[float, ...] = ()
    train_residual_norms: tuple[float, ...] = ()

    @property
    def stop_index(self) -> int:
        return len(self.stages)

    def predict(self, X) -> np.ndarray:
        X = _as_matrix(X, self.width)
        out = np.zeros(X.shape[0])
        for m in self.stages:
            out = out + self.shrinkage * m.predict(X)
        return out

    def to_dict(self) -> dict:
        return {
            "format": "maccollab.ls_boost",
            "version": FORMAT_VERSION,
            "stages": [m.to_dict() for m in self.stages],
            "shrinkage": self.shrinkage,
            "width": self.width,
            "machine_index": list(self.machine_index),
            "trace": list(self.trace),
            "train_residual_norms": list(self.train_residual_norms),
        }

    @classmethod
    def from_dict(cls, d):
        _check_version(d)
        return cls(
            tuple(FittedMachine.from_dict(m) for m in d["stages"]),
            float(d["shrinkage"]),
            int(d["width"]),
            tuple(d["machine_index"]),
            tuple(d["trace"]),
            tuple(d["train_residual_norms"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


def fit_ls_boost(
    specs: Sequence[MachineSpec],
    train: Dataset,
    val: Dataset,
    rounds: int = 5,
    shrinkage: float = 1.0,
    tolerance: int = 2,
    refit_on_full_data: bool = False,
    select_best: bool = False,
) -> LsBoostModel:
    """Cycle the machines over the current residuals for ``rounds`` rounds.

    Each stage is tuned on the train/validation residuals, then the residuals
    drop by ``shrinkage`` times its prediction.  The model is truncated at the
    stage with the lowest validation MSPE; fitting stops after ``tolerance``
    consecutive stages without improvement.  ``select_best`` fits every
    machine at each stage and keeps the one with the lowest validation MSPE.
    """
    specs = list(specs)
    if not specs:
        raise InvalidConfig("LS-Boost needs at least one machine")
    if rounds < 1 or tolerance < 1:
        raise InvalidConfig(f"rounds and tolerance must be >= 1, got {rounds}, {tolerance}")
    if not 0.0 < shrinkage <= 1.0:
        raise InvalidConfig(f"shrinkage must be in (0, 1], got {shrinkage}")
    Xt, Xv = train.features, val.features
    res_t = train.target.copy()
    res_v = val.target.copy()
    if refit_on_full_data:
        X_full = np.vstack([Xt, Xv])

    stages, index, trace, norms = [], [], [], []
    best, best_stage, stall = np.inf, 0, 0
    K = len(specs)
    for s in range(rounds * K):
        candidates = range(K) if select_best else (s % K,)
        chosen = None
        for k in candidates:
            try:
                hp, machine = tune(specs[k], Xt, res_t, Xv, res_v)
                if refit_on_full_data:
                    machine = fit_machine(specs[k].kind, hp, X_full, np.concatenate([res_t, res_v]))
            except MacError as err:
                raise MachineFitError(k, s + 1, err) from err
            p_t = shrinkage * machine.predict(Xt)
            p_v = shrinkage * machine.predict(Xv)
            mspe = empirical_risk(res_v, p_v)
            if chosen is None or mspe < chosen[0]:
                chosen = (mspe, k, machine, p_t, p_v)
        mspe, k, machine, p_t, p_v = chosen
        res_t = res_t - p_t
        res_v = res_v - p_v
        stages.append(machine)
        index.append(k)
        trace.append(mspe)
        norms.append(float(np.linalg.norm(res_t)))
        if mspe < best:
            best, best_stage, stall = mspe, s + 1, 0
        else:
            stall += 1
            if stall >= tolerance:
                break
    return LsBoostModel(
        tuple(stages[:best_stage]),
        float(shrinkage),
        Xt.shape[1],
        tuple(index[:best_stage]),
        tuple(trace),
        tuple(norms),
    )


def predict_sl(model: SuperLearnerModel, features) -> np.ndarray:
    return model.predict(features)


def predict_boost(model: LsBoostModel, features) -> np.ndarray:
    return model.predict(features)


def _as_matrix(X, width):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[1] != width:
        raise InvalidInput(f"model expects {width} columns, got shape {X.shape}")
    return X


def _check_version(d):
    if d.get("version") != FORMAT_VERSION:
        raise InvalidInput(f"unsupported model format version {d.get('version')!r}")
