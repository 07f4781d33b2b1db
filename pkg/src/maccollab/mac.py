"""Machine collaboration (MaC).

Every machine repeatedly refits the residual left by all the others:

* the working response for machine ``k`` is ``Y - sum_{j != k} Yhat_j``;
* machine ``k`` is re-tuned on the (train, validation) working responses and
  its parameters re-estimated (optionally on train + validation together);
* after each sweep over the machines the best intermediate state is kept if
  it lowers the validation risk, otherwise a stall counter grows;
* the loop stops after ``tau`` stalled sweeps or ``max_iter`` sweeps, and the
  returned ensemble is the exact state recorded at the best point: machines
  ``1..k*`` from sweep ``i*`` and the rest from sweep ``i* - 1``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import Dataset, empirical_risk
from .errors import InvalidConfig, InvalidInput, MacError, MachineFitError
from .machines import FittedMachine, MachineSpec, fit_machine, tune

FORMAT_VERSION = 1


@dataclass(frozen=True)
class MacConfig:
    machines: tuple[MachineSpec, ...]
    tau: int = 2
    max_iter: int = 20
    refit_on_full_data: bool = False
    # None -> identity order; otherwise permutations of range(K) to search over
    orders: tuple[tuple[int, ...], ...] | None = None
    # overrides the seed of stochastic (mlp) grids when set
    seed: int | None = None

    def __post_init__(self):
        machines = tuple(self.machines)
        if self.seed is not None:
            machines = tuple(spec.with_seed(self.seed) for spec in machines)
        object.__setattr__(self, "machines", machines)
        if not machines:
            raise InvalidConfig("MaC needs at least one machine")
        if int(self.tau) < 1 or int(self.max_iter) < 1:
            raise InvalidConfig(f"tau and max_iter must be >= 1, got {self.tau}, {self.max_iter}")
        if self.orders is not None:
            orders = tuple(tuple(int(i) for i in o) for o in self.orders)
            if not orders:
                raise InvalidConfig("order search needs at least one permutation")
            for o in orders:
                if sorted(o) != list(range(len(machines))):
                    raise InvalidConfig(f"{o} is not a permutation of 0..{len(machines) - 1}")
            object.__setattr__(self, "orders", orders)

    @property
    def K(self) -> int:
        return len(self.machines)

    def all_orders(self) -> "MacConfig":
        return MacConfig(
            self.machines, self.tau, self.max_iter, self.refit_on_full_data,
            tuple(itertools.permutations(range(self.K))), self.seed,
        )


@dataclass(frozen=True)
class SweepRecord:
    iteration: int
    risks: tuple[float, ...]  # R_k^v after each machine update, in visit order
    accepted: bool
    best_risk: float  # R_0 after this sweep


@dataclass(frozen=True, eq=False)
class MacModel:
    """Sum of ``K`` snapshot machines plus the loop bookkeeping."""

    machines: tuple[FittedMachine, ...]
    order: tuple[int, ...]
    i_star: int
    k_star: int  # 1-based position in visit order
    best_risk: float
    trace: tuple[SweepRecord, ...] = field(default=())

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        width = self.machines[0].width
        if X.ndim != 2 or X.shape[1] != width:
            raise InvalidInput(f"MaC model expects {width} columns, got shape {X.shape}")
        out = np.zeros(X.shape[0])
        for m in self.machines:
            out = out + m.predict(X)
        return out

    @property
    def accepted_risks(self) -> list[float]:
        return [s.best_risk for s in self.trace if s.accepted]

    def to_dict(self) -> dict:
        return {
            "format": "maccollab.mac",
            "version": FORMAT_VERSION,
            "machines": [m.to_dict() for m in self.machines],
            "order": list(self.order),
            "i_star": self.i_star,
            "k_star": self.k_star,
            "best_risk": self.best_risk,
            "trace": [
                {"iteration": s.iteration, "risks": list(s.risks),
                 "accepted": s.accepted, "best_risk": s.best_risk}
                for s in self.trace
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MacModel":
        if d.get("version") != FORMAT_VERSION:
            raise InvalidInput(f"unsupported MaC format version {d.get('version')!r}")
        return cls(
            tuple(FittedMachine.from_dict(m) for m in d["machines"]),
            tuple(d["order"]),
            int(d["i_star"]),
            int(d["k_star"]),
            float(d["best_risk"]),
            tuple(
                SweepRecord(int(s["iteration"]), tuple(s["risks"]), bool(s["accepted"]), float(s["best_risk"]))
                for s in d["trace"]
            ),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


def working_response(target, predictions: Sequence, k: int) -> np.ndarray:
    """``target - sum_{j != k} predictions[j]`` (``k`` is 0-based)."""
    y = np.asarray(target, dtype=float)
    others = np.zeros_like(y)
    for j, p in enumerate(predictions):
        p = np.asarray(p, dtype=float)
        if p.shape != y.shape:
            raise InvalidInput(f"prediction {j} has shape {p.shape}, target {y.shape}")
        if j != k:
            others = others + p
    return y - others


def fit_mac(config: MacConfig, train: Dataset, val: Dataset, order: Sequence[int] | None = None) -> MacModel:
    """Run the collaboration loop with machines visited in ``order``."""
    if train.width != val.width:
        raise InvalidInput(f"train has {train.width} columns, validation {val.width}")
    K = config.K
    order = tuple(range(K)) if order is None else tuple(order)
    if sorted(order) != list(range(K)):
        raise InvalidConfig(f"{order} is not a permutation of 0..{K - 1}")
    specs = [config.machines[j] for j in order]

    Xt, yt = train.features, train.target
    Xv, yv = val.features, val.target
    if config.refit_on_full_data:
        X_full = np.vstack([Xt, Xv])
    nt = Xt.shape[0]

    pred_t = [np.zeros(nt) for _ in range(K)]
    pred_v = [np.zeros(Xv.shape[0]) for _ in range(K)]
    current: list[FittedMachine | None] = [None] * K
    best_risk = np.inf
    best_state: tuple = ()
    i_best = k_best = 0
    stall = 0
    trace = []

    for i in range(1, config.max_iter + 1):
        risks = []
        states = []
        for k in range(K):
            wt = working_response(yt, pred_t, k)
            wv = working_response(yv, pred_v, k)
            try:
                hp, machine = tune(specs[k], Xt, wt, Xv, wv)
                if config.refit_on_full_data:
                    machine = fit_machine(specs[k].kind, hp, X_full, np.concatenate([wt, wv]))
                pred_t[k] = machine.predict(Xt)
                pred_v[k] = machine.predict(Xv)
            except MacError as err:
                raise MachineFitError(order[k], i, err) from err
            current[k] = machine
            risks.append(empirical_risk(yv, np.sum(pred_v, axis=0)))
            states.append(tuple(current))
        k_tilde = int(np.argmin(risks))
        accepted = risks[k_tilde] < best_risk
        if accepted:
            best_risk = risks[k_tilde]
            best_state = states[k_tilde]
            i_best, k_best = i, k_tilde + 1
            stall = 0
        else:
            stall += 1
        trace.append(SweepRecord(i, tuple(risks), accepted, float(best_risk)))
        if stall >= config.tau:
            break

    # before sweep i*, machines after k* are still zero when i* == 1
    machines = tuple(m if m is not None else _zero_like(best_state) for m in best_state)
    return MacModel(machines, order, i_best, k_best, float(best_risk), tuple(trace))


def _zero_like(state):
    from .machines import RidgeMachine

    width = next(m for m in state if m is not None).width
    return RidgeMachine({"placeholder": "zero"}, np.zeros(width), 0.0)


def predict_mac(model: MacModel, features) -> np.ndarray:
    return model.predict(features)


def fit_mac_ordered(config: MacConfig, train: Dataset, val: Dataset) -> MacModel:
    """Treat the visiting order as a hyperparameter: run every supplied
    permutation and keep the lowest final validation risk (earliest wins ties)."""
    orders = config.orders or (tuple(range(config.K)),)
    best = None
    for order in orders:
        model = fit_mac(config, train, val, order)
        if best is None or model.best_risk < best.best_risk:
            best = model
    return best
