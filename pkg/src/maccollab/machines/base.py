"""Base-machine abstraction: specs, fitted state, serialization and tuning."""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, ClassVar

import numpy as np

from ..data import Loss, empirical_risk
from ..errors import InvalidConfig, InvalidInput, MacError, TuningFailed

FORMAT_VERSION = 1
KINDS = ("ridge", "tree", "mlp")


@dataclass(frozen=True, eq=False)
class FittedMachine:
    """An immutable trained machine: chosen hyperparameters plus learned state."""

    hyperparams: dict

    kind: ClassVar[str] = ""
    _registry: ClassVar[dict[str, type]] = {}

    def __init_subclass__(cls, **kw):
        super().__init_subclass__(**kw)
        if cls.kind:
            FittedMachine._registry[cls.kind] = cls

    @property
    def width(self) -> int:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[1] != self.width:
            raise InvalidInput(
                f"{self.kind} machine expects {self.width} columns, got shape {X.shape}"
            )
        return np.asarray(self._predict(X), dtype=float).reshape(-1)

    def _predict(self, X) -> np.ndarray:
        raise NotImplementedError

    def _state(self) -> dict:
        raise NotImplementedError

    @classmethod
    def _from_state(cls, hyperparams, state):
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "format": "maccollab.machine",
            "version": FORMAT_VERSION,
            "kind": self.kind,
            "hyperparams": dict(self.hyperparams),
            "params": self._state(),
        }

    @staticmethod
    def from_dict(d: dict) -> "FittedMachine":
        if d.get("version") != FORMAT_VERSION:
            raise InvalidInput(f"unsupported machine format version {d.get('version')!r}")
        try:
            cls = FittedMachine._registry[d["kind"]]
        except KeyError:
            raise InvalidInput(f"unknown machine kind {d.get('kind')!r}") from None
        return cls._from_state(dict(d["hyperparams"]), d["params"])

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @staticmethod
    def loads(s: str) -> "FittedMachine":
        return FittedMachine.from_dict(json.loads(s))


def _check_hyperparams(kind: str, hp: dict) -> None:
    if kind == "ridge":
        if hp.get("penalty", 0.0) < 0:
            raise InvalidConfig(f"ridge penalty must be >= 0: {hp}")
    elif kind == "tree":
        if hp.get("cc_alpha", 0.0) < 0 or hp.get("max_depth", 10) < 1 or hp.get("min_leaf", 5) < 1:
            raise InvalidConfig(f"invalid tree hyperparameters: {hp}")
    elif kind == "mlp":
        from .mlp import MlpConfig

        MlpConfig.from_hyperparams(hp)
    else:
        raise InvalidConfig(f"unknown machine kind {kind!r}")


@dataclass(frozen=True)
class MachineSpec:
    """A machine kind together with its finite hyperparameter grid."""

    kind: str
    grid: tuple[dict, ...]

    def __post_init__(self):
        grid = tuple(dict(g) for g in self.grid)
        if not grid:
            raise InvalidConfig(f"{self.kind}: hyperparameter grid is empty")
        for hp in grid:
            _check_hyperparams(self.kind, hp)
        object.__setattr__(self, "grid", grid)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "grid": [dict(g) for g in self.grid]}

    @classmethod
    def from_dict(cls, d: dict) -> "MachineSpec":
        return cls(d["kind"], tuple(d["grid"]))

    def with_seed(self, seed: int) -> "MachineSpec":
        """Copy with every grid point's ``seed`` replaced (mlp only)."""
        if self.kind != "mlp":
            return self
        return MachineSpec(self.kind, tuple({**g, "seed": int(seed)} for g in self.grid))


# Observers see (kind, X, y) for every fit; tests use them for row provenance.
_observers: list[Callable[[str, np.ndarray, np.ndarray], None]] = []


@contextmanager
def observe_fits(callback: Callable[[str, np.ndarray, np.ndarray], None]):
    _observers.append(callback)
    try:
        yield
    finally:
        _observers.remove(callback)


def fit_grid(kind: str, X, y, grid) -> list:
    """Fit one machine per grid point; failures are returned in place as exceptions."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    for cb in list(_observers):
        cb(kind, X, y)
    if kind == "ridge":
        from .ridge import fit_ridge

        return [_guard(fit_ridge, X, y, hp.get("penalty", 0.0)) for hp in grid]
    if kind == "tree":
        from .tree import fit_tree_grid

        return fit_tree_grid(X, y, grid)
    if kind == "mlp":
        from .mlp import MlpConfig, fit_mlp

        return [_guard(lambda: fit_mlp(X, y, MlpConfig.from_hyperparams(hp))) for hp in grid]
    raise InvalidConfig(f"unknown machine kind {kind!r}")


def _guard(fn, *args):
    try:
        return fn(*args)
    except MacError as err:
        return err
    except (ArithmeticError, np.linalg.LinAlgError) as err:
        return err


def fit_machine(kind: str, hyperparams: dict, X, y) -> FittedMachine:
    """Fit a single machine at fixed hyperparameters; errors propagate."""
    (result,) = fit_grid(kind, X, y, [hyperparams])
    if isinstance(result, Exception):
        raise result
    return result


@dataclass(frozen=True)
class TuneResult:
    hyperparams: dict
    machine: FittedMachine
    index: int
    val_risks: tuple[float, ...] = field(default=())

    def __iter__(self):
        # allows ``hp, machine = tune(...)``
        return iter((self.hyperparams, self.machine))


def tune(spec: MachineSpec, X_train, y_train, X_val, y_val, loss: Loss = Loss.SQUARED) -> TuneResult:
    """Fit every grid point on the training part and keep the one with the
    lowest validation risk (earliest index wins ties)."""
    fits = fit_grid(spec.kind, X_train, y_train, spec.grid)
    risks = []
    errors = []
    best = None
    for i, (hp, m) in enumerate(zip(spec.grid, fits)):
        if isinstance(m, Exception):
            errors.append((hp, m))
            risks.append(float("inf"))
            continue
        r = empirical_risk(y_val, m.predict(X_val), loss)
        if not np.isfinite(r):
            errors.append((hp, ArithmeticError(f"non-finite validation risk {r}")))
            r = float("inf")
        risks.append(r)
        if np.isfinite(r) and (best is None or r < risks[best]):
            best = i
    if best is None:
        raise TuningFailed(errors)
    return TuneResult(dict(spec.grid[best]), fits[best], best, tuple(risks))


def load_machine(path) -> FittedMachine:
    with open(path) as fh:
        return FittedMachine.loads(fh.read())


def save_machine(machine: FittedMachine, path) -> None:
    with open(path, "w") as fh:
        fh.write(machine.dumps())
