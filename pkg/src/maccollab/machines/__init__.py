"""Base machines: ridge regression, CART regression tree and a small MLP."""

from .base import (
    KINDS,
    FittedMachine,
    MachineSpec,
    TuneResult,
    fit_grid,
    fit_machine,
    load_machine,
    observe_fits,
    save_machine,
    tune,
)
from .mlp import MlpConfig, MlpMachine, fit_mlp
from .ridge import RidgeMachine, fit_ridge
from .tree import TreeMachine, fit_tree

DEFAULT_GRIDS = {
    "ridge": [{"penalty": v} for v in (1e-4, 1e-2, 1.0, 10.0, 100.0)],
    "tree": [{"max_depth": 10, "cc_alpha": a, "min_leaf": 5} for a in (0.0, 1e-4, 1e-3, 1e-2)],
    "mlp": [
        {
            "width": w,
            "activation": act,
            "dropout": d,
            "learning_rate": lr,
            "batch_size": 32,
            "epochs": ep,
            "seed": 0,
        }
        for w in (8, 32)
        for act in ("relu", "tanh")
        for d in (0.0, 0.2)
        for lr in (1e-3, 1e-2)
        for ep in (50, 200)
    ],
}


def default_spec(kind: str) -> MachineSpec:
    return MachineSpec(kind, tuple(DEFAULT_GRIDS[kind]))


def predict(machine: FittedMachine, features):
    return machine.predict(features)


__all__ = [
    "DEFAULT_GRIDS",
    "KINDS",
    "FittedMachine",
    "MachineSpec",
    "MlpConfig",
    "MlpMachine",
    "RidgeMachine",
    "TreeMachine",
    "TuneResult",
    "default_spec",
    "fit_grid",
    "fit_machine",
    "fit_mlp",
    "fit_ridge",
    "fit_tree",
    "load_machine",
    "observe_fits",
    "predict",
    "save_machine",
    "tune",
]
