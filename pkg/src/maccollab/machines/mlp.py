"""Five-layer fully connected regressor trained by plain mini-batch SGD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfig, TooFewRows, TrainingDiverged
from .base import FittedMachine

N_HIDDEN = 4


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z, a):
    return (z > 0).astype(float)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _sigmoid_grad(z, a):
    return a * (1.0 - a)


ACTIVATIONS = {
    "relu": (_relu, _relu_grad),
    "tanh": (np.tanh, lambda z, a: 1.0 - a * a),
    "sigmoid": (_sigmoid, _sigmoid_grad),
    "linear": (lambda z: z, lambda z, a: np.ones_like(z)),
}


@dataclass(frozen=True)
class MlpConfig:
    hidden_widths: tuple[int, ...] = (32, 32, 32, 32)
    activation: str = "relu"
    dropout: float = 0.0
    learning_rate: float = 1e-2
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        widths = tuple(int(w) for w in self.hidden_widths)
        object.__setattr__(self, "hidden_widths", widths)
        if len(widths) != N_HIDDEN or min(widths) < 1:
            raise InvalidConfig(f"need {N_HIDDEN} hidden widths >= 1, got {widths}")
        if self.activation not in ACTIVATIONS:
            raise InvalidConfig(f"unknown activation {self.activation!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidConfig(f"dropout must be in [0, 1), got {self.dropout}")
        if not self.learning_rate > 0:
            raise InvalidConfig(f"learning rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0 or self.batch_size < 1:
            raise InvalidConfig(f"need epochs >= 0 and batch_size >= 1, got {self.epochs}, {self.batch_size}")

    @classmethod
    def from_hyperparams(cls, hp: dict) -> "MlpConfig":
        hp = dict(hp)
        if "width" in hp:
            hp["hidden_widths"] = (hp.pop("width"),) * N_HIDDEN
        unknown = set(hp) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"unknown mlp hyperparameters {sorted(unknown)}")
        return cls(**hp)


def init_params(widths, seed):
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    params = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.append((rng.uniform(-limit, limit, size=(fan_in, fan_out)), np.zeros(fan_out)))
    return params


def forward(params, X, activation, masks=None):
    """Return the output vector and the cached (pre-activation, activation) pairs."""
    act, _ = ACTIVATIONS[activation]
    a = X
    cache = []
    for j, (W, b) in enumerate(params[:-1]):
        z = a @ W + b
        h = act(z)
        a = h if masks is None else h * masks[j]
        cache.append((z, h, a))
    W, b = params[-1]
    return (a @ W + b)[:, 0], cache


def loss_and_grad(params, X, y, activation, masks=None):
    """Mean squared error and its gradient w.r.t. every (W, b) pair.

    ``masks`` are the already-scaled inverted-dropout multipliers for the
    hidden layers, or None for no dropout.
    """
    _, dact = ACTIVATIONS[activation]
    out, cache = forward(params, X, activation, masks)
    n = X.shape[0]
    r = out - y
    loss = float(r @ r / n)
    delta = (2.0 / n) * r[:, None]
    grads = [None] * len(params)
    inputs = [X] + [c[2] for c in cache]
    for j in range(len(params) - 1, -1, -1):
        W, _ = params[j]
        grads[j] = (inputs[j].T @ delta, delta.sum(axis=0))
        if j == 0:
            break
        z, h, _ = cache[j - 1]
        back = delta @ W.T
        if masks is not None:
            back = back * masks[j - 1]
        delta = back * dact(z, h)
    return loss, grads


@dataclass(frozen=True, eq=False)
class MlpMachine(FittedMachine):
    params: tuple

    kind = "mlp"

    @property
    def width(self):
        return self.params[0][0].shape[0]

    @property
    def activation(self):
        return MlpConfig.from_hyperparams(self.hyperparams).activation

    def _predict(self, X):
        return forward(self.params, X, self.activation)[0]

    def _state(self):
        return {
            "weights": [W.tolist() for W, _ in self.params],
            "biases": [b.tolist() for _, b in self.params],
        }

    @classmethod
    def _from_state(cls, hyperparams, state):
        params = tuple(
            (np.asarray(W, dtype=float), np.asarray(b, dtype=float))
            for W, b in zip(state["weights"], state["biases"])
        )
        return cls(hyperparams, params)


def fit_mlp(X, y, cfg: MlpConfig) -> MlpMachine:
    """Train with seeded shuffling, inverted dropout and momentum-free SGD.

    The batch size is clipped to the row count for very small samples.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n < 1:
        raise TooFewRows("mlp needs at least one row")
    widths = (p,) + cfg.hidden_widths + (1,)
    params = init_params(widths, cfg.seed)
    rng = np.random.default_rng([cfg.seed, 1])
    batch = min(cfg.batch_size, n)
    lr = cfg.learning_rate
    keep = 1.0 - cfg.dropout
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.epochs + 1):
            perm = rng.permutation(n)
            for start in range(0, n, batch):
                rows = perm[start:start + batch]
                masks = None
                if cfg.dropout > 0:
                    masks = [(rng.random((rows.size, w)) < keep) / keep for w in cfg.hidden_widths]
                loss, grads = loss_and_grad(params, X[rows], y[rows], cfg.activation, masks)
                if not np.isfinite(loss):
                    raise TrainingDiverged(epoch, loss)
                params = [(W - lr * gW, b - lr * gb) for (W, b), (gW, gb) in zip(params, grads)]
            if not all(np.isfinite(W).all() and np.isfinite(b).all() for W, b in params):
                raise TrainingDiverged(epoch, float("nan"))
    hp = {
        "hidden_widths": list(cfg.hidden_widths),
        "activation": cfg.activation,
        "dropout": cfg.dropout,
        "learning_rate": cfg.learning_rate,
        "batch_size": cfg.batch_size,
        "epochs": cfg.epochs,
        "seed": cfg.seed,
    }
    return MlpMachine(hp, tuple(params))
