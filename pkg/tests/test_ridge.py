import numpy as np
import pytest

from maccollab.machines import FittedMachine, fit_ridge
from maccollab.machines.ridge import ridge_objective


def test_exact_interpolation():
    m = fit_ridge([[1.0], [2.0]], [1.0, 2.0], 0.0)
    assert m.coef[0] == pytest.approx(1.0, abs=1e-10)
    assert m.intercept == pytest.approx(0.0, abs=1e-10)


def test_infinite_penalty_limit():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 3))
    y = X @ [1.0, -2.0, 0.5] + 3.0
    m = fit_ridge(X, y, 1e12)
    assert np.abs(m.coef).max() < 1e-6
    assert m.intercept == pytest.approx(y.mean(), abs=1e-5)


def test_normal_equation_oracle():
    # centred data: x = [-1, 0, 1], y = [-2/3, 1/3, 1/3]; slope = 1 / (2 + 1)
    m = fit_ridge([[1.0], [2.0], [3.0]], [1.0, 2.0, 2.0], 1.0)
    X = np.array([[1.0], [2.0], [3.0]])
    y = np.array([1.0, 2.0, 2.0])
    Xc, yc = X - X.mean(0), y - y.mean()
    oracle = np.linalg.inv(Xc.T @ Xc + np.eye(1)) @ Xc.T @ yc
    assert m.coef[0] == pytest.approx(oracle[0], abs=1e-10)
    assert m.coef[0] == pytest.approx(1 / 3, abs=1e-10)
    assert m.intercept == pytest.approx(1.0, abs=1e-10)


def test_gradient_vanishes_at_solution():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 4))
    y = rng.normal(size=50)
    lam = 2.5
    m = fit_ridge(X, y, lam)
    r = y - X @ m.coef - m.intercept
    grad = np.concatenate([-2 * X.T @ r + 2 * lam * m.coef, [-2 * r.sum()]])
    assert np.linalg.norm(grad) < 1e-8


def test_collinear_columns_do_not_crash():
    x = np.linspace(0, 1, 20)
    X = np.column_stack([x, x, 2 * x])
    m = fit_ridge(X, 3 * x, 0.0)
    assert np.allclose(m.predict(X), 3 * x, atol=1e-8)


def test_objective_minimal_against_perturbations():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 3))
    y = X @ [0.3, 0.0, -1.0] + rng.normal(size=40)
    lam = 1.0
    m = fit_ridge(X, y, lam)
    best = ridge_objective(X, y, m.coef, m.intercept, lam)
    for _ in range(1000):
        d = rng.normal(size=4)
        d *= 1e-3 / np.linalg.norm(d)
        assert best <= ridge_objective(X, y, m.coef + d[:3], m.intercept + d[3], lam)


def test_predict_and_round_trip():
    m = fit_ridge([[1.0], [2.0]], [1.0, 2.0], 0.0)
    assert m.predict([[3.0]]) == pytest.approx([3.0])
    X = np.random.default_rng(5).normal(size=(7, 1))
    again = FittedMachine.loads(m.dumps())
    assert np.array_equal(again.predict(X), m.predict(X))
