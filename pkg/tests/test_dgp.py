import json
import math

import numpy as np
import pytest
from helpers import analytic_term_moments

from maccollab import dgp
from maccollab.errors import FactorizationFailed, InvalidConfig

MC = 10**6


@pytest.fixture(scope="module")
def calibrations(tmp_path_factory):
    cache = tmp_path_factory.mktemp("mc")
    return {w: dgp.calibrate_constants(w, MC, seed=0, cache_dir=cache) for w in (1, 2)}


def test_identity_covariance_columns_independent():
    cov = dgp.covariance(0.0)
    assert np.array_equal(cov, np.eye(10))
    X = dgp.sample_mvn(200_000, cov, 0)
    C = np.cov(X, rowvar=False)
    assert np.abs(C - np.eye(10)).max() < 0.02


def test_covariance_entries():
    cov = dgp.covariance(0.1)
    assert cov[0, 1] == pytest.approx(0.1)
    assert cov[0, 2] == pytest.approx(0.01)
    assert cov[3, 3] == 1.0


def test_sample_covariance_large_n():
    X = dgp.sample_mvn(10**6, dgp.covariance(0.1), 1)
    assert np.abs(np.cov(X, rowvar=False) - dgp.covariance(0.1)).max() < 0.01


def test_non_pd_covariance():
    with pytest.raises(FactorizationFailed):
        dgp.sample_mvn(5, np.array([[1.0, 2.0], [2.0, 1.0]]), 0)
    with pytest.raises(InvalidConfig):
        dgp.covariance(1.0)


def test_bernoulli_half_constant(calibrations):
    assert calibrations[1].constants[2] == pytest.approx(2.0, rel=0.01)


def test_tail_indicator_constant(calibrations):
    p = 0.5 * math.erfc(1 / math.sqrt(2))
    assert calibrations[1].constants[3] == pytest.approx(1 / math.sqrt(p * (1 - p)), rel=0.01)
    assert calibrations[1].constants[3] == pytest.approx(2.737, rel=0.01)


@pytest.mark.parametrize("which", [1, 2])
def test_constants_match_closed_forms(calibrations, which):
    cal = calibrations[which]
    for j, exact in enumerate(analytic_term_moments(which)):
        if exact is None:
            continue
        assert cal.constants[j + 1] == pytest.approx(1 / math.sqrt(exact[1]), rel=0.02)


def test_cube_constant_two_seed_agreement(calibrations, tmp_path):
    other = dgp.calibrate_constants(1, MC, seed=1, cache_dir=tmp_path)
    assert other.constants[1] == pytest.approx(calibrations[1].constants[1], rel=0.01)


@pytest.mark.parametrize("which", [1, 2])
def test_scales_positive_and_signal_centred(calibrations, which):
    cal = calibrations[which]
    assert all(c > 0 for c in cal.constants[1:])
    data = dgp.generate(dgp.DgpConfig(which, 200_000, 3, cal.constants, noise=False))
    assert abs(data.target.mean()) < 0.05


def test_calibration_cache_round_trip(tmp_path):
    a = dgp.calibrate_constants(1, MC, seed=4, cache_dir=tmp_path)
    (path,) = tmp_path.glob("*.json")
    stored = json.loads(path.read_text())
    assert stored["dgp"] == 1 and stored["mc_size"] == MC and stored["seed"] == 4
    assert dgp.calibrate_constants(1, MC, seed=4, cache_dir=tmp_path) == a


def test_mc_size_floor():
    with pytest.raises(InvalidConfig):
        dgp.calibrate_constants(1, 10**5, cache_dir=False)


def test_null_signal_gives_offset_only():
    cfg = dgp.DgpConfig(2, 50, 0, (0.7, 0.0, 0.0, 0.0, 0.0, 0.0), noise=False)
    assert np.array_equal(dgp.generate(cfg).target, np.full(50, 0.7))


def test_noise_variance(calibrations):
    cal = calibrations[1]
    with_noise = dgp.generate(dgp.DgpConfig(1, 10**5, 9, cal.constants))
    without = dgp.generate(dgp.DgpConfig(1, 10**5, 9, cal.constants, noise=False))
    assert np.array_equal(with_noise.features, without.features)
    eps = with_noise.target - without.target
    assert eps.var(ddof=1) == pytest.approx(1.0, rel=0.02)
    assert np.isfinite(without.target.var())


def test_inactive_features_do_not_matter(calibrations):
    cal = calibrations[2]
    data = dgp.generate(dgp.DgpConfig(2, 500, 2, cal.constants, noise=False))
    X = np.array(data.features)
    X[:, 5:] = np.random.default_rng(0).permutation(X[:, 5:])
    X[:, 5:] *= 100.0
    assert np.array_equal(dgp.response(2, X, cal.constants), data.target)


def test_generate_reproducible(calibrations):
    cfg = dgp.DgpConfig(1, 300, 17, calibrations[1].constants)
    a, b = dgp.generate(cfg), dgp.generate(cfg)
    assert a == b
    assert a.feature_names == tuple(f"x{j}" for j in range(1, 11))
    assert a.width == 10


def test_dgp_terms_formulae():
    X = np.zeros((1, 10))
    X[0, :5] = [1.0, 2.0, -1.0, 0.5, 1.5]
    lin = 1 + 2 - 0.5 + 0.15 + 0.3
    assert np.allclose(dgp.dgp_terms(1, X), [[lin**3, 1.0, 1.0, 1.0]])
    assert np.allclose(dgp.dgp_terms(2, X), [[lin**3, 2.0, 0.0, 9.0, 0.0]])


@pytest.mark.parametrize("bad", [{"which": 3}, {"n": 0}, {"rho": -1.0}, {"constants": (1.0, 2.0)}])
def test_invalid_config(bad):
    kw = {"which": 1, "n": 10, "seed": 0, "constants": (0.0, 1.0, 1.0, 1.0, 1.0)} | bad
    with pytest.raises(InvalidConfig):
        dgp.DgpConfig(**kw)
