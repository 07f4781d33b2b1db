import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maccollab.data import Dataset, empirical_risk, split, standardize
from maccollab.errors import InvalidConfig, InvalidInput, TooFewRows, UninformativeTarget


def test_dataset_rejects_nan():
    with pytest.raises(InvalidInput):
        Dataset([[1.0], [np.nan]], [1.0, 2.0])


def test_dataset_names_must_match_width():
    with pytest.raises(InvalidInput):
        Dataset([[1.0, 2.0]], [1.0], ("a",))


def test_dataset_is_read_only():
    ds = Dataset([[1.0], [2.0]], [0.0, 1.0])
    with pytest.raises(ValueError):
        ds.features[0, 0] = 5.0


def test_split_sizes_600_200_200():
    s = split(1000, (0.6, 0.2, 0.2), seed=7)
    assert (len(s.train_idx), len(s.val_idx), len(s.test_idx)) == (600, 200, 200)


def test_split_deterministic():
    a = split(10, (0.64, 0.16, 0.20), seed=1)
    b = split(10, (0.64, 0.16, 0.20), seed=1)
    for x, y in zip((a.train_idx, a.val_idx, a.test_idx), (b.train_idx, b.val_idx, b.test_idx)):
        assert np.array_equal(x, y)


def test_split_too_few_rows():
    with pytest.raises(TooFewRows):
        split(5, (0.64, 0.16, 0.20), seed=0)


def test_split_bad_fractions():
    with pytest.raises(InvalidConfig):
        split(100, (0.5, 0.2, 0.2), seed=0)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(20, 3000), seed=st.integers(0, 2**32 - 1))
def test_split_is_partition(n, seed):
    s = split(n, (0.64, 0.16, 0.20), seed)
    parts = [s.train_idx, s.val_idx, s.test_idx]
    union = np.concatenate(parts)
    assert union.size == n
    assert np.array_equal(np.sort(union), np.arange(n))


@settings(max_examples=50, deadline=None)
@given(n=st.integers(10, 2000), p=st.floats(0.05, 0.5), seed=st.integers(0, 1000))
def test_split_two_parts_proportion(n, p, seed):
    if int(p * n + 1e-9) == 0:
        with pytest.raises(TooFewRows):
            split(n, (1 - p, p), seed)
        return
    s = split(n, (1 - p, p), seed)
    assert s.test_idx is None
    assert abs(len(s.val_idx) - p * n) <= 1


def test_standardize_three_points():
    ds, rec = standardize(Dataset([[1.0], [2.0], [3.0]], [1.0, 2.0, 3.0]))
    assert np.allclose(ds.features[:, 0], [-1.0, 0.0, 1.0], atol=1e-12)
    assert rec.feature_sds[0] == pytest.approx(1.0)


def test_standardize_drops_constant_column():
    X = np.column_stack([[5.0, 5.0, 5.0], [1.0, 2.0, 4.0]])
    ds, rec = standardize(Dataset(X, [0.0, 1.0, 3.0], ("const", "x")))
    assert ds.feature_names == ("x",)
    assert rec.dropped == ("const",)


def test_standardize_constant_target():
    with pytest.raises(UninformativeTarget):
        standardize(Dataset([[1.0], [2.0]], [3.0, 3.0]))


def test_standardize_moments_and_idempotence():
    rng = np.random.default_rng(3)
    X = rng.normal(4.0, 3.0, size=(200, 5))
    y = rng.exponential(size=200)
    once, _ = standardize(Dataset(X, y))
    for col in np.column_stack([once.features, once.target]).T:
        assert abs(col.mean()) < 1e-10
        assert abs(col.var(ddof=1) - 1) < 1e-10
    twice, _ = standardize(once)
    assert np.allclose(twice.features, once.features, atol=1e-9)
    assert np.allclose(twice.target, once.target, atol=1e-9)


@pytest.mark.parametrize(
    "a, b, expected",
    [([1, 2], [1, 2], 0.0), ([0, 0], [1, 1], 1.0), ([1, 2, 3], [2, 2, 2], 2 / 3)],
)
def test_empirical_risk_examples(a, b, expected):
    assert empirical_risk(a, b) == pytest.approx(expected, abs=1e-15)


def test_empirical_risk_length_mismatch():
    with pytest.raises(InvalidInput):
        empirical_risk([1, 2], [1])


vectors = st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40)


@given(vectors, st.randoms())
def test_empirical_risk_symmetric_and_permutation_invariant(a, rnd):
    a = np.array(a)
    b = a[::-1] + 1.0
    assert empirical_risk(a, b) == pytest.approx(empirical_risk(b, a))
    perm = list(range(a.size))
    rnd.shuffle(perm)
    assert empirical_risk(a[perm], b[perm]) == pytest.approx(empirical_risk(a, b))
    assert empirical_risk(a, b) >= 0
    assert empirical_risk(a, a) == 0
