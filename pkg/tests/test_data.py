import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doppel.data import Scaler, builtin, load_csv, train_test_split
from doppel.errors import InputError, ParseError, StateError


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# --- csv loading -----------------------------------------------------------

def test_numeric_csv_shapes(tmp_path):
    path = _write(tmp_path, "a,b,target\n1,2,0.5\n3,4,1.5\n5,6,2.5\n")
    ds = load_csv(path, "target", "regression")
    assert ds.X.shape == (3, 2)
    assert np.allclose(ds.y, [0.5, 1.5, 2.5])
    assert ds.feature_names == ["a", "b"]


def test_string_labels_first_occurrence(tmp_path):
    path = _write(tmp_path, "f,label\n1,a\n2,b\n3,a\n")
    ds = load_csv(path, "label", "classification")
    assert ds.y.tolist() == [0, 1, 0]
    assert ds.class_names == ["a", "b"]


def test_ragged_row_names_the_row(tmp_path):
    path = _write(tmp_path, "a,b,t\n1,2,3\n4,5\n")
    with pytest.raises(ParseError, match="row 3"):
        load_csv(path, "t", "regression")


def test_non_numeric_feature_names_the_row(tmp_path):
    path = _write(tmp_path, "a,t\n1,2\nfoo,3\n")
    with pytest.raises(ParseError, match="row 3"):
        load_csv(path, "t", "regression")


def test_missing_target_column(tmp_path):
    path = _write(tmp_path, "a,b\n1,2\n")
    with pytest.raises(InputError):
        load_csv(path, "t", "regression")


# --- scaler ----------------------------------------------------------------

def test_scaler_two_point_column():
    out = Scaler().fit_transform(np.array([[0.0], [2.0]]))
    assert np.allclose(out, [[-1.0], [1.0]])


def test_scaler_constant_column_zeros():
    out = Scaler().fit_transform(np.array([[3.0], [3.0], [3.0]]))
    assert np.allclose(out, 0.0)


def test_scaler_transform_equals_fit_transform_on_train():
    X = np.random.default_rng(0).normal(size=(20, 3))
    s = Scaler()
    once = s.fit_transform(X)
    again = s.transform(X)
    assert np.array_equal(once, again)


def test_scaler_state_error_before_fit():
    with pytest.raises(StateError):
        Scaler().transform(np.zeros((2, 2)))


def test_scaled_train_columns_standardized():
    X = np.random.default_rng(1).normal(loc=5.0, scale=3.0, size=(64, 4))
    out = Scaler().fit_transform(X)
    assert np.all(np.abs(out.mean(axis=0)) <= 1e-10)
    assert np.all(np.abs(out.std(axis=0) - 1.0) <= 1e-10)


@settings(deadline=None, max_examples=20)
@given(st.integers(0, 1000))
def test_scaler_idempotence(seed):
    X = np.random.default_rng(seed).normal(loc=2.0, scale=4.0, size=(30, 2))
    once = Scaler().fit_transform(X)
    twice = Scaler().fit_transform(once)
    assert np.all(np.abs(twice.mean(axis=0)) <= 1e-10)
    assert np.all(np.abs(twice.std(axis=0) - 1.0) <= 1e-10)


# --- split -----------------------------------------------------------------

def test_iris_split_yields_ninety_test_rows():
    ds = builtin("iris")
    xtr, ytr, xte, yte = train_test_split(ds.X, ds.y, 0.6, 0)
    assert len(xte) == 90
    assert len(xtr) == 60


def test_split_union_is_original_multiset():
    ds = builtin("iris")
    xtr, ytr, xte, yte = train_test_split(ds.X, ds.y, 0.3, 5)
    stacked = np.vstack([xtr, xte])
    original = np.asarray(ds.X)
    assert sorted(map(tuple, stacked)) == sorted(map(tuple, original))
    assert len(ytr) + len(yte) == len(ds.y)


def test_split_same_seed_identical():
    ds = builtin("diabetes")
    a = train_test_split(ds.X, ds.y, 0.6, 7)
    b = train_test_split(ds.X, ds.y, 0.6, 7)
    for left, right in zip(a, b):
        assert np.array_equal(left, right)


def test_split_validation():
    X = np.zeros((4, 1))
    y = np.zeros(4)
    with pytest.raises(InputError):
        train_test_split(X, y, 0.0, 0)
    with pytest.raises(InputError):
        train_test_split(X, y, 1.0, 0)
    with pytest.raises(InputError):
        train_test_split(np.zeros((2, 1)), np.zeros(2), 0.1, 0)  # empty test side


# --- bundled datasets ------------------------------------------------------

def test_builtin_iris():
    ds = builtin("iris")
    assert ds.X.shape == (150, 4)
    assert set(np.unique(ds.y)) == {0, 1, 2}
    assert ds.task == "classification"
    assert ds.n_classes == 3


def test_builtin_diabetes():
    ds = builtin("diabetes")
    assert ds.X.shape == (442, 10)
    assert ds.task == "regression"
    assert ds.y.min() > 0


def test_builtin_unknown_name():
    with pytest.raises(InputError, match="wine"):
        builtin("wine")
