import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doppel.errors import InputError
from doppel.explain import Predicate, explain, fidelity, fit_surrogate
from doppel.numcore import Rng


def _xor():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    return X, y


def test_surrogate_on_its_own_labeling_has_fidelity_one():
    X, y = _xor()
    first = fit_surrogate(lambda Z: y, X)
    second = fit_surrogate(first.predict, X)
    assert second.fidelity == 1.0
    assert fidelity(second.predict, first.predict, X) == 1.0


def test_constant_model_single_leaf_and_empty_conjunction():
    rng = Rng(0)
    X = rng.uniform(-1, 1, (15, 3))
    surrogate = fit_surrogate(lambda Z: np.zeros(len(Z), dtype=int), X)
    assert surrogate.fidelity == 1.0
    assert surrogate.tree_model.tree.is_leaf
    explanation = explain(surrogate, X[4])
    assert explanation.clauses == ()
    assert explanation.predicted_label == 0


def test_depth_limit_bounds_path_length():
    rng = Rng(1)
    X = rng.uniform(-1, 1, (80, 4))
    labels = ((X[:, 0] > 0).astype(int) + (X[:, 1] > 0.3).astype(int))
    surrogate = fit_surrogate(lambda Z: labels, X, max_depth=2)
    for row in X[:20]:
        explanation = explain(surrogate, row)
        assert len(explanation.clauses) <= 2
        assert all(p.holds(row) for p in explanation.clauses)


def test_xor_explanation_is_the_hand_traced_path():
    X, y = _xor()
    surrogate = fit_surrogate(lambda Z: y, X)
    explanation = explain(surrogate, np.array([1.0, 1.0]))
    # Root splits x0 at 0.5 (lowest feature, only midpoint); the right child
    # splits x1 at 0.5; the query goes right twice.
    assert explanation.clauses == (
        Predicate(0, ">", 0.5),
        Predicate(1, ">", 0.5),
    )
    assert explanation.predicted_label == 0
    assert explanation.surrogate_fidelity == 1.0


def test_fidelity_identical_complementary_and_range():
    X = Rng(2).uniform(-1, 1, (30, 2))
    a = lambda Z: np.zeros(len(Z), dtype=int)
    b = lambda Z: np.ones(len(Z), dtype=int)
    assert fidelity(a, a, X) == 1.0
    assert fidelity(a, b, X) == 0.0
    mixed = lambda Z: (Z[:, 0] > 0).astype(int)
    assert 0.0 <= fidelity(a, mixed, X) <= 1.0


@settings(deadline=None, max_examples=20)
@given(st.integers(0, 10_000))
def test_explanation_soundness_on_random_points(seed):
    rng = Rng(seed)
    X = rng.uniform(-2, 2, (40, 3))
    labels = (X[:, 0] + X[:, 1] * 0.5 > 0.2).astype(int)
    if len(np.unique(labels)) < 2:
        labels[0] = 1 - labels[0]
    surrogate = fit_surrogate(lambda Z: labels[: len(Z)], X, max_depth=4)
    probe = rng.uniform(-2, 2, (5, 3))
    for row in probe:
        explanation = explain(surrogate, row)
        assert all(p.holds(row) for p in explanation.clauses)
        assert len(explanation.clauses) <= 4


def test_leaf_completeness_all_routed_points_share_label():
    rng = Rng(3)
    X = rng.uniform(-1, 1, (60, 2))
    labels = (X[:, 0] > 0.1).astype(int)
    surrogate = fit_surrogate(lambda Z: labels, X, max_depth=3)
    surrogate_labels = surrogate.predict(X)
    for row, lab in zip(X, surrogate_labels):
        explanation = explain(surrogate, row)
        # Every training point satisfying the full conjunction reaches the
        # same leaf, hence the same label.
        mask = np.ones(len(X), dtype=bool)
        for p in explanation.clauses:
            col = X[:, p.feature_index]
            mask &= (col <= p.threshold) if p.relation == "<=" else (col > p.threshold)
        assert np.all(surrogate_labels[mask] == explanation.predicted_label)
        assert lab == explanation.predicted_label


def test_dimension_mismatch_rejected():
    X, y = _xor()
    surrogate = fit_surrogate(lambda Z: y, X)
    with pytest.raises(InputError):
        explain(surrogate, np.array([1.0, 2.0, 3.0]))


def test_empty_data_rejected():
    with pytest.raises((InputError, Exception)):
        fit_surrogate(lambda Z: np.zeros(0, dtype=int), np.zeros((0, 2)))


def test_render_format():
    X, y = _xor()
    surrogate = fit_surrogate(lambda Z: y, X)
    text = explain(surrogate, np.array([1.0, 1.0])).render()
    lines = text.splitlines()
    assert lines[0] == "x[0] > 0.5"
    assert lines[1] == "x[1] > 0.5"
    assert lines[2] == "=> 0"
    assert lines[3] == "fidelity=1"
