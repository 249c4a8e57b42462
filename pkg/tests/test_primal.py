import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doppel.errors import InputError, StateError
from doppel.numcore import Rng
from doppel.primal import (
    PrimalModel,
    decision_tree,
    elastic_net,
    fit_cart,
    fit_linear_family,
    fit_linear_svc,
    fit_logistic,
    lasso,
    linear_regression,
    logistic_regression,
    ridge,
    tree_depth,
)


# --- linear family ---------------------------------------------------------

def test_two_point_line():
    m = fit_linear_family([[0.0], [1.0]], [0.0, 1.0], penalty="none")
    assert m.coefficients[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert m.intercept[0] == pytest.approx(0.0, abs=1e-12)


def test_ridge_hand_solve():
    # X=[[1],[-1]], y=[1,-1], alpha=1: w = X'y / (X'X + alpha) = 2/3, b = 0.
    m = fit_linear_family([[1.0], [-1.0]], [1.0, -1.0], penalty="l2", alpha=1.0)
    assert m.coefficients[0, 0] == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert m.intercept[0] == pytest.approx(0.0, abs=1e-12)


def test_lasso_soft_threshold_hand_solve():
    # Univariate coordinate update: w = S(x'y/n, alpha) / (x'x/n) = S(1, 0.5) = 0.5.
    m = fit_linear_family([[1.0], [-1.0]], [1.0, -1.0], penalty="l1", alpha=0.5)
    assert m.coefficients[0, 0] == pytest.approx(0.5, abs=1e-9)
    assert m.intercept[0] == pytest.approx(0.0, abs=1e-9)


def test_empty_data_rejected():
    with pytest.raises(InputError):
        fit_linear_family(np.zeros((0, 1)).tolist() or [[]], [], penalty="none")


def test_coordinate_descent_objective_non_increasing():
    rng = Rng(5)
    X = rng.uniform(-2, 2, (40, 6))
    y = rng.uniform(-3, 3, (40, 1))[:, 0]
    m = fit_linear_family(X, y, penalty="elastic", alpha=0.3, rho=0.7)
    trace = m.diagnostics["objective_trace"]
    assert len(trace) >= 1
    assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))


def test_lasso_kkt_at_convergence():
    rng = Rng(11)
    X = rng.uniform(-1, 1, (30, 5))
    y = rng.uniform(-1, 1, (30, 1))[:, 0]
    alpha = 0.2
    m = fit_linear_family(X, y, penalty="l1", alpha=alpha)
    w = m.coefficients[0]
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    r = yc - Xc @ w
    for j in range(5):
        if w[j] == 0.0:
            assert abs(Xc[:, j] @ r) / n <= alpha + 1e-4


def test_ridge_closed_form_matches_cd_at_rescaled_alpha():
    # Closed form uses (X'X + aI); the CD objective penalizes a/2n-style,
    # so ridge(a) corresponds to elastic(alpha=a/n, rho=0).
    rng = Rng(2)
    X = rng.uniform(-1, 1, (25, 4))
    y = rng.uniform(-2, 2, (25, 1))[:, 0]
    a = 0.8
    closed = fit_linear_family(X, y, penalty="l2", alpha=a)
    cd = fit_linear_family(X, y, penalty="elastic", alpha=a / X.shape[0], rho=0.0)
    assert np.allclose(closed.coefficients, cd.coefficients, atol=1e-5)


def test_singular_system_falls_back():
    # Duplicate column: X'X singular without a penalty.
    X = [[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]
    m = fit_linear_family(X, [1.0, 2.0, 3.0], penalty="none")
    pred = m.predict(np.asarray(X))
    assert np.allclose(pred, [1.0, 2.0, 3.0], atol=1e-5)


# --- logistic --------------------------------------------------------------

def test_logistic_separable_training_accuracy():
    X = np.array([[v] for v in (-1.2, -1.0, -0.8, 0.8, 1.0, 1.2)])
    y = np.array([0, 0, 0, 1, 1, 1])
    m = fit_logistic(X, y, l2_strength=0.01)
    assert m.score(X, y) == 1.0


def test_logistic_symmetry_gives_half_probability_at_zero():
    m = fit_logistic([[1.0], [-1.0]], [1, 0], l2_strength=1.0)
    p = m.predict_proba([[0.0]])
    assert np.allclose(p, [[0.5, 0.5]], atol=1e-12)


def test_logistic_single_class_rejected():
    with pytest.raises(InputError):
        fit_logistic([[1.0], [2.0]], [1, 1])


# --- linear svc ------------------------------------------------------------

def test_svc_separable_points_on_correct_margin_side():
    X = np.array([[-2.0, 0.3], [-1.5, -0.2], [-1.0, 0.1], [1.0, -0.1], [1.5, 0.2], [2.0, 0.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    m = fit_linear_svc(X, y, c=1.0)
    scores = m.decision_values(X)
    for i, label in enumerate(y):
        assert np.argmax(scores[i]) == label


def test_svc_input_scaling_invariance_on_separable_data():
    X = np.array([[-2.0, 1.0], [-1.0, 0.5], [1.0, -0.5], [2.0, -1.0]])
    y = np.array([0, 0, 1, 1])
    base = fit_linear_svc(X, y).predict(X)
    scaled = fit_linear_svc(3.5 * X, y).predict(3.5 * X)
    assert np.array_equal(base, scaled)


def test_svc_single_class_rejected():
    with pytest.raises(InputError):
        fit_linear_svc([[0.0], [1.0]], [0, 0])


# --- cart ------------------------------------------------------------------

def test_cart_pure_labels_single_leaf():
    m = fit_cart([[0.0], [1.0], [2.0]], [1, 1, 1])
    assert m.tree.is_leaf
    assert m.predict([[5.0]])[0] == 1


def test_cart_xor_depth_two_perfect():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    m = fit_cart(X, y)
    assert m.score(X, y) == 1.0
    assert tree_depth(m.tree) == 2


def test_cart_split_beats_exhaustive_oracle():
    # The root split must achieve the best impurity decrease over every
    # (feature, midpoint threshold) candidate, computed here by brute force.
    rng = Rng(9)
    X = rng.uniform(0, 1, (40, 3))
    y = (X[:, 0] + 0.3 * X[:, 1] > 0.6).astype(int)
    m = fit_cart(X, y, max_depth=1)

    def gini(labels):
        if len(labels) == 0:
            return 0.0
        p = np.bincount(labels, minlength=2) / len(labels)
        return 1.0 - float((p * p).sum())

    best = 0.0
    n = len(y)
    for f in range(3):
        vals = np.unique(X[:, f])
        for t in (vals[:-1] + vals[1:]) / 2:
            mask = X[:, f] <= t
            gain = gini(y) - mask.mean() * gini(y[mask]) - (1 - mask.mean()) * gini(y[~mask])
            best = max(best, gain)
    node = m.tree
    mask = X[:, node.feature_index] <= node.threshold
    achieved = gini(y) - mask.mean() * gini(y[mask]) - (1 - mask.mean()) * gini(y[~mask])
    assert achieved == pytest.approx(best, abs=1e-12)


@settings(deadline=None, max_examples=25)
@given(st.integers(0, 10_000))
def test_cart_memorizes_consistent_data(seed):
    rng = Rng(seed)
    X = rng.uniform(-1, 1, (20, 2))
    y = np.array([rng.below(3) for _ in range(20)], dtype=np.int64)
    if len(np.unique(y)) < 2:
        y[0] = (y[0] + 1) % 3
    m = fit_cart(X, y)
    assert m.score(X, y) == 1.0


# --- predict / score -------------------------------------------------------

def test_r2_perfect_and_constant_predictor():
    X = [[0.0], [1.0], [2.0]]
    y = [0.0, 1.0, 2.0]
    m = fit_linear_family(X, y, penalty="none")
    assert m.score(X, y) == pytest.approx(1.0)
    # A constant-mean predictor has r^2 = 0: regress on a useless feature.
    m2 = fit_linear_family([[1.0], [1.0], [1.0]], y, penalty="none")
    assert m2.score([[1.0], [1.0], [1.0]], y) == pytest.approx(0.0, abs=1e-12)


def test_accuracy_nine_of_ten():
    X = np.arange(10, dtype=float).reshape(-1, 1)
    y_true = np.array([0] * 5 + [1] * 5)
    m = fit_cart(X, y_true)
    y_mangled = y_true.copy()
    y_mangled[0] = 1
    assert m.score(X, y_mangled) == pytest.approx(0.9)


def test_unfitted_model_raises_state_error():
    for factory in (linear_regression, ridge, lasso, elastic_net,
                    logistic_regression, decision_tree):
        with pytest.raises(StateError):
            factory().predict([[1.0]])


def test_predict_is_deterministic():
    rng = Rng(4)
    X = rng.uniform(-1, 1, (30, 3))
    y = (X[:, 0] > 0).astype(int)
    m = fit_logistic(X, y)
    assert np.array_equal(m.predict(X), m.predict(X))


def test_unknown_family_rejected():
    with pytest.raises(InputError):
        PrimalModel("boosted_stump")
