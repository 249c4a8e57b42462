"""From-scratch classical models with a uniform fit / predict / score surface.

Seven families are supported: linear, ridge, lasso, elasticnet (one solver
pair), multinomial logistic regression, one-vs-rest linear SVC, and a CART
classifier. These are the teachers the transpiler wraps.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError, StateError
from .numcore import as_matrix, as_vector, softmax

GLM_FAMILIES = ("linear", "ridge", "lasso", "elasticnet", "logistic")
FAMILIES = GLM_FAMILIES + ("linear_svc", "decision_tree")

REGISTRY_KEYS = {
    "linear": ("linear_model", "LinearRegression"),
    "ridge": ("linear_model", "Ridge"),
    "lasso": ("linear_model", "Lasso"),
    "elasticnet": ("linear_model", "ElasticNet"),
    "logistic": ("linear_model", "LogisticRegression"),
    "linear_svc": ("svm", "LinearSVC"),
    "decision_tree": ("tree", "DecisionTreeClassifier"),
}


class TreeNode:
    """CART node; internal nodes carry (feature, threshold), leaves a label."""

    __slots__ = ("feature_index", "threshold", "left", "right", "leaf_class", "leaf_distribution")

    def __init__(self):
        self.feature_index = None
        self.threshold = None
        self.left = None
        self.right = None
        self.leaf_class = None
        self.leaf_distribution = None

    @property
    def is_leaf(self) -> bool:
        return self.feature_index is None


class PrimalModel:
    """A classical model: family tag, hyperparameters and learned parameters.

    Instances start unfitted; fit() dispatches to the family solver. The
    parameters are ``coefficients`` [outputs x features] and ``intercept``
    [outputs] for everything except decision trees, which store ``tree``.
    """

    def __init__(self, family: str, hyperparams: dict | None = None):
        if family not in FAMILIES:
            raise InputError(f"unknown model family {family!r}")
        self.family = family
        self.task = "regression" if family in ("linear", "ridge", "lasso", "elasticnet") else "classification"
        self.hyperparams = dict(hyperparams or {})
        self.registry_key = REGISTRY_KEYS[family]
        self.fitted = False
        self.coefficients = None
        self.intercept = None
        self.tree = None
        self.n_classes = None
        self.diagnostics = {}

    def clone(self) -> "PrimalModel":
        """Unfitted copy with the same family and hyperparameters."""
        return PrimalModel(self.family, dict(self.hyperparams))

    def fit(self, X, y) -> "PrimalModel":
        if self.family == "linear":
            return fit_linear_family(X, y, penalty="none", model=self)
        if self.family == "ridge":
            return fit_linear_family(X, y, penalty="l2", alpha=self.hyperparams.get("alpha", 1.0), model=self)
        if self.family == "lasso":
            return fit_linear_family(X, y, penalty="l1", alpha=self.hyperparams.get("alpha", 1.0), model=self)
        if self.family == "elasticnet":
            return fit_linear_family(
                X, y, penalty="elastic",
                alpha=self.hyperparams.get("alpha", 1.0),
                rho=self.hyperparams.get("rho", 0.5),
                model=self,
            )
        if self.family == "logistic":
            return fit_logistic(X, y, l2_strength=self.hyperparams.get("l2_strength", 1.0), model=self)
        if self.family == "linear_svc":
            return fit_linear_svc(X, y, c=self.hyperparams.get("c", 1.0), model=self)
        return fit_cart(X, y, max_depth=self.hyperparams.get("max_depth"), model=self)

    def decision_values(self, X) -> np.ndarray:
        """Raw affine outputs [n x outputs] (GLM and SVC families only)."""
        self._require_fitted()
        X = as_matrix(X)
        if self.coefficients is None:
            raise InputError("decision_values is undefined for tree models")
        return X @ self.coefficients.T + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        """Class probabilities; defined for logistic and tree classifiers."""
        self._require_fitted()
        if self.family == "logistic":
            return softmax(self.decision_values(X))
        if self.family == "decision_tree":
            X = as_matrix(X)
            out = np.empty((X.shape[0], self.n_classes))
            for i, row in enumerate(X):
                out[i] = _route(self.tree, row).leaf_distribution
            return out
        raise InputError(f"{self.family} does not provide class probabilities")

    def predict(self, X):
        return predict(self, X)

    def score(self, X, y) -> float:
        return score(self, X, y)

    def _require_fitted(self):
        if not self.fitted:
            raise StateError(f"{self.family} model is not fitted")


def linear_regression() -> PrimalModel:
    return PrimalModel("linear")


def ridge(alpha: float = 1.0) -> PrimalModel:
    return PrimalModel("ridge", {"alpha": alpha})


def lasso(alpha: float = 1.0) -> PrimalModel:
    return PrimalModel("lasso", {"alpha": alpha})


def elastic_net(alpha: float = 1.0, rho: float = 0.5) -> PrimalModel:
    return PrimalModel("elasticnet", {"alpha": alpha, "rho": rho})


def logistic_regression(l2_strength: float = 1.0) -> PrimalModel:
    return PrimalModel("logistic", {"l2_strength": l2_strength})


def linear_svc(c: float = 1.0) -> PrimalModel:
    return PrimalModel("linear_svc", {"c": c})


def decision_tree(max_depth: int | None = None) -> PrimalModel:
    return PrimalModel("decision_tree", {"max_depth": max_depth})


def _check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    labels = y.astype(np.int64)
    if not np.array_equal(labels, np.asarray(y, dtype=np.float64)):
        raise InputError("classification labels must be integers")
    if labels.min() < 0:
        raise InputError("classification labels must be >= 0")
    if len(np.unique(labels)) < 2:
        raise InputError("need at least 2 distinct classes")
    return labels


def fit_linear_family(X, y, penalty: str = "none", alpha: float = 1.0,
                      rho: float = 0.5, model: PrimalModel | None = None) -> PrimalModel:
    """Fit a linear/ridge/lasso/elastic-net regression.

    none/l2 solve the normal equations (X'X + alpha*I)w = X'y with the
    intercept row unpenalized. l1/elastic run cyclic coordinate descent on
    (1/2n)||y - Xw - b||^2 + alpha * (rho*|w|_1 + (1-rho)/2*|w|_2^2), with
    tolerance 1e-6 on the max coefficient change and at most 1000 sweeps.
    A singular unpenalized system falls back to a ridge jitter of 1e-10.
    """
    X = as_matrix(X)
    y = as_vector(y)
    n, d = X.shape
    if n < 1 or d < 1 or len(y) != n:
        raise InputError("X and y must be non-empty with matching row counts")
    if alpha < 0 or not (0.0 <= rho <= 1.0):
        raise InputError("need alpha >= 0 and rho in [0, 1]")
    if penalty not in ("none", "l2", "l1", "elastic"):
        raise InputError(f"unknown penalty {penalty!r}")

    if model is None:
        family = {"none": "linear", "l2": "ridge", "l1": "lasso", "elastic": "elasticnet"}[penalty]
        hp = {} if penalty == "none" else ({"alpha": alpha} if penalty != "elastic" else {"alpha": alpha, "rho": rho})
        model = PrimalModel(family, hp)

    if penalty in ("none", "l2"):
        ridge_alpha = alpha if penalty == "l2" else 0.0
        Xt = np.hstack([X, np.ones((n, 1))])
        reg = np.diag([ridge_alpha] * d + [0.0])
        A = Xt.T @ Xt + reg
        b = Xt.T @ y
        try:
            w = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            w = np.linalg.solve(A + 1e-10 * np.eye(d + 1), b)
        coef, intercept = w[:d], w[d]
    else:
        l1 = alpha * (rho if penalty == "elastic" else 1.0)
        l2 = alpha * (1.0 - rho) if penalty == "elastic" else 0.0
        coef, intercept, trace = _coordinate_descent(X, y, l1, l2)
        model.diagnostics["objective_trace"] = trace

    model.coefficients = coef.reshape(1, d)
    model.intercept = np.array([intercept])
    model.fitted = True
    return model


def _coordinate_descent(X, y, l1: float, l2: float, tol: float = 1e-6, max_sweeps: int = 1000):
    n, d = X.shape
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    w = np.zeros(d)
    r = yc.copy()
    col_sq = (Xc ** 2).sum(axis=0) / n
    trace = []
    for _ in range(max_sweeps):
        max_change = 0.0
        for j in range(d):
            wj = w[j]
            rho_j = Xc[:, j] @ r / n + col_sq[j] * wj
            z = np.sign(rho_j) * max(abs(rho_j) - l1, 0.0)
            denom = col_sq[j] + l2
            w_new = z / denom if denom > 0 else 0.0
            if w_new != wj:
                r += Xc[:, j] * (wj - w_new)
                w[j] = w_new
            max_change = max(max_change, abs(w_new - wj))
        obj = (r @ r) / (2 * n) + l1 * np.abs(w).sum() + 0.5 * l2 * (w @ w)
        trace.append(float(obj))
        if max_change <= tol:
            break
    intercept = y_mean - x_mean @ w
    return w, intercept, trace


def fit_logistic(X, y, l2_strength: float = 1.0, learning_rate: float = 0.002,
                 max_iter: int = 1000, tol: float = 1e-6,
                 model: PrimalModel | None = None) -> PrimalModel:
    """Multinomial softmax regression by full-batch gradient descent.

    Objective: mean cross-entropy + l2_strength/(2n) * ||W||^2 (intercepts
    unpenalized). Stops when the gradient norm drops below tol or after
    max_iter steps.
    """
    X = as_matrix(X)
    labels = _check_labels(y)
    n, d = X.shape
    K = int(labels.max()) + 1
    Y = np.eye(K)[labels]
    W = np.zeros((K, d))
    b = np.zeros(K)
    for _ in range(max_iter):
        P = softmax(X @ W.T + b)
        G = (P - Y) / n
        gW = G.T @ X + (l2_strength / n) * W
        gb = G.sum(axis=0)
        if np.sqrt((gW ** 2).sum() + (gb ** 2).sum()) <= tol:
            break
        W -= learning_rate * gW
        b -= learning_rate * gb
    if model is None:
        model = PrimalModel("logistic", {"l2_strength": l2_strength})
    model.coefficients = W
    model.intercept = b
    model.n_classes = K
    model.fitted = True
    return model


def fit_linear_svc(X, y, c: float = 1.0, learning_rate: float = 0.1,
                   max_iter: int = 2000, model: PrimalModel | None = None) -> PrimalModel:
    """One-vs-rest linear classifiers, hinge loss + L2, full-batch subgradient.

    Per class k the objective is mean hinge(y_k * (x.w + b)) + ||w||^2 / (2cn).
    """
    X = as_matrix(X)
    labels = _check_labels(y)
    n, d = X.shape
    if c <= 0:
        raise InputError("c must be positive")
    K = int(labels.max()) + 1
    W = np.zeros((K, d))
    b = np.zeros(K)
    for k in range(K):
        yk = np.where(labels == k, 1.0, -1.0)
        w = np.zeros(d)
        bk = 0.0
        for _ in range(max_iter):
            margins = yk * (X @ w + bk)
            active = margins < 1.0
            gw = w / (c * n) - (X[active] * yk[active, None]).sum(axis=0) / n
            gb = -yk[active].sum() / n
            w -= learning_rate * gw
            bk -= learning_rate * gb
        W[k] = w
        b[k] = bk
    if model is None:
        model = PrimalModel("linear_svc", {"c": c})
    model.coefficients = W
    model.intercept = b
    model.n_classes = K
    model.fitted = True
    return model


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float((p * p).sum())


def _build_cart(X, y, K, depth, max_depth) -> TreeNode:
    node = TreeNode()
    counts = np.bincount(y, minlength=K).astype(np.float64)
    node.leaf_distribution = counts / counts.sum()
    node.leaf_class = int(np.argmax(counts))
    if (counts > 0).sum() == 1 or (max_depth is not None and depth >= max_depth):
        return node
    n = len(y)
    parent = _gini(counts)
    # Impure nodes keep splitting while any valid split exists, even at zero
    # Gini gain (e.g. the XOR root), otherwise consistent data could not be
    # memorized; sizes shrink every split, so recursion terminates.
    best_gain = -1.0
    best = None
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        if len(values) < 2:
            continue
        # Candidate thresholds are midpoints of consecutive sorted values;
        # the first strictly better (feature, threshold) wins, so ties break
        # toward the lowest feature index, then the lowest threshold.
        for t in (values[:-1] + values[1:]) / 2.0:
            left_mask = X[:, f] <= t
            cl = np.bincount(y[left_mask], minlength=K).astype(np.float64)
            cr = counts - cl
            gain = parent - (cl.sum() / n) * _gini(cl) - (cr.sum() / n) * _gini(cr)
            if gain > best_gain:
                best_gain = gain
                best = (f, float(t))
    if best is None:
        return node
    f, t = best
    left_mask = X[:, f] <= t
    node.feature_index = f
    node.threshold = t
    node.left = _build_cart(X[left_mask], y[left_mask], K, depth + 1, max_depth)
    node.right = _build_cart(X[~left_mask], y[~left_mask], K, depth + 1, max_depth)
    return node


def _route(node: TreeNode, row: np.ndarray) -> TreeNode:
    while not node.is_leaf:
        node = node.left if row[node.feature_index] <= node.threshold else node.right
    return node


def tree_depth(node: TreeNode) -> int:
    if node.is_leaf:
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


def fit_cart(X, y, max_depth: int | None = None, model: PrimalModel | None = None) -> PrimalModel:
    """CART classifier with Gini impurity."""
    X = as_matrix(X)
    y = np.asarray(y)
    if X.shape[0] == 0:
        raise InputError("empty input")
    labels = y.astype(np.int64)
    if not np.array_equal(labels, np.asarray(y, dtype=np.float64)) or labels.min() < 0:
        raise InputError("classification labels must be non-negative integers")
    K = int(labels.max()) + 1
    if model is None:
        model = PrimalModel("decision_tree", {"max_depth": max_depth})
    model.tree = _build_cart(X, labels, K, 0, max_depth)
    model.n_classes = K
    model.fitted = True
    return model


def predict(model: PrimalModel, X):
    """Labels for classifiers, raw float predictions for regressors."""
    model._require_fitted()
    X = as_matrix(X)
    if model.family == "decision_tree":
        return np.array([_route(model.tree, row).leaf_class for row in X], dtype=np.int64)
    scores = model.decision_values(X)
    if model.task == "classification":
        return np.argmax(scores, axis=1)
    return scores[:, 0]


def score(model: PrimalModel, X, y) -> float:
    """Accuracy for classifiers, r-squared for regressors."""
    preds = predict(model, X)
    if model.task == "classification":
        return float(np.mean(preds == np.asarray(y, dtype=np.int64)))
    y = as_vector(y)
    ss_res = float(np.sum((y - preds) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot
