"""Decision-path explanations from a shallow surrogate decision tree.

A surrogate CART is fitted on a model's own predicted labels; explaining a
point walks its root-to-leaf path and returns the threshold predicates met
along the way, a pure conjunction the query point satisfies by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .numcore import as_matrix
from .primal import PrimalModel, fit_cart


@dataclass(frozen=True)
class Predicate:
    feature_index: int
    relation: str  # "<=" or ">"
    threshold: float

    def holds(self, x) -> bool:
        value = float(np.asarray(x).ravel()[self.feature_index])
        return value <= self.threshold if self.relation == "<=" else value > self.threshold

    def __str__(self) -> str:
        return f"x[{self.feature_index}] {self.relation} {self.threshold:g}"


@dataclass(frozen=True)
class Explanation:
    clauses: tuple
    predicted_label: int
    surrogate_fidelity: float

    def render(self) -> str:
        lines = [str(p) for p in self.clauses]
        lines.append(f"=> {self.predicted_label}")
        lines.append(f"fidelity={self.surrogate_fidelity:g}")
        return "\n".join(lines)


class SurrogateTree:
    """Shallow CART mimicking another model's labeling."""

    def __init__(self, tree_model: PrimalModel, fidelity: float, max_depth: int, n_features: int):
        self.tree_model = tree_model
        self.fidelity = fidelity
        self.max_depth = max_depth
        self.n_features = n_features

    def predict(self, X) -> np.ndarray:
        return self.tree_model.predict(X)


def fidelity(surrogate_predict, model_predict, X) -> float:
    """Fraction of rows on which the two labelers agree."""
    X = as_matrix(X)
    a = np.asarray(surrogate_predict(X))
    b = np.asarray(model_predict(X))
    return float(np.mean(a == b))


def fit_surrogate(model_predict, X, max_depth: int = 4) -> SurrogateTree:
    """Fit a depth-limited CART on (X, model_predict(X))."""
    X = as_matrix(X)
    if X.shape[0] == 0:
        raise InputError("cannot fit a surrogate on empty data")
    labels = np.asarray(model_predict(X), dtype=np.int64)
    tree_model = fit_cart(X, labels, max_depth=max_depth)
    agreement = float(np.mean(tree_model.predict(X) == labels))
    return SurrogateTree(tree_model, agreement, max_depth, X.shape[1])


def explain(surrogate: SurrogateTree, x) -> Explanation:
    """Predicates along the surrogate's decision path for a single point."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != surrogate.n_features:
        raise InputError(
            f"query point has {x.shape[0]} features, surrogate was fitted on {surrogate.n_features}"
        )
    node = surrogate.tree_model.tree
    clauses = []
    while not node.is_leaf:
        if x[node.feature_index] <= node.threshold:
            clauses.append(Predicate(node.feature_index, "<=", node.threshold))
            node = node.left
        else:
            clauses.append(Predicate(node.feature_index, ">", node.threshold))
            node = node.right
    return Explanation(
        clauses=tuple(clauses),
        predicted_label=int(node.leaf_class),
        surrogate_fidelity=surrogate.fidelity,
    )
