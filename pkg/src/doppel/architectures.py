"""Proxy-network templates and the three semantic mapping strategies.

A ProxyDescriptor declares an architecture; instantiate() turns it into a
trainable network (dense stack or differentiable decision tree) backed by
the numcore kernels. transfer_exact copies fitted GLM weights, distill
trains on a teacher's predictions, universal_proxy builds a free-form MLP.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DimensionError,
    InputError,
    NumericError,
    RegistryLookupError,
    StateError,
    UnsupportedMapError,
)
from .numcore import (
    Rng,
    TrainConfig,
    OptimizerState,
    apply_activation,
    as_matrix,
    glorot_init,
    head_gradient,
    loss_eval,
    optimizer_step,
    softmax,
)
from .primal import GLM_FAMILIES, PrimalModel

STRATEGIES = ("exact", "approximate", "universal")

# Head activation/loss pairs that may be instantiated together.
COMPATIBLE_HEADS = {
    ("identity", "mse"),
    ("identity", "categorical_hinge"),
    ("sigmoid", "binary_ce"),
    ("softmax", "categorical_ce"),
    ("softmax", "categorical_hinge"),
}


@dataclass(frozen=True)
class Regularizer:
    kind: str = "none"
    alpha: float = 0.0
    rho: float = 0.5

    def __post_init__(self):
        if self.kind not in ("none", "l1", "l2", "elastic"):
            raise ConfigError(f"unknown regularizer {self.kind!r}")
        if self.alpha < 0 or not (0.0 <= self.rho <= 1.0):
            raise ConfigError("need alpha >= 0 and rho in [0, 1]")

    def penalty(self, W: np.ndarray) -> float:
        if self.kind == "none" or self.alpha == 0.0:
            return 0.0
        l1 = float(np.abs(W).sum())
        l2 = float((W ** 2).sum())
        if self.kind == "l1":
            return self.alpha * l1
        if self.kind == "l2":
            return 0.5 * self.alpha * l2
        return self.alpha * (self.rho * l1 + 0.5 * (1.0 - self.rho) * l2)

    def gradient(self, W: np.ndarray) -> np.ndarray:
        if self.kind == "none" or self.alpha == 0.0:
            return np.zeros_like(W)
        if self.kind == "l1":
            return self.alpha * np.sign(W)
        if self.kind == "l2":
            return self.alpha * W
        return self.alpha * (self.rho * np.sign(W) + (1.0 - self.rho) * W)


@dataclass(frozen=True)
class DndtSpec:
    """Differentiable decision tree: soft bins joined by an outer product."""

    n_features: int
    n_classes: int
    cut_points_per_feature: int = 1
    temperature: float = 0.1

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise ConfigError("temperature must be positive")
        if self.cut_points_per_feature < 1:
            raise ConfigError("need at least one cut point per feature")

    @property
    def n_leaves(self) -> int:
        return (self.cut_points_per_feature + 1) ** self.n_features


@dataclass(frozen=True)
class ProxyDescriptor:
    """Declarative proxy architecture.

    ``layers`` is a chain of dense (in, out) pairs with ReLU between them
    and ``activation`` on the head; a DNDT proxy leaves ``layers`` empty
    and sets ``dndt`` instead.
    """

    name: str
    activation: str
    loss: str
    task: str
    layers: tuple = ()
    dndt: DndtSpec | None = None
    regularizer: Regularizer = Regularizer()
    strategy: str = "approximate"
    version: str = "default"
    searchable_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.dndt is None:
            if (self.activation, self.loss) not in COMPATIBLE_HEADS:
                raise ConfigError(
                    f"activation {self.activation!r} is incompatible with loss {self.loss!r}"
                )
            if not self.layers:
                raise ConfigError("descriptor needs layers or a dndt spec")
            for (a, b), (c, _) in zip(self.layers, self.layers[1:]):
                if b != c:
                    raise ConfigError(f"layer chain mismatch: {b} -> {c}")
        else:
            if self.layers:
                raise ConfigError("dndt descriptors must not declare dense layers")
            if (self.activation, self.loss) != ("softmax", "categorical_ce"):
                raise ConfigError("dndt uses a softmax head with categorical_ce")

    @property
    def input_dim(self) -> int:
        return self.dndt.n_features if self.dndt else self.layers[0][0]

    @property
    def output_dim(self) -> int:
        return self.dndt.n_classes if self.dndt else self.layers[-1][1]


class DenseNet:
    """Dense stack with ReLU hidden activations and the descriptor's head."""

    def __init__(self, descriptor: ProxyDescriptor, rng: Rng | None = None):
        self.descriptor = descriptor
        self._params: dict[str, np.ndarray] = {}
        single = len(descriptor.layers) == 1
        for i, (fan_in, fan_out) in enumerate(descriptor.layers):
            if single or rng is None:
                # Single-layer heads are convex fits; a cold start is
                # deterministic and distils faster than a random one.
                W = np.zeros((fan_out, fan_in))
            else:
                W = glorot_init(fan_in, fan_out, rng)
            self._params[f"w{i}"] = W
            self._params[f"b{i}"] = np.zeros(fan_out)

    def parameters(self) -> dict[str, np.ndarray]:
        return self._params

    def _stack(self, X: np.ndarray):
        acts = [X]
        pre = []
        h = X
        n_layers = len(self.descriptor.layers)
        for i in range(n_layers):
            z = h @ self._params[f"w{i}"].T + self._params[f"b{i}"]
            pre.append(z)
            h = apply_activation("relu", z) if i < n_layers - 1 else z
            acts.append(h)
        return pre, acts

    def forward(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape[1] != self.descriptor.input_dim:
            raise DimensionError(
                f"expected {self.descriptor.input_dim} features, got {X.shape[1]}"
            )
        _, acts = self._stack(X)
        return apply_activation(self.descriptor.activation, acts[-1])

    def loss(self, X, Y) -> float:
        base = loss_eval(self.descriptor.loss, Y, self.forward(X))
        reg = sum(
            self.descriptor.regularizer.penalty(self._params[f"w{i}"])
            for i in range(len(self.descriptor.layers))
        )
        return base + reg

    def gradients(self, X, Y) -> dict[str, np.ndarray]:
        X = as_matrix(X)
        Y = np.asarray(Y, dtype=np.float64)
        pre, acts = self._stack(X)
        out = apply_activation(self.descriptor.activation, acts[-1])
        delta = head_gradient(self.descriptor.activation, self.descriptor.loss, out, Y)
        grads: dict[str, np.ndarray] = {}
        for i in reversed(range(len(self.descriptor.layers))):
            grads[f"w{i}"] = delta.T @ acts[i] + self.descriptor.regularizer.gradient(self._params[f"w{i}"])
            grads[f"b{i}"] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self._params[f"w{i}"]) * (pre[i - 1] > 0)
        return grads

    def scale_output(self, scale: float, shift: float) -> None:
        """Fold an affine target transform back into the output layer."""
        i = len(self.descriptor.layers) - 1
        self._params[f"w{i}"] *= scale
        self._params[f"b{i}"] *= scale
        self._params[f"b{i}"] += shift


class DndtNet:
    """Trainable soft decision tree (per-feature soft binning + leaf mixing).

    Per feature i with cut points beta: bin logits are
    (x_i * [1..c+1] + [0, -beta_1, -beta_1-beta_2, ...]) / temperature,
    softmaxed into a soft one-hot bin vector. The leaf vector is the
    row-wise outer product across features (Kronecker order: earlier
    features vary slowest) and feeds a dense softmax head.
    """

    def __init__(self, descriptor: ProxyDescriptor, rng: Rng, X_init=None):
        self.descriptor = descriptor
        spec = descriptor.dndt
        self._params: dict[str, np.ndarray] = {}
        for i in range(spec.n_features):
            if X_init is not None:
                # Cut points start at training-feature quantile midpoints
                # (the median for a single cut) so the initial bins carry
                # signal instead of splitting at zero.
                col = np.sort(np.asarray(X_init, dtype=np.float64)[:, i])
                qs = np.linspace(0, 1, spec.cut_points_per_feature + 2)[1:-1]
                cuts = np.quantile(col, qs)
            else:
                cuts = np.zeros(spec.cut_points_per_feature)
            self._params[f"cuts{i}"] = np.asarray(cuts, dtype=np.float64).reshape(-1)
        self._params["leaf_weights"] = glorot_init(spec.n_classes, spec.n_leaves, rng)

    def parameters(self) -> dict[str, np.ndarray]:
        return self._params

    def _bins(self, X: np.ndarray) -> list[np.ndarray]:
        spec = self.descriptor.dndt
        bins = []
        for i in range(spec.n_features):
            beta = self._params[f"cuts{i}"]
            c = beta.shape[0]
            w = np.arange(1, c + 2, dtype=np.float64)
            offsets = np.concatenate([[0.0], -np.cumsum(beta)])
            logits = (X[:, i : i + 1] * w + offsets) / spec.temperature
            bins.append(softmax(logits))
        return bins

    @staticmethod
    def _kron_rows(mats: list[np.ndarray]) -> np.ndarray:
        out = mats[0]
        for m in mats[1:]:
            out = np.einsum("ij,ik->ijk", out, m).reshape(out.shape[0], -1)
        return out

    def leaf_vector(self, X) -> np.ndarray:
        X = as_matrix(X)
        return self._kron_rows(self._bins(X))

    def forward(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape[1] != self.descriptor.dndt.n_features:
            raise DimensionError(
                f"expected {self.descriptor.dndt.n_features} features, got {X.shape[1]}"
            )
        leaf = self._kron_rows(self._bins(X))
        return softmax(leaf @ self._params["leaf_weights"])

    def loss(self, X, Y) -> float:
        return loss_eval("categorical_ce", np.asarray(Y, dtype=np.float64), self.forward(X))

    def gradients(self, X, Y) -> dict[str, np.ndarray]:
        X = as_matrix(X)
        Y = np.asarray(Y, dtype=np.float64)
        spec = self.descriptor.dndt
        n = X.shape[0]
        bins = self._bins(X)
        leaf = self._kron_rows(bins)
        P = softmax(leaf @ self._params["leaf_weights"])
        dZ = (P - Y) / n
        grads = {"leaf_weights": leaf.T @ dZ}
        dleaf = dZ @ self._params["leaf_weights"].T
        sizes = [b.shape[1] for b in bins]
        for i in range(spec.n_features):
            pre_size = int(np.prod(sizes[:i])) if i else 1
            post_size = int(np.prod(sizes[i + 1 :])) if i + 1 < len(sizes) else 1
            prefix = self._kron_rows(bins[:i]) if i else np.ones((n, 1))
            suffix = self._kron_rows(bins[i + 1 :]) if i + 1 < len(sizes) else np.ones((n, 1))
            D = dleaf.reshape(n, pre_size, sizes[i], post_size)
            dbin = np.einsum("npcs,np,ns->nc", D, prefix, suffix)
            dlogits = bins[i] * (dbin - (dbin * bins[i]).sum(axis=1, keepdims=True))
            dlogits /= spec.temperature
            # offsets[j] = -sum(beta[:j]); each beta_m feeds every bin >= m.
            g = np.empty(spec.cut_points_per_feature)
            for m in range(1, spec.cut_points_per_feature + 1):
                g[m - 1] = -dlogits[:, m:].sum()
            grads[f"cuts{i}"] = g
        return grads


def dndt_forward(net: DndtNet, x) -> np.ndarray:
    """Class probabilities of a differentiable-tree network."""
    return net.forward(x)


def instantiate(descriptor: ProxyDescriptor, rng: Rng, X_init=None):
    if descriptor.dndt is not None:
        return DndtNet(descriptor, rng, X_init=X_init)
    return DenseNet(descriptor, rng)


def train_network(net, X, Y, config: TrainConfig, rng: Rng | None = None) -> list[float]:
    """Minibatch-train a network in place; returns per-epoch objective values."""
    X = as_matrix(X)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] != X.shape[0]:
        raise DimensionError("targets must be [n x outputs] matching X rows")
    rng = rng if rng is not None else Rng(config.seed)
    state = OptimizerState(kind=config.optimizer, learning_rate=config.learning_rate)
    params = net.parameters()
    n = X.shape[0]
    history = []
    # Divergence surfaces as a non-finite loss below; silence the float
    # overflow warnings on the way there.
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(config.epochs):
            order = rng.permutation(n)
            epoch_losses = []
            for start in range(0, n, config.batch_size):
                idx = order[start : start + config.batch_size]
                grads = net.gradients(X[idx], Y[idx])
                optimizer_step(state, params, grads)
                epoch_losses.append(net.loss(X[idx], Y[idx]))
            epoch = float(np.mean(epoch_losses))
            if not np.isfinite(epoch):
                raise NumericError("training diverged: non-finite epoch loss")
            history.append(epoch)
    return history


# ---------------------------------------------------------------------------
# Architecture catalog


def _glm_regression(family: str, data_shape, overrides) -> ProxyDescriptor:
    _, d, _ = data_shape
    alpha = float(overrides.get("alpha", 1.0))
    rho = float(overrides.get("rho", 0.5))
    reg = {
        "linear": Regularizer("none"),
        "ridge": Regularizer("l2", alpha=alpha),
        "lasso": Regularizer("l1", alpha=alpha),
        "elasticnet": Regularizer("elastic", alpha=alpha, rho=rho),
    }[family]
    return ProxyDescriptor(
        name=family, activation="identity", loss="mse", task="regression",
        layers=((d, 1),), regularizer=reg,
    )


def _logistic(data_shape, overrides) -> ProxyDescriptor:
    _, d, k = data_shape
    return ProxyDescriptor(
        name="logistic", activation="softmax", loss="categorical_ce",
        task="classification", layers=((d, k),),
        regularizer=Regularizer("l2", alpha=float(overrides.get("l2_strength", 1.0)) / max(data_shape[0], 1)),
    )


def _linear_svc(data_shape, overrides) -> ProxyDescriptor:
    n, d, k = data_shape
    c = float(overrides.get("c", 1.0))
    return ProxyDescriptor(
        name="linear_svc", activation="identity", loss="categorical_hinge",
        task="classification", layers=((d, k),),
        regularizer=Regularizer("l2", alpha=1.0 / (c * max(n, 1))),
    )


def _decision_tree(data_shape, overrides) -> ProxyDescriptor:
    _, d, k = data_shape
    spec = DndtSpec(
        n_features=d, n_classes=k,
        cut_points_per_feature=int(overrides.get("cut_points_per_feature", 1)),
        temperature=float(overrides.get("temperature", 0.1)),
    )
    return ProxyDescriptor(
        name="decision_tree", activation="softmax", loss="categorical_ce",
        task="classification", dndt=spec,
        searchable_params={
            "temperature": (0.05, 0.1, 0.5),
            "cut_points_per_feature": (1, 2),
        },
    )


_BUILDERS = {
    ("linear_model", "LinearRegression"): lambda s, o: _glm_regression("linear", s, o),
    ("linear_model", "Ridge"): lambda s, o: _glm_regression("ridge", s, o),
    ("linear_model", "Lasso"): lambda s, o: _glm_regression("lasso", s, o),
    ("linear_model", "ElasticNet"): lambda s, o: _glm_regression("elasticnet", s, o),
    ("linear_model", "LogisticRegression"): _logistic,
    ("svm", "LinearSVC"): _linear_svc,
    ("tree", "DecisionTreeClassifier"): _decision_tree,
}

# Per-architecture training overrides applied when the caller does not
# customize the search space; hinge heads need a larger step to converge
# within the default epoch budget.
TRAIN_DEFAULTS = {
    ("svm", "LinearSVC"): {"learning_rate": 5e-3},
}


def resolve_architecture(key, data_shape, overrides: dict | None = None) -> ProxyDescriptor:
    """Build the proxy descriptor registered for ``key`` at ``data_shape``.

    data_shape is (n_rows, n_features, n_classes); n_classes is 1 for
    regression heads. Overrides carry primal hyperparameters (penalty
    strengths) and architecture knobs (temperature, cut points).
    """
    key = tuple(key)
    if key not in _BUILDERS:
        known = ", ".join(str(k) for k in sorted(_BUILDERS))
        raise RegistryLookupError(f"no architecture for key {key!r}; known keys: {known}")
    return _BUILDERS[key](tuple(data_shape), dict(overrides or {}))


def apply_config(descriptor: ProxyDescriptor, config: dict) -> ProxyDescriptor:
    """Return a copy of the descriptor with searchable knobs applied."""
    out = descriptor
    if "temperature" in config:
        if out.dndt is None:
            raise ConfigError("temperature only applies to dndt architectures")
        out = dataclasses.replace(out, dndt=dataclasses.replace(out.dndt, temperature=float(config["temperature"])))
    if "cut_points_per_feature" in config:
        if out.dndt is None:
            raise ConfigError("cut_points_per_feature only applies to dndt architectures")
        out = dataclasses.replace(
            out, dndt=dataclasses.replace(out.dndt, cut_points_per_feature=int(config["cut_points_per_feature"]))
        )
    if "hidden_layers" in config:
        if out.dndt is not None:
            raise ConfigError("hidden_layers only applies to dense architectures")
        hidden = tuple(int(h) for h in config["hidden_layers"])
        dims = (out.input_dim,) + hidden + (out.output_dim,)
        out = dataclasses.replace(out, layers=tuple(zip(dims[:-1], dims[1:])))
    return out


# ---------------------------------------------------------------------------
# Mapping strategies


def transfer_exact(primal: PrimalModel, descriptor: ProxyDescriptor) -> dict[str, np.ndarray]:
    """Copy a fitted GLM's parameters into single-dense proxy weights."""
    if primal.family not in GLM_FAMILIES:
        raise UnsupportedMapError(
            f"exact mapping is undefined for family {primal.family!r}"
        )
    if not primal.fitted:
        raise StateError("exact transfer requires a fitted model")
    W = np.array(primal.coefficients, dtype=np.float64)
    b = np.array(primal.intercept, dtype=np.float64)
    if W.shape != (descriptor.output_dim, descriptor.input_dim):
        raise DimensionError(
            f"primal parameters {W.shape} do not fit proxy "
            f"({descriptor.output_dim}, {descriptor.input_dim})"
        )
    return {"w0": W, "b0": b}


def teacher_targets(primal: PrimalModel, X) -> np.ndarray:
    """Distillation targets: soft probabilities when the family provides
    them, one-hot predictions otherwise, raw predictions for regression."""
    if not primal.fitted:
        raise StateError("teacher model is not fitted")
    if primal.task == "regression":
        return primal.predict(X).reshape(-1, 1)
    if primal.family in ("logistic", "decision_tree"):
        return primal.predict_proba(X)
    labels = primal.predict(X)
    return np.eye(primal.n_classes)[labels]


def distill(primal: PrimalModel, descriptor: ProxyDescriptor, X,
            config: TrainConfig | None = None) -> tuple:
    """Train a proxy on the primal model's predictions.

    Regression targets are standardized for training and the affine map is
    folded back into the output layer, so the returned network predicts in
    the original units. Returns (network, history).
    """
    config = config or TrainConfig()
    X = as_matrix(X)
    targets = teacher_targets(primal, X)
    rng = Rng(config.seed)
    net = instantiate(descriptor, rng, X_init=X)
    history = fit_network_on_targets(net, X, targets, config, rng)
    return net, history


def fit_network_on_targets(net, X, targets, config: TrainConfig, rng: Rng | None = None) -> list[float]:
    """train_network plus target standardization for regression heads."""
    targets = np.asarray(targets, dtype=np.float64)
    if net.descriptor.task == "regression":
        mu = float(targets.mean())
        sd = float(targets.std())
        if sd == 0.0:
            sd = 1.0
        history = train_network(net, X, (targets - mu) / sd, config, rng)
        net.scale_output(sd, mu)
        return history
    return train_network(net, X, targets, config, rng)


def universal_proxy(data_shape, hidden_layers, task: str) -> ProxyDescriptor:
    """Free-form MLP descriptor: ReLU hidden layers, task-appropriate head."""
    _, d, k = data_shape
    hidden = tuple(int(h) for h in hidden_layers)
    if any(h < 1 for h in hidden):
        raise InputError("hidden layer sizes must be >= 1")
    out_dim = 1 if task == "regression" else k
    dims = (d,) + hidden + (out_dim,)
    activation, loss = ("identity", "mse") if task == "regression" else ("softmax", "categorical_ce")
    return ProxyDescriptor(
        name="mlp", activation=activation, loss=loss, task=task,
        layers=tuple(zip(dims[:-1], dims[1:])), strategy="universal",
        searchable_params={"hidden_layers": ((8,), (16,), (8, 8))},
    )
