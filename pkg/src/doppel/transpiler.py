"""The dope entry point, the model registry, and the doped-model adapter.

dope(primal) wraps a classical model in a DopedModel whose fit / predict /
score / save / explain surface mirrors the original while running a neural
proxy underneath. Fitted GLMs transfer their weights exactly; everything
else is distilled from the teacher's predictions (or trained directly on
ground truth with the opt-in universal strategy).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace

import numpy as np

from . import architectures, explain as explain_mod, nas, onnx
from .architectures import ProxyDescriptor, TRAIN_DEFAULTS
from .errors import (
    InputError,
    RegistryConflictError,
    RegistryLookupError,
    StateError,
    UnsupportedMapError,
)
from .numcore import Rng, TrainConfig, loss_eval
from .primal import GLM_FAMILIES, PrimalModel


@dataclass(frozen=True)
class RegistryEntry:
    """Maps a (module_name, model_name) key to a proxy architecture."""

    key: tuple
    adapter_kind: str  # "classifier" | "regressor"
    version: str = "default"
    train_defaults: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.adapter_kind not in ("classifier", "regressor"):
            raise InputError(f"unknown adapter kind {self.adapter_kind!r}")

    def build(self, data_shape, overrides=None) -> ProxyDescriptor:
        return architectures.resolve_architecture(self.key, data_shape, overrides)


class Registry:
    """Versioned table of supported model mappings (reads are lock-free)."""

    def __init__(self):
        self._entries: dict[tuple, RegistryEntry] = {}
        self._lock = threading.Lock()

    def register(self, entry: RegistryEntry) -> None:
        slot = (tuple(entry.key), entry.version)
        with self._lock:
            if slot in self._entries:
                raise RegistryConflictError(
                    f"{entry.key!r} version {entry.version!r} is already registered"
                )
            self._entries[slot] = entry

    def lookup(self, key, version: str | None = None) -> RegistryEntry:
        slot = (tuple(key), version or "default")
        try:
            return self._entries[slot]
        except KeyError:
            known = sorted({k for k, _ in self._entries})
            raise RegistryLookupError(
                f"no entry for key {tuple(key)!r} version {slot[1]!r}; known keys: {known}"
            ) from None

    def keys(self) -> list:
        return sorted(self._entries)


def default_registry() -> Registry:
    reg = Registry()
    for key, kind in (
        (("linear_model", "LinearRegression"), "regressor"),
        (("linear_model", "Ridge"), "regressor"),
        (("linear_model", "Lasso"), "regressor"),
        (("linear_model", "ElasticNet"), "regressor"),
        (("linear_model", "LogisticRegression"), "classifier"),
        (("svm", "LinearSVC"), "classifier"),
        (("tree", "DecisionTreeClassifier"), "classifier"),
    ):
        reg.register(RegistryEntry(key=key, adapter_kind=kind,
                                   train_defaults=dict(TRAIN_DEFAULTS.get(key, {}))))
    return reg


registry = default_registry()


class DopedModel:
    """A proxy network wearing its primal model's interface."""

    def __init__(self, primal: PrimalModel | None, entry: RegistryEntry,
                 strategy: str, config: TrainConfig, params: dict | None = None):
        self.primal = primal
        self.entry = entry
        self.adapter_kind = entry.adapter_kind
        self.strategy = strategy
        self.config = config
        self.descriptor: ProxyDescriptor | None = None
        self.net = None
        self.train_history: list[float] = []
        self.search_result: nas.SearchResult | None = None
        self.fitted = False
        self.teacher: PrimalModel | None = None
        self._default_params = params
        self._train_X: np.ndarray | None = None

    # -- fitting ----------------------------------------------------------

    def _transfer(self, teacher: PrimalModel) -> None:
        d = teacher.coefficients.shape[1]
        k = teacher.coefficients.shape[0]
        shape = (0, d, k)
        self.descriptor = replace(
            self.entry.build(shape, teacher.hyperparams), strategy="exact"
        )
        self.net = architectures.instantiate(self.descriptor, Rng(self.config.seed))
        weights = architectures.transfer_exact(teacher, self.descriptor)
        params = self.net.parameters()
        for name, value in weights.items():
            params[name][...] = value
        self.teacher = teacher
        self.train_history = []
        self.fitted = True

    def _class_count(self, y: np.ndarray) -> int:
        labels = np.unique(y)
        if labels.size < 2:
            raise InputError("need at least 2 distinct classes in y")
        k = int(labels.max()) + 1
        if labels.min() < 0:
            raise InputError("class labels must be >= 0")
        return k

    def fit(self, X, y, params: dict | None = None) -> "DopedModel":
        """Train the proxy; grid-search the space in ``params`` if given."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise InputError("X must be 2-D with one y entry per row")
        if self.adapter_kind == "classifier":
            y = y.astype(np.int64)
            self._class_count(y)

        if self.strategy == "exact":
            teacher = self.primal if self.primal.fitted else self.primal.clone().fit(X, y)
            self._transfer(teacher)
            self._train_X = X
            return self

        if self.strategy == "approximate":
            teacher = self.primal if self.primal.fitted else self.primal.clone().fit(X, y)
            self.teacher = teacher
            targets = architectures.teacher_targets(teacher, X)
        else:  # universal: ground-truth targets, intent delegated to the proxy
            if self.adapter_kind == "classifier":
                targets = np.eye(int(y.max()) + 1)[y]
            else:
                targets = np.asarray(y, dtype=np.float64).reshape(-1, 1)

        k = targets.shape[1]
        shape = (X.shape[0], X.shape[1], k)
        if self.strategy == "universal":
            # Free-form MLP on ground truth; one 8-unit hidden layer unless
            # the search space says otherwise.
            task = "classification" if self.adapter_kind == "classifier" else "regression"
            self.descriptor = architectures.universal_proxy(shape, (8,), task)
        else:
            overrides = dict(self.primal.hyperparams) if self.primal is not None else {}
            self.descriptor = replace(self.entry.build(shape, overrides), strategy=self.strategy)
        labels = np.argmax(targets, axis=1) if self.adapter_kind == "classifier" else None

        space = params if params is not None else self._default_params
        self.search_result = nas.search(self.descriptor, X, targets, space, self.config, labels)
        best = self.search_result.best_config
        final_desc = architectures.apply_config(self.descriptor, best)
        final_cfg = nas.apply_train_config(self.config, best, self.config.seed)
        rng = Rng(final_cfg.seed)
        self.net = architectures.instantiate(final_desc, rng, X_init=X)
        self.train_history = architectures.fit_network_on_targets(self.net, X, targets, final_cfg, rng)
        self.descriptor = final_desc
        self.fitted = True
        self._train_X = X
        return self

    # -- inference --------------------------------------------------------

    def _require_fitted(self):
        if not self.fitted:
            raise StateError("doped model is not fitted; call fit() first")

    def predict(self, X):
        """Class labels (argmax, ties to the lowest index) or raw outputs."""
        self._require_fitted()
        outputs = self.net.forward(X)
        if self.adapter_kind == "classifier":
            return np.argmax(outputs, axis=1)
        return outputs[:, 0]

    def score(self, X, y) -> list:
        """[loss, metric]: the proxy's own loss kind plus accuracy or r^2."""
        self._require_fitted()
        outputs = self.net.forward(X)
        if self.adapter_kind == "classifier":
            y = np.asarray(y, dtype=np.int64)
            k = outputs.shape[1]
            if y.min() < 0 or y.max() >= k:
                raise InputError(f"labels must lie in [0, {k})")
            loss = loss_eval(self.descriptor.loss, np.eye(k)[y], outputs)
            metric = float(np.mean(np.argmax(outputs, axis=1) == y))
        else:
            pred = outputs[:, 0]
            y = np.asarray(y, dtype=np.float64)
            loss = loss_eval("mse", y.reshape(-1, 1), pred.reshape(-1, 1))
            ss_tot = float(np.sum((y - y.mean()) ** 2))
            if ss_tot == 0.0:
                metric = 1.0 if np.allclose(pred, y) else 0.0
            else:
                metric = 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot
        return [float(loss), float(metric)]

    def save(self, filename: str) -> list[str]:
        """Write <filename>.onnx and <filename>.json; returns the paths."""
        self._require_fitted()
        onnx_path = f"{filename}.onnx"
        json_path = f"{filename}.json"
        graph = onnx.build_graph(self.net)
        with open(onnx_path, "wb") as fh:
            fh.write(onnx.serialize(graph))
        metadata = {
            "primal_family": self.primal.family if self.primal else None,
            "adapter_kind": self.adapter_kind,
            "strategy": self.strategy,
            "seed": self.config.seed,
            "train_config": {
                "optimizer": self.config.optimizer,
                "learning_rate": self.config.learning_rate,
                "epochs": self.config.epochs,
                "batch_size": self.config.batch_size,
                "validation_fraction": self.config.validation_fraction,
            },
        }
        onnx.save_native(json_path, self.net, metadata)
        return [onnx_path, json_path]

    def explain(self, x, X=None, max_depth: int = 4) -> explain_mod.Explanation:
        """Decision-path explanation of the prediction at x."""
        self._require_fitted()
        if self.adapter_kind != "classifier":
            raise InputError("explanations are defined for classifiers only")
        background = X if X is not None else self._train_X
        if background is None:
            raise InputError("no background data; pass X explicitly")
        surrogate = explain_mod.fit_surrogate(self.predict, background, max_depth=max_depth)
        return explain_mod.explain(surrogate, x)


def dope(primal: PrimalModel, strategy: str | None = None, params: dict | None = None,
         config: TrainConfig | None = None, version: str | None = None,
         reg: Registry | None = None) -> DopedModel:
    """Wrap a primal model in its neural proxy.

    A fitted GLM maps exactly (weight copy) unless another strategy is
    requested; anything else defaults to distillation on the teacher's
    predictions. The universal strategy is never chosen automatically.
    """
    reg = reg or registry
    entry = reg.lookup(primal.registry_key, version)

    if strategy is None:
        strategy = "exact" if (primal.fitted and primal.family in GLM_FAMILIES) else "approximate"
    if strategy not in architectures.STRATEGIES:
        raise InputError(f"unknown strategy {strategy!r}")
    if strategy == "exact" and primal.family not in GLM_FAMILIES:
        raise UnsupportedMapError(
            f"exact mapping is undefined for family {primal.family!r}"
        )
    if config is None:
        config = TrainConfig(**entry.train_defaults)

    doped = DopedModel(primal, entry, strategy, config, params)
    if strategy == "exact" and primal.fitted:
        doped._transfer(primal)
    return doped


def load_doped(path: str) -> DopedModel:
    """Reconstruct a scoring-ready DopedModel from a native JSON document."""
    net, metadata = onnx.load_native(path)
    kind = metadata.get("adapter_kind")
    if kind is None:
        kind = "regressor" if net.descriptor.task == "regression" else "classifier"
    entry = RegistryEntry(key=("doppel", "loaded"), adapter_kind=kind)
    cfg_doc = metadata.get("train_config", {})
    config = TrainConfig(
        optimizer=cfg_doc.get("optimizer", "adam"),
        learning_rate=cfg_doc.get("learning_rate", 1e-3),
        epochs=cfg_doc.get("epochs", 300),
        batch_size=cfg_doc.get("batch_size", 32),
        seed=metadata.get("seed", 0),
        validation_fraction=cfg_doc.get("validation_fraction", 0.2),
    )
    doped = DopedModel(None, entry, metadata.get("strategy", "approximate"), config)
    doped.descriptor = net.descriptor
    doped.net = net
    doped.fitted = True
    return doped
