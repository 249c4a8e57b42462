"""doppel: transpile classical supervised models into neural proxies."""

from .numcore import Rng, TrainConfig
from .primal import (
    PrimalModel,
    decision_tree,
    elastic_net,
    lasso,
    linear_regression,
    linear_svc,
    logistic_regression,
    ridge,
)
from .transpiler import DopedModel, Registry, RegistryEntry, dope, load_doped, registry

__version__ = "0.1.0"

__all__ = [
    "DopedModel",
    "PrimalModel",
    "Registry",
    "RegistryEntry",
    "Rng",
    "TrainConfig",
    "decision_tree",
    "dope",
    "elastic_net",
    "lasso",
    "linear_regression",
    "linear_svc",
    "load_doped",
    "logistic_regression",
    "registry",
    "ridge",
    "__version__",
]
