"""Deterministic grid search over training and architecture hyperparameters.

A search space maps parameter names to {"grid_search": [candidates]}. The
grid is expanded as a Cartesian product in sorted-name order, every cell is
trained from a seed derived from the cell's content (so reordering the
candidate lists cannot change any trial's outcome), and the winner is the
cell with the best validation metric, ties going to the earliest cell.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
from dataclasses import dataclass

import numpy as np

from . import architectures
from .errors import ConfigError, DoppelError, InputError, SearchFailureError
from .numcore import Rng, TrainConfig, loss_eval

MAX_TRIALS = 64

_TRAIN_PARAMS = ("optimizer", "learning_rate", "epochs", "batch_size")


@dataclass(frozen=True)
class Trial:
    config: dict
    val_metric: float
    val_loss: float


@dataclass(frozen=True)
class SearchResult:
    best_config: dict
    best_val_metric: float
    best_index: int
    trials: tuple


def expand_grid(space: dict | None, descriptor=None) -> list[dict]:
    """Cartesian product of the candidate lists, deterministically ordered.

    Parameter names are sorted; candidate values keep their given order.
    An empty space expands to one empty (all-defaults) configuration.
    """
    space = space or {}
    allowed = set(_TRAIN_PARAMS)
    if descriptor is not None:
        allowed |= set(descriptor.searchable_params)
    names = sorted(space)
    candidates = []
    for name in names:
        if name not in allowed:
            raise ConfigError(
                f"unknown search parameter {name!r}; allowed: {sorted(allowed)}"
            )
        entry = space[name]
        if not (isinstance(entry, dict) and set(entry) == {"grid_search"}):
            raise ConfigError(
                f"search space entries must look like {{'grid_search': [...]}}, got {entry!r} for {name!r}"
            )
        values = list(entry["grid_search"])
        if not values:
            raise ConfigError(f"empty candidate list for {name!r}")
        candidates.append(values)
    configs = [dict(zip(names, combo)) for combo in itertools.product(*candidates)]
    if len(configs) > MAX_TRIALS:
        raise ConfigError(f"grid has {len(configs)} cells, budget is {MAX_TRIALS}")
    return configs


def _config_seed(base_seed: int, config: dict) -> int:
    digest = hashlib.sha256(
        json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    ).digest()
    return (int.from_bytes(digest[:8], "little") ^ (base_seed & (2**64 - 1))) & (2**63 - 1)


def apply_train_config(base: TrainConfig, config: dict, seed: int) -> TrainConfig:
    updates = {k: v for k, v in config.items() if k in _TRAIN_PARAMS}
    if "epochs" in updates:
        updates["epochs"] = int(updates["epochs"])
    if "batch_size" in updates:
        updates["batch_size"] = int(updates["batch_size"])
    if "learning_rate" in updates:
        updates["learning_rate"] = float(updates["learning_rate"])
    return dataclasses.replace(base, seed=seed, **updates)


def validation_split(n: int, fraction: float, seed: int, labels=None):
    """Deterministic train/validation index split.

    Classification (labels given) is stratified per class; regression uses a
    seeded shuffle. Always leaves at least one row on each side.
    """
    n_val = int(np.floor(n * fraction + 0.5))
    n_val = max(1, min(n - 1, n_val))
    rng = Rng(seed)
    if labels is None:
        perm = rng.permutation(n)
        return perm[n_val:], perm[:n_val]
    labels = np.asarray(labels)
    val_idx = []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        members = members[rng.permutation(len(members))]
        take = int(round(len(members) * fraction))
        val_idx.extend(members[:take])
    val_idx = sorted(val_idx)
    if not val_idx:
        val_idx = [int(rng.below(n))]
    if len(val_idx) >= n:
        val_idx = val_idx[: n - 1]
    val = np.array(val_idx, dtype=np.intp)
    mask = np.ones(n, dtype=bool)
    mask[val] = False
    return np.flatnonzero(mask), val


def _metric(task: str, outputs: np.ndarray, targets: np.ndarray, labels) -> float:
    if task == "classification":
        return float(np.mean(np.argmax(outputs, axis=1) == labels))
    pred = outputs[:, 0]
    truth = targets[:, 0]
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if np.allclose(pred, truth) else 0.0
    return 1.0 - float(np.sum((truth - pred) ** 2)) / ss_tot


def search(descriptor, X, targets, space: dict | None, base_config: TrainConfig,
           labels=None) -> SearchResult:
    """Grid-search proxy configurations on a held-out validation split.

    ``targets`` are the training targets (teacher outputs or encoded ground
    truth); ``labels`` are integer class labels for stratification and the
    accuracy metric (ignored for regression).
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise InputError("search needs at least 2 rows")
    configs = expand_grid(space, descriptor)
    task = descriptor.task
    strat = labels if task == "classification" else None
    train_idx, val_idx = validation_split(n, base_config.validation_fraction, base_config.seed, strat)
    targets = np.asarray(targets, dtype=np.float64)

    trials = []
    best_index = -1
    best_metric = -np.inf
    for index, config in enumerate(configs):
        seed = _config_seed(base_config.seed, config)
        cfg = apply_train_config(base_config, config, seed)
        desc = architectures.apply_config(descriptor, config)
        rng = Rng(seed)
        net = architectures.instantiate(desc, rng, X_init=X[train_idx])
        try:
            architectures.fit_network_on_targets(net, X[train_idx], targets[train_idx], cfg, rng)
            outputs = net.forward(X[val_idx])
            val_labels = labels[val_idx] if labels is not None else None
            metric = _metric(task, outputs, targets[val_idx], val_labels)
            val_loss = loss_eval(desc.loss, targets[val_idx], outputs)
        except DoppelError:
            metric, val_loss = float("nan"), float("nan")
        trials.append(Trial(config=dict(config), val_metric=metric, val_loss=val_loss))
        if np.isfinite(metric) and metric > best_metric:
            best_metric = metric
            best_index = index
    if best_index < 0:
        raise SearchFailureError(
            f"all {len(trials)} trials diverged: {[t.config for t in trials]}", trials
        )
    return SearchResult(
        best_config=dict(trials[best_index].config),
        best_val_metric=best_metric,
        best_index=best_index,
        trials=tuple(trials),
    )
