"""Dataset ingestion, standardization, and deterministic splitting.

Two reference datasets ship with the package as CSV files: the Fisher/UCI
iris measurements (150 x 4, three species) and the Efron et al. diabetes
progression data (442 x 10, regression target).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import InputError, ParseError, StateError
from .numcore import Rng, as_matrix

BUILTIN = {
    "iris": ("species", "classification"),
    "diabetes": ("progression", "regression"),
}


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: list
    task: str
    name: str
    class_names: list = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


def load_csv(path, target_column: str, task: str, name: str = "") -> Dataset:
    """Read a headed CSV; the target column becomes y, the rest features.

    Classification targets may be strings; they are mapped to 0..K-1 in
    order of first occurrence.
    """
    if task not in ("classification", "regression"):
        raise InputError(f"unknown task {task!r}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = rows[0]
    if target_column not in header:
        raise InputError(f"{path}: no column named {target_column!r}")
    target_idx = header.index(target_column)
    feature_names = [h for i, h in enumerate(header) if i != target_idx]

    features = []
    raw_targets = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {line_no} has {len(row)} cells, expected {len(header)}")
        feats = []
        for i, cell in enumerate(row):
            if i == target_idx:
                raw_targets.append(cell)
                continue
            try:
                feats.append(float(cell))
            except ValueError:
                raise ParseError(
                    f"{path}: row {line_no}: non-numeric feature value {cell!r}"
                ) from None
        features.append(feats)
    if not features:
        raise ParseError(f"{path}: no data rows")

    X = np.array(features, dtype=np.float64)
    if task == "classification":
        seen: dict[str, int] = {}
        y = np.array([seen.setdefault(v, len(seen)) for v in raw_targets], dtype=np.int64)
        class_names = list(seen)
    else:
        try:
            y = np.array([float(v) for v in raw_targets], dtype=np.float64)
        except ValueError:
            raise ParseError(f"{path}: non-numeric regression target") from None
        class_names = []
    return Dataset(X=X, y=y, feature_names=feature_names, task=task,
                   name=name or str(path), class_names=class_names)


def builtin(name: str) -> Dataset:
    """Load a bundled dataset by name ('iris' or 'diabetes')."""
    if name not in BUILTIN:
        raise InputError(f"unknown dataset {name!r}; available: {sorted(BUILTIN)}")
    target, task = BUILTIN[name]
    ref = resources.files("doppel").joinpath(f"datasets/{name}.csv")
    with resources.as_file(ref) as path:
        return load_csv(path, target, task, name=name)


class Scaler:
    """Column standardizer; zero-variance columns keep std 1."""

    def __init__(self):
        self.means = None
        self.stds = None
        self.fitted = False

    def fit(self, X) -> "Scaler":
        X = as_matrix(X)
        self.means = X.mean(axis=0)
        stds = X.std(axis=0)
        stds[stds == 0.0] = 1.0
        self.stds = stds
        self.fitted = True
        return self

    def transform(self, X) -> np.ndarray:
        if not self.fitted:
            raise StateError("scaler must be fitted before transform")
        X = as_matrix(X)
        if X.shape[1] != self.means.shape[0]:
            raise InputError(
                f"X has {X.shape[1]} columns, scaler was fitted on {self.means.shape[0]}"
            )
        return (X - self.means) / self.stds

    def fit_transform(self, X) -> np.ndarray:
        return self.fit(X).transform(X)


def train_test_split(X, y, test_size: float, seed: int):
    """Seeded-shuffle split; the test set takes round(n * test_size) rows."""
    X = as_matrix(X)
    y = np.asarray(y)
    if not (0.0 < test_size < 1.0):
        raise InputError("test_size must lie strictly between 0 and 1")
    n = X.shape[0]
    if y.shape[0] != n:
        raise InputError("X and y row counts differ")
    n_test = int(np.floor(n * test_size + 0.5))
    if n_test < 1 or n_test >= n:
        raise InputError(f"split of {n} rows at test_size={test_size} leaves an empty side")
    perm = Rng(seed).permutation(n)
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    return X[train_idx], y[train_idx], X[test_idx], y[test_idx]
