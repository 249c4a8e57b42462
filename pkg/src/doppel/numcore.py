"""Deterministic numerical kernels: RNG, activations, losses, optimizers.

Everything here runs in float64. The RNG is a fixed, self-contained
xoshiro256** generator seeded through splitmix64, so identical seeds
reproduce identical draws on any platform regardless of the host
library's generator choices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, InputError, NumericError

_U64 = (1 << 64) - 1

ACTIVATIONS = ("identity", "sigmoid", "softmax", "relu")
LOSSES = ("mse", "binary_ce", "categorical_ce", "categorical_hinge")

# Clip bound applied to predicted probabilities before any log().
CE_CLIP = 1e-7


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _U64


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _U64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
    return z ^ (z >> 31), state


class Rng:
    """xoshiro256** generator; the four state words come from splitmix64."""

    def __init__(self, seed: int):
        s = int(seed) & _U64
        state = []
        for _ in range(4):
            word, s = _splitmix64(s)
            state.append(word)
        self._s = state
        self.seed = int(seed) & _U64

    def next_u64(self) -> int:
        s = self._s
        out = (_rotl((s[1] * 5) & _U64, 7) * 9) & _U64
        t = (s[1] << 17) & _U64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return out

    def random(self) -> float:
        """Uniform float64 in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def below(self, n: int) -> int:
        """Unbiased integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise InputError("below() requires n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def permutation(self, n: int) -> np.ndarray:
        idx = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return np.array(idx, dtype=np.intp)

    def uniform(self, low: float, high: float, shape) -> np.ndarray:
        total = int(np.prod(shape)) if shape else 1
        vals = [low + (high - low) * self.random() for _ in range(total)]
        return np.array(vals, dtype=np.float64).reshape(shape)


def as_matrix(a, name: str = "x") -> np.ndarray:
    """Validate and return a dense 2-D float64 array (row-major)."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite entries")
    return arr


def as_vector(a, name: str = "y") -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64).ravel()
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite entries")
    return arr


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def apply_activation(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "identity":
        return z
    if kind == "sigmoid":
        return sigmoid(z)
    if kind == "softmax":
        return softmax(z)
    if kind == "relu":
        return relu(z)
    raise InputError(f"unknown activation {kind!r}")


def dense_forward(W, b, x, activation: str = "identity") -> np.ndarray:
    """act(x @ W.T + b) for W stored [out x in]."""
    W = as_matrix(W, "W")
    x = as_matrix(x, "x")
    b = as_vector(b, "b")
    if W.shape[1] != x.shape[1]:
        raise DimensionError(
            f"W has {W.shape[1]} input columns but x has {x.shape[1]} features"
        )
    if b.shape[0] != W.shape[0]:
        raise DimensionError(f"b has {b.shape[0]} entries, W has {W.shape[0]} rows")
    return apply_activation(activation, x @ W.T + b)


def loss_eval(kind: str, y_true, y_pred) -> float:
    """Scalar loss; cross-entropy inputs are clipped to [1e-7, 1 - 1e-7]."""
    y_true = as_matrix(y_true, "y_true")
    y_pred = as_matrix(y_pred, "y_pred")
    if y_true.shape != y_pred.shape:
        raise DimensionError(
            f"y_true shape {y_true.shape} != y_pred shape {y_pred.shape}"
        )
    if kind == "mse":
        return float(np.mean((y_true - y_pred) ** 2))
    if kind == "binary_ce":
        p = np.clip(y_pred, CE_CLIP, 1.0 - CE_CLIP)
        return float(-np.mean(y_true * np.log(p) + (1.0 - y_true) * np.log(1.0 - p)))
    if kind == "categorical_ce":
        p = np.clip(y_pred, CE_CLIP, 1.0 - CE_CLIP)
        return float(-np.mean(np.sum(y_true * np.log(p), axis=1)))
    if kind == "categorical_hinge":
        pos = np.sum(y_true * y_pred, axis=1)
        neg = np.max(np.where(y_true > 0, -np.inf, y_pred), axis=1)
        return float(np.mean(np.maximum(0.0, 1.0 - pos + neg)))
    raise InputError(f"unknown loss kind {kind!r}")


def head_gradient(activation: str, loss: str, outputs, y_true) -> np.ndarray:
    """Gradient of loss_eval w.r.t. the pre-activation of the output layer.

    The (softmax, categorical_ce) and (sigmoid, binary_ce) pairs are fused;
    they assume the clip bound is inactive, which holds away from saturated
    probabilities.
    """
    P = np.asarray(outputs, dtype=np.float64)
    Y = np.asarray(y_true, dtype=np.float64)
    n = P.shape[0]
    if loss == "mse" and activation == "identity":
        return 2.0 * (P - Y) / P.size
    if loss == "categorical_ce" and activation == "softmax":
        return (P - Y) / n
    if loss == "binary_ce" and activation == "sigmoid":
        return (P - Y) / P.size
    if loss == "categorical_hinge" and activation in ("identity", "softmax"):
        neg_scores = np.where(Y > 0, -np.inf, P)
        j = np.argmax(neg_scores, axis=1)
        pos = np.sum(Y * P, axis=1)
        active = (1.0 - pos + neg_scores[np.arange(n), j]) > 0.0
        dP = np.zeros_like(P)
        dP[active] = -Y[active]
        dP[np.arange(n)[active], j[active]] += 1.0
        dP /= n
        if activation == "identity":
            return dP
        return P * (dP - np.sum(dP * P, axis=1, keepdims=True))
    raise InputError(f"no fused gradient for activation={activation!r} loss={loss!r}")


def glorot_init(fan_in: int, fan_out: int, rng: Rng) -> np.ndarray:
    """Uniform init in +/- sqrt(6 / (fan_in + fan_out)), shaped [fan_out x fan_in]."""
    if fan_in < 1 or fan_out < 1:
        raise InputError("fan_in and fan_out must be >= 1")
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, (fan_out, fan_in))


@dataclass
class OptimizerState:
    """Adam / Nadam state; moment buffers are keyed like the parameters.

    Nadam is Adam with a Nesterov lookahead on the bias-corrected first
    moment: the update direction is beta1 * m_hat + (1 - beta1) * g.
    """

    kind: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    step_count: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("adam", "nadam"):
            raise ConfigError(f"unknown optimizer kind {self.kind!r}")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ConfigError("beta1 and beta2 must lie in (0, 1)")
        if self.epsilon <= 0.0:
            raise ConfigError("epsilon must be positive")


def optimizer_step(state: OptimizerState, params: dict, grads: dict) -> None:
    """One Adam/Nadam update, in place, with bias correction."""
    state.step_count += 1
    t = state.step_count
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise DimensionError(
                f"gradient for {name!r} has shape {g.shape}, parameter {p.shape}"
            )
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter block {name!r}")
        if name not in state.first_moment:
            state.first_moment[name] = np.zeros_like(p)
            state.second_moment[name] = np.zeros_like(p)
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        if state.kind == "nadam":
            direction = state.beta1 * m_hat + (1.0 - state.beta1) * g
        else:
            direction = m_hat
        p -= state.learning_rate * direction / (np.sqrt(v_hat) + state.epsilon)


@dataclass
class TrainConfig:
    """Minibatch training settings shared by the trainer and the search."""

    optimizer: str = "adam"
    learning_rate: float = 1e-3
    epochs: int = 300
    batch_size: int = 32
    seed: int = 0
    validation_fraction: float = 0.2

    def __post_init__(self):
        if self.optimizer not in ("adam", "nadam"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not (0.0 <= self.validation_fraction < 1.0):
            raise ConfigError("validation_fraction must lie in [0, 1)")


def grad_check(net, X, Y, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``net`` must expose parameters() -> name->array, loss(X, Y) -> float and
    gradients(X, Y) -> name->array. The error for each entry is
    |analytic - fd| / max(1, |analytic|).
    """
    if not (1e-7 <= eps <= 1e-3):
        raise InputError("eps must lie in [1e-7, 1e-3]")
    analytic = net.gradients(X, Y)
    worst = 0.0
    for name, p in net.parameters().items():
        a = analytic[name]
        flat = p.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = net.loss(X, Y)
            flat[i] = orig - eps
            down = net.loss(X, Y)
            flat[i] = orig
            fd = (up - down) / (2.0 * eps)
            err = abs(a.reshape(-1)[i] - fd) / max(1.0, abs(a.reshape(-1)[i]))
            worst = max(worst, err)
    return worst
