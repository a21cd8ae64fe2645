"""Layers with hand-written backward passes.

Tensors are plain float64 numpy arrays, row-major, batch on axis 0.
Every backward here is checked against central finite differences in the
test suite; none of the gradients are derived by any autodiff machinery.

The normalization layer carries an optional constant output shift alpha.
Plain BN is alpha = 0; the post-shifted variant adds alpha after the
affine stage. Because alpha is a constant rather than a parameter, the two
variants have identical gradients for identical inputs and parameters; the
shift changes only where the following ReLU starts to cut.

Activation derivative at exactly zero input uses the inactive branch
(mask is x > 0, strictly), matching the step-function convention of the
simulation code.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DomainError, UsageError

__all__ = [
    "BnLayerState",
    "bn_forward",
    "bn_backward",
    "Dense",
    "BatchNorm",
    "ReLU",
    "LeakyReLU",
    "softmax_cross_entropy",
    "accuracy",
]


@dataclass
class BnLayerState:
    """Per-channel normalization state: affine parameters and running stats."""

    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float = 1e-5
    momentum: float = 0.1
    alpha: float = 0.0

    def __post_init__(self):
        n = self.gamma.shape[0]
        for name in ("beta", "running_mean", "running_var"):
            if getattr(self, name).shape != (n,):
                raise ConfigError(f"{name} must have shape ({n},)")
        if np.any(self.running_var < 0):
            raise ConfigError("running_var must be nonnegative")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")


def bn_forward(x: np.ndarray, state: BnLayerState, mode: str, cache: dict | None = None) -> np.ndarray:
    """Normalize, apply the affine stage, add the constant shift.

    Train mode normalizes with batch statistics (biased variance, the
    convention used consistently for running stats too) and updates the
    running estimates in place with the state's momentum. Eval mode uses
    the running estimates and touches nothing. Pass a dict as ``cache`` in
    train mode to capture what bn_backward needs.
    """
    if mode not in ("train", "eval"):
        raise ConfigError(f"mode must be 'train' or 'eval', got {mode!r}")
    if x.ndim != 2 or x.shape[1] != state.gamma.shape[0]:
        raise DomainError(f"expected (batch, {state.gamma.shape[0]}) input, got {x.shape}")
    if mode == "train":
        if x.shape[0] < 2:
            raise DomainError(f"train-mode batch must be >= 2, got {x.shape[0]}")
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + state.eps)
        x_hat = (x - mean) * inv_std
        m = state.momentum
        state.running_mean *= 1.0 - m
        state.running_mean += m * mean
        state.running_var *= 1.0 - m
        state.running_var += m * var
        if cache is not None:
            cache["x_hat"] = x_hat
            cache["inv_std"] = inv_std
            cache["gamma"] = state.gamma
    else:
        inv_std = 1.0 / np.sqrt(state.running_var + state.eps)
        x_hat = (x - state.running_mean) * inv_std
    return state.gamma * x_hat + state.beta + state.alpha


def bn_backward(grad_out: np.ndarray, cache: dict):
    """Gradients through the train-mode forward.

    Returns (grad_in, grad_gamma, grad_beta). The constant shift alpha has
    no gradient by construction. The input gradient accounts for the
    batch-statistic dependence of the normalization.
    """
    if not cache or "x_hat" not in cache:
        raise UsageError("bn_backward needs the cache filled by a train-mode bn_forward")
    x_hat = cache["x_hat"]
    inv_std = cache["inv_std"]
    gamma = cache["gamma"]
    n = x_hat.shape[0]
    grad_gamma = np.sum(grad_out * x_hat, axis=0)
    grad_beta = np.sum(grad_out, axis=0)
    g = grad_out * gamma
    grad_in = (inv_std / n) * (n * g - np.sum(g, axis=0) - x_hat * np.sum(g * x_hat, axis=0))
    return grad_in, grad_gamma, grad_beta


class Dense:
    """Affine map with fan-in scaled Gaussian weight init and zero bias."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.w = rng.standard_normal((in_dim, out_dim)) / np.sqrt(in_dim)
        self.b = np.zeros(out_dim)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)
        self._x = None

    def forward(self, x: np.ndarray, mode: str) -> np.ndarray:
        if mode == "train":
            self._x = x
        return x @ self.w + self.b

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise UsageError("backward before train-mode forward")
        self.gw = self._x.T @ grad_out
        self.gb = grad_out.sum(axis=0)
        return grad_out @ self.w.T

    def param_refs(self, prefix: str):
        yield f"{prefix}.w", self.w, self.gw
        yield f"{prefix}.b", self.b, self.gb


class BatchNorm:
    """Stateful wrapper around bn_forward/bn_backward with per-channel params."""

    def __init__(self, channels: int, gamma_init: float = 1.0, alpha: float = 0.0):
        self.state = BnLayerState(
            gamma=np.full(channels, float(gamma_init)),
            beta=np.zeros(channels),
            running_mean=np.zeros(channels),
            running_var=np.ones(channels),
            alpha=float(alpha),
        )
        self.ggamma = np.zeros(channels)
        self.gbeta = np.zeros(channels)
        self._cache: dict | None = None

    def forward(self, x: np.ndarray, mode: str) -> np.ndarray:
        if mode == "train":
            self._cache = {}
            return bn_forward(x, self.state, mode, self._cache)
        return bn_forward(x, self.state, mode)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if not self._cache:
            raise UsageError("backward before train-mode forward")
        grad_in, self.ggamma, self.gbeta = bn_backward(grad_out, self._cache)
        return grad_in

    def param_refs(self, prefix: str):
        yield f"{prefix}.gamma", self.state.gamma, self.ggamma
        yield f"{prefix}.beta", self.state.beta, self.gbeta


@dataclass
class ReLU:
    _mask: np.ndarray | None = field(default=None, repr=False)

    def forward(self, x: np.ndarray, mode: str) -> np.ndarray:
        mask = x > 0
        if mode == "train":
            self._mask = mask
        return np.where(mask, x, 0.0)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise UsageError("backward before train-mode forward")
        return np.where(self._mask, grad_out, 0.0)

    def param_refs(self, prefix: str):
        return iter(())


@dataclass
class LeakyReLU:
    slope: float = 0.01
    _mask: np.ndarray | None = field(default=None, repr=False)

    def forward(self, x: np.ndarray, mode: str) -> np.ndarray:
        mask = x > 0
        if mode == "train":
            self._mask = mask
        return np.where(mask, x, self.slope * x)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise UsageError("backward before train-mode forward")
        return np.where(self._mask, grad_out, self.slope * grad_out)

    def param_refs(self, prefix: str):
        return iter(())


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its logit gradient, computed stably.

    Returns (loss, grad_logits, probs). Labels are integer class indices.
    """
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise DomainError(f"shape mismatch: logits {logits.shape}, labels {labels.shape}")
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    n = logits.shape[0]
    idx = np.arange(n)
    log_probs = shifted - np.log(exp.sum(axis=1, keepdims=True))
    loss = float(-np.mean(log_probs[idx, labels]))
    grad = probs.copy()
    grad[idx, labels] -= 1.0
    grad /= n
    return loss, grad, probs


def accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.argmax(logits, axis=1) == labels))
